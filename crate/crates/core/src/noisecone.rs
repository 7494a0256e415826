//! Integer-noise mechanisms on a truncated window.
//!
//! Unlike the rest of the crate this module works in `f64`: the masses
//! involve exponentials and factorials, and every check carries an explicit
//! tolerance.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Masses below this are treated as exhausted when summing series.
const NEGLIGIBLE: f64 = 1e-40;
/// Mass vectors are kept down to this size so that far-tail differences
/// keep their relative accuracy.
const MASS_FLOOR: f64 = 1e-300;
const MAX_TERMS: usize = 1_000_000;

/// Truncation window `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub half_width: usize,
    pub tail_tolerance: f64,
}

impl Window {
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;

    pub fn new(half_width: usize) -> Self {
        Self {
            half_width,
            tail_tolerance: Self::DEFAULT_TOLERANCE,
        }
    }

    pub fn with_tolerance(half_width: usize, tail_tolerance: f64) -> Self {
        Self {
            half_width,
            tail_tolerance,
        }
    }

    fn w(&self) -> i64 {
        self.half_width as i64
    }

    /// Number of integers in the window.
    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> impl Iterator<Item = i64> {
        let w = self.w();
        -w..=w
    }
}

/// Real sequence indexed by integers, zero outside `start..start+len`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntSeries {
    pub start: i64,
    pub values: Vec<f64>,
}

impl IntSeries {
    pub fn from_fn(lo: i64, hi: i64, f: impl Fn(i64) -> f64) -> Self {
        Self {
            start: lo,
            values: (lo..=hi).map(f).collect(),
        }
    }

    pub fn delta() -> Self {
        Self {
            start: 0,
            values: vec![1.0],
        }
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn get(&self, k: i64) -> f64 {
        let i = k - self.start;
        if i < 0 || i >= self.values.len() as i64 {
            0.0
        } else {
            self.values[i as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start + i as i64, v))
    }

    pub fn abs_sum(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            start: self.start,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `(self ⋆ other)(k) = sum_j self(j) other(k - j)`.
    pub fn convolve_at(&self, other: &IntSeries, k: i64) -> f64 {
        self.iter().map(|(j, v)| v * other.get(k - j)).sum()
    }
}

pub fn geometric_pmf(p: f64, k: i64) -> f64 {
    (1.0 - p) / (1.0 + p) * p.powi(k.unsigned_abs() as i32)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_r(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be a positive integer".into()));
    }
    Ok(())
}

fn check_lambda(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {l} must be positive")));
    }
    Ok(())
}

/// `NB(p, r)` masses `C(j+r-1, j) p^j (1-p)^r` for `j = 0, 1, ...` until
/// they become negligible.
fn nb_masses(p: f64, r: u32) -> Vec<f64> {
    let r = r as f64;
    let (lp, lq, lg_r) = (p.ln(), (1.0 - p).ln(), ln_gamma(r));
    let mode = ((r - 1.0) * p / (1.0 - p)).max(0.0) as usize;
    let mut out = Vec::new();
    for j in 0..MAX_TERMS {
        let jf = j as f64;
        let v = (ln_gamma(jf + r) - ln_gamma(jf + 1.0) - lg_r + jf * lp + r * lq).exp();
        out.push(v);
        if j > mode && v < MASS_FLOOR {
            break;
        }
    }
    out
}

fn poisson_masses(l: f64) -> Vec<f64> {
    let ll = l.ln();
    let mode = l.floor() as usize;
    let mut out = Vec::new();
    for j in 0..MAX_TERMS {
        let jf = j as f64;
        let v = (-l + jf * ll - ln_gamma(jf + 1.0)).exp();
        out.push(v);
        if j > mode && v < MASS_FLOOR {
            break;
        }
    }
    out
}

/// `P(X - Y = k)` for independent `X ~ a`, `Y ~ b` given as mass vectors.
fn difference_mass(a: &[f64], b: &[f64], k: i64) -> f64 {
    if k >= 0 {
        let k = k as usize;
        b.iter()
            .enumerate()
            .take_while(|(j, _)| j + k < a.len())
            .map(|(j, y)| a[j + k] * y)
            .sum()
    } else {
        let k = k.unsigned_abs() as usize;
        a.iter()
            .enumerate()
            .take_while(|(j, _)| j + k < b.len())
            .map(|(j, x)| x * b[j + k])
            .sum()
    }
}

/// Mass of `f` outside `[-w, w]`, summed outward until negligible.
fn tail_outside(f: &dyn Fn(i64) -> f64, w: i64) -> f64 {
    let mut total = 0.0;
    for dir in [1i64, -1] {
        let mut prev = f64::INFINITY;
        for step in 1..MAX_TERMS as i64 {
            let v = f(dir * (w + step));
            total += v;
            if v < NEGLIGIBLE && v <= prev {
                break;
            }
            prev = v;
        }
    }
    total
}

/// Two-column integer-noise table `k value`.
pub type PmfTable = BTreeMap<i64, f64>;

/// Parses whitespace separated `k value` lines; `#` starts a comment.
pub fn parse_pmf_table(text: &str) -> Result<PmfTable> {
    let mut table = PmfTable::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let bad = || Error::Parse(format!("line {}: expected `k value`", n + 1));
        let k: i64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let v: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Parse(format!("line {}: mass {v} must be nonnegative", n + 1)));
        }
        if table.insert(k, v).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate k = {k}", n + 1)));
        }
    }
    if table.is_empty() {
        return Err(Error::Parse("pmf table is empty".into()));
    }
    Ok(table)
}

/// Noise added to an integer input.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Geometric { p: f64 },
    Dnb { p: f64, r: u32 },
    Skellam { l1: f64, l2: f64 },
    Custom(PmfTable),
}

/// A noise distribution with its masses precomputed.
pub struct Noise {
    spec: NoiseSpec,
    pmf: Box<dyn Fn(i64) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Noise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Noise").field("spec", &self.spec).finish()
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseSpec::Geometric { p } => check_p(*p),
            NoiseSpec::Dnb { p, r } => check_p(*p).and(check_r(*r)),
            NoiseSpec::Skellam { l1, l2 } => check_lambda(*l1).and(check_lambda(*l2)),
            NoiseSpec::Custom(t) => {
                if t.values().any(|v| !(v >= &0.0 && v.is_finite())) {
                    return Err(Error::InvalidParameter("pmf masses must be nonnegative".into()));
                }
                if t.is_empty() {
                    return Err(Error::InvalidParameter("pmf table is empty".into()));
                }
                Ok(())
            }
        }
    }

    pub fn build(&self) -> Result<Noise> {
        self.validate()?;
        let pmf: Box<dyn Fn(i64) -> f64 + Send + Sync> = match self.clone() {
            NoiseSpec::Geometric { p } => Box::new(move |k| geometric_pmf(p, k)),
            NoiseSpec::Dnb { p, r } => {
                let nb = nb_masses(p, r);
                Box::new(move |k| difference_mass(&nb, &nb, k))
            }
            NoiseSpec::Skellam { l1, l2 } => {
                let (a, b) = (poisson_masses(l1), poisson_masses(l2));
                Box::new(move |k| difference_mass(&a, &b, k))
            }
            NoiseSpec::Custom(t) => Box::new(move |k| t.get(&k).copied().unwrap_or(0.0)),
        };
        Ok(Noise {
            spec: self.clone(),
            pmf,
        })
    }
}

impl Noise {
    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    /// Untruncated mass at `k`.
    pub fn pmf(&self, k: i64) -> f64 {
        (self.pmf)(k)
    }

    /// Mass outside the window.
    pub fn tail_mass(&self, w: &Window) -> f64 {
        match &self.spec {
            NoiseSpec::Custom(t) => t
                .iter()
                .filter(|(k, _)| k.unsigned_abs() as usize > w.half_width)
                .map(|(_, v)| v)
                .sum(),
            _ => tail_outside(&*self.pmf, w.w()),
        }
    }

    pub fn check_window(&self, w: &Window) -> Result<f64> {
        let tail = self.tail_mass(w);
        if tail >= w.tail_tolerance {
            return Err(Error::WindowTooSmall {
                half_width: w.half_width,
                tail_mass: tail,
                tolerance: w.tail_tolerance,
            });
        }
        Ok(tail)
    }

    /// Masses on the window.
    pub fn table(&self, w: &Window) -> IntSeries {
        IntSeries::from_fn(-w.w(), w.w(), |k| self.pmf(k))
    }

    /// Mechanism matrix on the window: entry `(ω, k) = f(ω - k)`.
    pub fn matrix(&self, w: &Window) -> Result<NoiseMatrix> {
        self.check_window(w)?;
        let n = w.len();
        let wi = w.w();
        let diffs = IntSeries::from_fn(-2 * wi, 2 * wi, |d| self.pmf(d));
        let entries: Vec<Vec<f64>> = (0..n)
            .map(|o| (0..n).map(|c| diffs.get(o as i64 - c as i64)).collect())
            .collect();
        let column_deficits = (0..n)
            .map(|c| 1.0 - entries.iter().map(|row| row[c]).sum::<f64>())
            .collect();
        Ok(NoiseMatrix {
            window: *w,
            entries,
            column_deficits,
        })
    }
}

/// Windowed mechanism matrix; columns are not renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMatrix {
    pub window: Window,
    /// `entries[ω + W][k + W]`.
    pub entries: Vec<Vec<f64>>,
    /// `1 - column sum` per input.
    pub column_deficits: Vec<f64>,
}

impl NoiseMatrix {
    pub fn get(&self, out: i64, input: i64) -> f64 {
        let w = self.window.w();
        self.entries[(out + w) as usize][(input + w) as usize]
    }

    /// Row `ω` as a window-indexed vector.
    pub fn row(&self, out: i64) -> &[f64] {
        &self.entries[(out + self.window.w()) as usize]
    }
}

pub fn dnb_pmf(p: f64, r: u32, k: i64, w: &Window) -> Result<f64> {
    let noise = NoiseSpec::Dnb { p, r }.build()?;
    noise.check_window(w)?;
    Ok(noise.pmf(k))
}

pub fn skellam_pmf(l1: f64, l2: f64, k: i64, w: &Window) -> Result<f64> {
    let noise = NoiseSpec::Skellam { l1, l2 }.build()?;
    noise.check_window(w)?;
    Ok(noise.pmf(k))
}

/// `P(X - Y = j)` for independent `X, Y ~ Binomial(p / (1 + p), r)`.
pub fn binom_diff_pmf(p: f64, r: u32, j: i64) -> f64 {
    let s = p / (1.0 + p);
    let rf = r as f64;
    let binom = |x: u32| -> f64 {
        let xf = x as f64;
        (ln_gamma(rf + 1.0) - ln_gamma(xf + 1.0) - ln_gamma(rf - xf + 1.0)
            + xf * s.ln()
            + (rf - xf) * (1.0 - s).ln())
        .exp()
    };
    if j.unsigned_abs() > r as u64 {
        return 0.0;
    }
    (0..=r)
        .filter_map(|y| {
            let x = y as i64 + j;
            (0..=r as i64).contains(&x).then(|| binom(x as u32) * binom(y))
        })
        .sum()
}

/// Translation-invariant constraints `sum_j c_j x_{k+j} >= 0`, one per
/// interior `k` of the window.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedConstraintSystem {
    pub window: Window,
    pub stencil: IntSeries,
    /// First and last `k` whose stencil fits inside the window.
    pub interior: (i64, i64),
    /// Bound on the stencil mass dropped by truncation.
    pub truncation_error: f64,
}

impl BandedConstraintSystem {
    fn new(window: Window, stencil: IntSeries, truncation_error: f64) -> Result<Self> {
        let reach = stencil.start.abs().max(stencil.end().abs());
        let w = window.w();
        if reach > w {
            return Err(Error::WindowTooSmall {
                half_width: window.half_width,
                tail_mass: truncation_error,
                tolerance: window.tail_tolerance,
            });
        }
        Ok(Self {
            window,
            interior: (-w + reach, w - reach),
            stencil,
            truncation_error,
        })
    }

    pub fn interior_points(&self) -> impl Iterator<Item = i64> {
        self.interior.0..=self.interior.1
    }

    /// `sum_j c_j x_{k+j}` for a window-indexed `x`.
    pub fn evaluate(&self, x: &[f64], k: i64) -> f64 {
        let w = self.window.w();
        self.stencil
            .iter()
            .map(|(j, c)| c * x[(k + j + w) as usize])
            .sum()
    }

    /// Most negative constraint value over all interior `k` for `x`.
    pub fn min_value(&self, x: &[f64]) -> f64 {
        self.interior_points()
            .map(|k| self.evaluate(x, k))
            .fold(f64::INFINITY, f64::min)
    }

    /// Most negative value over every row of `m` and interior `k`, with
    /// the offending `(ω, k)`.
    pub fn max_violation(&self, m: &NoiseMatrix) -> (f64, Option<(i64, i64)>) {
        let mut worst = f64::INFINITY;
        let mut at = None;
        for out in m.window.points() {
            let row = m.row(out);
            for k in self.interior_points() {
                let v = self.evaluate(row, k);
                if v < worst {
                    worst = v;
                    at = Some((out, k));
                }
            }
        }
        (worst, at)
    }

    /// Stencil divided by the magnitude of its outermost positive-offset
    /// coefficient.
    pub fn normalized_stencil(&self) -> IntSeries {
        let edge = self.stencil.get(self.stencil.end()).abs();
        self.stencil.scaled(1.0 / edge)
    }
}

/// Stencil `c_j = (-1)^j f_B(j)` with `f_B` the difference of two
/// `Binomial(p / (1 + p), r)` variables.
pub fn dnb_constraints(p: f64, r: u32, w: &Window) -> Result<BandedConstraintSystem> {
    check_p(p)?;
    check_r(r)?;
    let r = r as i64;
    let stencil = IntSeries::from_fn(-r, r, |j| sign(j) * binom_diff_pmf(p, r as u32, j));
    BandedConstraintSystem::new(*w, stencil, 0.0)
}

fn sign(j: i64) -> f64 {
    if j.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Stencil `c_j = (-1)^j f_Z(j)` with `f_Z` the Skellam mass, cut at the
/// smallest half-width whose dropped mass is below the window tolerance.
pub fn skellam_constraints(l1: f64, l2: f64, w: &Window) -> Result<BandedConstraintSystem> {
    let noise = NoiseSpec::Skellam { l1, l2 }.build()?;
    noise.check_window(w)?;
    let limit = w.half_width / 2;
    let mut h = 0usize;
    let mut dropped = noise.tail_mass(&Window::new(0));
    while dropped >= w.tail_tolerance {
        h += 1;
        if h > limit {
            return Err(Error::WindowTooSmall {
                half_width: w.half_width,
                tail_mass: dropped,
                tolerance: w.tail_tolerance,
            });
        }
        dropped = noise.tail_mass(&Window::new(h));
    }
    let h = h as i64;
    let stencil = IntSeries::from_fn(-h, h, |j| sign(j) * noise.pmf(j));
    BandedConstraintSystem::new(*w, stencil, dropped)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionReport {
    pub value_at_0: f64,
    pub max_offcenter: f64,
}

/// `(f ⋆ g)(k)` for `|k| <= W/2`, with `f` cut to the window.
pub fn verify_inverse_convolution(f: &IntSeries, g: &IntSeries, w: &Window) -> ConvolutionReport {
    let wi = w.w();
    let f = IntSeries::from_fn(-wi, wi, |k| f.get(k));
    let half = wi / 2;
    let mut max_offcenter: f64 = 0.0;
    let mut value_at_0 = 0.0;
    for k in -half..=half {
        let v = g.convolve_at(&f, k);
        if k == 0 {
            value_at_0 = v;
        } else {
            max_offcenter = max_offcenter.max(v.abs());
        }
    }
    ConvolutionReport {
        value_at_0,
        max_offcenter,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierStencil {
    /// `g` with `f ⋆ g ≈ δ`.
    pub stencil: IntSeries,
    pub min_abs_transform: f64,
    /// Largest `|g|` dropped by truncation.
    pub truncation: f64,
}

pub const DEFAULT_GRID_POINTS: usize = 4096;
const MIN_TRANSFORM: f64 = 1e-8;
const STENCIL_CUTOFF: f64 = 1e-10;

/// Inverse of the convolution by `f` through its characteristic function:
/// `g` is the inverse transform of `1 / f̂(t)` sampled at `grid_points`
/// points of `[0, 2π)`.
pub fn general_noise_stencil(f: &IntSeries, w: &Window, grid_points: usize) -> Result<FourierStencil> {
    let n = grid_points;
    if n < w.len() {
        return Err(Error::InvalidParameter(format!(
            "grid of {n} points cannot hold a window of {}",
            w.len()
        )));
    }
    let wi = w.w();
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for k in -wi..=wi {
        buf[k.rem_euclid(n as i64) as usize].re += f.get(k);
    }
    let mut planner = FftPlanner::<f64>::new();
    // f̂(t_m) = sum_l f(l) e^{i l t_m}: the unnormalized inverse transform.
    planner.plan_fft_inverse(n).process(&mut buf);
    let min_abs_transform = buf.iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
    if min_abs_transform <= MIN_TRANSFORM {
        return Err(Error::NearSingularTransform {
            min_abs: min_abs_transform,
        });
    }
    for c in buf.iter_mut() {
        *c = c.inv();
    }
    // g(l) = (1/n) sum_m ĝ(t_m) e^{-i l t_m}.
    planner.plan_fft_forward(n).process(&mut buf);
    let half = (n / 2) as i64;
    let g = |l: i64| buf[l.rem_euclid(n as i64) as usize].re / n as f64;
    let kept: Vec<i64> = (-half..half).filter(|&l| g(l).abs() >= STENCIL_CUTOFF).collect();
    let (lo, hi) = match (kept.first(), kept.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0, 0),
    };
    let truncation = (-half..half)
        .filter(|l| *l < lo || *l > hi)
        .map(|l| g(l).abs())
        .fold(0.0, f64::max);
    Ok(FourierStencil {
        stencil: IntSeries::from_fn(lo, hi, g),
        min_abs_transform,
        truncation,
    })
}

/// Sample spacing used by [`general_noise_stencil`].
pub fn grid_step(grid_points: usize) -> f64 {
    2.0 * PI / grid_points as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelescopingReport {
    pub p: f64,
    /// `-ln p`.
    pub epsilon_expected: f64,
    /// Largest log-ratio of adjacent columns.
    pub epsilon_direct: f64,
    /// The same bound recovered from the telescoped stencil constraints.
    pub epsilon_telescoping: f64,
    /// Minimum of `p^-1 x_k - x_{k±1}` computed directly.
    pub direct_min: f64,
    /// Minimum of the telescoped sums.
    pub telescoping_min: f64,
    /// Largest gap between the two routes.
    pub agreement: f64,
    /// Every partial sum of every telescoped series was nondecreasing.
    pub monotone: bool,
    pub checked: usize,
}

impl TelescopingReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.direct_min >= -tolerance
            && self.telescoping_min >= -tolerance
            && self.agreement <= tolerance
            && self.monotone
    }
}

/// Derives pure differential privacy from the `r = 1` stencil constraints
/// of the geometric mechanism on the windowed matrix: both
/// `p^-1 x_k - x_{k-1}` and `p^-1 x_k - x_{k+1}` are computed directly and
/// as the series `sum_j p^j C(k ± j)` of stencil constraints `C`.
///
/// The series use the untruncated mass beyond the window.
pub fn dp_from_dnb_telescoping(p: f64, w: &Window) -> Result<TelescopingReport> {
    let noise = NoiseSpec::Dnb { p, r: 1 }.build()?;
    let m = noise.matrix(w)?;
    let c0 = p + 1.0 / p;
    let wi = w.w();
    let mut report = TelescopingReport {
        p,
        epsilon_expected: -p.ln(),
        epsilon_direct: f64::NEG_INFINITY,
        epsilon_telescoping: f64::NEG_INFINITY,
        direct_min: f64::INFINITY,
        telescoping_min: f64::INFINITY,
        agreement: 0.0,
        monotone: true,
        checked: 0,
    };
    let terms = (NEGLIGIBLE.ln() / p.ln()).ceil() as i64 + 2;
    let reach = 2 * wi + terms + 2;
    let f = IntSeries::from_fn(-reach, reach, |d| noise.pmf(d));
    for out in -wi..=wi {
        let x = |k: i64| f.get(out - k);
        let constraint = |k: i64| -x(k - 1) + c0 * x(k) - x(k + 1);
        for k in -wi + 1..wi {
            let xk = m.get(out, k);
            for dir in [-1i64, 1] {
                let neighbor = m.get(out, k + dir);
                let direct = xk / p - neighbor;
                let mut sum = 0.0;
                let mut pj = 1.0;
                for j in 0..terms {
                    let term = pj * constraint(k - dir * j);
                    if term < -1e-15 {
                        report.monotone = false;
                    }
                    sum += term;
                    pj *= p;
                }
                report.checked += 1;
                report.direct_min = report.direct_min.min(direct);
                report.telescoping_min = report.telescoping_min.min(sum);
                report.agreement = report.agreement.max((sum - direct).abs());
                if xk > 0.0 {
                    report.epsilon_direct = report.epsilon_direct.max((neighbor / xk).ln());
                    report.epsilon_telescoping =
                        report.epsilon_telescoping.max((1.0 / p - sum / xk).ln());
                }
            }
        }
    }
    Ok(report)
}
