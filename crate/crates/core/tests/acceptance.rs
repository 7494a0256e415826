//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};
use privcone::mechanisms::{
    bit_labels, drop_matrix, hamming, pram_matrix, rr_inverse, rr_matrix, sampling_matrix,
    sort_matrix, PramSpec, RRSpec, SamplingSpec,
};
use privcone::noisecone::{
    dnb_constraints, dnb_pmf, dp_from_dnb_telescoping, general_noise_stencil, geometric_pmf,
    verify_inverse_convolution, IntSeries, NoiseSpec, Window, DEFAULT_GRID_POINTS,
};
use privcone::numerics::{int, invert, rat, LabeledMatrix, Rational};
use privcone::relax::derive_dp_from_rr;
use privcone::rowcone::{
    cnf_membership, frapp_approx_constraints, membership, rr_constraints, sampling_constraints,
    ConstraintSystem, LinearConstraint, Membership,
};
use privcone::semantics::{
    find_parity_violation, prior_grid, sweep_parity_protection, verify_parity_protection,
    BitPrior, ParityQuery,
};
use rand::Rng;

use common::*;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn pow(r: &Rational, e: usize) -> Rational {
    num_traits::pow(r.clone(), e)
}

/// Hand-derived system, coordinates ordered x11, x10, x01, x00.
fn example1(p: &Rational) -> Vec<LinearConstraint> {
    let q = Rational::one() - p;
    let pq = p * &q;
    let (p2, q2) = (p * p, &q * &q);
    [
        [q2.clone(), -&pq, -&pq, p2.clone()],
        [p2.clone(), -&pq, -&pq, q2.clone()],
        [-&pq, q2.clone(), p2.clone(), -&pq],
        [-&pq, p2, q2, -pq],
    ]
    .into_iter()
    .map(|c| LinearConstraint::ge(c.to_vec()))
    .collect()
}

fn c1_rr_cone() -> Outcome {
    for p in [rat(2, 3), rat(3, 4)] {
        let sys = rr_constraints(&RRSpec::new(p.clone(), 2).unwrap()).map_err(|e| e.to_string())?;
        ensure!(sys.labels() == ["11", "10", "01", "00"], "labels {:?}", sys.labels());
        let got: HashSet<_> = sys.constraints().iter().cloned().collect();
        let want: HashSet<_> = example1(&p).into_iter().collect();
        ensure!(sys.len() == 4 && got == want, "p = {p}: system differs from the hand-derived one");
    }
    let c = &rr_constraints(&RRSpec::new(rat(2, 3), 2).unwrap()).unwrap();
    let first = LinearConstraint::ge(vec![int(1), int(-2), int(-2), int(4)]);
    ensure!(c.contains(&first), "normalized (1,-2,-2,4) missing");
    Ok("4 constraints match for p in {2/3, 3/4}".into())
}

fn complement(label: &str) -> String {
    label.chars().map(|c| if c == '1' { '0' } else { '1' }).collect()
}

fn c2_inverse() -> Outcome {
    let mut checked = 0;
    for p in [rat(2, 3), rat(3, 4), rat(9, 10)] {
        for k in 1..=4 {
            let spec = RRSpec::new(p.clone(), k).unwrap();
            let m = rr_matrix(&spec).unwrap();
            let inv = rr_inverse(&spec).unwrap();
            let id = m.matmul(&inv).unwrap();
            let n = 1 << k;
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { Rational::one() } else { Rational::zero() };
                    ensure!(id.get(i, j) == &want, "p = {p}, k = {k}: M·M⁻¹ ≠ I at ({i},{j})");
                }
            }
            ensure!(inv == invert(&m).unwrap(), "closed form differs from elimination");
            // The literal closed form indexes columns by the complemented string.
            let pm1 = &p - Rational::one();
            let denom = pow(&(&p + &p - Rational::one()), k);
            let mut literal_cols = Vec::new();
            for (r, row_label) in inv.row_labels().iter().enumerate() {
                for (c, col_label) in inv.col_labels().iter().enumerate() {
                    let h = hamming(row_label, &complement(col_label));
                    let lit = pow(&p, h) * pow(&pm1, k - h) / &denom;
                    ensure!(inv.get(r, c) == &lit, "entry ({row_label},{col_label}) differs");
                    checked += 1;
                }
            }
            for c in 0..n {
                let col: Vec<Rational> = (0..n)
                    .map(|r| {
                        let h = hamming(&inv.row_labels()[r], &inv.col_labels()[c]);
                        pow(&p, h) * pow(&pm1, k - h) / &denom
                    })
                    .collect();
                literal_cols.push(col);
            }
            let mut actual: Vec<Vec<Rational>> = (0..n).map(|c| inv.column(c)).collect();
            literal_cols.sort();
            actual.sort();
            ensure!(literal_cols == actual, "literal form is not a column permutation");
        }
    }
    Ok(format!("identity exact, {checked} closed-form entries"))
}

fn c3_theorem4() -> Outcome {
    let mut g = rng(3);
    let mut checks = 0;
    let mut priors = 0;
    for p in [rat(2, 3), rat(3, 4)] {
        let grid = prior_grid(8, &p);
        for k in 1..=3 {
            let rr = rr_matrix(&RRSpec::new(p.clone(), k).unwrap()).unwrap();
            let mut mechanisms = vec![rr.matrix().clone()];
            for _ in 0..20 {
                let outputs = g.gen_range(2..=(1 << k) + 2);
                let a = random_post_processing(&mut g, rr.row_labels(), outputs);
                mechanisms.push(rr.post_process(&a).unwrap().into_matrix());
            }
            for m in &mechanisms {
                let report = sweep_parity_protection(m, k, &p, &grid).map_err(|e| e.to_string())?;
                ensure!(report.holds(), "p = {p}, k = {k}: flip {:?}", report.witnesses[0]);
                checks += report.checks;
                priors += report.priors_checked;
            }
        }
        let rr2 = rr_matrix(&RRSpec::new(p.clone(), 2).unwrap()).unwrap();
        let prior = BitPrior::new(vec![rat(1, 2), p.clone()]).unwrap();
        let query = ParityQuery::new([1, 2], 2).unwrap();
        let r = verify_parity_protection(&rr2, &prior, &query).unwrap();
        ensure!(!r.holds(), "uniform-bit attacker not violated at p = {p}");
        ensure!(
            r.witnesses.iter().any(|w| w.output == "01" || w.output == "00"),
            "uniform-bit attacker witnesses {:?}",
            r.witnesses.iter().map(|w| &w.output).collect::<Vec<_>>()
        );
    }
    Ok(format!("{priors} priors, {checks} checks, no flips; uniform-bit attacker violated on 01"))
}

fn c4_converse() -> Outcome {
    let mut g = rng(4);
    let mut found = 0;
    let mut draws = 0;
    while found < 50 {
        let k = if found < 25 { 2 } else { 3 };
        let p = if found % 2 == 0 { rat(2, 3) } else { rat(3, 4) };
        let inv = rr_inverse(&RRSpec::new(p.clone(), k).unwrap()).unwrap();
        let outputs = g.gen_range(2..=(1 << k) + 1);
        let m = random_stochastic(&mut g, out_labels(outputs), bit_labels(k), 9);
        draws += 1;
        let outside = m
            .rows()
            .any(|row| !membership(row, &inv).unwrap().is_member());
        if !outside {
            continue;
        }
        let w = find_parity_violation(&m, k, &p).map_err(|e| e.to_string())?;
        ensure!(w.is_some(), "matrix #{found} (k = {k}, p = {p}) has no violation:\n{m}");
        found += 1;
    }
    Ok(format!("50 matrices outside the cone ({draws} drawn), all violated"))
}

fn c5_lemma1() -> Outcome {
    for p in [rat(2, 3), rat(3, 4), rat(9, 10)] {
        for k in 1..=3 {
            let flipped = rr_matrix(&RRSpec::new(Rational::one() - &p, k).unwrap()).unwrap();
            let inv = rr_inverse(&RRSpec::new(p.clone(), k).unwrap()).unwrap();
            for row in flipped.rows() {
                ensure!(membership(row, &inv).unwrap().is_member(), "p = {p}, k = {k}: row outside");
            }
            ensure!(cnf_membership(&flipped, &inv).unwrap().holds, "cnf test failed");
        }
    }
    Ok("rows of RR(1-p) inside for k <= 3".into())
}

fn c6_relaxation() -> Outcome {
    let mut g = rng(6);
    for p in [rat(2, 3), rat(3, 4)] {
        let spec = RRSpec::new(p.clone(), 2).unwrap();
        let d = derive_dp_from_rr(&spec).map_err(|e| e.to_string())?;
        let alpha = &p / (Rational::one() - &p);
        let labels = bit_labels(2);
        let mut want = HashSet::new();
        for a in 0..4 {
            for b in 0..4 {
                if hamming(&labels[a], &labels[b]) == 1 {
                    let mut c = vec![Rational::zero(); 4];
                    c[a] = -Rational::one();
                    c[b] = alpha.clone();
                    want.insert(LinearConstraint::ge(c));
                }
            }
        }
        let got: HashSet<_> = d.system.constraints().iter().cloned().collect();
        ensure!(want.len() == 8 && got == want, "p = {p}: derived system differs");
        let rr = rr_constraints(&spec).unwrap();
        let m = rr_matrix(&spec).unwrap();
        for _ in 0..1000 {
            // A point of the cone and an unconstrained point.
            let y: Vec<Rational> = (0..4).map(|_| random_unit(&mut g)).collect();
            let x = m.left_mul(&y).unwrap();
            ensure!(d.system.satisfied_by(&x), "cone point {x:?} violates the relaxation");
            let z: Vec<Rational> = (0..4).map(|_| random_unit(&mut g)).collect();
            if rr.satisfied_by(&z) {
                ensure!(d.system.satisfied_by(&z), "point {z:?} violates the relaxation");
            }
        }
    }
    Ok("8 constraints with alpha = p/(1-p); 2000 points sound per p".into())
}

fn c7_lemma5() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [0.25, 0.5, 0.75] {
        let w = Window::new(160);
        for k in -30..=30 {
            let d = dnb_pmf(p, 1, k, &w).map_err(|e| e.to_string())?;
            let oracle = (1.0 - p) / (1.0 + p) * p.powi(k.abs() as i32);
            worst = worst.max((d - oracle).abs());
            ensure!((d - geometric_pmf(p, k)).abs() < 1e-12, "p = {p}, k = {k}");
        }
    }
    ensure!(worst < 1e-12, "max gap {worst:e}");
    Ok(format!("max gap {worst:.3e}"))
}

fn c8_theorem6() -> Outcome {
    for p in [0.5, 2.0 / 3.0, 0.75] {
        let s = dnb_constraints(p, 1, &Window::new(10)).unwrap().normalized_stencil();
        let want = [-1.0, p + 1.0 / p, -1.0];
        for (j, w) in (-1..=1).zip(want) {
            ensure!((s.get(j) - w).abs() < 1e-12, "p = {p}: c_{j} = {}", s.get(j));
        }
    }
    let mut worst = f64::INFINITY;
    for (p, r) in [(0.5, 1), (0.5, 2), (2.0 / 3.0, 1)] {
        let w = Window::new(90);
        let m = NoiseSpec::Dnb { p, r }.build().unwrap().matrix(&w).map_err(|e| e.to_string())?;
        let sys = dnb_constraints(p, r, &w).unwrap();
        let (v, at) = sys.max_violation(&m);
        ensure!(v >= -1e-8, "(p, r) = ({p}, {r}): value {v:e} at {at:?}");
        worst = worst.min(v);
    }
    for p in [0.5, 2.0 / 3.0] {
        let t = dp_from_dnb_telescoping(p, &Window::new(90)).map_err(|e| e.to_string())?;
        ensure!(t.passes(1e-9), "p = {p}: {t:?}");
        ensure!((t.epsilon_direct + p.ln()).abs() < 1e-9, "direct eps {}", t.epsilon_direct);
        ensure!(
            (t.epsilon_telescoping + p.ln()).abs() < 1e-9,
            "telescoping eps {}",
            t.epsilon_telescoping
        );
    }
    Ok(format!("stencils exact, min row value {worst:.3e}, eps = -ln p"))
}

fn c9_delta_identities() -> Outcome {
    let w = Window::new(40);
    for (p, r) in [(0.5, 1), (0.5, 2), (2.0 / 3.0, 1), (2.0 / 3.0, 2)] {
        let f = NoiseSpec::Dnb { p, r }.build().unwrap().table(&w);
        let g = dnb_constraints(p, r, &w).unwrap().stencil;
        let rep = verify_inverse_convolution(&f, &g, &w);
        let want = ((1.0 - p) / (1.0 + p)).powi(2 * r as i32);
        ensure!((rep.value_at_0 - want).abs() < 1e-9, "DNB({p},{r}) centre {}", rep.value_at_0);
        ensure!(rep.max_offcenter < 1e-9, "DNB({p},{r}) off-centre {:e}", rep.max_offcenter);
    }
    for (l1, l2) in [(0.5, 0.5), (1.0, 1.0), (2.0, 2.0), (1.0, 2.0)] {
        let noise = NoiseSpec::Skellam { l1, l2 }.build().unwrap();
        let f = noise.table(&w);
        let g = IntSeries::from_fn(-40, 40, |j| if j % 2 == 0 { 1.0 } else { -1.0 } * noise.pmf(j));
        let rep = verify_inverse_convolution(&f, &g, &w);
        let want = (-2.0 * (l1 + l2)).exp();
        ensure!((rep.value_at_0 - want).abs() < 1e-9, "Skellam centre {}", rep.value_at_0);
        ensure!(rep.max_offcenter < 1e-9, "Skellam off-centre {:e}", rep.max_offcenter);
    }
    Ok("DNB r in {1,2} and Skellam identities hold on ±40".into())
}

fn c10_fourier() -> Outcome {
    let mut worst: f64 = 0.0;
    for (p, half) in [(0.5, 40), (2.0 / 3.0, 80)] {
        let w = Window::new(half);
        let f = IntSeries::from_fn(-(half as i64), half as i64, |k| geometric_pmf(p, k));
        let g = general_noise_stencil(&f, &w, DEFAULT_GRID_POINTS).map_err(|e| e.to_string())?;
        let scale = -g.stencil.get(1);
        ensure!(scale > 0.0, "p = {p}: g(1) = {}", g.stencil.get(1));
        let analytic = dnb_constraints(p, 1, &w).unwrap().normalized_stencil();
        for j in g.stencil.start.min(-1)..=g.stencil.end().max(1) {
            let gap = (g.stencil.get(j) / scale - analytic.get(j)).abs();
            worst = worst.max(gap);
            ensure!(gap < 1e-6, "p = {p}: offset {j} differs by {gap:e}");
        }
    }
    Ok(format!("max gap after scaling {worst:.3e}"))
}

fn c11_frapp() -> Outcome {
    let mut g = rng(11);
    let gammas = [rat(2, 1), rat(3, 1), rat(5, 2), rat(19, 4)];
    let mut checks = 0usize;
    for trial in 0..100 {
        let gamma = &gammas[trial % gammas.len()];
        let q = random_gamma_transition(&mut g, gamma, 3);
        ensure!(
            privcone::mechanisms::check_gamma_amplification(&q, gamma),
            "generator broke amplification"
        );
        let m = pram_matrix(&PramSpec::new(q, 2).unwrap()).unwrap();
        let sys = frapp_approx_constraints(gamma, 3, 2).unwrap();
        ensure!(sys.labels() == m.col_labels(), "label order differs");
        for row in m.rows() {
            for c in sys.constraints() {
                checks += 1;
                ensure!(c.satisfied_by(row), "trial {trial}: row violates {:?}", c);
            }
        }
    }
    Ok(format!("{checks} row/constraint checks exact"))
}

fn drop_expected(p: &Rational) -> Vec<Vec<Rational>> {
    let q = Rational::one() - p;
    let (pp, pq, qq) = (p * p, p * &q, &q * &q);
    let z = Rational::zero();
    let one = Rational::one();
    let e = |c: &str| match c {
        "P" => pp.clone(),
        "X" => pq.clone(),
        "p" => p.clone(),
        "Q" => qq.clone(),
        "q" => q.clone(),
        "1" => one.clone(),
        _ => z.clone(),
    };
    [
        "P........",
        ".P.......",
        "XXp......",
        "...P.....",
        "....P....",
        "...XXp...",
        "X..X..p..",
        ".X..X..p.",
        "QQqQQqqq1",
    ]
    .iter()
    .map(|r| r.chars().map(|c| e(&c.to_string())).collect())
    .collect()
}

fn drop_inverse_expected(p: &Rational) -> Vec<Vec<Rational>> {
    let q = Rational::one() - p;
    let pp = p * p;
    let a = Rational::one() / &pp;
    let b = -&q / &pp;
    let c = Rational::one() / p;
    let d = &q * &q / &pp;
    let e = -&q / p;
    let map = |ch: char| match ch {
        'a' => a.clone(),
        'b' => b.clone(),
        'c' => c.clone(),
        'd' => d.clone(),
        'e' => e.clone(),
        '1' => Rational::one(),
        _ => Rational::zero(),
    };
    [
        "a........",
        ".a.......",
        "bbc......",
        "...a.....",
        "....a....",
        "...bbc...",
        "b..b..c..",
        ".b..b..c.",
        "ddeddeee1",
    ]
    .iter()
    .map(|r| r.chars().map(map).collect())
    .collect()
}

fn sort_expected() -> Vec<Vec<Rational>> {
    [
        "1........",
        ".1.1.....",
        "..1...1..",
        ".........",
        "....1....",
        ".....1.1.",
        ".........",
        ".........",
        "........1",
    ]
    .iter()
    .map(|r| r.chars().map(|c| if c == '1' { int(1) } else { int(0) }).collect())
    .collect()
}

fn matrix_rows(m: &LabeledMatrix) -> Vec<Vec<Rational>> {
    m.rows().map(|r| r.to_vec()).collect()
}

fn c12_sampling() -> Outcome {
    let labels = ["aa", "ab", "a?", "ba", "bb", "b?", "?a", "?b", "??"];
    let sort = sort_matrix(2, 2).unwrap();
    ensure!(sort.col_labels() == labels && sort.row_labels() == labels, "sort labels");
    ensure!(matrix_rows(&sort) == sort_expected(), "sort matrix differs from the expected matrix");
    let mut commute = None;
    for p in [rat(1, 2), rat(2, 3)] {
        let spec = SamplingSpec::new(p.clone(), 2, 2).unwrap();
        let drop = drop_matrix(&spec).unwrap();
        ensure!(drop.col_labels() == labels, "drop labels");
        ensure!(matrix_rows(&drop) == drop_expected(&p), "p = {p}: drop matrix differs");
        let inv = invert(&drop).unwrap();
        ensure!(matrix_rows(&inv) == drop_inverse_expected(&p), "p = {p}: drop inverse differs");
        let sd = sort.matmul(&drop).unwrap();
        let ds = drop.matmul(&sort).unwrap();
        if matrix_rows(&sd) != matrix_rows(&ds) && commute.is_none() {
            let col = (0..9).find(|&j| sd.column(j) != ds.column(j)).unwrap();
            commute = Some(format!("sort·drop ≠ drop·sort (first differing column {})", labels[col]));
        }
        let sds = sd.matmul(&sort).unwrap();
        ensure!(matrix_rows(&sds) == matrix_rows(&sd), "sort·drop·sort ≠ sort·drop");
        let samp = sampling_matrix(&spec).unwrap();
        ensure!(matrix_rows(&samp) == matrix_rows(&sd), "sampling matrix is not sort·drop");
        let sys = sampling_constraints(&spec).unwrap();
        for row in samp.rows() {
            ensure!(sys.satisfied_by(row), "p = {p}: sampling row violates the cone");
        }
        let q = Rational::one() / (int(2) - &p);
        for records in [[0usize, 0], [0, 1], [1, 0], [1, 1]] {
            let r = privcone::semantics::verify_sampling_parity(&samp, &spec, &q, &records)
                .map_err(|e| e.to_string())?;
            ensure!(r.holds(), "p = {p}, records {records:?}: {:?}", r.witnesses.first());
        }
    }
    if let Some(why) = commute {
        return Err(format!("{why}; reference matrices, cone rows and q = 1/(2-p) semantics pass"));
    }
    Ok("reference matrices exact, commute, cone rows, q = 1/(2-p) holds".into())
}

/// Exact row-cone test for one instance.
enum Cone {
    Inverse(LabeledMatrix),
    System(ConstraintSystem),
}

impl Cone {
    fn contains(&self, x: &[Rational]) -> bool {
        match self {
            Cone::Inverse(inv) => !matches!(membership(x, inv).unwrap(), Membership::Outside { .. }),
            Cone::System(s) => s.satisfied_by(x),
        }
    }
}

struct Instance {
    name: String,
    m: privcone::numerics::MechanismMatrix,
    cone: Cone,
}

fn instance(g: &mut rand_chacha::ChaCha8Rng, trial: usize) -> Instance {
    match trial % 3 {
        0 => {
            let k = g.gen_range(1..=3);
            let mut p = random_unit(g);
            while &p * int(2) == Rational::one() {
                p = random_unit(g);
            }
            let spec = RRSpec::new(p.clone(), k).unwrap();
            Instance {
                name: format!("RR({p}, {k})"),
                m: rr_matrix(&spec).unwrap(),
                cone: Cone::Inverse(rr_inverse(&spec).unwrap()),
            }
        }
        1 => loop {
            let q = random_gamma_transition(g, &rat(3, 1), 3);
            let m = pram_matrix(&PramSpec::new(q, 2).unwrap()).unwrap();
            if let Ok(inv) = invert(&m) {
                break Instance {
                    name: "FRAPP(3, k=2)".into(),
                    m,
                    cone: Cone::Inverse(inv),
                };
            }
        },
        _ => {
            let p = rat(g.gen_range(1..=5), 6);
            let spec = SamplingSpec::new(p.clone(), 2, 2).unwrap();
            Instance {
                name: format!("sampling({p})"),
                m: sampling_matrix(&spec).unwrap(),
                cone: Cone::System(sampling_constraints(&spec).unwrap()),
            }
        }
    }
}

fn random_cone_point(g: &mut rand_chacha::ChaCha8Rng, m: &LabeledMatrix) -> Vec<Rational> {
    let y: Vec<Rational> = (0..m.nrows()).map(|_| random_unit(g)).collect();
    m.left_mul(&y).unwrap()
}

fn c13_properties() -> Outcome {
    let mut g = rng(13);
    for trial in 0..200 {
        // Scaling.
        let inst = instance(&mut g, trial);
        let x = random_cone_point(&mut g, &inst.m);
        let c = random_positive(&mut g, 5);
        let scaled: Vec<Rational> = x.iter().map(|v| v * &c).collect();
        ensure!(inst.cone.contains(&x) && inst.cone.contains(&scaled), "scaling, {}", inst.name);
    }
    for trial in 0..200 {
        // Convexity.
        let inst = instance(&mut g, trial);
        let x = random_cone_point(&mut g, &inst.m);
        let y = random_cone_point(&mut g, &inst.m);
        let t = random_unit(&mut g);
        let mix: Vec<Rational> = x
            .iter()
            .zip(&y)
            .map(|(a, b)| &t * a + (Rational::one() - &t) * b)
            .collect();
        let sum: Vec<Rational> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        ensure!(inst.cone.contains(&mix) && inst.cone.contains(&sum), "convexity, {}", inst.name);
    }
    for trial in 0..200 {
        // Post-processing closure.
        let inst = instance(&mut g, trial);
        let outputs = g.gen_range(1..=inst.m.nrows() + 2);
        let a = random_post_processing(&mut g, inst.m.row_labels(), outputs);
        let post = inst.m.post_process(&a).unwrap();
        for row in post.rows() {
            ensure!(inst.cone.contains(row), "post-processing, {}", inst.name);
        }
    }
    for trial in 0..200 {
        // Mixture closure.
        let inst = instance(&mut g, trial);
        let outputs = g.gen_range(1..=inst.m.nrows() + 2);
        let a1 = random_post_processing(&mut g, inst.m.row_labels(), outputs);
        let a2 = random_post_processing(&mut g, inst.m.row_labels(), outputs);
        let m1 = inst.m.post_process(&a1).unwrap();
        let m2 = inst.m.post_process(&a2).unwrap();
        let t = random_unit(&mut g);
        let mixed = m1
            .matrix()
            .scale(&t)
            .add(&m2.matrix().scale(&(Rational::one() - &t)))
            .unwrap();
        ensure!(mixed.column_sums().iter().all(|s| s.is_one()), "mixture not stochastic");
        ensure!(!mixed.has_negative_entry(), "mixture has a negative entry");
        for row in mixed.rows() {
            ensure!(inst.cone.contains(row), "mixture, {}", inst.name);
        }
    }
    Ok("4 × 200 exact trials over RR, FRAPP and sampling".into())
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "randomized response cone", limit: secs(1), run: c1_rr_cone },
        Criterion { id: 2, name: "randomized response inverse", limit: secs(5), run: c2_inverse },
        Criterion { id: 3, name: "parity protection sweep", limit: secs(60), run: c3_theorem4 },
        Criterion { id: 4, name: "parity protection converse", limit: secs(60), run: c4_converse },
        Criterion { id: 5, name: "RR(p) and RR(1-p) share a cone", limit: None, run: c5_lemma1 },
        Criterion { id: 6, name: "differential privacy by elimination", limit: secs(5), run: c6_relaxation },
        Criterion { id: 7, name: "DNB(p, 1) is geometric", limit: None, run: c7_lemma5 },
        Criterion { id: 8, name: "DNB stencils and telescoping", limit: None, run: c8_theorem6 },
        Criterion { id: 9, name: "convolution delta identities", limit: None, run: c9_delta_identities },
        Criterion { id: 10, name: "Fourier stencil route", limit: None, run: c10_fourier },
        Criterion { id: 11, name: "FRAPP approximation cone", limit: secs(30), run: c11_frapp },
        Criterion { id: 12, name: "sampling matrices and semantics", limit: None, run: c12_sampling },
        Criterion { id: 13, name: "cone and axiom properties", limit: None, run: c13_properties },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if took > limit => {
                Err(format!("took {:.2}s, limit {}s", took.as_secs_f64(), limit.as_secs()))
            }
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!(
                "PASS {:>2} {} ({:.2}s): {detail}",
                c.id,
                c.name,
                took.as_secs_f64()
            ),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {} ({:.2}s): {why}", c.id, c.name, took.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
