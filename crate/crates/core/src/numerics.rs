//! Exact rational scalars and dense labeled matrices.
//!
//! Every finite-domain computation in the crate runs over [`Rational`], so
//! cone membership tests at the boundary (dot products that are exactly zero)
//! are decided without rounding.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mechanisms::DatasetOrder;

/// Arbitrary-precision fraction, always stored in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

/// Default cap on either dimension of a dense matrix (k = 12 bits).
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Current dense-matrix cap; `PRIVCONE_MAX_DIM` overrides the default.
pub fn dimension_cap() -> usize {
    std::env::var("PRIVCONE_MAX_DIM")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_MAX_DIM)
}

pub(crate) fn check_dim(size: usize) -> Result<()> {
    let cap = dimension_cap();
    if size > cap {
        return Err(Error::DomainTooLarge { size, cap });
    }
    Ok(())
}

/// `n / d` as a rational. Panics on a zero denominator.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"num/den"`, a bare integer, or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("`{s}` is not a rational number"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::Parse(format!("`{s}` has a zero denominator")));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = match whole {
            "" | "-" | "+" => BigInt::zero(),
            w => w.parse().map_err(|_| bad())?,
        };
        let frac_num: BigInt = frac.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let magnitude = Rational::from_integer(whole.abs()) + Rational::new(frac_num, scale);
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Renders as `"num/den"` (the denominator is always written).
pub fn render_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Dense row-major matrix of rationals with output (row) and dataset
/// (column) labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledMatrix {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    entries: Vec<Rational>,
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

impl LabeledMatrix {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        rows: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        if rows.len() != row_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: row_labels.len(),
                found: rows.len(),
            });
        }
        let mut entries = Vec::with_capacity(row_labels.len() * col_labels.len());
        for row in rows {
            if row.len() != col_labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: col_labels.len(),
                    found: row.len(),
                });
            }
            entries.extend(row);
        }
        Self::from_parts(row_labels, col_labels, entries)
    }

    pub fn from_parts(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        entries: Vec<Rational>,
    ) -> Result<Self> {
        check_dim(row_labels.len())?;
        check_dim(col_labels.len())?;
        if entries.len() != row_labels.len() * col_labels.len() {
            return Err(Error::DimensionMismatch {
                expected: row_labels.len() * col_labels.len(),
                found: entries.len(),
            });
        }
        check_unique(&row_labels)?;
        check_unique(&col_labels)?;
        Ok(Self {
            row_labels,
            col_labels,
            entries,
        })
    }

    pub fn from_fn(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        mut f: impl FnMut(usize, usize) -> Rational,
    ) -> Result<Self> {
        let cols = col_labels.len();
        let entries = (0..row_labels.len() * cols)
            .map(|idx| f(idx / cols, idx % cols))
            .collect();
        Self::from_parts(row_labels, col_labels, entries)
    }

    pub fn identity(labels: Vec<String>) -> Result<Self> {
        Self::from_fn(labels.clone(), labels, |i, j| {
            if i == j {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    }

    pub fn nrows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn ncols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.ncols() + j]
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        let c = self.ncols();
        &self.entries[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        (0..self.nrows()).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.nrows()).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_index(&self, label: &str) -> Option<usize> {
        self.row_labels.iter().position(|l| l == label)
    }

    pub fn col_index(&self, label: &str) -> Option<usize> {
        self.col_labels.iter().position(|l| l == label)
    }

    pub fn entries(&self) -> &[Rational] {
        &self.entries
    }

    pub fn with_labels(self, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        Self::from_parts(row_labels, col_labels, self.entries)
    }

    pub fn transpose(&self) -> Self {
        let (r, c) = (self.nrows(), self.ncols());
        let entries = (0..r * c)
            .map(|idx| self.get(idx % r, idx / r).clone())
            .collect();
        Self {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            entries,
        }
    }

    /// `self · rhs`; row labels come from `self`, column labels from `rhs`.
    pub fn matmul(&self, rhs: &LabeledMatrix) -> Result<Self> {
        if self.ncols() != rhs.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                found: rhs.nrows(),
            });
        }
        let (n, m, p) = (self.nrows(), self.ncols(), rhs.ncols());
        let mut entries = vec![Rational::zero(); n * p];
        for i in 0..n {
            for k in 0..m {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..p {
                    let b = rhs.get(k, j);
                    if !b.is_zero() {
                        entries[i * p + j] += a * b;
                    }
                }
            }
        }
        Self::from_parts(self.row_labels.clone(), rhs.col_labels.clone(), entries)
    }

    /// Row vector times matrix: `x · self`.
    pub fn left_mul(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        if x.len() != self.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.nrows(),
                found: x.len(),
            });
        }
        let mut out = vec![Rational::zero(); self.ncols()];
        for (i, xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                let a = self.get(i, j);
                if !a.is_zero() {
                    *o += xi * a;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self {
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }

    /// Entrywise `self + rhs`; shapes must agree, labels are taken from `self`.
    pub fn add(&self, rhs: &LabeledMatrix) -> Result<Self> {
        if self.nrows() != rhs.nrows() || self.ncols() != rhs.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                found: rhs.entries.len(),
            });
        }
        Ok(Self {
            row_labels: self.row_labels.clone(),
            col_labels: self.col_labels.clone(),
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn column_sums(&self) -> Vec<Rational> {
        (0..self.ncols())
            .map(|j| (0..self.nrows()).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn column_l1_norms(&self) -> Vec<Rational> {
        column_l1_norms(self)
    }

    pub fn has_negative_entry(&self) -> bool {
        self.entries.iter().any(Signed::is_negative)
    }

    pub fn kronecker(&self, rhs: &LabeledMatrix) -> Result<Self> {
        kronecker(self, rhs)
    }

    /// `k`-fold Kronecker power (`k >= 1`).
    pub fn kron_power(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "Kronecker power needs k >= 1".into(),
            ));
        }
        let mut acc = self.clone();
        for _ in 1..k {
            acc = kronecker(&acc, self)?;
        }
        Ok(acc)
    }

    pub fn invert(&self) -> Result<Self> {
        invert(self)
    }
}

impl fmt::Display for LabeledMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8}", "")?;
        for c in &self.col_labels {
            write!(f, " {c:>10}")?;
        }
        writeln!(f)?;
        for (i, r) in self.row_labels.iter().enumerate() {
            write!(f, "{r:>8}")?;
            for v in self.row(i) {
                write!(f, " {:>10}", v.to_string())?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Block Kronecker product `a ⊗ b` with `a` indices major. Labels are the
/// concatenation `label_a + label_b`.
pub fn kronecker(a: &LabeledMatrix, b: &LabeledMatrix) -> Result<LabeledMatrix> {
    let rows = a.nrows() * b.nrows();
    let cols = a.ncols() * b.ncols();
    check_dim(rows)?;
    check_dim(cols)?;
    let pair = |xs: &[String], ys: &[String]| -> Vec<String> {
        xs.iter()
            .flat_map(|x| ys.iter().map(move |y| format!("{x}{y}")))
            .collect()
    };
    let row_labels = pair(&a.row_labels, &b.row_labels);
    let col_labels = pair(&a.col_labels, &b.col_labels);
    let (br, bc) = (b.nrows(), b.ncols());
    LabeledMatrix::from_fn(row_labels, col_labels, |i, j| {
        a.get(i / br, j / bc) * b.get(i % br, j % bc)
    })
}

/// Per-column sum of absolute values.
pub fn column_l1_norms(m: &LabeledMatrix) -> Vec<Rational> {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m.get(i, j).abs()).sum())
        .collect()
}

fn lcm_of_denominators(row: &[Rational]) -> BigInt {
    row.iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()))
}

/// Exact inverse by fraction-free (Bareiss) elimination on the augmented
/// integer system, followed by rational back substitution.
///
/// The result has rows labeled by the columns of `m` and columns labeled by
/// the rows of `m`, so that `invert(m) · m` is the identity over `m`'s
/// column labels.
pub fn invert(m: &LabeledMatrix) -> Result<LabeledMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let width = 2 * n;

    // Row i of m equals row i of `work` divided by scales[i].
    let mut scales = Vec::with_capacity(n);
    let mut work: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for i in 0..n {
        let row = m.row(i);
        let l = lcm_of_denominators(row);
        let mut w: Vec<BigInt> = row
            .iter()
            .map(|r| r.numer() * (&l / r.denom()))
            .collect();
        w.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
        work.push(w);
        scales.push(l);
    }

    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot = (k..n).find(|&r| !work[r][k].is_zero()).ok_or(Error::SingularMatrix)?;
        work.swap(k, pivot);
        let (head, tail) = work.split_at_mut(k + 1);
        let pivot_row = &head[k];
        for row in tail.iter_mut() {
            let factor = row[k].clone();
            for j in k + 1..width {
                let v = &row[j] * &pivot_row[k] - &factor * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[k] = BigInt::zero();
        }
        prev = work[k][k].clone();
    }

    // Solve U X = R where [U | R] is the eliminated system.
    let mut x: Vec<Vec<Rational>> = vec![vec![Rational::zero(); n]; n];
    for i in (0..n).rev() {
        let diag = Rational::from_integer(work[i][i].clone());
        for c in 0..n {
            let mut acc = Rational::from_integer(work[i][n + c].clone());
            for j in i + 1..n {
                if !work[i][j].is_zero() {
                    acc -= Rational::from_integer(work[i][j].clone()) * &x[j][c];
                }
            }
            x[i][c] = acc / &diag;
        }
    }

    // m = diag(1/scales) · W  ⇒  m⁻¹ = W⁻¹ · diag(scales).
    let entries = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            &x[i][j] * Rational::from_integer(scales[j].clone())
        })
        .collect();
    LabeledMatrix::from_parts(m.col_labels.clone(), m.row_labels.clone(), entries)
}

/// A column-stochastic [`LabeledMatrix`]: entry `(i, j)` is the probability
/// that the mechanism outputs row label `i` on dataset column `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechanismMatrix {
    matrix: LabeledMatrix,
    order: DatasetOrder,
}

impl MechanismMatrix {
    pub fn new(matrix: LabeledMatrix, order: DatasetOrder) -> Result<Self> {
        for (j, sum) in matrix.column_sums().iter().enumerate() {
            let label = &matrix.col_labels()[j];
            if let Some(i) = (0..matrix.nrows()).find(|&i| matrix.get(i, j).is_negative()) {
                return Err(Error::NotStochastic {
                    column: label.clone(),
                    reason: format!("negative entry in row `{}`", matrix.row_labels()[i]),
                });
            }
            if !sum.is_one() {
                return Err(Error::NotStochastic {
                    column: label.clone(),
                    reason: format!("column sums to {sum}"),
                });
            }
        }
        Ok(Self { matrix, order })
    }

    pub fn matrix(&self) -> &LabeledMatrix {
        &self.matrix
    }

    pub fn order(&self) -> DatasetOrder {
        self.order
    }

    pub fn into_matrix(self) -> LabeledMatrix {
        self.matrix
    }

    /// Post-processing `A ∘ M`: `a` must be column stochastic with as many
    /// columns as `self` has rows.
    pub fn post_process(&self, a: &LabeledMatrix) -> Result<Self> {
        let product = a.matmul(&self.matrix)?;
        Self::new(product, self.order)
    }
}

impl std::ops::Deref for MechanismMatrix {
    type Target = LabeledMatrix;

    fn deref(&self) -> &LabeledMatrix {
        &self.matrix
    }
}
