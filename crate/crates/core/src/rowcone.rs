//! Row-cone constraint systems, dual-cone membership and the reading of a
//! constraint as a statement about posterior odds.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mechanisms::{bit_labels, tuple_alphabet, DatasetOrder, RRSpec, SamplingSpec};
use crate::numerics::{check_dim, LabeledMatrix, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// `a · x >= 0`
    Ge,
    /// `a · x = 0`
    Eq,
    /// `a · x > 0`
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Eq => "=",
            Relation::Gt => ">",
        }
    }

    pub fn holds(self, value: &Rational) -> bool {
        match self {
            Relation::Ge => !value.is_negative(),
            Relation::Eq => value.is_zero(),
            Relation::Gt => value.is_positive(),
        }
    }
}

/// Homogeneous constraint `a · x (rel) 0`, kept with coprime integer
/// coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearConstraint {
    coefficients: Vec<Rational>,
    relation: Relation,
}

impl LinearConstraint {
    pub fn new(coefficients: Vec<Rational>, relation: Relation) -> Self {
        let mut c = Self {
            coefficients,
            relation,
        };
        c.normalize();
        c
    }

    pub fn ge(coefficients: Vec<Rational>) -> Self {
        Self::new(coefficients, Relation::Ge)
    }

    fn normalize(&mut self) {
        let lcm = self
            .coefficients
            .iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let ints: Vec<BigInt> = self
            .coefficients
            .iter()
            .map(|r| r.numer() * (&lcm / r.denom()))
            .collect();
        let gcd = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        if gcd.is_zero() {
            return;
        }
        let flip = self.relation == Relation::Eq
            && ints.iter().find(|v| !v.is_zero()).is_some_and(Signed::is_negative);
        self.coefficients = ints
            .into_iter()
            .map(|v| {
                let v = v / &gcd;
                Rational::from_integer(if flip { -v } else { v })
            })
            .collect();
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    /// Coefficients as integers (they always are after normalization).
    pub fn integer_coefficients(&self) -> Vec<BigInt> {
        self.coefficients.iter().map(|c| c.to_integer()).collect()
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.coefficients.iter().all(Zero::is_zero)
    }

    pub fn evaluate(&self, x: &[Rational]) -> Rational {
        self.coefficients
            .iter()
            .zip(x)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        self.relation.holds(&self.evaluate(x))
    }

    /// `(positive side, negative side)` as `(index, |coefficient|)` pairs.
    pub fn sides(&self) -> (Vec<(usize, Rational)>, Vec<(usize, Rational)>) {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.is_positive() {
                pos.push((i, c.clone()));
            } else if c.is_negative() {
                neg.push((i, -c));
            }
        }
        (pos, neg)
    }

    /// Renders `lhs >= rhs` with every coefficient positive, e.g.
    /// `x00 + x11 >= 2 x01`.
    pub fn display<'a>(&'a self, labels: &'a [String]) -> impl fmt::Display + 'a {
        ConstraintDisplay {
            constraint: self,
            labels,
        }
    }
}

struct ConstraintDisplay<'a> {
    constraint: &'a LinearConstraint,
    labels: &'a [String],
}

impl fmt::Display for ConstraintDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (pos, neg) = self.constraint.sides();
        let side = |terms: &[(usize, Rational)]| -> String {
            if terms.is_empty() {
                return "0".to_string();
            }
            terms
                .iter()
                .map(|(i, c)| {
                    let name = format!("x{}", self.labels[*i]);
                    if c.is_one() {
                        name
                    } else {
                        format!("{c}·{name}")
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        write!(
            f,
            "{} {} {}",
            side(&pos),
            self.constraint.relation.symbol(),
            side(&neg)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// The system describes the row cone exactly.
    ExactRowCone,
    /// A closed convex cone containing the row cone; guarantees derived
    /// from it are valid but may be incomplete.
    ApproximationCone,
    /// Implied by another system, typically through variable elimination.
    Relaxation,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ExactRowCone => "exact-row-cone",
            Provenance::ApproximationCone => "approximation-cone",
            Provenance::Relaxation => "relaxation",
        }
    }
}

/// A list of homogeneous constraints over dataset-indexed coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSystem {
    labels: Vec<String>,
    order: DatasetOrder,
    provenance: Provenance,
    constraints: Vec<LinearConstraint>,
    seen: HashSet<LinearConstraint>,
}

impl ConstraintSystem {
    pub fn new(labels: Vec<String>, order: DatasetOrder, provenance: Provenance) -> Self {
        Self {
            labels,
            order,
            provenance,
            constraints: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Adds `c` unless it is trivial or already present. Returns whether
    /// the constraint was new.
    pub fn push(&mut self, c: LinearConstraint) -> Result<bool> {
        if c.dim() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                found: c.dim(),
            });
        }
        if c.is_trivial() || self.seen.contains(&c) {
            return Ok(false);
        }
        self.seen.insert(c.clone());
        self.constraints.push(c);
        Ok(true)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn order(&self) -> DatasetOrder {
        self.order
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains(&self, c: &LinearConstraint) -> bool {
        self.seen.contains(c)
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        self.constraints.iter().all(|c| c.satisfied_by(x))
    }

    /// Indices and values of constraints that `x` violates.
    pub fn violations(&self, x: &[Rational]) -> Vec<(usize, Rational)> {
        self.constraints
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let v = c.evaluate(x);
                (!c.relation.holds(&v)).then_some((i, v))
            })
            .collect()
    }
}

/// Result of a dual-cone membership test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Membership {
    /// Every dot product is strictly positive.
    Inside,
    /// All dot products are nonnegative and at least one is zero.
    Boundary,
    /// The first column with a negative dot product.
    Outside { witness: String, value: Rational },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        !matches!(self, Membership::Outside { .. })
    }

    pub fn from_products<'a>(
        values: impl IntoIterator<Item = (&'a String, &'a Rational)>,
    ) -> Self {
        let mut boundary = false;
        for (label, v) in values {
            if v.is_negative() {
                return Membership::Outside {
                    witness: label.clone(),
                    value: v.clone(),
                };
            }
            boundary |= v.is_zero();
        }
        if boundary {
            Membership::Boundary
        } else {
            Membership::Inside
        }
    }
}

/// Tests `x` against every column of `inverse` (`x · m >= 0`).
pub fn membership(x: &[Rational], inverse: &LabeledMatrix) -> Result<Membership> {
    let products = inverse.left_mul(x)?;
    Ok(Membership::from_products(
        inverse.col_labels().iter().zip(&products),
    ))
}

/// Outcome of the `M · inverse >= 0` test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfReport {
    pub holds: bool,
    /// `(row of m, column of inverse, negative value)`.
    pub offending: Vec<(String, String, Rational)>,
    pub row_verdicts: Vec<(String, Membership)>,
}

pub fn cnf_membership(m: &LabeledMatrix, inverse: &LabeledMatrix) -> Result<CnfReport> {
    let product = m.matmul(inverse)?;
    let mut offending = Vec::new();
    let mut row_verdicts = Vec::with_capacity(m.nrows());
    for (i, label) in product.row_labels().iter().enumerate() {
        let row = product.row(i);
        for (j, v) in row.iter().enumerate() {
            if v.is_negative() {
                offending.push((label.clone(), product.col_labels()[j].clone(), v.clone()));
            }
        }
        row_verdicts.push((
            label.clone(),
            Membership::from_products(product.col_labels().iter().zip(row)),
        ));
    }
    Ok(CnfReport {
        holds: offending.is_empty(),
        offending,
        row_verdicts,
    })
}

/// One `>= 0` constraint per column of `inverse`.
pub fn constraints_from_inverse(
    inverse: &LabeledMatrix,
    order: DatasetOrder,
) -> Result<ConstraintSystem> {
    let mut sys = ConstraintSystem::new(
        inverse.row_labels().to_vec(),
        order,
        Provenance::ExactRowCone,
    );
    for j in 0..inverse.ncols() {
        sys.push(LinearConstraint::ge(inverse.column(j)))?;
    }
    Ok(sys)
}

/// Row cone of randomized response: for each bit string `s`, the
/// coefficient on `x_i` is `p^H(s, D_i) (p-1)^(k-H)`.
///
/// `p < 1/2` is first replaced by `1 - p`.
pub fn rr_constraints(spec: &RRSpec) -> Result<ConstraintSystem> {
    spec.validate()?;
    if spec.is_half() {
        return Err(Error::SingularAtHalf);
    }
    let spec = spec.canonical();
    let k = spec.k;
    let pm1 = &spec.p - Rational::one();
    let by_distance: Vec<Rational> = (0..=k)
        .map(|h| num_traits::pow(spec.p.clone(), h) * num_traits::pow(pm1.clone(), k - h))
        .collect();
    let labels = bit_labels(k);
    let n = labels.len();
    let mut sys = ConstraintSystem::new(labels, DatasetOrder::ReverseLexBits, Provenance::ExactRowCone);
    for s in 0..n {
        let coeffs = (0..n)
            .map(|i| by_distance[(s ^ i).count_ones() as usize].clone())
            .collect();
        sys.push(LinearConstraint::ge(coeffs))?;
    }
    Ok(sys)
}

/// Kronecker approximation cone for per-tuple perturbations with
/// amplification `gamma` over `n` tuple values and `k` tuples.
pub fn frapp_approx_constraints(gamma: &Rational, n: usize, k: usize) -> Result<ConstraintSystem> {
    if gamma < &Rational::one() {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be >= 1")));
    }
    if n == 0 || k == 0 {
        return Err(Error::InvalidParameter("n and k must be positive".into()));
    }
    let dim = (0..k)
        .try_fold(1usize, |acc, _| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    check_dim(dim)?;
    let p = gamma / (gamma + Rational::one());
    let np = Rational::one() - &p;
    let alphabet = tuple_alphabet(n);
    let labels: Vec<String> = (0..dim)
        .map(|d| digits(d, n, k).iter().map(|&t| alphabet[t].as_str()).collect())
        .collect();
    let datasets: Vec<Vec<usize>> = (0..dim).map(|d| digits(d, n, k)).collect();

    // Per-coordinate factor of (p e_i - (1-p) e_j) at tuple value t.
    let factor = |i: usize, j: usize, t: usize| -> Rational {
        let mut v = Rational::zero();
        if t == i {
            v += &p;
        }
        if t == j {
            v -= &np;
        }
        v
    };

    let mut sys = ConstraintSystem::new(labels, DatasetOrder::LexTuples, Provenance::ApproximationCone);
    for pair in 0..dim * dim {
        let is = digits(pair / dim, n, k);
        let js = digits(pair % dim, n, k);
        let coeffs = datasets
            .iter()
            .map(|d| {
                d.iter()
                    .enumerate()
                    .map(|(l, &t)| factor(is[l], js[l], t))
                    .product()
            })
            .collect();
        sys.push(LinearConstraint::ge(coeffs))?;
    }
    Ok(sys)
}

fn digits(mut value: usize, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = value % base;
        value /= base;
    }
    out
}

/// Row cone of sampling: permuted datasets get equal coordinates, and for
/// every `D_i`, `sum over D_j ⊆ D_i of x_j (-(1-p))^blank(D_i, D_j) >= 0`.
pub fn sampling_constraints(spec: &SamplingSpec) -> Result<ConstraintSystem> {
    spec.validate()?;
    let labels = spec.dataset_labels();
    let datasets = spec.datasets();
    let n = datasets.len();
    let missing = spec.n_tuple_values;
    let neg_q = -(Rational::one() - &spec.p);
    let mut sys = ConstraintSystem::new(labels, DatasetOrder::LexTuples, Provenance::ExactRowCone);

    for (i, d) in datasets.iter().enumerate() {
        let mut sorted = d.clone();
        sorted.sort_unstable();
        let j = spec.dataset_index(&sorted);
        if j != i {
            let mut coeffs = vec![Rational::zero(); n];
            coeffs[i] = Rational::one();
            coeffs[j] = -Rational::one();
            sys.push(LinearConstraint::new(coeffs, Relation::Eq))?;
        }
    }

    for d in &datasets {
        let present: Vec<usize> = (0..d.len()).filter(|&t| d[t] != missing).collect();
        let mut coeffs = vec![Rational::zero(); n];
        for mask in 0u32..1 << present.len() {
            let mut sub = d.clone();
            for (b, &pos) in present.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    sub[pos] = missing;
                }
            }
            coeffs[spec.dataset_index(&sub)] = num_traits::pow(neg_q.clone(), mask.count_ones() as usize);
        }
        sys.push(LinearConstraint::ge(coeffs))?;
    }
    Ok(sys)
}

/// A constraint read as a bound on posterior odds: for an attacker whose
/// prior is proportional to `prior_weights`,
/// `P(data in S2 | ω) <= posterior_odds_bound · P(data in S1 | ω)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticStatement {
    pub s1: BTreeSet<usize>,
    pub s2: BTreeSet<usize>,
    pub posterior_odds_bound: Rational,
    /// Largest factor by which the odds of `S2` against `S1` can grow,
    /// `w(S1) / w(S2)`; `None` when `S2` is empty.
    pub relative_odds_bound: Option<Rational>,
    pub prior_weights: Vec<Rational>,
}

pub fn interpret_constraint(c: &LinearConstraint) -> Result<SemanticStatement> {
    if c.relation() == Relation::Eq {
        return Err(Error::UnsupportedRelation("="));
    }
    if c.is_trivial() {
        return Err(Error::AllZero);
    }
    let total: Rational = c.coefficients().iter().map(|a| a.abs()).sum();
    let prior_weights: Vec<Rational> = c.coefficients().iter().map(|a| a.abs() / &total).collect();
    let (pos, neg) = c.sides();
    let s1: BTreeSet<usize> = pos.iter().map(|(i, _)| *i).collect();
    let s2: BTreeSet<usize> = neg.iter().map(|(i, _)| *i).collect();
    let w1: Rational = s1.iter().map(|&i| &prior_weights[i]).sum();
    let w2: Rational = s2.iter().map(|&i| &prior_weights[i]).sum();
    Ok(SemanticStatement {
        s1,
        s2,
        posterior_odds_bound: Rational::one(),
        relative_odds_bound: (!w2.is_zero()).then(|| w1 / w2),
        prior_weights,
    })
}
