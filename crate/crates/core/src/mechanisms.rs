//! Finite-domain mechanism constructors: randomized response, per-tuple
//! perturbation (PRAM/FRAPP) and sampling via drop + sort.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::{check_dim, int, LabeledMatrix, MechanismMatrix, Rational};

/// How dataset indices map to dataset labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetOrder {
    /// Bit strings with the all-ones dataset first (`11, 10, 01, 00`).
    ReverseLexBits,
    /// Tuple sequences in lexicographic order of the tuple alphabet, with
    /// the missing value `?` sorted last.
    LexTuples,
}

impl DatasetOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetOrder::ReverseLexBits => "reverse-lex-bits",
            DatasetOrder::LexTuples => "lex-tuples",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "reverse-lex-bits" => Ok(DatasetOrder::ReverseLexBits),
            "lex-tuples" => Ok(DatasetOrder::LexTuples),
            other => Err(Error::Parse(format!("unknown dataset order `{other}`"))),
        }
    }
}

impl std::fmt::Display for DatasetOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Label of the dataset at `index` among the `2^k` bit strings in
/// reverse-lex order.
pub fn bit_label(index: usize, k: usize) -> String {
    let value = (1usize << k) - 1 - index;
    (0..k)
        .map(|b| if value >> (k - 1 - b) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Inverse of [`bit_label`].
pub fn bit_index(label: &str) -> Option<usize> {
    let k = label.len();
    let mut value = 0usize;
    for c in label.chars() {
        value = value * 2
            + match c {
                '1' => 1,
                '0' => 0,
                _ => return None,
            };
    }
    Some((1usize << k) - 1 - value)
}

pub fn bit_labels(k: usize) -> Vec<String> {
    (0..1usize << k).map(|i| bit_label(i, k)).collect()
}

/// Bits of a reverse-lex label, `true` for `1`; position 0 is bit 1.
pub fn label_bits(label: &str) -> Vec<bool> {
    label.chars().map(|c| c == '1').collect()
}

pub fn hamming(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).filter(|(x, y)| x != y).count()
}

/// Tuple alphabet of size `n`: `a, b, c, ...`, or `t0, t1, ...` past 26.
pub fn tuple_alphabet(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (0..n).map(|i| format!("t{i}")).collect()
    }
}

pub const MISSING: &str = "?";

fn check_probability(name: &str, p: &Rational) -> Result<()> {
    if p.is_negative() || p > &Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "{name} = {p} must lie in [0, 1]"
        )));
    }
    Ok(())
}

/// Randomized response on `k` bits, keeping each bit with probability `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RRSpec {
    pub p: Rational,
    pub k: usize,
}

impl RRSpec {
    pub fn new(p: Rational, k: usize) -> Result<Self> {
        let spec = Self { p, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p", &self.p)?;
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.k > 12 {
            return Err(Error::DomainTooLarge {
                size: 1usize.checked_shl(self.k as u32).unwrap_or(usize::MAX),
                cap: crate::numerics::DEFAULT_MAX_DIM,
            });
        }
        check_dim(1usize << self.k)
    }

    pub fn is_half(&self) -> bool {
        self.p == Rational::new(1.into(), 2.into())
    }

    /// The same analysis at `max(p, 1 - p)`; both share one consistent
    /// normal form.
    pub fn canonical(&self) -> Self {
        let q = Rational::one() - &self.p;
        Self {
            p: if q > self.p { q } else { self.p.clone() },
            k: self.k,
        }
    }
}

fn rr_block(p: &Rational) -> LabeledMatrix {
    let q = Rational::one() - p;
    let labels = vec!["1".to_string(), "0".to_string()];
    LabeledMatrix::new(
        labels.clone(),
        labels,
        vec![vec![p.clone(), q.clone()], vec![q, p.clone()]],
    )
    .expect("2x2 block is well formed")
}

/// `2^k x 2^k` matrix of randomized response, the `k`-fold Kronecker power
/// of `[[p, 1-p], [1-p, p]]`, in reverse-lex bit order.
pub fn rr_matrix(spec: &RRSpec) -> Result<MechanismMatrix> {
    spec.validate()?;
    let m = rr_block(&spec.p).kron_power(spec.k)?;
    MechanismMatrix::new(m, DatasetOrder::ReverseLexBits)
}

/// Closed-form inverse of [`rr_matrix`]:
/// entry `(i, j) = p^(k-H) (p-1)^H / (2p-1)^k` with `H` the Hamming
/// distance between `D_i` and `D_j`.
pub fn rr_inverse(spec: &RRSpec) -> Result<LabeledMatrix> {
    spec.validate()?;
    if spec.is_half() {
        return Err(Error::SingularAtHalf);
    }
    let k = spec.k;
    let p = &spec.p;
    let pm1 = p - Rational::one();
    let denom = num_traits::pow(p * int(2) - Rational::one(), k);
    let pows_p: Vec<Rational> = (0..=k).map(|e| num_traits::pow(p.clone(), e)).collect();
    let pows_q: Vec<Rational> = (0..=k).map(|e| num_traits::pow(pm1.clone(), e)).collect();
    let by_distance: Vec<Rational> = (0..=k)
        .map(|h| &pows_p[k - h] * &pows_q[h] / &denom)
        .collect();
    let labels = bit_labels(k);
    LabeledMatrix::from_fn(labels.clone(), labels, |i, j| {
        by_distance[(i ^ j).count_ones() as usize].clone()
    })
}

/// Per-tuple perturbation: each of `k` tuples passes independently through
/// the `N x N` transition matrix `q` (entry `(b, a)` is `P(a -> b)`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PramSpec {
    pub q: MechanismMatrix,
    pub k: usize,
}

impl PramSpec {
    pub fn new(q: MechanismMatrix, k: usize) -> Result<Self> {
        let spec = Self { q, k };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.q.is_square() {
            return Err(Error::NotSquare {
                rows: self.q.nrows(),
                cols: self.q.ncols(),
            });
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        let n = self.q.ncols();
        let size = (0..self.k).try_fold(1usize, |acc, _| acc.checked_mul(n));
        check_dim(size.unwrap_or(usize::MAX))
    }
}

/// `k`-fold Kronecker power of the per-tuple matrix, labeled by tuple
/// sequences in lex order.
pub fn pram_matrix(spec: &PramSpec) -> Result<MechanismMatrix> {
    spec.validate()?;
    let m = spec.q.matrix().kron_power(spec.k)?;
    MechanismMatrix::new(m, DatasetOrder::LexTuples)
}

/// True iff every column combination `p * col_i - (1-p) * col_j` with
/// `p = gamma / (1 + gamma)` is entrywise nonnegative.
pub fn check_gamma_amplification(q: &MechanismMatrix, gamma: &Rational) -> bool {
    let p = gamma / (gamma + Rational::one());
    let np = Rational::one() - &p;
    (0..q.nrows()).all(|a| {
        let row = q.row(a);
        row.iter()
            .all(|qi| row.iter().all(|qj| (&p * qi - &np * qj) >= Rational::zero()))
    })
}

/// Sampling over a population of `w` individuals with `n_tuple_values`
/// record values; each present record survives with probability `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingSpec {
    pub p: Rational,
    pub n_tuple_values: usize,
    pub w: usize,
}

impl SamplingSpec {
    pub fn new(p: Rational, n_tuple_values: usize, w: usize) -> Result<Self> {
        let spec = Self {
            p,
            n_tuple_values,
            w,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p", &self.p)?;
        if self.p.is_zero() {
            return Err(Error::InvalidParameter("p must be positive".into()));
        }
        if self.n_tuple_values == 0 || self.w == 0 {
            return Err(Error::InvalidParameter(
                "n and w must both be positive".into(),
            ));
        }
        check_dim(self.domain_size().unwrap_or(usize::MAX))
    }

    fn domain_size(&self) -> Option<usize> {
        (0..self.w).try_fold(1usize, |acc, _| acc.checked_mul(self.n_tuple_values + 1))
    }

    /// Record values followed by `?`.
    pub fn tuple_labels(&self) -> Vec<String> {
        let mut t = tuple_alphabet(self.n_tuple_values);
        t.push(MISSING.to_string());
        t
    }

    /// All datasets as tuple-index sequences in lex order; index
    /// `n_tuple_values` stands for `?`.
    pub fn datasets(&self) -> Vec<Vec<usize>> {
        let base = self.n_tuple_values + 1;
        let total = self.domain_size().unwrap_or(0);
        (0..total)
            .map(|mut idx| {
                let mut d = vec![0; self.w];
                for slot in d.iter_mut().rev() {
                    *slot = idx % base;
                    idx /= base;
                }
                d
            })
            .collect()
    }

    pub fn dataset_labels(&self) -> Vec<String> {
        let t = self.tuple_labels();
        self.datasets()
            .iter()
            .map(|d| d.iter().map(|&i| t[i].as_str()).collect())
            .collect()
    }

    pub fn dataset_index(&self, tuples: &[usize]) -> usize {
        let base = self.n_tuple_values + 1;
        tuples.iter().fold(0, |acc, &t| acc * base + t)
    }
}

fn drop_block(p: &Rational, n: usize) -> LabeledMatrix {
    let labels = {
        let mut t = tuple_alphabet(n);
        t.push(MISSING.to_string());
        t
    };
    let np = Rational::one() - p;
    LabeledMatrix::from_fn(labels.clone(), labels, |i, j| {
        if i == n && j == n {
            Rational::one()
        } else if i == n {
            np.clone()
        } else if i == j {
            p.clone()
        } else {
            Rational::zero()
        }
    })
    .expect("drop block is well formed")
}

/// Replaces each present tuple by `?` independently with probability `1-p`.
pub fn drop_matrix(spec: &SamplingSpec) -> Result<MechanismMatrix> {
    spec.validate()?;
    let m = drop_block(&spec.p, spec.n_tuple_values).kron_power(spec.w)?;
    MechanismMatrix::new(m, DatasetOrder::LexTuples)
}

/// Deterministic sort of the tuples of each dataset (`?` sorts last).
pub fn sort_matrix(n_tuple_values: usize, w: usize) -> Result<MechanismMatrix> {
    let spec = SamplingSpec::new(Rational::one(), n_tuple_values, w)?;
    let labels = spec.dataset_labels();
    let targets: Vec<usize> = spec
        .datasets()
        .into_iter()
        .map(|mut d| {
            d.sort_unstable();
            spec.dataset_index(&d)
        })
        .collect();
    let m = LabeledMatrix::from_fn(labels.clone(), labels, |i, j| {
        if targets[j] == i {
            Rational::one()
        } else {
            Rational::zero()
        }
    })?;
    MechanismMatrix::new(m, DatasetOrder::LexTuples)
}

/// Sampling: drop followed by sort.
pub fn sampling_matrix(spec: &SamplingSpec) -> Result<MechanismMatrix> {
    let sort = sort_matrix(spec.n_tuple_values, spec.w)?;
    drop_matrix(spec)?.post_process(sort.matrix())
}
