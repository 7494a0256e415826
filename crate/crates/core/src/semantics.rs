//! Brute-force Bayesian attackers: priors, posteriors, parity protection
//! checks and differential-privacy ratio checks.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mechanisms::{bit_labels, DatasetOrder, SamplingSpec};
use crate::numerics::{LabeledMatrix, Rational};

/// Independent-bit prior: bit `i` is 1 with probability `q[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPrior {
    pub q: Vec<Rational>,
}

impl BitPrior {
    pub fn new(q: Vec<Rational>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidParameter("prior needs at least one bit".into()));
        }
        if let Some(bad) = q.iter().find(|v| v.is_negative() || *v > &Rational::one()) {
            return Err(Error::InvalidParameter(format!(
                "prior probability {bad} is outside [0, 1]"
            )));
        }
        Ok(Self { q })
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }
}

/// Parity of the bits in `j` (1-based positions).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParityQuery {
    pub j: BTreeSet<usize>,
}

impl ParityQuery {
    pub fn new(j: impl IntoIterator<Item = usize>, k: usize) -> Result<Self> {
        let j: BTreeSet<usize> = j.into_iter().collect();
        if j.is_empty() {
            return Err(Error::InvalidParameter("parity query needs at least one bit".into()));
        }
        if let Some(&bad) = j.iter().find(|&&b| b == 0 || b > k) {
            return Err(Error::InvalidParameter(format!(
                "bit {bad} is outside 1..={k}"
            )));
        }
        Ok(Self { j })
    }

    /// Every nonempty subset of `1..=k`.
    pub fn all(k: usize) -> Vec<Self> {
        (1u32..1 << k)
            .map(|mask| Self {
                j: (0..k).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect(),
            })
            .collect()
    }

    /// Parity (true = odd) of the query bits of the dataset at
    /// reverse-lex index `index` among `k`-bit strings.
    pub fn is_odd(&self, index: usize, k: usize) -> bool {
        let value = (1usize << k) - 1 - index;
        self.j
            .iter()
            .filter(|&&b| value >> (k - b) & 1 == 1)
            .count()
            % 2
            == 1
    }
}

/// Each tuple `i` is known to be `a_i` (with probability `q_i`) or `b_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuplePairPrior {
    pub pairs: Vec<(String, String)>,
    pub q: Vec<Rational>,
}

impl TuplePairPrior {
    pub fn new(pairs: Vec<(String, String)>, q: Vec<Rational>) -> Result<Self> {
        if pairs.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: pairs.len(),
                found: q.len(),
            });
        }
        if let Some((a, _)) = pairs.iter().find(|(a, b)| a == b) {
            return Err(Error::InvalidParameter(format!(
                "pair candidates must differ (`{a}` twice)"
            )));
        }
        BitPrior::new(q.clone())?;
        Ok(Self { pairs, q })
    }

    pub fn bit_prior(&self) -> BitPrior {
        BitPrior { q: self.q.clone() }
    }
}

pub fn bit_prior_to_dataset_prior(prior: &BitPrior, order: DatasetOrder) -> Result<Vec<Rational>> {
    if order != DatasetOrder::ReverseLexBits {
        return Err(Error::OrderMismatch(format!(
            "bit priors need {}, got {order}",
            DatasetOrder::ReverseLexBits
        )));
    }
    let k = prior.k();
    let one = Rational::one();
    Ok((0..1usize << k)
        .map(|i| {
            let value = (1usize << k) - 1 - i;
            prior
                .q
                .iter()
                .enumerate()
                .map(|(b, q)| {
                    if value >> (k - 1 - b) & 1 == 1 {
                        q.clone()
                    } else {
                        &one - q
                    }
                })
                .product()
        })
        .collect())
}

/// Bayes rule over a finite set of datasets.
pub fn posterior(prior: &[Rational], likelihood: &[Rational]) -> Result<Vec<Rational>> {
    if prior.len() != likelihood.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            found: likelihood.len(),
        });
    }
    let joint: Vec<Rational> = prior.iter().zip(likelihood).map(|(a, b)| a * b).collect();
    let evidence: Rational = joint.iter().sum();
    if evidence.is_zero() {
        return Err(Error::ZeroEvidence);
    }
    Ok(joint.into_iter().map(|j| j / &evidence).collect())
}

fn bits_of_len(n: usize) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::OrderMismatch(format!(
            "{n} datasets is not a power of two"
        )));
    }
    Ok(n.trailing_zeros() as usize)
}

/// `(P(parity even), P(parity odd))` under `dist` (reverse-lex bit order).
pub fn parity_split(dist: &[Rational], query: &ParityQuery) -> Result<(Rational, Rational)> {
    let k = bits_of_len(dist.len())?;
    if query.j.iter().any(|&b| b > k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: *query.j.iter().next_back().unwrap_or(&0),
        });
    }
    let mut even = Rational::zero();
    let mut odd = Rational::zero();
    for (i, w) in dist.iter().enumerate() {
        if query.is_odd(i, k) {
            odd += w;
        } else {
            even += w;
        }
    }
    Ok((even, odd))
}

/// `P(parity even) = (1 + prod_j (1 - 2 q_j)) / 2` for product priors.
pub fn parity_even_closed_form(prior: &BitPrior, query: &ParityQuery) -> Rational {
    let one = Rational::one();
    let two = &one + &one;
    let prod: Rational = query
        .j
        .iter()
        .map(|&b| &one - &two * &prior.q[b - 1])
        .product();
    (one + prod) / two
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
}

/// An output after which the attacker's preference flips.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Witness {
    pub output: String,
    pub prior_q: Vec<Rational>,
    pub query: Vec<usize>,
    pub context: Option<String>,
    pub prior_even: Rational,
    pub prior_odd: Rational,
    pub post_even: Rational,
    pub post_odd: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuaranteeReport {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    /// Outputs with zero probability under the prior.
    pub skipped: Vec<String>,
}

impl GuaranteeReport {
    fn from_parts(mut witnesses: Vec<Witness>, skipped: Vec<String>) -> Self {
        witnesses.sort();
        Self {
            verdict: if witnesses.is_empty() {
                Verdict::Holds
            } else {
                Verdict::Violated
            },
            witnesses,
            skipped,
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Whether the weak preference between even and odd survives: a prior
/// tie demands a posterior tie.
fn preference_kept(prior_even: &Rational, prior_odd: &Rational, joint_even: &Rational, joint_odd: &Rational) -> bool {
    (prior_even < prior_odd || joint_even >= joint_odd)
        && (prior_odd < prior_even || joint_odd >= joint_even)
}

fn check_bit_columns(m: &LabeledMatrix, k: usize) -> Result<()> {
    if m.ncols() != 1 << k {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            found: m.ncols(),
        });
    }
    if m.col_labels() != bit_labels(k).as_slice() {
        return Err(Error::OrderMismatch(
            "columns must be bit strings in reverse-lex order".into(),
        ));
    }
    Ok(())
}

/// Checks every output of `m` (rows used as likelihoods) against the
/// parity preference of an independent-bit attacker.
pub fn verify_parity_protection(
    m: &LabeledMatrix,
    prior: &BitPrior,
    query: &ParityQuery,
) -> Result<GuaranteeReport> {
    let k = prior.k();
    check_bit_columns(m, k)?;
    let dist = bit_prior_to_dataset_prior(prior, DatasetOrder::ReverseLexBits)?;
    let (prior_even, prior_odd) = parity_split(&dist, query)?;
    let odd: Vec<bool> = (0..dist.len()).map(|i| query.is_odd(i, k)).collect();
    let mut witnesses = Vec::new();
    let mut skipped = Vec::new();
    for (w, label) in m.row_labels().iter().enumerate() {
        let mut je = Rational::zero();
        let mut jo = Rational::zero();
        for (i, (pi, li)) in dist.iter().zip(m.row(w)).enumerate() {
            if pi.is_zero() || li.is_zero() {
                continue;
            }
            if odd[i] {
                jo += pi * li;
            } else {
                je += pi * li;
            }
        }
        let evidence = &je + &jo;
        if evidence.is_zero() {
            skipped.push(label.clone());
            continue;
        }
        if !preference_kept(&prior_even, &prior_odd, &je, &jo) {
            witnesses.push(Witness {
                output: label.clone(),
                prior_q: prior.q.clone(),
                query: query.j.iter().copied().collect(),
                context: None,
                prior_even: prior_even.clone(),
                prior_odd: prior_odd.clone(),
                post_even: &je / &evidence,
                post_odd: &jo / &evidence,
            });
        }
    }
    Ok(GuaranteeReport::from_parts(witnesses, skipped))
}

/// Summary of a sweep over many priors and queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub priors_checked: usize,
    pub checks: usize,
    pub witnesses: Vec<Witness>,
}

impl SweepReport {
    pub fn holds(&self) -> bool {
        self.witnesses.is_empty()
    }
}

/// Grid `{0, 1/d, ..., 1}` together with `p` and `1 - p`, sorted.
pub fn prior_grid(denominator: usize, p: &Rational) -> Vec<Rational> {
    let d = denominator.max(1) as i64;
    let mut grid: BTreeSet<Rational> = (0..=d)
        .map(|i| Rational::new(i.into(), d.into()))
        .collect();
    grid.insert(p.clone());
    grid.insert(Rational::one() - p);
    grid.into_iter().collect()
}

/// Exhaustive parity check over product priors drawn from `grid`: a query
/// `J` is checked under `q` when every `q_j` with `j` in `J` is `>= p` or
/// `<= 1 - p`; bits outside `J` range over the whole grid.
pub fn sweep_parity_protection(
    m: &LabeledMatrix,
    k: usize,
    p: &Rational,
    grid: &[Rational],
) -> Result<SweepReport> {
    check_bit_columns(m, k)?;
    let hi = if p > &(Rational::one() - p) { p.clone() } else { Rational::one() - p };
    let lo = Rational::one() - &hi;
    let admissible: Vec<bool> = grid.iter().map(|q| q >= &hi || q <= &lo).collect();
    let queries = ParityQuery::all(k);
    let odd: Vec<Vec<bool>> = queries
        .iter()
        .map(|qr| (0..1usize << k).map(|i| qr.is_odd(i, k)).collect())
        .collect();
    let n = 1usize << k;
    let mut report = SweepReport {
        priors_checked: 0,
        checks: 0,
        witnesses: Vec::new(),
    };
    let total = grid.len().pow(k as u32);
    for code in 0..total {
        let idx: Vec<usize> = {
            let mut c = code;
            let mut v = vec![0; k];
            for slot in v.iter_mut().rev() {
                *slot = c % grid.len();
                c /= grid.len();
            }
            v
        };
        let live: Vec<usize> = queries
            .iter()
            .enumerate()
            .filter(|(_, qr)| qr.j.iter().all(|&b| admissible[idx[b - 1]]))
            .map(|(i, _)| i)
            .collect();
        if live.is_empty() {
            continue;
        }
        let prior = BitPrior {
            q: idx.iter().map(|&i| grid[i].clone()).collect(),
        };
        let dist = bit_prior_to_dataset_prior(&prior, DatasetOrder::ReverseLexBits)?;
        report.priors_checked += 1;
        let joint: Vec<Vec<Rational>> = (0..m.nrows())
            .map(|w| dist.iter().zip(m.row(w)).map(|(a, b)| a * b).collect())
            .collect();
        for &qi in &live {
            let mut prior_even = Rational::zero();
            let mut prior_odd = Rational::zero();
            for i in 0..n {
                if odd[qi][i] {
                    prior_odd += &dist[i];
                } else {
                    prior_even += &dist[i];
                }
            }
            for (w, row) in joint.iter().enumerate() {
                report.checks += 1;
                let mut je = Rational::zero();
                let mut jo = Rational::zero();
                for (i, v) in row.iter().enumerate() {
                    if v.is_zero() {
                        continue;
                    }
                    if odd[qi][i] {
                        jo += v;
                    } else {
                        je += v;
                    }
                }
                let evidence = &je + &jo;
                if evidence.is_zero() || preference_kept(&prior_even, &prior_odd, &je, &jo) {
                    continue;
                }
                report.witnesses.push(Witness {
                    output: m.row_labels()[w].clone(),
                    prior_q: prior.q.clone(),
                    query: queries[qi].j.iter().copied().collect(),
                    context: None,
                    prior_even: prior_even.clone(),
                    prior_odd: prior_odd.clone(),
                    post_even: &je / &evidence,
                    post_odd: &jo / &evidence,
                });
            }
        }
    }
    report.witnesses.sort();
    Ok(report)
}

/// Searches priors with every `q_i` in `{p, 1 - p}` and every query for an
/// output that flips the attacker's parity preference.
pub fn find_parity_violation(m: &LabeledMatrix, k: usize, p: &Rational) -> Result<Option<Witness>> {
    let grid = {
        let mut g = vec![p.clone(), Rational::one() - p];
        g.sort();
        g.dedup();
        g
    };
    let report = sweep_parity_protection(m, k, p, &grid)?;
    Ok(report.witnesses.into_iter().next())
}

/// Keeps the `2^k` columns consistent with the candidate pairs and
/// relabels them as bit strings (`a_i` becomes 1). Column labels of `m`
/// must be concatenations of tuple labels.
pub fn restrict_mechanism(m: &LabeledMatrix, pairs: &TuplePairPrior) -> Result<LabeledMatrix> {
    let k = pairs.pairs.len();
    let labels = bit_labels(k);
    let mut picks = Vec::with_capacity(labels.len());
    for (idx, bits) in labels.iter().enumerate() {
        let name: String = bits
            .chars()
            .zip(&pairs.pairs)
            .map(|(b, (a, other))| if b == '1' { a.as_str() } else { other.as_str() })
            .collect();
        let col = m
            .col_index(&name)
            .ok_or_else(|| Error::UnknownTupleValue(name.clone()))?;
        picks.push((idx, col));
    }
    let ncols = labels.len();
    let entries = (0..m.nrows() * ncols)
        .map(|e| m.get(e / ncols, picks[e % ncols].1).clone())
        .collect();
    LabeledMatrix::from_parts(m.row_labels().to_vec(), labels, entries)
}

/// All unordered pairs of reverse-lex indices at Hamming distance 1.
pub fn hamming_neighbors(k: usize) -> Vec<(usize, usize)> {
    let n = 1usize << k;
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|(i, j)| (i ^ j).count_ones() == 1)
        .collect()
}

/// Outcome of a ratio check; neighbor pairs are checked in both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct DpReport {
    pub holds: bool,
    /// `None` when some ratio is unbounded (`x > 0` against `0`).
    pub max_ratio: Option<Rational>,
    pub max_log_ratio: f64,
    /// `(output, numerator dataset, denominator dataset)` of the largest ratio.
    pub worst: Option<(String, String, String)>,
}

fn worst_ratio(m: &LabeledMatrix, neighbors: &[(usize, usize)]) -> Result<(Option<Rational>, Option<(String, String, String)>)> {
    let mut best: Option<Option<Rational>> = None;
    let mut worst = None;
    for &(a, b) in neighbors {
        if a >= m.ncols() || b >= m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.ncols(),
                found: a.max(b) + 1,
            });
        }
        for (i, j) in [(a, b), (b, a)] {
            for w in 0..m.nrows() {
                let (num, den) = (m.get(w, i), m.get(w, j));
                if num.is_zero() {
                    continue;
                }
                let ratio = if den.is_zero() { None } else { Some(num / den) };
                let bigger = match (&best, &ratio) {
                    (None, _) => true,
                    (Some(None), _) => false,
                    (Some(Some(_)), None) => true,
                    (Some(Some(cur)), Some(r)) => r > cur,
                };
                if bigger {
                    best = Some(ratio);
                    worst = Some((
                        m.row_labels()[w].clone(),
                        m.col_labels()[i].clone(),
                        m.col_labels()[j].clone(),
                    ));
                }
            }
        }
    }
    Ok((best.unwrap_or_else(|| Some(Rational::one())), worst))
}

/// `entry(ω, i) <= bound · entry(ω, j)` for all outputs and neighbors.
pub fn dp_check_ratio(m: &LabeledMatrix, neighbors: &[(usize, usize)], bound: &Rational) -> Result<DpReport> {
    let (max_ratio, worst) = worst_ratio(m, neighbors)?;
    let holds = max_ratio.as_ref().is_some_and(|r| r <= bound);
    Ok(DpReport {
        holds,
        max_log_ratio: log_ratio(&max_ratio),
        max_ratio,
        worst,
    })
}

fn log_ratio(r: &Option<Rational>) -> f64 {
    match r {
        None => f64::INFINITY,
        Some(r) => {
            let n: f64 = crate::numerics::to_f64(&Rational::from_integer(r.numer().clone()));
            let d: f64 = crate::numerics::to_f64(&Rational::from_integer(r.denom().clone()));
            n.ln() - d.ln()
        }
    }
}

/// Pure `epsilon`-DP over the given neighbors, with a relative tolerance
/// of `1e-12` on the log-ratio comparison.
pub fn dp_check(m: &LabeledMatrix, neighbors: &[(usize, usize)], epsilon: f64) -> Result<DpReport> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be >= 0")));
    }
    let (max_ratio, worst) = worst_ratio(m, neighbors)?;
    let max_log_ratio = log_ratio(&max_ratio);
    let holds = max_log_ratio <= epsilon + 1e-12 * epsilon.max(1.0);
    Ok(DpReport {
        holds,
        max_ratio,
        max_log_ratio,
        worst,
    })
}

fn distinct_permutations(items: &[usize]) -> Vec<Vec<usize>> {
    let mut v = items.to_vec();
    v.sort_unstable();
    let mut out = vec![v.clone()];
    // Next lexicographic permutation until exhausted.
    loop {
        let Some(i) = (0..v.len().saturating_sub(1)).rev().find(|&i| v[i] < v[i + 1]) else {
            break;
        };
        let j = (i + 1..v.len()).rev().find(|&j| v[j] > v[i]).expect("successor exists");
        v.swap(i, j);
        v[i + 1..].reverse();
        out.push(v.clone());
    }
    out
}

/// Attacker who knows the multiset of records of all `w` individuals but
/// not who holds which (uniform over distinct assignments) and believes
/// each individual participated independently with probability `q`.
///
/// Checks, for every output of `m`, that the posterior over assignments
/// equals the prior, and that for every assignment the parity of the
/// number of non-participants is weakly even-preferred after observation.
pub fn verify_sampling_parity(
    m: &LabeledMatrix,
    spec: &SamplingSpec,
    q: &Rational,
    records: &[usize],
) -> Result<GuaranteeReport> {
    spec.validate()?;
    BitPrior::new(vec![q.clone()])?;
    let labels = spec.dataset_labels();
    if m.col_labels() != labels.as_slice() {
        return Err(Error::OrderMismatch(
            "columns must be the sampling domain in lex order".into(),
        ));
    }
    if records.len() != spec.w {
        return Err(Error::DimensionMismatch {
            expected: spec.w,
            found: records.len(),
        });
    }
    if let Some(&bad) = records.iter().find(|&&r| r >= spec.n_tuple_values) {
        return Err(Error::UnknownTupleValue(format!("record index {bad}")));
    }
    let w = spec.w;
    let missing = spec.n_tuple_values;
    let one = Rational::one();
    let nq = &one - q;
    let two = &one + &one;
    // P(misses even) - P(misses odd) under the participation prior.
    let bias = num_traits::pow(&one - q * &two, w);
    let tuples = spec.tuple_labels();
    let assignments = distinct_permutations(records);
    let sigma_prior = Rational::new(1.into(), (assignments.len() as i64).into());

    // For each assignment: (dataset index, participation weight, odd misses).
    let terms: Vec<Vec<(usize, Rational, bool)>> = assignments
        .iter()
        .map(|sigma| {
            (0u32..1 << w)
                .map(|mask| {
                    let d: Vec<usize> = (0..w)
                        .map(|t| if mask >> t & 1 == 1 { sigma[t] } else { missing })
                        .collect();
                    let present = mask.count_ones() as usize;
                    let weight = num_traits::pow(q.clone(), present) * num_traits::pow(nq.clone(), w - present);
                    (spec.dataset_index(&d), weight, (w - present) % 2 == 1)
                })
                .collect()
        })
        .collect();

    let mut witnesses = Vec::new();
    let mut skipped = Vec::new();
    for (o, out) in m.row_labels().iter().enumerate() {
        let row = m.row(o);
        let per_sigma: Vec<(Rational, Rational)> = terms
            .iter()
            .map(|ts| {
                let mut even = Rational::zero();
                let mut odd = Rational::zero();
                for (d, wt, is_odd) in ts {
                    let v = wt * &row[*d];
                    if *is_odd {
                        odd += v;
                    } else {
                        even += v;
                    }
                }
                (even, odd)
            })
            .collect();
        let evidence: Rational = per_sigma.iter().map(|(e, o)| e + o).sum::<Rational>() * &sigma_prior;
        if evidence.is_zero() {
            skipped.push(out.clone());
            continue;
        }
        for (sigma, (even, odd)) in assignments.iter().zip(&per_sigma) {
            let name: String = sigma.iter().map(|&t| tuples[t].as_str()).collect();
            let lik = even + odd;
            let post = &lik * &sigma_prior / &evidence;
            if post != sigma_prior {
                witnesses.push(Witness {
                    output: out.clone(),
                    prior_q: vec![q.clone()],
                    query: Vec::new(),
                    context: Some(format!("assignment {name}: posterior differs from prior")),
                    prior_even: sigma_prior.clone(),
                    prior_odd: &one - &sigma_prior,
                    post_even: post.clone(),
                    post_odd: &one - &post,
                });
            }
            if lik.is_zero() {
                continue;
            }
            if even < odd {
                witnesses.push(Witness {
                    output: out.clone(),
                    prior_q: vec![q.clone()],
                    query: (1..=w).collect(),
                    context: Some(format!("assignment {name}: non-participant parity")),
                    prior_even: (&one + &bias) / &two,
                    prior_odd: (&one - &bias) / &two,
                    post_even: even / &lik,
                    post_odd: odd / &lik,
                });
            }
        }
    }
    Ok(GuaranteeReport::from_parts(witnesses, skipped))
}
