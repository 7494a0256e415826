//! Fourier–Motzkin elimination over homogeneous rational systems.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::mechanisms::RRSpec;
use crate::numerics::Rational;
use crate::rowcone::{rr_constraints, ConstraintSystem, LinearConstraint, Provenance, Relation};

/// Where a derived constraint came from. Indices refer to
/// [`EliminationTrace::inputs`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parent {
    /// Did not mention the eliminated variable.
    Carried(usize),
    /// `|b|·lower + a·upper`, where the variable has coefficient `a > 0` in
    /// `lower` and `b < 0` in `upper`.
    Combined { upper: usize, lower: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstraint {
    pub constraint: LinearConstraint,
    pub parent: Parent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationTrace {
    pub eliminated: usize,
    /// The input constraints with equalities split into two inequalities.
    pub inputs: Vec<LinearConstraint>,
    /// Every new constraint kept in `result`, in order.
    pub derived: Vec<DerivedConstraint>,
    pub result: ConstraintSystem,
}

/// Splits equalities into `a·x >= 0` and `-a·x >= 0`.
pub fn split_equalities(system: &ConstraintSystem) -> Result<Vec<LinearConstraint>> {
    let mut out = Vec::new();
    for c in system.constraints() {
        match c.relation() {
            Relation::Ge => out.push(c.clone()),
            Relation::Eq => {
                out.push(LinearConstraint::ge(c.coefficients().to_vec()));
                out.push(LinearConstraint::ge(c.coefficients().iter().map(|v| -v).collect()));
            }
            Relation::Gt => return Err(Error::UnsupportedRelation(">")),
        }
    }
    Ok(out)
}

/// Eliminates `variable`: the result is the projection of the cone onto
/// the remaining coordinates, with the eliminated coordinate's coefficient
/// zero everywhere.
pub fn fourier_motzkin_eliminate(system: &ConstraintSystem, variable: usize) -> Result<EliminationTrace> {
    let inputs = split_equalities(system)?;
    let history: Vec<BTreeSet<usize>> = (0..inputs.len()).map(|i| BTreeSet::from([i])).collect();
    eliminate(system, inputs, &history, variable, usize::MAX).map(|(t, _)| t)
}

/// One elimination step. `history[i]` is the set of original constraints
/// that `inputs[i]` combines; combinations drawing on more than
/// `max_history` of them are implied by the rest and dropped.
fn eliminate(
    system: &ConstraintSystem,
    inputs: Vec<LinearConstraint>,
    history: &[BTreeSet<usize>],
    variable: usize,
    max_history: usize,
) -> Result<(EliminationTrace, Vec<BTreeSet<usize>>)> {
    let n = system.labels().len();
    if variable >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: variable + 1,
        });
    }
    let mut result = ConstraintSystem::new(system.labels().to_vec(), system.order(), Provenance::Relaxation);
    let mut derived = Vec::new();
    let mut kept_history = Vec::new();
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for (i, c) in inputs.iter().enumerate() {
        let a = &c.coefficients()[variable];
        if a.is_zero() {
            if result.push(c.clone())? {
                derived.push(DerivedConstraint {
                    constraint: c.clone(),
                    parent: Parent::Carried(i),
                });
                kept_history.push(history[i].clone());
            }
        } else if a.is_positive() {
            lowers.push(i);
        } else {
            uppers.push(i);
        }
    }
    for &u in &uppers {
        for &l in &lowers {
            let merged: BTreeSet<usize> = history[u].union(&history[l]).copied().collect();
            if merged.len() > max_history {
                continue;
            }
            let cu = inputs[u].coefficients();
            let cl = inputs[l].coefficients();
            let a = &cl[variable];
            let b = -&cu[variable];
            let coeffs: Vec<Rational> = cl
                .iter()
                .zip(cu)
                .map(|(x, y)| &b * x + a * y)
                .collect();
            debug_assert!(coeffs[variable].is_zero());
            let c = LinearConstraint::ge(coeffs);
            if result.push(c.clone())? {
                derived.push(DerivedConstraint {
                    constraint: c,
                    parent: Parent::Combined { upper: u, lower: l },
                });
                kept_history.push(merged);
            }
        }
    }
    let trace = EliminationTrace {
        eliminated: variable,
        inputs,
        derived,
        result,
    };
    Ok((trace, kept_history))
}

/// Eliminates every variable in `variables`, in order. After `s` steps a
/// constraint combining more than `s + 1` original inequalities is
/// redundant and is not kept.
pub fn eliminate_all(system: &ConstraintSystem, variables: &[usize]) -> Result<Vec<EliminationTrace>> {
    let inputs = split_equalities(system)?;
    let mut history: Vec<BTreeSet<usize>> = (0..inputs.len()).map(|i| BTreeSet::from([i])).collect();
    let mut traces: Vec<EliminationTrace> = Vec::new();
    let mut inputs = Some(inputs);
    for (step, &v) in variables.iter().enumerate() {
        let current = traces.last().map_or(system, |t| &t.result);
        let step_inputs = match inputs.take() {
            Some(first) => first,
            None => current.constraints().to_vec(),
        };
        let (trace, next) = eliminate(current, step_inputs, &history, v, step + 2)?;
        history = next;
        traces.push(trace);
    }
    Ok(traces)
}

/// Pairwise system recovered from randomized response.
#[derive(Debug, Clone, PartialEq)]
pub struct DpDerivation {
    /// `p / (1 - p)` with `p >= 1/2`.
    pub alpha: Rational,
    /// One constraint `x_i <= alpha·x_j` per ordered Hamming-1 pair.
    pub system: ConstraintSystem,
    /// Other two-variable constraints produced along the way.
    pub auxiliary: Vec<LinearConstraint>,
    /// For each unordered Hamming-1 pair, the eliminations that isolated it.
    pub traces: Vec<((usize, usize), Vec<EliminationTrace>)>,
}

/// Projects the randomized-response row cone onto every pair of
/// neighboring datasets and checks that each projection contains the
/// ratio constraints of differential privacy.
pub fn derive_dp_from_rr(spec: &RRSpec) -> Result<DpDerivation> {
    if spec.k > 3 {
        return Err(Error::InvalidParameter(format!(
            "derivation supports k <= 3, got {}",
            spec.k
        )));
    }
    let rr = rr_constraints(spec)?;
    let p = spec.canonical().p;
    let alpha = &p / (Rational::one() - &p);
    let labels = rr.labels().to_vec();
    let n = labels.len();
    let mut system = ConstraintSystem::new(labels.clone(), rr.order(), Provenance::Relaxation);
    let mut auxiliary = Vec::new();
    let mut traces = Vec::new();
    let mut missing = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if (i ^ j).count_ones() != 1 {
                continue;
            }
            let others: Vec<usize> = (0..n).filter(|&v| v != i && v != j).collect();
            let pair_traces = eliminate_all(&rr, &others)?;
            let projected = pair_traces.last().map_or(&rr, |t| &t.result);
            for (a, b) in [(i, j), (j, i)] {
                let mut coeffs = vec![Rational::zero(); n];
                coeffs[b] = alpha.clone();
                coeffs[a] = -Rational::one();
                let want = LinearConstraint::ge(coeffs);
                if projected.contains(&want) {
                    system.push(want)?;
                } else {
                    missing.push(format!("{} <= {}·{}", labels[a], alpha, labels[b]));
                }
            }
            auxiliary.extend(
                projected
                    .constraints()
                    .iter()
                    .filter(|c| !system.contains(c))
                    .cloned(),
            );
            traces.push(((i, j), pair_traces));
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteDerivation { missing });
    }
    Ok(DpDerivation {
        alpha,
        system,
        auxiliary,
        traces,
    })
}
