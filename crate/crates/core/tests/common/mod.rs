#![allow(dead_code)]

use num_traits::{One, Zero};
use privcone::mechanisms::{tuple_alphabet, DatasetOrder};
use privcone::numerics::{int, rat, LabeledMatrix, MechanismMatrix, Rational};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn out_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("o{i}")).collect()
}

/// Column-stochastic matrix with small random integer weights.
pub fn random_stochastic(
    rng: &mut ChaCha8Rng,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    max_weight: i64,
) -> LabeledMatrix {
    let (r, c) = (row_labels.len(), col_labels.len());
    let mut cols = Vec::with_capacity(c);
    for _ in 0..c {
        let mut w: Vec<i64> = (0..r).map(|_| rng.gen_range(0..=max_weight)).collect();
        if w.iter().all(|&v| v == 0) {
            w[rng.gen_range(0..r)] = 1;
        }
        let s: i64 = w.iter().sum();
        cols.push(w.into_iter().map(|v| rat(v, s)).collect::<Vec<_>>());
    }
    let rows = (0..r).map(|i| (0..c).map(|j| cols[j][i].clone()).collect()).collect();
    LabeledMatrix::new(row_labels, col_labels, rows).unwrap()
}

pub fn random_post_processing(rng: &mut ChaCha8Rng, inputs: &[String], outputs: usize) -> LabeledMatrix {
    random_stochastic(rng, out_labels(outputs), inputs.to_vec(), 6)
}

/// Rational in `(0, max]` with a small denominator.
pub fn random_positive(rng: &mut ChaCha8Rng, max: i64) -> Rational {
    let d = rng.gen_range(1..=9);
    rat(rng.gen_range(1..=max * d), d)
}

/// Rational in `[0, 1]`.
pub fn random_unit(rng: &mut ChaCha8Rng) -> Rational {
    let d = rng.gen_range(1..=12);
    rat(rng.gen_range(0..=d), d)
}

/// A `gamma`-amplifying transition matrix `(1 - t) U + t A` on `n` values,
/// with `t = (gamma - 1) / (gamma - 1 + n)` scaled by a random factor in `[0, 1]`.
pub fn random_gamma_transition(rng: &mut ChaCha8Rng, gamma: &Rational, n: usize) -> MechanismMatrix {
    let labels = tuple_alphabet(n);
    let a = random_stochastic(rng, labels.clone(), labels.clone(), 9);
    let g1 = gamma - Rational::one();
    let t_max = &g1 / (&g1 + int(n as i64));
    let t = t_max * random_unit(rng);
    let u = rat(1, n as i64);
    let m = LabeledMatrix::from_fn(labels.clone(), labels, |i, j| {
        (Rational::one() - &t) * &u + &t * a.get(i, j)
    })
    .unwrap();
    MechanismMatrix::new(m, DatasetOrder::LexTuples).unwrap()
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}
