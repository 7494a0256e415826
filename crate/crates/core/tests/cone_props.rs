mod common;

use common::*;
use num_traits::{One, Zero};
use privcone::mechanisms::{
    bit_labels, drop_matrix, rr_inverse, rr_matrix, sampling_matrix, sort_matrix, RRSpec,
    SamplingSpec,
};
use privcone::numerics::{invert, rat, LabeledMatrix, Rational};
use privcone::rowcone::{
    cnf_membership, constraints_from_inverse, interpret_constraint, membership, rr_constraints,
    sampling_constraints, LinearConstraint, Membership,
};
use proptest::prelude::*;
use rand::Rng;

fn rr_case() -> impl Strategy<Value = (Rational, usize)> {
    (1i64..=9, 1usize..=3)
        .prop_filter("p = 1/2", |(n, _)| *n != 5)
        .prop_map(|(n, k)| (rat(n, 10), k))
}

fn weights(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec((0i64..=8, 1i64..=5).prop_map(|(a, b)| rat(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_keeps_verdict((p, k) in rr_case(), x in weights(8), c in (1i64..=20, 1i64..=20)) {
        let x = &x[..1 << k];
        let inv = rr_inverse(&RRSpec::new(p, k).unwrap()).unwrap();
        let c = rat(c.0, c.1);
        let scaled: Vec<Rational> = x.iter().map(|v| v * &c).collect();
        let (a, b) = (membership(x, &inv).unwrap(), membership(&scaled, &inv).unwrap());
        prop_assert_eq!(a.is_member(), b.is_member());
        prop_assert_eq!(matches!(a, Membership::Boundary), matches!(b, Membership::Boundary));
    }

    #[test]
    fn convex_combinations_stay_inside(
        (p, k) in rr_case(),
        y1 in weights(8),
        y2 in weights(8),
        t in (0i64..=6).prop_map(|n| rat(n, 6)),
    ) {
        let spec = RRSpec::new(p, k).unwrap();
        let (m, inv) = (rr_matrix(&spec).unwrap(), rr_inverse(&spec).unwrap());
        let n = 1 << k;
        let x = m.left_mul(&y1[..n]).unwrap();
        let y = m.left_mul(&y2[..n]).unwrap();
        let mix: Vec<Rational> = x.iter().zip(&y).map(|(a, b)| &t * a + (Rational::one() - &t) * b).collect();
        prop_assert!(membership(&x, &inv).unwrap().is_member());
        prop_assert!(membership(&mix, &inv).unwrap().is_member());
    }

    #[test]
    fn constraint_system_agrees_with_inverse((p, k) in rr_case(), x in proptest::collection::vec(-4i64..=8, 8)) {
        let spec = RRSpec::new(p, k).unwrap();
        let inv = rr_inverse(&spec).unwrap();
        let x: Vec<Rational> = x[..1 << k].iter().map(|&v| rat(v, 1)).collect();
        let sys = rr_constraints(&spec).unwrap();
        prop_assert_eq!(sys.satisfied_by(&x), membership(&x, &inv).unwrap().is_member());
        let generic = constraints_from_inverse(&inv, sys.order()).unwrap();
        prop_assert_eq!(generic.satisfied_by(&x), sys.satisfied_by(&x));
    }

    #[test]
    fn normalization_is_idempotent(c in proptest::collection::vec((-30i64..=30, 1i64..=9), 1..6)) {
        let once = LinearConstraint::ge(c.iter().map(|&(a, b)| rat(a, b)).collect());
        let twice = LinearConstraint::ge(once.coefficients().to_vec());
        prop_assert_eq!(once, twice);
    }
}

#[test]
fn cnf_iff_every_row_member() {
    let mut g = rng(51);
    let mut seen = [0usize; 2];
    for trial in 0..300 {
        let k = 1 + trial % 3;
        let p = if trial % 2 == 0 { rat(2, 3) } else { rat(4, 5) };
        let spec = RRSpec::new(p, k).unwrap();
        let inv = rr_inverse(&spec).unwrap();
        let outputs = g.gen_range(1..=(1 << k) + 2);
        let m = if trial % 3 == 0 {
            let a = random_post_processing(&mut g, &bit_labels(k), outputs);
            a.matmul(&rr_matrix(&spec).unwrap()).unwrap()
        } else {
            random_stochastic(&mut g, out_labels(outputs), bit_labels(k), 9)
        };
        let cnf = cnf_membership(&m, &inv).unwrap().holds;
        let rows = m.rows().all(|r| membership(r, &inv).unwrap().is_member());
        assert_eq!(cnf, rows, "trial {trial}");
        seen[cnf as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

#[test]
fn generator_rows_lie_on_boundary() {
    let spec = RRSpec::new(rat(2, 3), 2).unwrap();
    let (m, inv) = (rr_matrix(&spec).unwrap(), rr_inverse(&spec).unwrap());
    for row in m.rows() {
        assert_eq!(membership(row, &inv).unwrap(), Membership::Boundary);
    }
    let uniform = vec![rat(1, 1); 4];
    assert_eq!(membership(&uniform, &inv).unwrap(), Membership::Inside);
}

/// `x` is constant on permutation classes of datasets.
fn sort_equal(x: &[Rational], sort: &LabeledMatrix) -> bool {
    (0..sort.ncols()).all(|j| {
        let target = (0..sort.nrows()).find(|&i| !sort.get(i, j).is_zero()).unwrap();
        x[j] == x[target]
    })
}

#[test]
fn sampling_cone_is_sort_and_drop() {
    let mut g = rng(52);
    let mut seen = [0usize; 2];
    for trial in 0..300 {
        let p = rat(g.gen_range(1..=5), 6);
        let spec = SamplingSpec::new(p, 2, 2).unwrap();
        let drop = drop_matrix(&spec).unwrap();
        let sort = sort_matrix(2, 2).unwrap();
        let drop_inv = invert(&drop).unwrap();
        let sys = sampling_constraints(&spec).unwrap();
        let labels = spec.dataset_labels();
        let base: LabeledMatrix = match trial % 4 {
            0 => sampling_matrix(&spec).unwrap().into_matrix(),
            1 => drop.matrix().clone(),
            2 => sort.matrix().clone(),
            _ => random_stochastic(&mut g, out_labels(4), labels.clone(), 5),
        };
        let outputs = g.gen_range(1..=6);
        let a = random_post_processing(&mut g, base.row_labels(), outputs);
        let m = a.matmul(&base).unwrap();
        for row in m.rows() {
            let both = sort_equal(row, &sort) && membership(row, &drop_inv).unwrap().is_member();
            assert_eq!(sys.satisfied_by(row), both, "trial {trial}: {row:?}");
            seen[both as usize] += 1;
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0);
}

#[test]
fn example_constraint_reads_as_odds_bound() {
    let sys = rr_constraints(&RRSpec::new(rat(2, 3), 2).unwrap()).unwrap();
    let c = LinearConstraint::ge(vec![rat(4, 1), rat(-2, 1), rat(-2, 1), rat(1, 1)]);
    assert!(sys.contains(&c));
    let s = interpret_constraint(&c).unwrap();
    assert_eq!(s.prior_weights, vec![rat(4, 9), rat(2, 9), rat(2, 9), rat(1, 9)]);
    assert_eq!(s.s1.iter().copied().collect::<Vec<_>>(), vec![0, 3]);
    assert_eq!(s.relative_odds_bound, Some(rat(5, 4)));
}
