//! Randomized invariants: partition lattice laws, exact scaling of the
//! aggregation deviation under identity blending, monotonicity of the
//! exhaustive scan, eigensystem residuals and text round-trips.

use proptest::prelude::*;

use lumpchain::io::{blocks_string, parse_matrix, parse_partition};
use lumpchain::oracle::brute_force_lumpings;
use lumpchain::spectral::{eigensystem, perturb};
use lumpchain::{Partition, StochasticMatrix};

const LUMP_TOL: f64 = 1e-9;

fn rows_strategy(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, n), n).prop_map(|raw| {
        raw.into_iter()
            .map(|row| {
                let sum: f64 = row.iter().sum();
                row.into_iter().map(|x| x / sum).collect()
            })
            .collect()
    })
}

fn chain_strategy(lo: usize, hi: usize) -> impl Strategy<Value = StochasticMatrix<f64>> {
    (lo..=hi)
        .prop_flat_map(rows_strategy)
        .prop_map(|rows| StochasticMatrix::from_rows(&rows, LUMP_TOL).unwrap())
}

/// Chain together with two partitions of matching state count.
fn chain_with_partitions(
    lo: usize,
    hi: usize,
) -> impl Strategy<Value = (StochasticMatrix<f64>, Partition, Partition)> {
    (lo..=hi)
        .prop_flat_map(|n| {
            (
                rows_strategy(n),
                proptest::collection::vec(0..n, n),
                proptest::collection::vec(0..n, n),
            )
        })
        .prop_map(|(rows, l1, l2)| {
            (
                StochasticMatrix::from_rows(&rows, LUMP_TOL).unwrap(),
                Partition::from_assignment(&l1),
                Partition::from_assignment(&l2),
            )
        })
}

/// Expands a macro chain so the given assignment is a lumping by
/// construction.
fn expand(
    macro_rows: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
) -> (StochasticMatrix<f64>, Partition) {
    let part = Partition::from_assignment(labels);
    let lumps = part.lumps();
    let n = labels.len();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        let k = part.lump_of(i);
        for (l, members) in lumps.iter().enumerate() {
            let total: f64 = members.iter().map(|&j| weights[j]).sum();
            for &j in members {
                rows[i][j] = macro_rows[k][l] * weights[j] / total;
            }
        }
    }
    (StochasticMatrix::from_rows(&rows, LUMP_TOL).unwrap(), part)
}

fn planted_strategy() -> impl Strategy<Value = (StochasticMatrix<f64>, Partition)> {
    (2usize..=3, 4usize..=6)
        .prop_flat_map(|(m, n)| {
            (
                rows_strategy(m),
                proptest::collection::vec(0..m, n - m),
                proptest::collection::vec(0.1f64..1.0, n),
            )
        })
        .prop_map(|(macro_rows, tail, weights)| {
            // the first m states claim one lump each so every macro row is
            // realized
            let m = macro_rows.len();
            let labels: Vec<usize> = (0..m).chain(tail).collect();
            expand(&macro_rows, &labels, &weights)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn meet_refines_both_arguments((_, q1, q2) in chain_with_partitions(2, 7)) {
        let m = q1.meet(&q2).unwrap();
        prop_assert!(m.refines(&q1));
        prop_assert!(m.refines(&q2));
        prop_assert_eq!(q1.meet(&q1).unwrap(), q1.clone());
        prop_assert_eq!(q2.meet(&q1).unwrap(), m);
    }

    #[test]
    fn blending_scales_the_deviation_by_exactly_one_minus_zeta(
        (p, q, _) in chain_with_partitions(2, 6),
        zeta in 0.0f64..0.95,
    ) {
        let blended = perturb(&p, zeta).unwrap();
        let before = p.lump_deviation(&q).unwrap();
        let after = blended.lump_deviation(&q).unwrap();
        prop_assert!((after - (1.0 - zeta) * before).abs() <= 1e-12);
    }

    #[test]
    fn scan_results_grow_with_the_tolerance(p in chain_strategy(2, 5)) {
        let tight = brute_force_lumpings(&p, 1e-9, 1_000_000, 1).unwrap();
        let loose = brute_force_lumpings(&p, 1e-2, 1_000_000, 1).unwrap();
        let loose_set: std::collections::HashSet<_> = loose.into_iter().collect();
        prop_assert!(tight.iter().all(|q| loose_set.contains(q)));
    }

    #[test]
    fn planted_aggregations_verify_and_reduce_cleanly((p, q) in planted_strategy()) {
        prop_assert!(p.is_lumpable(&q, LUMP_TOL).unwrap());
        let found = brute_force_lumpings(&p, LUMP_TOL, 1_000_000, 1).unwrap();
        prop_assert!(found.contains(&q));
        let reduced = p.reduce(&q, LUMP_TOL).unwrap();
        prop_assert!(reduced.commutation_residual(&p) <= 1e-10);
    }

    #[test]
    fn eigensystem_residuals_stay_small(p in chain_strategy(2, 6)) {
        let es = eigensystem(&p, 1e-10).unwrap();
        prop_assert!(es.residual() <= 1e-8);
        if es.diagonalizable() {
            prop_assert!(es.inverse_residual() <= 1e-8);
            prop_assert!(es.reconstruction_residual() <= 1e-8);
        }
    }

    #[test]
    fn unit_eigenvalue_is_always_present(p in chain_strategy(2, 6)) {
        let es = eigensystem(&p, 1e-10).unwrap();
        let closest = es
            .values()
            .iter()
            .map(|l| (l - num_complex::Complex::new(1.0, 0.0)).norm())
            .fold(f64::INFINITY, f64::min);
        prop_assert!(closest <= 1e-9);
    }

    #[test]
    fn partition_notation_round_trips((_, q, _) in chain_with_partitions(2, 9)) {
        let text = blocks_string(&q);
        prop_assert_eq!(parse_partition(&text, q.n()).unwrap(), q);
    }

    #[test]
    fn matrix_text_round_trips(p in chain_strategy(2, 6)) {
        let a = p.as_array();
        let text: String = (0..p.n())
            .map(|i| {
                (0..p.n())
                    .map(|j| format!("{:?}", a[(i, j)]))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n");
        // construction renormalizes rows whose float sum misses 1, so the
        // round trip is exact up to one such rescale
        let parsed = parse_matrix(&text, LUMP_TOL).unwrap();
        let b = parsed.as_array();
        prop_assert!(
            (0..p.n()).all(|i| (0..p.n()).all(|j| (a[(i, j)] - b[(i, j)]).abs() <= 1e-15))
        );
    }

    #[test]
    fn trajectories_have_the_requested_shape(
        p in chain_strategy(2, 5),
        x0 in 0usize..5,
        steps in 1usize..2000,
        seed in 0u64..1000,
    ) {
        let x0 = x0 % p.n();
        let traj = lumpchain::empirics::simulate(&p, x0, steps, seed).unwrap();
        prop_assert_eq!(traj.states.len(), steps);
        prop_assert_eq!(traj.states[0], x0);
        prop_assert!(traj.states.iter().all(|&s| s < p.n()));
        let again = lumpchain::empirics::simulate(&p, x0, steps, seed).unwrap();
        prop_assert_eq!(traj.states, again.states);
    }
}
