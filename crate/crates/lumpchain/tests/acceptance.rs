//! End-to-end acceptance checks on the reference chains: the exhaustive
//! scan and the spectral discovery agree with the known lumping sets, the
//! spectral invariants hold for every verified lumping, and the trajectory
//! diagnostic is calibrated. Each test covers one guarantee and pins its
//! own tolerances.

use std::collections::HashSet;
use std::time::Instant;

use ndarray::Array1;
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lumpchain::discovery::{annihilating_left_vectors, converse_witness, discover, DiscoveryConfig};
use lumpchain::empirics::{markov_quotient_statistic, simulate};
use lumpchain::oracle::brute_force_lumpings;
use lumpchain::spectral::{eigensystem, group_eigenvalues, spectrum_subset};
use lumpchain::{Partition, StochasticMatrix};

const LUMP_TOL: f64 = 1e-9;
const SPECTRAL_TOL: f64 = 1e-10;
const GROUP_TOL: f64 = 1e-8;
const GUARD: u128 = 1_000_000;

/// Three-state family member at (a, b, c) = (0.3, 0.2, 0.5).
fn three_state() -> StochasticMatrix<f64> {
    StochasticMatrix::from_rows(
        &[
            vec![0.25, 0.50, 0.25],
            vec![0.45, 0.30, 0.25],
            vec![0.30, 0.20, 0.50],
        ],
        LUMP_TOL,
    )
    .unwrap()
}

/// Eight-state chain with two doubly degenerate eigenvalues and ten
/// lumpings, four of which need a rotated eigenbasis.
fn eight_state() -> StochasticMatrix<f64> {
    let a = 0.2;
    let b = 0.25;
    StochasticMatrix::from_rows(
        &[
            vec![0.0, a, a, a, a, 0.0, a, 0.0],
            vec![a, 0.0, a, a, 0.0, a, 0.0, a],
            vec![a, a, 0.0, a, 0.0, a, a, 0.0],
            vec![a, a, a, 0.0, a, 0.0, 0.0, a],
            vec![b, 0.0, 0.0, b, 0.0, 0.0, b, b],
            vec![0.0, b, b, 0.0, 0.0, 0.0, b, b],
            vec![b, 0.0, b, 0.0, b, b, 0.0, 0.0],
            vec![0.0, b, 0.0, b, b, b, 0.0, 0.0],
        ],
        LUMP_TOL,
    )
    .unwrap()
}

/// The ten lumpings of the eight-state chain, 0-based.
fn eight_state_lumpings() -> Vec<Partition> {
    let blocks: Vec<Vec<Vec<usize>>> = vec![
        vec![vec![0, 1, 2, 3, 4, 5, 6, 7]],
        vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
        vec![vec![0, 1], vec![2, 3], vec![4, 5, 6, 7]],
        vec![vec![0, 1, 2, 3], vec![4, 5], vec![6, 7]],
        vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]],
        vec![vec![0, 1], vec![2], vec![3], vec![4, 7], vec![5, 6]],
        vec![vec![0], vec![1], vec![2, 3], vec![4, 6], vec![5, 7]],
        vec![vec![0, 2], vec![1, 3], vec![4, 5], vec![6], vec![7]],
        vec![vec![0, 3], vec![1, 2], vec![4], vec![5], vec![6, 7]],
        (0..8).map(|i| vec![i]).collect(),
    ];
    blocks
        .iter()
        .map(|b| Partition::from_blocks(8, b).unwrap())
        .collect()
}

fn random_chain(n: usize, rng: &mut ChaCha8Rng) -> StochasticMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        })
        .collect();
    StochasticMatrix::from_rows(&rows, LUMP_TOL).unwrap()
}

/// Chain with a lumping planted by construction: rows within a lump split
/// the same macro-level transition mass among the target lump's states.
fn planted_chain(n: usize, m: usize, rng: &mut ChaCha8Rng) -> (StochasticMatrix<f64>, Partition) {
    let mut labels: Vec<usize> = (0..n).map(|i| i % m).collect();
    for i in m..n {
        labels[i] = rng.random_range(0..m);
    }
    let part = Partition::from_assignment(&labels);
    let lumps = part.lumps();
    let macro_rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let raw: Vec<f64> = (0..m).map(|_| 0.1 + rng.random::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / sum).collect()
        })
        .collect();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        let k = part.lump_of(i);
        for (l, members) in lumps.iter().enumerate() {
            let weights: Vec<f64> = members.iter().map(|_| 0.1 + rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            for (&j, w) in members.iter().zip(&weights) {
                rows[i][j] = macro_rows[k][l] * w / total;
            }
        }
    }
    (StochasticMatrix::from_rows(&rows, LUMP_TOL).unwrap(), part)
}

fn partition_set(parts: &[Partition]) -> HashSet<Partition> {
    parts.iter().cloned().collect()
}

/// Smallest distance between two distinct eigenvalues.
fn min_spectral_gap(values: &[Complex<f64>]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

#[test]
fn exhaustive_scan_returns_the_ten_lumpings_of_the_eight_state_chain() {
    let p = eight_state();
    let started = Instant::now();
    let found = brute_force_lumpings(&p, LUMP_TOL, GUARD, 1).unwrap();
    let elapsed = started.elapsed();

    assert_eq!(partition_set(&found), partition_set(&eight_state_lumpings()));
    assert_eq!(found.len(), 10);
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "scan of 4140 partitions took {elapsed:?}"
    );
}

/// Checks collinearity up to one overall scale factor.
fn collinear(v: &Array1<Complex<f64>>, target: &[f64]) -> bool {
    let anchor = (0..target.len())
        .max_by(|&i, &j| target[i].abs().total_cmp(&target[j].abs()))
        .unwrap();
    let scale = v[anchor] / target[anchor];
    let bound = 1e-6 * scale.norm() * target.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    (0..target.len()).all(|k| (v[k] - scale * target[k]).norm() <= bound)
}

#[test]
fn discovery_matches_the_scan_and_attributes_rotated_generators() {
    let p = eight_state();
    let disc = discover(&p, &DiscoveryConfig::default(), LUMP_TOL).unwrap();

    assert!(disc.degenerate_spectrum);
    assert!(!disc.truncated);
    assert_eq!(
        partition_set(&disc.partitions()),
        partition_set(&eight_state_lumpings())
    );

    // the two degenerate eigenspaces sit at -1/10 -+ sqrt(11)/10; the tail
    // magnitudes c1, c2 follow from balancing one slow row against the
    // eigenvalue
    let s = 0.11f64.sqrt();
    let (slow, fast) = (-0.1 - s, -0.1 + s);
    let (c1, c2) = (0.25 / (0.1 + s), 0.25 / (s - 0.1));
    let u3 = [0.0, 0.0, -1.0, 1.0, -c1, c1, c1, -c1];
    let u4 = [-1.0, 1.0, 0.0, 0.0, c1, -c1, c1, -c1];
    let u5 = [0.0, 0.0, -1.0, 1.0, c2, -c2, -c2, c2];
    let u6 = [1.0, -1.0, 0.0, 0.0, c2, -c2, c2, -c2];
    let add = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a + b).collect() };
    let sub = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(a, b)| a - b).collect() };

    // expected generator directions inside each degenerate eigenspace, per
    // rotated lumping: the plain basis vectors for the two semi-singleton
    // lumpings, the sum/difference blends for the two pair-swap lumpings
    let expected: Vec<(Vec<Vec<usize>>, Vec<f64>, Vec<f64>)> = vec![
        (
            vec![vec![0, 1], vec![2], vec![3], vec![4, 7], vec![5, 6]],
            u3.to_vec(),
            u5.to_vec(),
        ),
        (
            vec![vec![0], vec![1], vec![2, 3], vec![4, 6], vec![5, 7]],
            u4.to_vec(),
            u6.to_vec(),
        ),
        (
            vec![vec![0, 2], vec![1, 3], vec![4, 5], vec![6], vec![7]],
            add(&u3, &u4),
            sub(&u5, &u6),
        ),
        (
            vec![vec![0, 3], vec![1, 2], vec![4], vec![5], vec![6, 7]],
            sub(&u3, &u4),
            add(&u5, &u6),
        ),
    ];

    for (blocks, slow_dir, fast_dir) in &expected {
        let q = Partition::from_blocks(8, blocks).unwrap();
        let cand = disc
            .lumpings
            .iter()
            .find(|c| c.partition == q)
            .unwrap_or_else(|| panic!("missing lumping {blocks:?}"));
        for (lambda, dir) in [(slow, slow_dir), (fast, fast_dir)] {
            let g = cand
                .generating_set
                .iter()
                .find(|g| (g.eigenvalue - Complex::new(lambda, 0.0)).norm() < 1e-6)
                .unwrap_or_else(|| panic!("no generator at eigenvalue {lambda}"));
            assert_eq!(g.dimension, 1);
            assert_eq!(g.vectors.len(), 1);
            assert!(
                collinear(&g.vectors[0], dir),
                "generator at {lambda} is not a scalar multiple of {dir:?}: {:?}",
                g.vectors[0]
            );
        }
    }
}

/// Family member with rows ((a+b+(c-1)/2, 1-a-b, (1-c)/2),
/// (-a+(c+1)/2, a, (1-c)/2), (1-b-c, b, c)); its eigenvalues are
/// 1, 2a+b-1 and (3c-1)/2.
fn family_member(a: f64, b: f64, c: f64) -> Option<StochasticMatrix<f64>> {
    let rows = vec![
        vec![a + b + (c - 1.0) / 2.0, 1.0 - a - b, (1.0 - c) / 2.0],
        vec![-a + (c + 1.0) / 2.0, a, (1.0 - c) / 2.0],
        vec![1.0 - b - c, b, c],
    ];
    let ok = rows
        .iter()
        .flatten()
        .all(|&x| (0.01..=0.99).contains(&x));
    ok.then(|| StochasticMatrix::from_rows(&rows, LUMP_TOL).unwrap())
}

#[test]
fn three_state_family_yields_exactly_three_lumpings_off_the_degenerate_set() {
    let expected = vec![
        Partition::single_lump(3),
        Partition::from_blocks(3, &[vec![0, 1], vec![2]]).unwrap(),
        Partition::singletons(3),
    ];
    let pair = Partition::from_blocks(3, &[vec![0, 1], vec![2]]).unwrap();

    let mut swept = 0usize;
    for ia in 0..9 {
        let a = 0.06 + 0.05 * ia as f64;
        for ib in 0..9 {
            let b = 0.07 + 0.05 * ib as f64;
            for ic in 0..9 {
                let c = 0.38 + 0.06 * ic as f64;
                // both non-unit eigenvalues clear of zero and of each
                // other (where they collide the family is defective), and
                // clear of the two planes where a fourth aggregation
                // appears
                let (l2, l3) = (2.0 * a + b - 1.0, (3.0 * c - 1.0) / 2.0);
                if (2.0 * a + b - 1.0).abs() < 0.05
                    || (3.0 * c - 1.0).abs() < 0.05
                    || (l2 - l3).abs() < 0.02
                {
                    continue;
                }
                if (a + 2.0 * b - 1.0).abs() < 0.02
                    || (2.0 * b + 3.0 * c - 2.0 * a - 1.0).abs() < 0.02
                {
                    continue;
                }
                let Some(p) = family_member(a, b, c) else {
                    continue;
                };
                let disc = discover(&p, &DiscoveryConfig::default(), LUMP_TOL).unwrap();
                assert_eq!(
                    disc.partitions(),
                    expected,
                    "unexpected lumpings at a={a} b={b} c={c}"
                );
                swept += 1;
            }
        }
    }
    assert!(swept >= 50, "only {swept} regular triples swept");

    // where a single eigenvalue vanishes the chain is still
    // diagonalizable and discovery works on the identity blend; extra
    // lumpings may appear there but the pair aggregation must survive
    for (a, b, c) in [(0.3, 0.4, 0.5), (0.2, 0.3, 1.0 / 3.0)] {
        let p = family_member(a, b, c).expect("degenerate triple is a valid chain");
        assert!(p.is_lumpable(&pair, LUMP_TOL).unwrap());
        let disc = discover(&p, &DiscoveryConfig::default(), LUMP_TOL).unwrap();
        assert_eq!(disc.perturbation, Some(0.5), "blend not engaged at a={a} b={b} c={c}");
        let found = partition_set(&disc.partitions());
        for q in &expected {
            assert!(found.contains(q), "missing {q:?} at a={a} b={b} c={c}");
        }
    }

    // where both vanish the second eigenvector collapses onto the third
    // (rows 1 and 2 coincide, rank drops to 2) and no eigenbasis exists at
    // all; the pair aggregation still verifies and the exhaustive scan
    // still finds the three lumpings
    let p = family_member(0.3, 0.4, 1.0 / 3.0).unwrap();
    assert!(p.is_lumpable(&pair, LUMP_TOL).unwrap());
    assert!(matches!(
        discover(&p, &DiscoveryConfig::default(), LUMP_TOL),
        Err(lumpchain::Error::NotDiagonalizable { .. })
    ));
    let scanned = brute_force_lumpings(&p, LUMP_TOL, GUARD, 1).unwrap();
    assert_eq!(partition_set(&scanned), partition_set(&expected));
}

#[test]
fn discovery_agrees_with_the_exhaustive_scan_on_random_chains() {
    let cfg = DiscoveryConfig::<f64>::default();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut planted_total = 0usize;
    let mut exact_matches = 0usize;

    for round in 0..500 {
        let n = 3 + round % 5;
        let planted = if round % 2 == 0 {
            let m = 2 + rng.random_range(0..(n - 1).max(2) - 1);
            let (p, q) = planted_chain(n, m.min(n - 1), &mut rng);
            Some((p, q))
        } else {
            None
        };
        let (p, planted_part) = match planted {
            Some((p, q)) => (p, Some(q)),
            None => (random_chain(n, &mut rng), None),
        };

        let exhaustive = partition_set(&brute_force_lumpings(&p, LUMP_TOL, GUARD, 1).unwrap());
        let disc = discover(&p, &cfg, LUMP_TOL).unwrap();
        let found = partition_set(&disc.partitions());

        assert!(
            found.is_subset(&exhaustive),
            "round {round}: discovery produced a non-lumping"
        );
        if let Some(q) = &planted_part {
            planted_total += 1;
            assert!(found.contains(q), "round {round}: planted lumping missed");
        }

        let es = eigensystem(&p, SPECTRAL_TOL).unwrap();
        if es.diagonalizable() && min_spectral_gap(es.values()) > 10.0 * GROUP_TOL {
            assert_eq!(found, exhaustive, "round {round}: sets differ");
            exact_matches += 1;
        }
    }
    assert_eq!(planted_total, 250);
    assert!(exact_matches >= 450, "only {exact_matches} rounds had clean gaps");
}

#[test]
fn every_verified_lumping_satisfies_the_spectral_invariants() {
    const COMMUTE_TOL: f64 = 1e-8;
    const SPECTRUM_TOL: f64 = 1e-7;
    const ANNIHILATION_TOL: f64 = 1e-7;
    const RECONSTRUCTION_TOL: f64 = 1e-8;
    const WITNESS_TOL: f64 = 1e-8;

    let mut chains: Vec<StochasticMatrix<f64>> = vec![three_state(), eight_state()];
    chains.extend(
        [
            (0.11, 0.12, 0.62),
            (0.21, 0.27, 0.56),
            (0.31, 0.17, 0.74),
            (0.16, 0.42, 0.44),
        ]
        .iter()
        .map(|&(a, b, c)| family_member(a, b, c).unwrap()),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for round in 0..60 {
        let n = 3 + round % 5;
        if round % 2 == 0 {
            chains.push(planted_chain(n, 2 + round % (n - 1), &mut rng).0);
        } else {
            chains.push(random_chain(n, &mut rng));
        }
    }

    let cfg = DiscoveryConfig::<f64>::default();
    let mut lumpings_checked = 0usize;
    for p in &chains {
        let es = eigensystem(p, SPECTRAL_TOL).unwrap();
        assert!(es.diagonalizable());
        assert!(es.reconstruction_residual() <= RECONSTRUCTION_TOL);
        let groups = group_eigenvalues(&es, GROUP_TOL);

        for q in discover(p, &cfg, LUMP_TOL).unwrap().partitions() {
            let m = q.num_lumps();
            let reduced = p.reduce(&q, LUMP_TOL).unwrap();
            assert!(reduced.commutation_residual(p) <= COMMUTE_TOL);
            assert!(spectrum_subset(p, &reduced, SPECTRUM_TOL).unwrap());

            let cert = annihilating_left_vectors(&es, &groups, &q, cfg.element_tol)
                .expect("left eigenvectors available");
            let counted: usize = cert
                .vectors
                .iter()
                .map(|(g, _)| groups[*g].pair_columns.is_empty().then_some(1).unwrap_or(2))
                .sum();
            assert_eq!(counted, p.n() - m, "annihilated directions mismatch");
            assert!(cert.max_residual <= ANNIHILATION_TOL);

            let witness = converse_witness(p, &q, LUMP_TOL, SPECTRAL_TOL).unwrap();
            assert_eq!(witness.vectors.len(), m);
            assert!(witness.max_residual <= WITNESS_TOL);
            lumpings_checked += 1;
        }
    }
    assert!(lumpings_checked >= 150, "only {lumpings_checked} lumpings checked");
}

#[test]
fn identity_chain_scan_and_discovery_handle_full_degeneracy() {
    let rows: Vec<Vec<f64>> = (0..4)
        .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let p = StochasticMatrix::from_rows(&rows, LUMP_TOL).unwrap();

    let exhaustive = brute_force_lumpings(&p, LUMP_TOL, GUARD, 1).unwrap();
    assert_eq!(exhaustive.len(), 15);

    let disc = discover(&p, &DiscoveryConfig::default(), LUMP_TOL).unwrap();
    assert!(disc.degenerate_spectrum, "degenerate regime not flagged");
    let all = partition_set(&exhaustive);
    assert!(partition_set(&disc.partitions()).is_subset(&all));
}

#[test]
fn identity_blending_leaves_the_lumping_set_unchanged() {
    let cfg = DiscoveryConfig::<f64>::default();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for round in 0..50 {
        let n = 3 + round % 4;
        let p = if round % 2 == 0 {
            planted_chain(n, 2, &mut rng).0
        } else {
            random_chain(n, &mut rng)
        };
        let base = partition_set(&discover(&p, &cfg, LUMP_TOL).unwrap().partitions());
        for zeta in [0.1, 0.5] {
            let blended = lumpchain::spectral::perturb(&p, zeta).unwrap();
            let shifted = partition_set(&discover(&blended, &cfg, LUMP_TOL).unwrap().partitions());
            assert_eq!(base, shifted, "round {round}, zeta {zeta}");
        }
    }
}

#[test]
fn quotient_markov_test_is_calibrated_and_powerful() {
    const ALPHA: f64 = 0.01;
    const STEPS: usize = 100_000;
    let started = Instant::now();

    let valid_chain = eight_state();
    let valid_part = Partition::from_blocks(8, &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]).unwrap();
    let mut false_alarms = 0usize;
    for seed in 0..100 {
        let traj = simulate(&valid_chain, 0, STEPS, seed).unwrap();
        let test = markov_quotient_statistic(&traj, &valid_part).unwrap();
        if test.p_value < ALPHA {
            false_alarms += 1;
        }
    }
    assert!(false_alarms <= 5, "{false_alarms} false alarms in 100 runs");

    let invalid_chain = three_state();
    let invalid_part = Partition::from_blocks(3, &[vec![0, 2], vec![1]]).unwrap();
    let mut detections = 0usize;
    for seed in 0..100 {
        let traj = simulate(&invalid_chain, 0, STEPS, seed).unwrap();
        let test = markov_quotient_statistic(&traj, &invalid_part).unwrap();
        if test.p_value < ALPHA {
            detections += 1;
        }
    }
    assert!(detections >= 95, "only {detections} detections in 100 runs");

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "calibration took {elapsed:?}");
}
