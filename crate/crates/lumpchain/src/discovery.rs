//! Discovery of every strong lumping of a chain from its eigensystem.
//!
//! States that carry identical values in a suitable set of right
//! eigenvectors can be merged, and a partition into M lumps is a lumping
//! exactly when M independent eigenvectors are constant on its lumps. The
//! pipeline: compute per-eigenspace induced partitions, probe degenerate
//! eigenspaces for the extra partitions reachable by rotating their basis,
//! close everything under partition meet, keep candidates whose
//! constant-vector count matches their lump count, and verify each
//! survivor with the aggregation test on the original matrix. The spectral
//! machinery only proposes; the aggregation test disposes, so every
//! reported lumping holds regardless of tolerance choices upstream.
//!
//! Degenerate and complex-pair eigenspaces make the search heuristic: the
//! set of partitions reachable by rotation is not enumerable in general,
//! so probing is capped and [`Discovery::truncated`] reports when a cap
//! was hit. For simple spectra the meet lattice is complete.

use std::collections::{HashSet, VecDeque};

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::chain::StochasticMatrix;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;
use crate::spectral::linalg::{complex_nullspace, real_nullspace};
use crate::spectral::{
    self, EigenGroup, EigenSystem, GroupKind, LiftedWitness,
};

/// Tolerances and caps steering the discovery pipeline. Defaults are tuned
/// for `f64`; single-precision callers should widen the tolerances.
#[derive(Debug, Clone)]
pub struct DiscoveryConfig<S: Scalar> {
    /// Two eigenvector elements count as identical when they differ by at
    /// most this much (after unit max-norm scaling).
    pub element_tol: S,
    /// Eigenvalues within this distance share one eigenspace group.
    pub group_tol: S,
    /// Residual bound under which a decomposition counts as diagonalizable.
    pub spectral_tol: S,
    /// Blend weight toward the identity applied when the spectrum contains
    /// a (near-)zero eigenvalue; leaves the lumping structure unchanged.
    pub zeta: S,
    /// Cap on distinct merge patterns probed per degenerate eigenspace.
    pub max_rotation_patterns: usize,
    /// Cap on the candidate partition lattice.
    pub max_candidates: usize,
    /// State count up to which seed subsets are guaranteed exhaustive.
    /// The meet closure already forms every subset meet of the seeds, so
    /// this bound is honored for free; it is kept configurable should a
    /// future strategy need it.
    pub exhaustive_subset_limit: usize,
}

impl<S: Scalar> Default for DiscoveryConfig<S> {
    fn default() -> Self {
        DiscoveryConfig {
            element_tol: S::from_f64_lossy(1e-7),
            group_tol: S::from_f64_lossy(1e-8),
            spectral_tol: S::from_f64_lossy(1e-10),
            zeta: S::from_f64_lossy(0.5),
            max_rotation_patterns: 10_000,
            max_candidates: 100_000,
            exhaustive_subset_limit: 8,
        }
    }
}

/// Vectors one eigenspace group contributes to a lumping: members of the
/// group's span that are constant on every lump.
#[derive(Debug, Clone)]
pub struct GeneratorChoice<S: Scalar> {
    /// Index into the eigenspace group list the vectors were drawn from.
    pub group: usize,
    /// Representative eigenvalue of that group.
    pub eigenvalue: Complex<S>,
    /// Coefficients of each chosen vector over the group's primary basis
    /// (its real columns, or one complex column per conjugate pair).
    pub coefficients: Vec<Array1<Complex<S>>>,
    /// The chosen vectors, scaled to unit max-modulus.
    pub vectors: Vec<Array1<Complex<S>>>,
    /// Dimension contributed to the count condition. For conjugate-pair
    /// groups each listed vector counts twice: its conjugate is constant
    /// on the same lumps and independent, but carries no new information,
    /// so it is counted without being materialized.
    pub dimension: usize,
}

/// A partition proposed by the spectral analysis, with the evidence that
/// proposed it and the verdict of the aggregation test.
#[derive(Debug, Clone)]
pub struct LumpingCandidate<S: Scalar> {
    pub partition: Partition,
    /// Per-group constant vectors; groups contributing nothing are absent.
    pub generating_set: Vec<GeneratorChoice<S>>,
    /// Packed eigenvector columns of the groups that contribute nothing;
    /// the corresponding left eigenvectors annihilate the membership
    /// matrix (see [`annihilating_left_vectors`] for the rotated
    /// completion inside partially used groups).
    pub complement: Vec<usize>,
    /// Total dimension of the constant-on-lumps eigenvector space; equals
    /// the lump count for every retained candidate.
    pub count: usize,
    /// Whether the aggregation test on the original matrix passed.
    pub verified: bool,
    /// Largest aggregated-row spread observed by that test.
    pub max_deviation: S,
}

/// Unverified candidate partitions together with generation diagnostics.
#[derive(Debug, Clone)]
pub struct CandidateSet<S: Scalar> {
    pub candidates: Vec<LumpingCandidate<S>>,
    /// A probe or lattice cap was hit; the set may be incomplete.
    pub truncated: bool,
    /// Distinct partitions the count condition examined.
    pub examined: usize,
}

/// Result of a full discovery run.
#[derive(Debug, Clone)]
pub struct Discovery<S: Scalar> {
    /// Verified lumpings, sorted by lump count then canonical assignment.
    pub lumpings: Vec<LumpingCandidate<S>>,
    /// Eigenvalues of the analyzed matrix (after the blend, if one was
    /// applied), modulus descending.
    pub spectrum: Vec<Complex<S>>,
    /// Blend weight applied before the spectral pass, when one was needed.
    pub perturbation: Option<S>,
    /// Candidate generation hit a cap; the list may be incomplete.
    pub truncated: bool,
    /// Some eigenvalue is repeated (or a conjugate pair is present), so
    /// completeness rests on the probing heuristic rather than the meet
    /// lattice alone.
    pub degenerate_spectrum: bool,
    /// Distinct candidate partitions examined.
    pub candidates_examined: usize,
}

impl<S: Scalar> Discovery<S> {
    /// The verified partitions alone, in reporting order.
    pub fn partitions(&self) -> Vec<Partition> {
        self.lumpings.iter().map(|c| c.partition.clone()).collect()
    }
}

/// Groups states whose rows in `rows` agree elementwise within `tol`,
/// merging near-equal chains by single linkage. Single linkage cannot
/// split a true equality class; spurious merges are caught later by the
/// aggregation test.
fn rows_partition<S: Scalar>(rows: &Array2<S>, tol: S) -> Partition {
    let n = rows.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let close = (0..rows.ncols()).all(|d| (rows[(i, d)] - rows[(j, d)]).abs() <= tol);
            if close {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Partition::from_assignment(&roots)
}

/// Partition induced by one eigenspace group: states share a lump iff
/// their rows across the group's packed columns agree within
/// `element_tol`. For a one-dimensional group this is elementwise
/// equality of the eigenvector.
pub fn induced_partition<S: Scalar>(
    es: &EigenSystem<S>,
    group: &EigenGroup<S>,
    element_tol: S,
) -> Partition {
    let cols = group.packed_columns();
    let right = es.right_packed();
    let rows = Array2::from_shape_fn((es.n(), cols.len()), |(i, d)| right[(i, cols[d])]);
    rows_partition(&rows, element_tol)
}

/// Partition on which all `vectors` are simultaneously constant within
/// `element_tol`, comparing real and imaginary parts separately.
fn partition_from_vectors<S: Scalar>(vectors: &[Array1<Complex<S>>], element_tol: S) -> Partition {
    let n = vectors[0].len();
    let rows = Array2::from_shape_fn((n, 2 * vectors.len()), |(i, d)| {
        let z = vectors[d / 2][i];
        if d % 2 == 0 {
            z.re
        } else {
            z.im
        }
    });
    rows_partition(&rows, element_tol)
}

/// Primary basis of a group: its real packed columns as complex vectors,
/// or one complex vector per conjugate pair. Mixed clusters are treated
/// as a real eigenspace over all packed columns, on the presumption that
/// the cluster approximates one repeated real eigenvalue.
fn primary_basis<S: Scalar>(es: &EigenSystem<S>, group: &EigenGroup<S>) -> Vec<Array1<Complex<S>>> {
    let right = es.right_packed();
    let n = es.n();
    match group.kind {
        GroupKind::ComplexPair => group
            .pair_columns
            .iter()
            .map(|&j| Array1::from_shape_fn(n, |i| Complex::new(right[(i, j)], right[(i, j + 1)])))
            .collect(),
        _ => group
            .packed_columns()
            .iter()
            .map(|&j| Array1::from_shape_fn(n, |i| Complex::new(right[(i, j)], S::zero())))
            .collect(),
    }
}

/// Vectors found by [`rotation_search`]: a basis of the subspace of the
/// group's span that is constant on the target lumps.
#[derive(Debug, Clone)]
pub struct RotationResult<S: Scalar> {
    /// Kernel basis over the group's primary basis.
    pub coefficients: Vec<Array1<Complex<S>>>,
    /// The spanned constant-on-lumps vectors, unit max-modulus.
    pub vectors: Vec<Array1<Complex<S>>>,
    /// Counted dimension (doubled for conjugate-pair groups).
    pub dimension: usize,
}

/// Searches the span of a group's eigenvectors for members constant on
/// every lump of `target`. Each such vector solves the homogeneous system
/// `(row_i - row_r) . w = 0` over the coefficient vector `w`, for every
/// lump member `i` against the lump representative `r`. Returns `None`
/// when only the zero vector qualifies.
pub fn rotation_search<S: Scalar>(
    es: &EigenSystem<S>,
    group: &EigenGroup<S>,
    target: &Partition,
    element_tol: S,
) -> Option<RotationResult<S>> {
    let basis = primary_basis(es, group);
    let k = basis.len();
    let complex_pairs = group.kind == GroupKind::ComplexPair;

    let mut constraints: Vec<(usize, usize)> = Vec::new();
    for lump in target.lumps() {
        for &i in &lump[1..] {
            constraints.push((i, lump[0]));
        }
    }

    let (coefficients, paired): (Vec<Array1<Complex<S>>>, bool) = if complex_pairs {
        let a = Array2::from_shape_fn((constraints.len(), k), |(c, d)| {
            let (i, r) = constraints[c];
            basis[d][i] - basis[d][r]
        });
        (complex_nullspace(&a, element_tol), true)
    } else {
        let a = Array2::from_shape_fn((constraints.len(), k), |(c, d)| {
            let (i, r) = constraints[c];
            basis[d][i].re - basis[d][r].re
        });
        let kernel = real_nullspace(&a, element_tol);
        (
            kernel
                .into_iter()
                .map(|w| w.mapv(|x| Complex::new(x, S::zero())))
                .collect(),
            false,
        )
    };
    if coefficients.is_empty() {
        return None;
    }

    let n = es.n();
    let vectors: Vec<Array1<Complex<S>>> = coefficients
        .iter()
        .map(|w| {
            let mut y = Array1::from_elem(n, Complex::new(S::zero(), S::zero()));
            for (d, b) in basis.iter().enumerate() {
                let wd = w[d];
                for i in 0..n {
                    y[i] = y[i] + b[i] * wd;
                }
            }
            let mut pivot = y[0];
            for i in 1..n {
                if y[i].norm() > pivot.norm() {
                    pivot = y[i];
                }
            }
            y.mapv(|z| z / pivot)
        })
        .collect();

    let dimension = if paired {
        2 * coefficients.len()
    } else {
        coefficients.len()
    };
    Some(RotationResult {
        coefficients,
        vectors,
        dimension,
    })
}

/// Returns `q` with lumps `a` and `b` merged, in canonical form.
fn merge_lumps(q: &Partition, a: usize, b: usize) -> Partition {
    let merged: Vec<usize> = q
        .assignment()
        .iter()
        .map(|&l| if l == b { a } else { l })
        .collect();
    Partition::from_assignment(&merged)
}

/// Partitions reachable from a degenerate group by repeatedly forcing two
/// lumps equal and re-reading the equality classes of the surviving
/// constant subspace. Each probe can cascade: constraining two rows equal
/// often forces further coincidences elsewhere, which is how rotated
/// combinations surface partitions no single basis vector induces.
fn group_probe_partitions<S: Scalar>(
    es: &EigenSystem<S>,
    group: &EigenGroup<S>,
    element_tol: S,
    cap: usize,
) -> (Vec<Partition>, bool) {
    let start = induced_partition(es, group, element_tol);
    let mut seen: HashSet<Partition> = HashSet::new();
    let mut queue: VecDeque<Partition> = VecDeque::new();
    let mut out: Vec<Partition> = Vec::new();
    seen.insert(start.clone());
    queue.push_back(start.clone());
    out.push(start);
    while let Some(q) = queue.pop_front() {
        let m = q.num_lumps();
        for a in 0..m {
            for b in a + 1..m {
                let target = merge_lumps(&q, a, b);
                let Some(found) = rotation_search(es, group, &target, element_tol) else {
                    continue;
                };
                let refined = partition_from_vectors(&found.vectors, element_tol);
                if seen.insert(refined.clone()) {
                    if out.len() >= cap {
                        return (out, true);
                    }
                    queue.push_back(refined.clone());
                    out.push(refined);
                }
            }
        }
    }
    (out, false)
}

/// Closes `seeds` under pairwise meet. Iterated pairwise meets produce
/// every subset meet, so the result is the full meet-semilattice generated
/// by the seeds, truncated at `cap` elements.
fn close_under_meet(seeds: Vec<Partition>, cap: usize) -> (Vec<Partition>, bool) {
    let mut items: Vec<Partition> = Vec::new();
    let mut seen: HashSet<Partition> = HashSet::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            items.push(s);
        }
    }
    let mut truncated = items.len() > cap;
    items.truncate(cap);
    let mut i = 0;
    while i < items.len() {
        for j in 0..i {
            let met = items[i]
                .meet(&items[j])
                .expect("lattice members share one state count");
            if seen.insert(met.clone()) {
                if items.len() >= cap {
                    truncated = true;
                    break;
                }
                items.push(met);
            }
        }
        if truncated {
            break;
        }
        i += 1;
    }
    (items, truncated)
}

/// Builds the candidate partition lattice and filters it by the count
/// condition: a partition into M lumps survives iff the eigenvector space
/// constant on its lumps has dimension at least M (and then exactly M,
/// since constant-on-lumps vectors span at most M dimensions). Candidates
/// are emitted unverified.
pub fn generate_candidates<S: Scalar>(
    es: &EigenSystem<S>,
    groups: &[EigenGroup<S>],
    cfg: &DiscoveryConfig<S>,
) -> CandidateSet<S> {
    let n = es.n();
    let mut truncated = false;

    let mut seeds: Vec<Partition> = vec![Partition::single_lump(n), Partition::singletons(n)];
    for g in groups {
        if g.multiplicity() >= 2 {
            let (probes, hit) =
                group_probe_partitions(es, g, cfg.element_tol, cfg.max_rotation_patterns);
            truncated |= hit;
            seeds.extend(probes);
        } else {
            seeds.push(induced_partition(es, g, cfg.element_tol));
        }
    }

    let (lattice, hit) = close_under_meet(seeds, cfg.max_candidates);
    truncated |= hit;
    let examined = lattice.len();

    let mut candidates = Vec::new();
    for q in lattice {
        let m = q.num_lumps();
        let mut count = 0usize;
        let mut generating_set: Vec<GeneratorChoice<S>> = Vec::new();
        let mut complement: Vec<usize> = Vec::new();
        for (gi, g) in groups.iter().enumerate() {
            match rotation_search(es, g, &q, cfg.element_tol) {
                Some(found) => {
                    count += found.dimension;
                    generating_set.push(GeneratorChoice {
                        group: gi,
                        eigenvalue: g.representative,
                        coefficients: found.coefficients,
                        vectors: found.vectors,
                        dimension: found.dimension,
                    });
                }
                None => complement.extend(g.packed_columns()),
            }
        }
        if count >= m {
            complement.sort_unstable();
            candidates.push(LumpingCandidate {
                partition: q,
                generating_set,
                complement,
                count,
                verified: false,
                max_deviation: S::infinity(),
            });
        }
    }

    CandidateSet {
        candidates,
        truncated,
        examined,
    }
}

/// Discovers every strong lumping of `p` that the spectral analysis can
/// reach, each verified by the aggregation test on the original matrix at
/// `lump_tol`. A spectrum containing a (near-)zero eigenvalue triggers the
/// identity blend first; the blend shares all eigenvectors with `p`, so
/// the lumping structure is unchanged while full rank is restored.
pub fn discover<S: Scalar>(
    p: &StochasticMatrix<S>,
    cfg: &DiscoveryConfig<S>,
    lump_tol: S,
) -> Result<Discovery<S>> {
    let es0 = spectral::eigensystem(p, cfg.spectral_tol)?;
    let rank_deficient = es0.values().iter().any(|l| l.norm() <= cfg.group_tol);
    let (es, perturbation) = if es0.diagonalizable() && !rank_deficient {
        (es0, None)
    } else {
        let blended = spectral::perturb(p, cfg.zeta)?;
        let es1 = spectral::eigensystem(&blended, cfg.spectral_tol)?;
        if es1.diagonalizable() {
            (es1, Some(cfg.zeta))
        } else if es0.diagonalizable() {
            (es0, None)
        } else {
            return Err(Error::NotDiagonalizable {
                condition: es0
                    .condition()
                    .to_f64_lossy()
                    .max(es1.condition().to_f64_lossy()),
            });
        }
    };

    let groups = spectral::group_eigenvalues(&es, cfg.group_tol);
    let degenerate_spectrum = groups.iter().any(|g| g.multiplicity() >= 2);
    let set = generate_candidates(&es, &groups, cfg);

    let mut lumpings = Vec::new();
    for mut cand in set.candidates {
        let deviation = p.lump_deviation(&cand.partition)?;
        if deviation <= lump_tol {
            cand.verified = true;
            cand.max_deviation = deviation;
            lumpings.push(cand);
        }
    }
    lumpings.sort_by(|x, y| x.partition.sort_key().cmp(&y.partition.sort_key()));

    Ok(Discovery {
        lumpings,
        spectrum: es.values().to_vec(),
        perturbation,
        truncated: set.truncated,
        degenerate_spectrum,
        candidates_examined: set.examined,
    })
}

/// Witnesses a lumping from the other side: reduces the chain over
/// `part`, computes the eigenvectors of the reduced matrix and lifts each
/// back by copying lump values to member states. For a valid lumping every
/// lifted vector is again an eigenvector of `p`, which exhibits the
/// `|part|` constant-on-lumps eigenvectors the count condition promises.
pub fn converse_witness<S: Scalar>(
    p: &StochasticMatrix<S>,
    part: &Partition,
    lump_tol: S,
    spectral_tol: S,
) -> Result<LiftedWitness<S>> {
    let reduced = p.reduce(part, lump_tol)?;
    spectral::lift_reduced_eigenvectors(p, &reduced, spectral_tol)
}

/// Left directions annihilated by a lumping, one list entry per group.
#[derive(Debug, Clone)]
pub struct AnnihilationCertificate<S: Scalar> {
    /// `(group, vector)` pairs: left row vectors `v` in the group's left
    /// span with `v . membership = 0`. Conjugates of pair-group vectors
    /// annihilate as well and are not listed.
    pub vectors: Vec<(usize, Array1<Complex<S>>)>,
    /// Largest `|v . membership|` element over all listed vectors.
    pub max_residual: S,
}

/// Computes, for each eigenspace group, the left eigenvector combinations
/// that annihilate the membership matrix of `part`. Together with the
/// generating set these account for the whole left family: directions not
/// needed to express the reduced dynamics must vanish on the lumps.
pub fn annihilating_left_vectors<S: Scalar>(
    es: &EigenSystem<S>,
    groups: &[EigenGroup<S>],
    part: &Partition,
    element_tol: S,
) -> Option<AnnihilationCertificate<S>> {
    let n = es.n();
    let m = part.num_lumps();
    let mut vectors = Vec::new();
    let mut max_residual = S::zero();

    for (gi, g) in groups.iter().enumerate() {
        // primary left basis rows, mirroring the right primary basis
        let rows: Vec<Array1<Complex<S>>> = match g.kind {
            GroupKind::ComplexPair => g
                .pair_columns
                .iter()
                .map(|&j| es.left_vector(j))
                .collect::<Option<Vec<_>>>()?,
            _ => g
                .packed_columns()
                .iter()
                .map(|&j| es.left_vector(j))
                .collect::<Option<Vec<_>>>()?,
        };
        let k = rows.len();
        // aggregated[t][l] = sum of row t over the states of lump l
        let mut aggregated = Array2::from_elem((k, m), Complex::new(S::zero(), S::zero()));
        for (t, row) in rows.iter().enumerate() {
            for i in 0..n {
                let l = part.lump_of(i);
                aggregated[(t, l)] = aggregated[(t, l)] + row[i];
            }
        }
        // v = c^T rows annihilates the membership matrix iff c lies in the
        // kernel of aggregated^T
        let transposed = Array2::from_shape_fn((m, k), |(l, t)| aggregated[(t, l)]);
        for c in complex_nullspace(&transposed, element_tol) {
            let mut v = Array1::from_elem(n, Complex::new(S::zero(), S::zero()));
            for (t, row) in rows.iter().enumerate() {
                for i in 0..n {
                    v[i] = v[i] + row[i] * c[t];
                }
            }
            for l in 0..m {
                let total: Complex<S> = part.lumps()[l]
                    .iter()
                    .fold(Complex::new(S::zero(), S::zero()), |acc, &i| acc + v[i]);
                max_residual = max_residual.max(total.norm());
            }
            vectors.push((gi, v));
        }
    }

    Some(AnnihilationCertificate {
        vectors,
        max_residual,
    })
}
