//! Spectral analysis of transition matrices: the full eigensystem with
//! left and right eigenvectors, clustering of (near-)equal eigenvalues,
//! the rank-restoring convex perturbation, and the lift of reduced-chain
//! eigenvectors back to the full state space.

mod evd;
pub(crate) mod linalg;

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::chain::{ReducedChain, StochasticMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Role of one column of the packed eigenvector matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// Real eigenvalue; the column is its eigenvector.
    Real,
    /// First column of a conjugate pair: real part of the eigenvector for
    /// the eigenvalue with positive imaginary part.
    PairRe,
    /// Second column of a conjugate pair: imaginary part.
    PairIm,
}

/// Eigenvalues and eigenvectors of a transition matrix, in packed real
/// storage.
///
/// Eigenvalues are sorted by modulus descending (ties: real part, then
/// imaginary part descending), with conjugate pairs adjacent and the
/// positive imaginary part first. Right eigenvectors are the columns of
/// `right`, scaled to max-norm 1 with the largest entry made positive
/// (real case) or real positive (complex case). Left eigenvectors are the
/// rows of `left = right^-1`, so the two families are biorthonormal by
/// construction.
#[derive(Debug, Clone)]
pub struct EigenSystem<S: Scalar> {
    values: Vec<Complex<S>>,
    kinds: Vec<ColumnKind>,
    right: Array2<S>,
    left: Option<Array2<S>>,
    condition: S,
    residual: S,
    inverse_residual: S,
    reconstruction_residual: S,
    diagonalizable: bool,
}

impl<S: Scalar> EigenSystem<S> {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex<S>] {
        &self.values
    }

    pub fn value(&self, j: usize) -> Complex<S> {
        self.values[j]
    }

    pub fn column_kind(&self, j: usize) -> ColumnKind {
        self.kinds[j]
    }

    /// Packed right eigenvector columns.
    pub fn right_packed(&self) -> &Array2<S> {
        &self.right
    }

    /// Packed left eigenvector rows, absent when the right eigenvector
    /// matrix was numerically singular.
    pub fn left_packed(&self) -> Option<&Array2<S>> {
        self.left.as_ref()
    }

    /// Right eigenvector of eigenvalue `j` as a complex vector.
    pub fn right_vector(&self, j: usize) -> Array1<Complex<S>> {
        let n = self.n();
        match self.kinds[j] {
            ColumnKind::Real => {
                Array1::from_shape_fn(n, |i| Complex::new(self.right[(i, j)], S::zero()))
            }
            ColumnKind::PairRe => {
                Array1::from_shape_fn(n, |i| Complex::new(self.right[(i, j)], self.right[(i, j + 1)]))
            }
            ColumnKind::PairIm => {
                Array1::from_shape_fn(n, |i| Complex::new(self.right[(i, j - 1)], -self.right[(i, j)]))
            }
        }
    }

    /// Left eigenvector of eigenvalue `j`, normalized against the right
    /// family (`v^j u^k = delta_jk`).
    pub fn left_vector(&self, j: usize) -> Option<Array1<Complex<S>>> {
        let left = self.left.as_ref()?;
        let n = self.n();
        let half = S::from_f64_lossy(0.5);
        Some(match self.kinds[j] {
            ColumnKind::Real => {
                Array1::from_shape_fn(n, |i| Complex::new(left[(j, i)], S::zero()))
            }
            // rows (j, j+1) of the inverse are 2 Re(v) and -2 Im(v)
            ColumnKind::PairRe => Array1::from_shape_fn(n, |i| {
                Complex::new(left[(j, i)] * half, -left[(j + 1, i)] * half)
            }),
            ColumnKind::PairIm => Array1::from_shape_fn(n, |i| {
                Complex::new(left[(j - 1, i)] * half, left[(j, i)] * half)
            }),
        })
    }

    /// 1-norm condition estimate of the right eigenvector matrix.
    pub fn condition(&self) -> S {
        self.condition
    }

    /// Largest per-eigenpair residual `|A u - lambda u|`.
    pub fn residual(&self) -> S {
        self.residual
    }

    /// Max-abs of `left * right - I`.
    pub fn inverse_residual(&self) -> S {
        self.inverse_residual
    }

    /// Max-abs of `right * D * left - A`.
    pub fn reconstruction_residual(&self) -> S {
        self.reconstruction_residual
    }

    /// Whether the eigenvector matrix inverted cleanly enough for the
    /// spectral decomposition to be trusted.
    pub fn diagonalizable(&self) -> bool {
        self.diagonalizable
    }
}

/// Computes the sorted, normalized eigensystem of `p`. `spectral_tol`
/// bounds the inversion and reconstruction residuals below which the
/// decomposition counts as diagonalizable.
pub fn eigensystem<S: Scalar>(p: &StochasticMatrix<S>, spectral_tol: S) -> Result<EigenSystem<S>> {
    let a = p.as_array();
    let raw = evd::eigen_raw(a.view())?;
    let n = p.n();

    // units: a real eigenvalue or an adjacent conjugate pair
    let mut units: Vec<(usize, bool)> = Vec::new();
    let mut j = 0;
    while j < n {
        if raw.im[j] != S::zero() {
            units.push((j, true));
            j += 2;
        } else {
            units.push((j, false));
            j += 1;
        }
    }
    // modulus descending, then real part, then imaginary part descending
    units.sort_by(|&(a_, _), &(b_, _)| {
        let ka = (
            (raw.re[a_] * raw.re[a_] + raw.im[a_] * raw.im[a_]),
            raw.re[a_],
            raw.im[a_],
        );
        let kb = (
            (raw.re[b_] * raw.re[b_] + raw.im[b_] * raw.im[b_]),
            raw.re[b_],
            raw.im[b_],
        );
        kb.partial_cmp(&ka).expect("finite eigenvalues compare")
    });

    let mut values = Vec::with_capacity(n);
    let mut kinds = Vec::with_capacity(n);
    let mut right = Array2::zeros((n, n));
    let mut col = 0;
    for &(u, is_pair) in &units {
        if is_pair {
            // normalize so the modulus-largest entry becomes 1 + 0i
            let mut best = 0;
            let mut best_mag = S::neg_infinity();
            for i in 0..n {
                let mag = raw.vectors[(i, u)] * raw.vectors[(i, u)]
                    + raw.vectors[(i, u + 1)] * raw.vectors[(i, u + 1)];
                if mag > best_mag {
                    best_mag = mag;
                    best = i;
                }
            }
            let pivot = Complex::new(raw.vectors[(best, u)], raw.vectors[(best, u + 1)]);
            for i in 0..n {
                let zc = Complex::new(raw.vectors[(i, u)], raw.vectors[(i, u + 1)]) / pivot;
                right[(i, col)] = zc.re;
                right[(i, col + 1)] = zc.im;
            }
            values.push(Complex::new(raw.re[u], raw.im[u]));
            values.push(Complex::new(raw.re[u + 1], raw.im[u + 1]));
            kinds.push(ColumnKind::PairRe);
            kinds.push(ColumnKind::PairIm);
            col += 2;
        } else {
            let mut best = 0;
            for i in 1..n {
                if raw.vectors[(i, u)].abs() > raw.vectors[(best, u)].abs() {
                    best = i;
                }
            }
            // max-norm 1 with the first non-negligible entry positive;
            // entries below sqrt(eps) of the peak are too noisy to carry
            // the sign convention
            let mut pivot = raw.vectors[(best, u)].abs();
            let noise = pivot * S::epsilon().sqrt();
            for i in 0..n {
                if raw.vectors[(i, u)].abs() > noise {
                    if raw.vectors[(i, u)] < S::zero() {
                        pivot = -pivot;
                    }
                    break;
                }
            }
            for i in 0..n {
                right[(i, col)] = raw.vectors[(i, u)] / pivot;
            }
            values.push(Complex::new(raw.re[u], S::zero()));
            kinds.push(ColumnKind::Real);
            col += 1;
        }
    }

    // per-eigenpair residual |A u - lambda u|, evaluated in packed form
    let mut residual = S::zero();
    for j in 0..n {
        match kinds[j] {
            ColumnKind::Real => {
                let lambda = values[j].re;
                for i in 0..n {
                    let au: S = (0..n).map(|k| a[(i, k)] * right[(k, j)]).sum();
                    residual = residual.max((au - lambda * right[(i, j)]).abs());
                }
            }
            ColumnKind::PairRe => {
                let (dr, di) = (values[j].re, values[j].im);
                for i in 0..n {
                    let aur: S = (0..n).map(|k| a[(i, k)] * right[(k, j)]).sum();
                    let aui: S = (0..n).map(|k| a[(i, k)] * right[(k, j + 1)]).sum();
                    // lambda u splits into (dr ur - di ui, di ur + dr ui)
                    let want_r = dr * right[(i, j)] - di * right[(i, j + 1)];
                    let want_i = di * right[(i, j)] + dr * right[(i, j + 1)];
                    residual = residual.max((aur - want_r).abs()).max((aui - want_i).abs());
                }
            }
            ColumnKind::PairIm => {}
        }
    }

    let inverted = linalg::invert(&right);
    let (left, condition, inverse_residual, reconstruction_residual) = match inverted {
        Some((w, cond)) => {
            let wv = w.dot(&right);
            let mut inv_res = S::zero();
            for ((i, j), &x) in wv.indexed_iter() {
                let want = if i == j { S::one() } else { S::zero() };
                inv_res = inv_res.max((x - want).abs());
            }
            // D * W assembled row-blockwise from the packed layout
            let mut dw = Array2::zeros((n, n));
            for j in 0..n {
                match kinds[j] {
                    ColumnKind::Real => {
                        let lambda = values[j].re;
                        for i in 0..n {
                            dw[(j, i)] = lambda * w[(j, i)];
                        }
                    }
                    ColumnKind::PairRe => {
                        let (dr, di) = (values[j].re, values[j].im);
                        for i in 0..n {
                            dw[(j, i)] = dr * w[(j, i)] + di * w[(j + 1, i)];
                            dw[(j + 1, i)] = -di * w[(j, i)] + dr * w[(j + 1, i)];
                        }
                    }
                    ColumnKind::PairIm => {}
                }
            }
            let recon = right.dot(&dw);
            let mut recon_res = S::zero();
            for ((i, j), &x) in recon.indexed_iter() {
                recon_res = recon_res.max((x - a[(i, j)]).abs());
            }
            (Some(w), cond, inv_res, recon_res)
        }
        None => (None, S::infinity(), S::infinity(), S::infinity()),
    };

    let diagonalizable =
        left.is_some() && inverse_residual <= spectral_tol && reconstruction_residual <= spectral_tol;

    Ok(EigenSystem {
        values,
        kinds,
        right,
        left,
        condition,
        residual,
        inverse_residual,
        reconstruction_residual,
        diagonalizable,
    })
}

/// Shape of one cluster of (near-)equal eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// One real eigenvalue, one eigenvector: no rotation freedom.
    RealSimple,
    /// Repeated real eigenvalue: the eigenspace admits rotations.
    RealDegenerate,
    /// Conjugate pairs only; rotations act over the complex span.
    ComplexPair,
    /// Real values and pairs collapsed together; treated as a real
    /// eigenspace spanned by all packed columns.
    Mixed,
}

/// A cluster of eigenvalues treated as one eigenspace.
#[derive(Debug, Clone)]
pub struct EigenGroup<S: Scalar> {
    pub representative: Complex<S>,
    pub kind: GroupKind,
    /// Packed columns holding real basis vectors of the eigenspace.
    pub real_columns: Vec<usize>,
    /// First (real-part) column of each conjugate pair in the cluster.
    pub pair_columns: Vec<usize>,
}

impl<S: Scalar> EigenGroup<S> {
    /// Number of packed columns the group spans.
    pub fn span_dim(&self) -> usize {
        self.real_columns.len() + 2 * self.pair_columns.len()
    }

    /// All packed column indices of the group, ascending.
    pub fn packed_columns(&self) -> Vec<usize> {
        let mut cols = self.real_columns.clone();
        for &j in &self.pair_columns {
            cols.push(j);
            cols.push(j + 1);
        }
        cols.sort_unstable();
        cols
    }

    /// How many eigenvalues (lifting conjugates separately) the group
    /// accounts for.
    pub fn multiplicity(&self) -> usize {
        self.span_dim()
    }
}

/// Clusters eigenvalues whose pairwise distance falls within `group_tol`
/// (single linkage). A conjugate pair whose imaginary part is itself below
/// `group_tol` is treated as two real directions, since the split into a
/// rotating pair is then numerically meaningless.
pub fn group_eigenvalues<S: Scalar>(es: &EigenSystem<S>, group_tol: S) -> Vec<EigenGroup<S>> {
    struct Unit<S: Scalar> {
        rep: Complex<S>,
        cols_real: Vec<usize>,
        col_pair: Option<usize>,
    }
    let mut units: Vec<Unit<S>> = Vec::new();
    let mut j = 0;
    while j < es.n() {
        match es.column_kind(j) {
            ColumnKind::Real => {
                units.push(Unit {
                    rep: es.value(j),
                    cols_real: vec![j],
                    col_pair: None,
                });
                j += 1;
            }
            ColumnKind::PairRe => {
                if es.value(j).im <= group_tol {
                    units.push(Unit {
                        rep: es.value(j),
                        cols_real: vec![j, j + 1],
                        col_pair: None,
                    });
                } else {
                    units.push(Unit {
                        rep: es.value(j),
                        cols_real: vec![],
                        col_pair: Some(j),
                    });
                }
                j += 2;
            }
            ColumnKind::PairIm => unreachable!("pair starts are visited first"),
        }
    }

    // single-linkage union-find over the units
    let k = units.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for a in 0..k {
        for b in a + 1..k {
            if (units[a].rep - units[b].rep).norm() <= group_tol {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }

    let mut groups: Vec<EigenGroup<S>> = Vec::new();
    let mut root_to_group: Vec<Option<usize>> = vec![None; k];
    for u in 0..k {
        let root = find(&mut parent, u);
        let gi = match root_to_group[root] {
            Some(gi) => gi,
            None => {
                groups.push(EigenGroup {
                    representative: units[u].rep,
                    kind: GroupKind::RealSimple,
                    real_columns: vec![],
                    pair_columns: vec![],
                });
                root_to_group[root] = Some(groups.len() - 1);
                groups.len() - 1
            }
        };
        groups[gi].real_columns.extend(&units[u].cols_real);
        groups[gi].pair_columns.extend(units[u].col_pair);
    }
    for g in &mut groups {
        g.real_columns.sort_unstable();
        g.pair_columns.sort_unstable();
        g.kind = match (g.real_columns.is_empty(), g.pair_columns.is_empty()) {
            (false, true) if g.real_columns.len() == 1 => GroupKind::RealSimple,
            (false, true) => GroupKind::RealDegenerate,
            (true, false) => GroupKind::ComplexPair,
            (false, false) => GroupKind::Mixed,
            (true, true) => unreachable!("empty eigenvalue group"),
        };
    }
    groups
}

/// Convex blend `(1 - zeta) P + zeta I`. Lumpings are unchanged by the
/// blend while repeated eigenvalues generically separate, which restores
/// an invertible eigenbasis.
pub fn perturb<S: Scalar>(p: &StochasticMatrix<S>, zeta: S) -> Result<StochasticMatrix<S>> {
    if !(zeta >= S::zero() && zeta < S::one()) {
        return Err(Error::ZetaOutOfRange {
            zeta: zeta.to_f64_lossy(),
        });
    }
    let n = p.n();
    let mut q = p.as_array().mapv(|x| x * (S::one() - zeta));
    for i in 0..n {
        q[(i, i)] += zeta;
    }
    Ok(StochasticMatrix::from_validated(q))
}

/// Worst distance from an eigenvalue of the reduced chain to the nearest
/// eigenvalue of the original: zero (up to roundoff) whenever the reduced
/// spectrum embeds into the original one.
pub fn spectrum_alignment<S: Scalar>(
    original: &EigenSystem<S>,
    reduced: &EigenSystem<S>,
) -> S {
    let mut worst = S::zero();
    for &mu in reduced.values() {
        let nearest = original
            .values()
            .iter()
            .map(|&lam| (lam - mu).norm())
            .fold(S::infinity(), S::min);
        worst = worst.max(nearest);
    }
    worst
}

/// Whether every eigenvalue of the reduced chain lies within `tol` of an
/// eigenvalue of the original. A necessary condition for any lumping: the
/// reduced dynamics cannot exhibit frequencies the full chain lacks.
pub fn spectrum_subset<S: Scalar>(
    p: &StochasticMatrix<S>,
    reduced: &ReducedChain<S>,
    tol: S,
) -> Result<bool> {
    let es = eigensystem(p, tol)?;
    let es_red = eigensystem(&reduced.matrix, tol)?;
    Ok(spectrum_alignment(&es, &es_red) <= tol)
}

/// Eigenvectors of a reduced chain lifted to the full state space by
/// copying each lump's value to all of its states.
#[derive(Debug, Clone)]
pub struct LiftedWitness<S: Scalar> {
    pub values: Vec<Complex<S>>,
    /// One lifted right eigenvector per reduced eigenvalue.
    pub vectors: Vec<Array1<Complex<S>>>,
    /// Worst `|P y - lambda y|` over the lifted vectors.
    pub max_residual: S,
}

/// Lifts every right eigenvector of the reduced chain up to the original
/// chain. For an exact lumping each lifted vector is again an eigenvector
/// of the original matrix, at the same eigenvalue.
pub fn lift_reduced_eigenvectors<S: Scalar>(
    p: &StochasticMatrix<S>,
    reduced: &ReducedChain<S>,
    spectral_tol: S,
) -> Result<LiftedWitness<S>> {
    let es = eigensystem(&reduced.matrix, spectral_tol)?;
    let n = p.n();
    let a = p.as_array();
    let mut vectors = Vec::with_capacity(es.n());
    let mut worst = S::zero();
    for j in 0..es.n() {
        let y_red = es.right_vector(j);
        let lifted =
            Array1::from_shape_fn(n, |i| y_red[reduced.partition.lump_of(i)]);
        let lambda = es.value(j);
        for i in 0..n {
            let mut acc = Complex::new(S::zero(), S::zero());
            for k in 0..n {
                acc = acc + lifted[k] * a[(i, k)];
            }
            worst = worst.max((acc - lambda * lifted[i]).norm());
        }
        vectors.push(lifted);
    }
    Ok(LiftedWitness {
        values: es.values().to_vec(),
        vectors,
        max_residual: worst,
    })
}
