//! Row-stochastic transition matrices, the lumpability test and the
//! reduced chain.
//!
//! A partition `Q = {L_1..L_M}` of the states is a valid lumping when every
//! row of the aggregated matrix `P * Pi` is constant within each lump: the
//! probability of jumping into lump `L_l` must not depend on which state of
//! `L_k` the chain occupies. When that holds, the reduced transition matrix
//! carries those common values and satisfies `Pi * P_red = P * Pi` exactly.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;

/// A validated N x N row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix<S: Scalar> {
    p: Array2<S>,
}

impl<S: Scalar> StochasticMatrix<S> {
    /// Validates entry ranges and row sums within `tol` and wraps the array.
    /// Entries may stray below 0 or above 1 by at most `tol`; each row must
    /// sum to 1 within `tol` and is renormalized to sum to 1 exactly, so the
    /// wrapped matrix is stochastic up to rounding regardless of how sloppy
    /// the input was within tolerance.
    pub fn new(p: Array2<S>, tol: S) -> Result<StochasticMatrix<S>> {
        let (rows, cols) = p.dim();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        for ((i, j), &x) in p.indexed_iter() {
            if !(x >= -tol) {
                return Err(Error::NegativeEntry {
                    row: i + 1,
                    col: j + 1,
                    value: x.to_f64_lossy(),
                });
            }
            if !(x <= S::one() + tol) {
                return Err(Error::EntryAboveOne {
                    row: i + 1,
                    col: j + 1,
                    value: x.to_f64_lossy(),
                });
            }
        }
        let mut p = p;
        for (i, mut row) in p.rows_mut().into_iter().enumerate() {
            let sum = row.sum();
            if !((sum - S::one()).abs() <= tol) {
                return Err(Error::RowSumViolation {
                    row: i + 1,
                    sum: sum.to_f64_lossy(),
                });
            }
            if sum != S::one() {
                row.mapv_inplace(|x| x / sum);
            }
        }
        Ok(StochasticMatrix { p })
    }

    /// Wraps an array that is stochastic by construction (convex blends,
    /// reductions of validated matrices).
    pub(crate) fn from_validated(p: Array2<S>) -> StochasticMatrix<S> {
        StochasticMatrix { p }
    }

    /// Builds from nested rows, for parsers and tests.
    pub fn from_rows(rows: &[Vec<S>], tol: S) -> Result<StochasticMatrix<S>> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
        }
        let flat: Vec<S> = rows.iter().flatten().copied().collect();
        let p = Array2::from_shape_vec((n, n), flat).expect("shape checked above");
        StochasticMatrix::new(p, tol)
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// The underlying array.
    pub fn as_array(&self) -> &Array2<S> {
        &self.p
    }

    /// Consumes the wrapper.
    pub fn into_array(self) -> Array2<S> {
        self.p
    }

    /// Largest violation of the lumpability condition for `q`: the maximal
    /// spread, over lumps `L_k` and target lumps `L_l`, of the aggregated
    /// transition probability `sum_{j in L_l} p_ij` across `i in L_k`.
    /// Zero means `q` lumps the chain exactly.
    pub fn lump_deviation(&self, q: &Partition) -> Result<S> {
        let agg = self.aggregated(q)?;
        let mut worst = S::zero();
        for lump in q.lumps() {
            for l in 0..q.num_lumps() {
                let mut lo = S::infinity();
                let mut hi = S::neg_infinity();
                for &i in &lump {
                    let x = agg[(i, l)];
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                worst = worst.max(hi - lo);
            }
        }
        Ok(worst)
    }

    /// Whether `q` is a valid lumping within `tol`.
    pub fn is_lumpable(&self, q: &Partition, tol: S) -> Result<bool> {
        Ok(self.lump_deviation(q)? <= tol)
    }

    /// Reduces the chain over a valid lumping. The reduced entry for
    /// `(L_k, L_l)` is the mean over `i in L_k` of `sum_{j in L_l} p_ij`;
    /// the rows being averaged agree within `tol`.
    pub fn reduce(&self, q: &Partition, tol: S) -> Result<ReducedChain<S>> {
        let deviation = self.lump_deviation(q)?;
        if deviation > tol {
            return Err(Error::NotLumpable {
                max_deviation: deviation.to_f64_lossy(),
            });
        }
        let agg = self.aggregated(q)?;
        let m = q.num_lumps();
        let mut reduced = Array2::zeros((m, m));
        for (k, lump) in q.lumps().iter().enumerate() {
            let size = S::from_usize(lump.len()).expect("lump size fits in scalar");
            for l in 0..m {
                let total: S = lump.iter().map(|&i| agg[(i, l)]).sum();
                reduced[(k, l)] = total / size;
            }
        }
        // Averaging rows that already sum to ~1 keeps the reduced matrix
        // stochastic to the same tolerance.
        let matrix = StochasticMatrix::new(reduced, tol * S::from_usize(self.n()).unwrap())?;
        Ok(ReducedChain {
            matrix,
            partition: q.clone(),
            deviation,
        })
    }

    /// The N x M aggregated matrix `P * Pi` of per-state lump entry
    /// probabilities.
    fn aggregated(&self, q: &Partition) -> Result<Array2<S>> {
        if q.n() != self.n() {
            return Err(Error::DimensionMismatch {
                left: self.n(),
                right: q.n(),
            });
        }
        let mut agg = Array2::zeros((self.n(), q.num_lumps()));
        for ((i, j), &x) in self.p.indexed_iter() {
            agg[(i, q.lump_of(j))] += x;
        }
        Ok(agg)
    }
}

/// A reduced chain together with the lumping that produced it.
#[derive(Debug, Clone)]
pub struct ReducedChain<S: Scalar> {
    /// The M x M reduced transition matrix.
    pub matrix: StochasticMatrix<S>,
    /// The lumping the chain was reduced over.
    pub partition: Partition,
    /// Largest lumpability violation observed while reducing.
    pub deviation: S,
}

impl<S: Scalar> ReducedChain<S> {
    /// Max-abs entry of `Pi * P_red - P * Pi`; zero iff the reduction
    /// commutes with the original dynamics exactly.
    pub fn commutation_residual(&self, original: &StochasticMatrix<S>) -> S {
        let pi = self.partition.membership_matrix::<S>();
        let lhs = pi.dot(self.matrix.as_array());
        let rhs = original.as_array().dot(&pi);
        lhs.iter()
            .zip(rhs.iter())
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max)
    }
}

/// Validates a probability vector: nonnegative within `tol`, total within
/// `tol` of 1.
pub fn validate_distribution<S: Scalar>(mu: &[S], tol: S) -> Result<()> {
    for (i, &x) in mu.iter().enumerate() {
        if !(x >= -tol) {
            return Err(Error::NegativeProbability {
                index: i + 1,
                value: x.to_f64_lossy(),
            });
        }
    }
    let sum: S = mu.iter().copied().sum();
    if !((sum - S::one()).abs() <= tol) {
        return Err(Error::DistributionSumViolation {
            sum: sum.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Projects a distribution over states onto lumps: the reduced mass of a
/// lump is the sum of the masses of its states.
pub fn project_distribution<S: Scalar>(mu: &[S], q: &Partition) -> Result<Array1<S>> {
    if mu.len() != q.n() {
        return Err(Error::DimensionMismatch {
            left: mu.len(),
            right: q.n(),
        });
    }
    let mut reduced = Array1::zeros(q.num_lumps());
    for (i, &x) in mu.iter().enumerate() {
        reduced[q.lump_of(i)] += x;
    }
    Ok(reduced)
}
