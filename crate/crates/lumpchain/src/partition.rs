//! Partitions of the state space `{1..N}` into lumps.
//!
//! A partition is stored as a restricted-growth string: `assignment[i]` is
//! the lump index of state `i`, with the canonical labeling
//! `assignment[0] == 0` and `assignment[i] <= 1 + max(assignment[..i])`.
//! Two partitions have the same blocks iff their assignments are identical,
//! which makes equality, hashing and ordering cheap.
//!
//! States are 0-based everywhere inside the crate; the I/O layer shifts to
//! 1-based labels.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A partition of `{0..n-1}` into `m` nonempty lumps, in canonical
/// restricted-growth form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    assignment: Vec<usize>,
    m: usize,
}

impl Partition {
    /// Builds a partition from an arbitrary labeling of states; labels are
    /// relabeled into canonical restricted-growth form.
    pub fn from_assignment(labels: &[usize]) -> Partition {
        assert!(!labels.is_empty(), "partition of an empty state space");
        let mut relabel: Vec<Option<usize>> = Vec::new();
        let mut assignment = Vec::with_capacity(labels.len());
        let mut next = 0usize;
        for &label in labels {
            if relabel.len() <= label {
                relabel.resize(label + 1, None);
            }
            let id = *relabel[label].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            assignment.push(id);
        }
        Partition { assignment, m: next }
    }

    /// Builds a partition from explicit blocks of 0-based state indices.
    /// The blocks must be nonempty, disjoint and cover `{0..n-1}`.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Partition> {
        let mut labels = vec![usize::MAX; n];
        let mut seen = 0usize;
        for (k, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Parse {
                    line: 1,
                    col: 1,
                    message: format!("block {} of the partition is empty", k + 1),
                });
            }
            for &i in block {
                if i >= n {
                    return Err(Error::StateOutOfRange { state: i + 1, n });
                }
                if labels[i] != usize::MAX {
                    return Err(Error::Parse {
                        line: 1,
                        col: 1,
                        message: format!("state {} appears in more than one block", i + 1),
                    });
                }
                labels[i] = k;
                seen += 1;
            }
        }
        if seen != n {
            return Err(Error::Parse {
                line: 1,
                col: 1,
                message: format!("blocks cover {seen} of {n} states"),
            });
        }
        Ok(Partition::from_assignment(&labels))
    }

    /// The partition with every state in its own lump.
    pub fn singletons(n: usize) -> Partition {
        Partition {
            assignment: (0..n).collect(),
            m: n,
        }
    }

    /// The partition with all states in one lump.
    pub fn single_lump(n: usize) -> Partition {
        assert!(n >= 1);
        Partition {
            assignment: vec![0; n],
            m: 1,
        }
    }

    /// Number of states `N`.
    pub fn n(&self) -> usize {
        self.assignment.len()
    }

    /// Number of lumps `M`.
    pub fn num_lumps(&self) -> usize {
        self.m
    }

    /// Canonical restricted-growth assignment, one lump index per state.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Lump index of a state.
    pub fn lump_of(&self, state: usize) -> usize {
        self.assignment[state]
    }

    /// The blocks, ordered by lump index; states inside a block are ascending.
    pub fn lumps(&self) -> Vec<Vec<usize>> {
        let mut lumps = vec![Vec::new(); self.m];
        for (i, &k) in self.assignment.iter().enumerate() {
            lumps[k].push(i);
        }
        lumps
    }

    /// The N x M 0/1 membership matrix with `pi[(i, k)] = 1` iff state `i`
    /// lies in lump `k`.
    pub fn membership_matrix<S: Scalar>(&self) -> Array2<S> {
        let mut pi = Array2::zeros((self.n(), self.m));
        for (i, &k) in self.assignment.iter().enumerate() {
            pi[(i, k)] = S::one();
        }
        pi
    }

    /// Coarsest common refinement: states share a lump in the meet iff they
    /// share a lump in both `self` and `other`.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        // Pairs (self lump, other lump) relabeled in first-occurrence order
        // come out canonical directly.
        let mut ids: Vec<Vec<Option<usize>>> = vec![vec![None; other.m]; self.m];
        let mut next = 0usize;
        let assignment = self
            .assignment
            .iter()
            .zip(&other.assignment)
            .map(|(&a, &b)| {
                *ids[a][b].get_or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
            .collect();
        Ok(Partition { assignment, m: next })
    }

    /// True iff every lump of `self` is contained in a lump of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        if self.n() != other.n() {
            return false;
        }
        let mut image = vec![usize::MAX; self.m];
        for (i, &k) in self.assignment.iter().enumerate() {
            let target = other.assignment[i];
            if image[k] == usize::MAX {
                image[k] = target;
            } else if image[k] != target {
                return false;
            }
        }
        true
    }

    /// Sort key used for all deterministic listings: lump count ascending,
    /// then assignment lexicographic.
    pub fn sort_key(&self) -> (usize, &[usize]) {
        (self.m, &self.assignment)
    }
}
