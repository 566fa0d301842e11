//! Exhaustive enumeration of lumpings, used as ground truth.
//!
//! The scan walks every partition of the state space in lexicographic
//! restricted-growth order and keeps those that pass the lumpability test.
//! The number of partitions is the Bell number `B_N`, which grows faster
//! than exponentially, so the scan is gated behind an explicit guard.

use std::thread;

use crate::chain::StochasticMatrix;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;

/// Bell number `B_n`, the count of partitions of an n-element set.
/// Computed with the Bell triangle in checked 128-bit arithmetic.
pub fn bell_number(n: usize) -> Result<u128> {
    if n == 0 {
        return Ok(1);
    }
    let mut row = vec![1u128];
    for _ in 1..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let prev = *next.last().unwrap();
            next.push(prev.checked_add(x).ok_or(Error::BellOverflow { n })?);
        }
        row = next;
    }
    Ok(*row.last().unwrap())
}

/// Iterator over all partitions of `{0..n-1}` in lexicographic order of the
/// canonical restricted-growth assignment. The first item is the single
/// lump, the last is all singletons.
pub struct PartitionIter {
    // assignment being stepped, and prefix maxima max_prefix[i] = max(a[0..=i])
    a: Vec<usize>,
    max_prefix: Vec<usize>,
    done: bool,
}

impl PartitionIter {
    pub fn new(n: usize) -> PartitionIter {
        assert!(n >= 1, "partitions of an empty state space");
        PartitionIter {
            a: vec![0; n],
            max_prefix: vec![0; n],
            done: false,
        }
    }
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let current = Partition::from_assignment(&self.a);
        // Advance: the rightmost position that can still grow is the largest
        // j with a[j] <= max(a[..j]); bump it and zero the suffix.
        let n = self.a.len();
        let mut j = n;
        for i in (1..n).rev() {
            if self.a[i] <= self.max_prefix[i - 1] {
                j = i;
                break;
            }
        }
        if j == n {
            self.done = true;
        } else {
            self.a[j] += 1;
            self.max_prefix[j] = self.max_prefix[j - 1].max(self.a[j]);
            for i in j + 1..n {
                self.a[i] = 0;
                self.max_prefix[i] = self.max_prefix[i - 1];
            }
        }
        Some(current)
    }
}

/// Scans every partition of the state space and returns the valid lumpings,
/// sorted by lump count then lexicographically by assignment.
///
/// Refuses to start when `B_N` exceeds `guard`. `threads == 0` or `1` scans
/// on the calling thread; larger values shard the scan, with output
/// independent of the thread count.
pub fn brute_force_lumpings<S: Scalar>(
    p: &StochasticMatrix<S>,
    tol: S,
    guard: u128,
    threads: usize,
) -> Result<Vec<Partition>> {
    let n = p.n();
    let bell = bell_number(n)?;
    if bell > guard {
        return Err(Error::GuardExceeded { n, bell, guard });
    }

    // The stream is consumed in bounded chunks so memory stays flat no
    // matter how large the Bell number the guard admits.
    const CHUNK: usize = 8192;
    let keep = |q: &Partition| p.is_lumpable(q, tol).expect("dimensions match");
    let mut iter = PartitionIter::new(n);
    let mut found: Vec<Partition> = Vec::new();
    let mut total = 0u128;
    loop {
        let buffer: Vec<Partition> = iter.by_ref().take(CHUNK).collect();
        if buffer.is_empty() {
            break;
        }
        total += buffer.len() as u128;
        if threads <= 1 {
            found.extend(buffer.into_iter().filter(|q| keep(q)));
        } else {
            let shard_len = buffer.len().div_ceil(threads);
            let hits = thread::scope(|scope| {
                let handles: Vec<_> = buffer
                    .chunks(shard_len)
                    .map(|shard| {
                        scope.spawn(move || {
                            shard.iter().filter(|q| keep(q)).cloned().collect::<Vec<_>>()
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("scan shard panicked"))
                    .collect::<Vec<_>>()
            });
            found.extend(hits);
        }
    }
    debug_assert_eq!(total, bell);
    found.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers_small() {
        let expected: [u128; 11] = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (n, &b) in expected.iter().enumerate() {
            assert_eq!(bell_number(n).unwrap(), b, "B_{n}");
        }
    }

    #[test]
    fn bell_overflows_cleanly() {
        assert!(matches!(bell_number(64), Err(Error::BellOverflow { n: 64 })));
    }

    #[test]
    fn enumeration_is_complete_and_lexicographic() {
        let all: Vec<Partition> = PartitionIter::new(4).collect();
        assert_eq!(all.len(), 15);
        assert_eq!(all[0], Partition::single_lump(4));
        assert_eq!(all[14], Partition::singletons(4));
        for w in all.windows(2) {
            assert!(w[0].assignment() < w[1].assignment());
        }
        // Every item is already canonical.
        for q in &all {
            assert_eq!(q, &Partition::from_assignment(q.assignment()));
        }
    }

    #[test]
    fn single_state_has_one_partition() {
        let all: Vec<Partition> = PartitionIter::new(1).collect();
        assert_eq!(all, vec![Partition::single_lump(1)]);
    }

    #[test]
    fn scan_finds_the_three_lumpings_of_the_3x3_fixture() {
        let p = StochasticMatrix::from_rows(
            &[
                vec![0.25, 0.50, 0.25],
                vec![0.45, 0.30, 0.25],
                vec![0.30, 0.20, 0.50],
            ],
            1e-9,
        )
        .unwrap();
        let found = brute_force_lumpings(&p, 1e-9, 1_000_000, 1).unwrap();
        assert_eq!(
            found,
            vec![
                Partition::single_lump(3),
                Partition::from_assignment(&[0, 0, 1]),
                Partition::singletons(3),
            ]
        );
    }

    #[test]
    fn identity_chain_admits_every_partition() {
        let eye = StochasticMatrix::from_rows(
            &[
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            1e-9,
        )
        .unwrap();
        let found = brute_force_lumpings(&eye, 1e-9, 1_000_000, 1).unwrap();
        assert_eq!(found.len(), 15);
    }

    #[test]
    fn guard_refuses_oversized_scans() {
        let p = StochasticMatrix::from_rows(
            &[
                vec![0.5, 0.5, 0.0],
                vec![0.0, 0.5, 0.5],
                vec![0.5, 0.0, 0.5],
            ],
            1e-9,
        )
        .unwrap();
        let err = brute_force_lumpings(&p, 1e-9, 4, 1);
        assert!(matches!(
            err,
            Err(Error::GuardExceeded { n: 3, bell: 5, guard: 4 })
        ));
    }

    #[test]
    fn sharded_scan_matches_sequential() {
        let p = StochasticMatrix::from_rows(
            &[
                vec![0.25, 0.50, 0.25],
                vec![0.45, 0.30, 0.25],
                vec![0.30, 0.20, 0.50],
            ],
            1e-9,
        )
        .unwrap();
        let sequential = brute_force_lumpings(&p, 1e-9, 100, 1).unwrap();
        for threads in [2, 3, 8] {
            assert_eq!(brute_force_lumpings(&p, 1e-9, 100, threads).unwrap(), sequential);
        }
    }
}
