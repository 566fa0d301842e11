//! Trajectory-level diagnostics: simulate the chain and test whether its
//! image under a partition still behaves Markovian.
//!
//! The test compares first-order against second-order dependence on the
//! quotient alphabet with a likelihood-ratio statistic over consecutive
//! triples. It is supporting evidence only: a hypothesis test cannot prove
//! the Markov property, and the aggregation test on the matrix remains the
//! arbiter. Rejections flag partitions whose quotient process remembers
//! more than one step of history.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::chain::StochasticMatrix;
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::scalar::Scalar;

/// A sampled path of the chain. States are 0-based, like everywhere in
/// memory; textual outputs are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    /// Seed of the ChaCha8 generator that produced the path, kept so any
    /// report of derived statistics can name its randomness.
    pub seed: u64,
}

/// Samples a length-`t` path starting at `x0`, drawing each step by
/// inverse CDF over the current row. Identical inputs reproduce the path
/// bit for bit.
pub fn simulate<S: Scalar>(
    p: &StochasticMatrix<S>,
    x0: usize,
    t: usize,
    seed: u64,
) -> Result<Trajectory> {
    let n = p.n();
    if x0 >= n {
        return Err(Error::StateOutOfRange { state: x0 + 1, n });
    }
    if t < 1 {
        return Err(Error::InsufficientData {
            len: t,
            required: 1,
        });
    }
    let a = p.as_array();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(t);
    let mut x = x0;
    states.push(x);
    for _ in 1..t {
        let u = S::from_f64_lossy(rng.random::<f64>());
        let mut cumulative = S::zero();
        let mut next = x;
        let mut chosen = false;
        for j in 0..n {
            let pj = a[(x, j)];
            if pj <= S::zero() {
                continue;
            }
            cumulative += pj;
            next = j;
            if u < cumulative {
                chosen = true;
                break;
            }
        }
        // roundoff can leave u just above the final cumulative sum; the
        // last reachable state absorbs that sliver
        let _ = chosen;
        x = next;
        states.push(x);
    }
    Ok(Trajectory { states, seed })
}

/// Outcome of the quotient Markov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientTest {
    /// Likelihood-ratio statistic of second-order vs first-order
    /// dependence over consecutive lump triples.
    pub statistic: f64,
    /// Degrees of freedom, `M (M-1)^2` for `M` lumps.
    pub dof: usize,
    /// Upper-tail chi-square probability of the statistic.
    pub p_value: f64,
}

/// Projects the trajectory through `part` and tests the quotient sequence
/// for one-step memory. Small p-values indicate the lumped process
/// remembers two steps back, which a valid lumping forbids.
pub fn markov_quotient_statistic(traj: &Trajectory, part: &Partition) -> Result<QuotientTest> {
    let m = part.num_lumps();
    let required = 100 * m * m;
    if traj.states.len() < required {
        return Err(Error::InsufficientData {
            len: traj.states.len(),
            required,
        });
    }
    for &x in &traj.states {
        if x >= part.n() {
            return Err(Error::StateOutOfRange {
                state: x + 1,
                n: part.n(),
            });
        }
    }
    if m == 1 {
        return Ok(QuotientTest {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }

    let quotient: Vec<usize> = traj.states.iter().map(|&x| part.lump_of(x)).collect();
    let mut triples = vec![0u64; m * m * m];
    for w in quotient.windows(3) {
        triples[(w[0] * m + w[1]) * m + w[2]] += 1;
    }
    // marginals over the same triple windows keep the likelihood ratio
    // exact
    let mut lead_pair = vec![0u64; m * m];
    let mut trail_pair = vec![0u64; m * m];
    let mut middle = vec![0u64; m];
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let nabc = triples[(a * m + b) * m + c];
                lead_pair[a * m + b] += nabc;
                trail_pair[b * m + c] += nabc;
                middle[b] += nabc;
            }
        }
    }

    let mut statistic = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let nabc = triples[(a * m + b) * m + c];
                if nabc == 0 {
                    continue;
                }
                let ratio = (nabc as f64 * middle[b] as f64)
                    / (lead_pair[a * m + b] as f64 * trail_pair[b * m + c] as f64);
                statistic += 2.0 * nabc as f64 * ratio.ln();
            }
        }
    }
    let statistic = statistic.max(0.0);
    let dof = m * (m - 1) * (m - 1);
    let chi = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p_value = 1.0 - chi.cdf(statistic);
    Ok(QuotientTest {
        statistic,
        dof,
        p_value,
    })
}
