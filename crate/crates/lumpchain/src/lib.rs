//! Strong lumping of finite Markov chains: validation, reduction,
//! spectral analysis and discovery of state-space aggregations.
//!
//! A lumping merges states of an N-state chain into M < N lumps such that
//! the lump process is itself Markov for every starting distribution. The
//! crate checks candidate lumpings, reduces chains over them, enumerates
//! all lumpings by brute force, and discovers them from the structure of
//! the right eigenvectors: states that can be merged are exactly those on
//! which a suitable basis of eigenvectors takes identical values.
//!
//! Everything numeric is generic over the floating-point scalar; see the
//! aliases at the crate root for the common `f64` instantiations.

pub mod chain;
pub mod discovery;
pub mod empirics;
pub mod error;
pub mod io;
pub mod oracle;
pub mod partition;
pub mod scalar;
pub mod spectral;

pub use chain::{project_distribution, validate_distribution, ReducedChain, StochasticMatrix};
pub use discovery::{discover, Discovery, DiscoveryConfig, LumpingCandidate};
pub use error::{Error, Result};
pub use partition::Partition;
pub use scalar::Scalar;

/// Double-precision transition matrix, the default working type.
pub type StochasticMatrix64 = StochasticMatrix<f64>;
/// Single-precision transition matrix.
pub type StochasticMatrix32 = StochasticMatrix<f32>;
/// Double-precision reduced chain.
pub type ReducedChain64 = ReducedChain<f64>;
