//! Root inference on size-conditioned Galton-Watson trees.
//!
//! A conditional Galton-Watson tree of size `n` is sampled, its parent/child
//! orientation is discarded, and the maximum-likelihood estimator recovers the
//! most likely original root from the free tree and the offspring law alone.
//!
//! - [`distribution`]: offspring laws, ratios `R_i = i p_i / p_{i-1}`, special integers.
//! - [`sampler`]: rejection sampling of degree sequences and the cycle-lemma rotation.
//! - [`tree`]: rooted and free trees, degree censuses and the `W` statistic.
//! - [`isomorphism`]: AHU canonical codes, multiplicities, correction factors.
//! - [`estimator`]: candidate set, chosen root and its conditional success probability.
//! - [`oracle`]: brute-force posterior, exhaustive enumeration, structural checks.
//! - [`montecarlo`]: trial campaigns and closed-form predictions.
//! - [`verify`]: named verification suites over sampled corpora.

pub mod distribution;
pub mod error;
pub mod estimator;
pub mod isomorphism;
pub mod montecarlo;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod tree;
pub mod verify;

pub use distribution::{Family, OffspringDistribution, Ratio};
pub use error::{Error, Result};
pub use estimator::{estimate_root, RootEstimate};
pub use sampler::{DegreeSequence, TreeSampler};
pub use tree::{FreeTree, RootedTree};
