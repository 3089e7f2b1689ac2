//! Streaming pairwise learning for AUC maximization.
//!
//! The crate trains online learners whose losses are defined on *pairs* of
//! examples (positive vs. negative), in a random-Fourier-feature space that
//! approximates a Gaussian kernel. The main learner takes one gradient step
//! against the opposite class's running mean and a second, variance-scaled
//! step against a randomly cached opposite example, which keeps the per-step
//! cost at O(D) without assuming the stream is i.i.d.
//!
//! Modules:
//! - [`dataio`]: LIBSVM parsing, synthetic streams, stream orders.
//! - [`features`]: random Fourier feature maps and exact kernel oracles.
//! - [`loss`]: pairwise AUC surrogate losses, gradients, and constants.
//! - [`learner`]: the AOGD online learner.
//! - [`baselines`]: last-point OGD and reservoir-buffer OGD.
//! - [`eval`]: exact AUC, all-pairs loss oracles, regret curves.
//! - [`harness`]: experiment configs, grid search with cross-validation,
//!   result emission.

// Validation guards use `!(x > 0.0)` so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod features;
pub mod harness;
pub mod learner;
pub mod loss;
pub(crate) mod vecops;

pub use error::{Error, Result};
