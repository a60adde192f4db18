//! SMS spam filtering from unlabeled structure: topic-model features, a
//! stacked denoising autoencoder whose overall reconstruction error scores
//! how well a message fits the data, and a Fisher threshold on that score.
//!
//! The pipeline is:
//!
//! 1. tokenize and build bags of words ([`corpus`]);
//! 2. fit a topic model on spam-only text by collapsed Gibbs sampling and
//!    infer a topic-probability vector per message ([`lda`]);
//! 3. train tied-weight denoising autoencoder layers greedily on those
//!    vectors and use the stack's reconstruction error as an outlier score
//!    ([`sda`]);
//! 4. threshold the score with a two-class Fisher discriminant
//!    ([`detector`]);
//! 5. evaluate with stratified k-fold cross-validation ([`eval`]).
//!
//! Every random choice derives from one master seed, so training runs,
//! cross-validation reports, and saved bundles reproduce byte-for-byte.

pub mod cli;
pub mod corpus;
pub mod detector;
pub mod error;
pub mod eval;
pub mod lda;
pub mod pipeline;
pub mod sda;
mod seeds;

pub use error::{Error, Result};
