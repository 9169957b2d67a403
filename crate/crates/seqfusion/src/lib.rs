//! Classification architectures for data with both static and dynamic
//! (multivariate time-series) features.
//!
//! The crate provides the twelve model architectures behind the experiment
//! runner: stand-alone discriminative and generative classifiers, ensembles
//! that stack first-tier predictions, and hybrids that enrich static features
//! with generative-model ratios or activations. Supporting modules cover the
//! Gaussian HMM and generative LSTM extractors, a CART-based Random Forest,
//! leakage-safe enrichment pipelines, a synthetic ARMA benchmark generator,
//! and dataset file I/O.

pub mod data;
pub mod error;
pub mod forest;
pub mod hmm;
pub mod io;
pub mod lstm;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};

/// Default global seed for experiments; all randomness derives from it
/// through named sub-streams.
pub const DEFAULT_SEED: u64 = 11;
