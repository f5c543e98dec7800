//! Sample-size thresholds for tensor normal models.
//!
//! The combinatorial layer ([`datum`], [`castling`], [`classify`]) decides,
//! for a model `(d_1, …, d_k)` and `m` samples, whether the log-likelihood
//! is almost surely bounded and whether the MLE almost surely exists and is
//! unique. The numerical layer ([`mle`]) fits Kronecker-factored precision
//! matrices by flip-flop ascent and checks those predictions on simulated
//! data.

pub mod castling;
pub mod classify;
pub mod datum;
pub mod error;
pub mod mle;
pub mod report;

pub use castling::{castle_step, castling_equivalent, reduce_to_minimal, CastlingTrace};
pub use classify::{
    classify_closed_form, classify_recursive, explain, git_dimension, mle_profile, thresholds,
    ClassificationReport, GitDimension, MleProfile, StabilityClass, ThresholdReport,
};
pub use datum::{big_r, delta, g_max, index_of_factor, z_quantity, Datum, ExactInt};
pub use error::{Error, Result};
