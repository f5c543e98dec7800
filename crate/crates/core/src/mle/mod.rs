//! Real-field numerics: simulation, the Kronecker-factored log-likelihood,
//! flip-flop fitting and empirical verification of the predicted MLE
//! behaviour.

pub mod fit;
pub mod precision;
pub mod sample;
pub mod tensor;
pub mod verify;

pub use fit::{
    block_statistic, fit_mle, flip_flop_step, gradient, log_likelihood, stationarity_residuals,
    FitOptions, FitReport, FitStatus,
};
pub use precision::{relative_frobenius, KroneckerPrecision};
pub use sample::{sample_from_model, sample_standard, SampleSet};
pub use verify::{
    run_trial, verify_datum, verify_sample_sets, ClauseCheck, TrialReport, VerificationReport,
    VerifyOptions,
};
