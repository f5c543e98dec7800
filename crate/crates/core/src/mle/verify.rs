//! Empirical check of the predicted MLE behaviour on simulated data.

use nalgebra::DVector;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_mle, stationarity_residuals, FitOptions, FitStatus};
use super::precision::{relative_frobenius, KroneckerPrecision};
use super::sample::{sample_standard, SampleSet};
use crate::classify::{mle_profile, MleProfile};
use crate::datum::Datum;
use crate::error::{Error, Result};

/// Largest `∏d_i` accepted by [`verify_datum`].
pub const DESK_SCALE_LIMIT: u128 = 4096;
/// Restarts agree when gauge-fixed factors differ by at most this, relative Frobenius.
pub const AGREEMENT_TOL: f64 = 1e-6;
/// Restarts agree in likelihood when the relative spread is at most this.
pub const LOGLIK_TOL: f64 = 1e-8;
/// Gauge-fixed restarts this far apart (Frobenius) witness distinct maximizers.
pub const DISTINCT_TOL: f64 = 1e-3;
/// Fraction of trials that must diverge when divergence is predicted.
pub const DIVERGENCE_FLOOR: f64 = 0.95;
/// Fraction of trials that should show distinct maximizers when the MLE is not unique.
pub const NON_UNIQUE_FLOOR: f64 = 0.5;
/// Tolerance on the single-factor closed-form MLE.
pub const CLOSED_FORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub restarts: usize,
    pub seed: u64,
    pub fit: FitOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 20,
            restarts: 4,
            seed: 0,
            fit: FitOptions::default(),
        }
    }
}

/// Outcome of fitting one data set from several starting points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub statuses: Vec<FitStatus>,
    pub logliks: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Largest relative Frobenius distance between gauge-fixed factors of
    /// two converged restarts; `None` with fewer than two converged.
    pub max_factor_rel_diff: Option<f64>,
    /// Same, in absolute Frobenius norm.
    pub max_factor_abs_diff: Option<f64>,
    /// `(max − min) / max|l|` over converged restarts.
    pub loglik_spread: Option<f64>,
    /// Largest stationarity residual over converged restarts.
    pub max_stationarity: Option<f64>,
    /// Relative error against `m·(Σ_s y_s y_sᵀ)⁻¹` for one-factor models with `m ≥ d`.
    pub closed_form_error: Option<f64>,
}

impl TrialReport {
    fn count(&self, status: FitStatus) -> usize {
        self.statuses.iter().filter(|&&s| s == status).count()
    }

    pub fn all_diverged(&self) -> bool {
        self.count(FitStatus::Diverged) == self.statuses.len()
    }

    pub fn all_converged(&self) -> bool {
        self.count(FitStatus::Converged) == self.statuses.len()
    }

    pub fn any_converged(&self) -> bool {
        self.count(FitStatus::Converged) > 0
    }

    pub fn all_degenerate(&self) -> bool {
        self.count(FitStatus::DegenerateStatistic) == self.statuses.len()
    }

    pub fn restarts_agree(&self) -> Option<bool> {
        let rel = self.max_factor_rel_diff?;
        Some(rel <= AGREEMENT_TOL && self.loglik_spread? <= LOGLIK_TOL)
    }

    pub fn distinct_maximizers(&self) -> bool {
        self.max_factor_abs_diff.is_some_and(|d| d >= DISTINCT_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub predicted: String,
    pub observed: String,
    pub agrees: bool,
    /// Diagnostic clauses never fail a verification.
    pub hard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub dims: Vec<u64>,
    pub m: u64,
    pub profile: MleProfile,
    pub trials: Vec<TrialReport>,
    pub clauses: Vec<ClauseCheck>,
}

impl VerificationReport {
    pub fn hard_clauses_agree(&self) -> bool {
        self.clauses.iter().filter(|c| c.hard).all(|c| c.agrees)
    }

    /// Some trial had no usable fit at all.
    pub fn numerical_failure(&self) -> bool {
        self.trials.iter().any(TrialReport::all_degenerate)
    }
}

fn closed_form_error(y: &SampleSet, psi: &nalgebra::DMatrix<f64>) -> Option<f64> {
    let d = y.dims()[0];
    let mut scatter = nalgebra::DMatrix::zeros(d, d);
    for s in y.samples() {
        let v = DVector::from_column_slice(s);
        scatter += &v * v.transpose();
    }
    let expect = scatter.try_inverse()? * y.m() as f64;
    Some(relative_frobenius(psi, &expect))
}

/// Fits `y` from `restarts` random positive definite starting points.
pub fn run_trial(
    y: &SampleSet,
    restarts: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<TrialReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut statuses = Vec::with_capacity(restarts);
    let mut logliks = Vec::with_capacity(restarts);
    let mut iterations = Vec::with_capacity(restarts);
    let mut fixed = Vec::new();
    let mut converged_ll = Vec::new();
    let mut max_stationarity: Option<f64> = None;
    let mut closed_form: Option<f64> = None;
    for _ in 0..restarts {
        let init = KroneckerPrecision::random(y.dims(), &mut rng);
        let rep = fit_mle(y, &init, opts)?;
        statuses.push(rep.status);
        logliks.push(rep.loglik);
        iterations.push(rep.iterations);
        if rep.status == FitStatus::Converged {
            let factors = rep.factors.expect("converged fits carry factors");
            let res = stationarity_residuals(y, &factors)?
                .into_iter()
                .fold(0.0, f64::max);
            max_stationarity = Some(max_stationarity.map_or(res, |r| r.max(res)));
            if factors.k() == 1 && y.m() >= y.dims()[0] {
                if let Some(err) = closed_form_error(y, factors.factor(0)) {
                    closed_form = Some(closed_form.map_or(err, |e: f64| e.max(err)));
                }
            }
            fixed.push(factors.gauge_fix());
            converged_ll.push(rep.loglik);
        }
    }
    let (mut rel, mut abs) = (None::<f64>, None::<f64>);
    for a in 0..fixed.len() {
        for b in (a + 1)..fixed.len() {
            for (fa, fb) in fixed[a].factors().iter().zip(fixed[b].factors()) {
                let r = relative_frobenius(fa, fb);
                let d = (fa - fb).norm();
                rel = Some(rel.map_or(r, |x| x.max(r)));
                abs = Some(abs.map_or(d, |x| x.max(d)));
            }
        }
    }
    let loglik_spread = (converged_ll.len() >= 2).then(|| {
        let max = converged_ll
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let min = converged_ll.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = converged_ll
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        (max - min) / scale
    });
    Ok(TrialReport {
        statuses,
        logliks,
        iterations,
        max_factor_rel_diff: rel,
        max_factor_abs_diff: abs,
        loglik_spread,
        max_stationarity,
        closed_form_error: closed_form,
    })
}

fn fraction(count: usize, total: usize) -> f64 {
    count as f64 / total as f64
}

fn compare(profile: &MleProfile, trials: &[TrialReport]) -> Vec<ClauseCheck> {
    let total = trials.len();
    let diverged = trials.iter().filter(|t| t.all_diverged()).count();
    let any_diverged = trials
        .iter()
        .filter(|t| t.statuses.contains(&FitStatus::Diverged))
        .count();
    let all_converged = trials.iter().filter(|t| t.all_converged()).count();
    let some_converged = trials.iter().filter(|t| t.any_converged()).count();
    let mut clauses = Vec::new();

    clauses.push(if profile.bounded_as {
        ClauseCheck {
            clause: "bounded".into(),
            predicted: "bounded almost surely".into(),
            observed: format!("{any_diverged}/{total} trials with a diverged restart"),
            agrees: any_diverged == 0,
            hard: true,
        }
    } else {
        ClauseCheck {
            clause: "bounded".into(),
            predicted: "unbounded for every sample".into(),
            observed: format!("{diverged}/{total} trials diverged"),
            agrees: fraction(diverged, total) >= DIVERGENCE_FLOOR,
            hard: true,
        }
    });

    clauses.push(if profile.exists_as {
        ClauseCheck {
            clause: "exists".into(),
            predicted: "MLE exists almost surely".into(),
            observed: format!("{all_converged}/{total} trials converged from every start"),
            agrees: all_converged == total,
            hard: true,
        }
    } else {
        ClauseCheck {
            clause: "exists".into(),
            predicted: "no MLE".into(),
            observed: format!("{some_converged}/{total} trials with a converged restart"),
            agrees: fraction(some_converged, total) <= 1.0 - DIVERGENCE_FLOOR,
            hard: true,
        }
    });

    let comparable: Vec<&TrialReport> = trials
        .iter()
        .filter(|t| t.max_factor_rel_diff.is_some())
        .collect();
    if profile.unique_as {
        let agreeing = comparable
            .iter()
            .filter(|t| t.restarts_agree() == Some(true))
            .count();
        clauses.push(ClauseCheck {
            clause: "unique".into(),
            predicted: "unique MLE almost surely".into(),
            observed: format!(
                "{agreeing}/{} comparable trials with restarts agreeing after gauge fixing",
                comparable.len()
            ),
            agrees: agreeing == comparable.len(),
            hard: true,
        });
    } else if profile.exists_as {
        let distinct = comparable
            .iter()
            .filter(|t| t.distinct_maximizers())
            .count();
        let same_ll = comparable
            .iter()
            .filter(|t| t.loglik_spread.is_some_and(|s| s <= LOGLIK_TOL))
            .count();
        clauses.push(ClauseCheck {
            clause: "unique".into(),
            predicted: "MLE not unique".into(),
            observed: format!(
                "{distinct}/{} trials with distinct gauge-fixed maximizers, {same_ll} with equal likelihoods",
                comparable.len()
            ),
            agrees: !comparable.is_empty()
                && fraction(distinct, comparable.len()) >= NON_UNIQUE_FLOOR
                && same_ll == comparable.len(),
            hard: false,
        });
    }

    let closed: Vec<f64> = trials.iter().filter_map(|t| t.closed_form_error).collect();
    if !closed.is_empty() {
        let worst = closed.iter().copied().fold(0.0, f64::max);
        clauses.push(ClauseCheck {
            clause: "closed_form".into(),
            predicted: "m·(Σ y yᵀ)⁻¹".into(),
            observed: format!("max relative error {worst:.3e}"),
            agrees: worst <= CLOSED_FORM_TOL,
            hard: true,
        });
    }
    clauses
}

/// Fits the given data sets and compares against the predicted profile of
/// `datum`. Trials run in parallel; results keep input order.
pub fn verify_sample_sets(
    datum: &Datum,
    sets: &[SampleSet],
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    if opts.restarts < 2 {
        return Err(Error::InvalidArgument(
            "at least two restarts are required".into(),
        ));
    }
    if sets.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let seeds: Vec<u64> = sets.iter().map(|_| master.next_u64()).collect();
    let trials = sets
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(y, &seed)| run_trial(y, opts.restarts, seed, &opts.fit))
        .collect::<Result<Vec<_>>>()?;
    let profile = mle_profile(datum);
    Ok(VerificationReport {
        dims: datum.dims().to_vec(),
        m: datum.m(),
        clauses: compare(&profile, &trials),
        profile,
        trials,
    })
}

/// Simulates `trials` standard normal data sets for `datum` and checks the
/// predicted profile on each.
pub fn verify_datum(datum: &Datum, opts: &VerifyOptions) -> Result<VerificationReport> {
    let product: u128 = datum.dims().iter().map(|&d| d as u128).product();
    if product > DESK_SCALE_LIMIT {
        return Err(Error::DeskScaleExceeded(product));
    }
    if opts.trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    let dims: Vec<usize> = datum.dims().iter().map(|&d| d as usize).collect();
    let m = usize::try_from(datum.m()).map_err(|_| Error::InvalidArgument("m too large".into()))?;
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let sets = (0..opts.trials)
        .map(|_| sample_standard(&dims, m, master.next_u64()))
        .collect::<Result<Vec<_>>>()?;
    verify_sample_sets(datum, &sets, opts)
}
