//! Flip-flop block-coordinate ascent for the Kronecker-factored Gaussian
//! log-likelihood
//!
//! `l_Y(Ψ) = (m/2)·log det Ψ − (1/2)·Σ_s ⟨Y_s, Ψ Y_s⟩`, `Ψ = Ψ_1 ⊗ ⋯ ⊗ Ψ_k`.
//!
//! With all factors but `Ψ_i` fixed the objective is
//! `(m·n/(2d_i))·log det Ψ_i − (1/2)·Tr(Ψ_i S_i)`, maximized uniquely at
//! `Ψ_i = (m·n/d_i)·S_i⁻¹`. The full `n × n` matrix is never formed.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::precision::{condition_number, symmetrize, KroneckerPrecision};
use super::sample::SampleSet;
use super::tensor::{add_mode_gram, multi_mode_product};
use crate::error::{Error, Result};

/// Smallest admissible `λ_min / λ_max` of a block statistic.
pub const DEGENERACY_RATIO: f64 = 1e-12;

fn check_shapes(y: &SampleSet, factors: &KroneckerPrecision) -> Result<()> {
    let dims = factors.dims();
    if dims != y.dims() {
        return Err(Error::ShapeMismatch(format!(
            "samples have shape {:?}, factors {:?}",
            y.dims(),
            dims
        )));
    }
    Ok(())
}

/// `l_Y(Ψ_1 ⊗ ⋯ ⊗ Ψ_k)` up to the additive constant.
pub fn log_likelihood(y: &SampleSet, factors: &KroneckerPrecision) -> Result<f64> {
    check_shapes(y, factors)?;
    let n = y.n() as f64;
    let m = y.m() as f64;
    let log_det: f64 = factors
        .log_dets()?
        .iter()
        .zip(y.dims())
        .map(|(ld, &d)| n / d as f64 * ld)
        .sum();
    let quad: f64 = y
        .samples()
        .map(|s| {
            let w = multi_mode_product(s, y.dims(), factors.factors(), None);
            s.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        })
        .sum();
    Ok(0.5 * m * log_det - 0.5 * quad)
}

/// `S_i = Σ_s M_s⁽ⁱ⁾ (⊗_{j≠i} Ψ_j) M_s⁽ⁱ⁾ᵀ`, symmetrized.
pub fn block_statistic(
    y: &SampleSet,
    factors: &KroneckerPrecision,
    i: usize,
) -> Result<DMatrix<f64>> {
    check_shapes(y, factors)?;
    if i >= factors.k() {
        return Err(Error::InvalidArgument(format!("factor {i} out of range")));
    }
    let d = y.dims()[i];
    let mut s = DMatrix::zeros(d, d);
    for sample in y.samples() {
        let w = multi_mode_product(sample, y.dims(), factors.factors(), Some(i));
        add_mode_gram(&mut s, sample, &w, y.dims(), i);
    }
    symmetrize(&mut s);
    Ok(s)
}

/// Scale `m·n/d_i` of the block maximizer.
fn block_scale(y: &SampleSet, i: usize) -> f64 {
    (y.m() * y.n()) as f64 / y.dims()[i] as f64
}

/// Gradient of `l_Y` in each factor: `(m·n/(2d_i))·Ψ_i⁻¹ − S_i/2`.
pub fn gradient(y: &SampleSet, factors: &KroneckerPrecision) -> Result<Vec<DMatrix<f64>>> {
    (0..factors.k())
        .map(|i| {
            let s = block_statistic(y, factors, i)?;
            let inv = factors
                .factor(i)
                .clone()
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { index: i })?
                .inverse();
            Ok(inv * (0.5 * block_scale(y, i)) - s * 0.5)
        })
        .collect()
}

/// `‖S_i − (m·n/d_i)·Ψ_i⁻¹‖_F / ‖S_i‖_F` for each factor.
pub fn stationarity_residuals(y: &SampleSet, factors: &KroneckerPrecision) -> Result<Vec<f64>> {
    (0..factors.k())
        .map(|i| {
            let s = block_statistic(y, factors, i)?;
            let inv = factors
                .factor(i)
                .clone()
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { index: i })?
                .inverse();
            Ok((&s - inv * block_scale(y, i)).norm() / s.norm())
        })
        .collect()
}

/// Replaces `Ψ_i` by its block maximizer `(m·n/d_i)·S_i⁻¹`.
pub fn flip_flop_step(
    y: &SampleSet,
    factors: &KroneckerPrecision,
    i: usize,
) -> Result<KroneckerPrecision> {
    let s = block_statistic(y, factors, i)?;
    let eig = s.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let ratio = if max > 0.0 {
        min / max
    } else {
        f64::NEG_INFINITY
    };
    // NaN ratios count as degenerate
    if ratio.is_nan() || ratio < DEGENERACY_RATIO {
        return Err(Error::DegenerateStatistic { index: i, ratio });
    }
    let inv = s
        .cholesky()
        .ok_or(Error::DegenerateStatistic { index: i, ratio })?
        .inverse();
    let mut psi = inv * block_scale(y, i);
    symmetrize(&mut psi);
    let mut next = factors.clone();
    next.set_factor(i, psi);
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    Diverged,
    MaxIterations,
    DegenerateStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Relative change of `l_Y` over one sweep that counts as converged.
    pub tol: f64,
    /// Maximum number of sweeps.
    pub max_iter: usize,
    /// Likelihood gain over the start that counts as divergence. `None`
    /// means `10³·(1 + |l_initial|)`.
    pub divergence_bound: Option<f64>,
    /// Factor condition number that counts as divergence.
    pub max_condition: f64,
    /// Largest block stationarity residual accepted at convergence.
    pub stationarity_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            divergence_bound: None,
            max_condition: 1e12,
            stationarity_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub status: FitStatus,
    pub loglik: f64,
    /// Sweeps performed.
    pub iterations: usize,
    /// Final factors; `None` when diverged or degenerate.
    pub factors: Option<KroneckerPrecision>,
    /// `l_Y` at the start and after every block update.
    pub loglik_history: Vec<f64>,
}

struct Tracker {
    l_initial: f64,
    bound: f64,
    max_condition: f64,
    history: Vec<f64>,
}

impl Tracker {
    fn record(&mut self, l: f64, updated: &DMatrix<f64>) -> bool {
        self.history.push(l);
        l - self.l_initial > self.bound || condition_number(updated) > self.max_condition
    }

    fn finish(
        self,
        status: FitStatus,
        iterations: usize,
        factors: Option<KroneckerPrecision>,
    ) -> FitReport {
        FitReport {
            status,
            loglik: *self.history.last().expect("history starts with l_initial"),
            iterations,
            factors,
            loglik_history: self.history,
        }
    }
}

/// When `S_i` is singular the block objective is unbounded: adding `t·UUᵀ`
/// over the null eigenvectors `U` raises `log det Ψ_i` while the trace term
/// stays flat. Follows that ray until a divergence detector fires.
/// Returns `false` if the likelihood stops increasing first.
fn escape_along_null_space(
    y: &SampleSet,
    factors: &KroneckerPrecision,
    i: usize,
    tracker: &mut Tracker,
) -> Result<bool> {
    let s = block_statistic(y, factors, i)?;
    let eig = s.symmetric_eigen();
    let max = eig.eigenvalues.max().max(0.0);
    let null: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&j| eig.eigenvalues[j] < DEGENERACY_RATIO * max || max == 0.0)
        .collect();
    let d = factors.factor(i).nrows();
    let mut projector = DMatrix::zeros(d, d);
    for &j in &null {
        let v = eig.eigenvectors.column(j);
        projector += v * v.transpose();
    }
    let base = factors.factor(i).clone();
    let scale = base.norm();
    let mut current = factors.clone();
    let mut prev = *tracker.history.last().expect("nonempty");
    for power in 1..=40 {
        let t = scale * 10f64.powi(power);
        let mut psi = &base + &projector * t;
        symmetrize(&mut psi);
        current.set_factor(i, psi);
        let l = log_likelihood(y, &current)?;
        if l < prev - 1e-9 * (1.0 + prev.abs()) {
            return Ok(false);
        }
        prev = l;
        if tracker.record(l, current.factor(i)) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Cycles [`flip_flop_step`] over the factors in index order. Converged
/// means the sweep changed `l_Y` by less than `tol` relative and every block
/// is stationary to `stationarity_tol`.
pub fn fit_mle(y: &SampleSet, init: &KroneckerPrecision, opts: &FitOptions) -> Result<FitReport> {
    check_shapes(y, init)?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let l_initial = log_likelihood(y, init)?;
    let mut tracker = Tracker {
        l_initial,
        bound: opts
            .divergence_bound
            .unwrap_or(1e3 * (1.0 + l_initial.abs())),
        max_condition: opts.max_condition,
        history: vec![l_initial],
    };
    let mut current = init.clone();
    let mut l = l_initial;
    for sweep in 1..=opts.max_iter {
        let l_start = l;
        for i in 0..current.k() {
            match flip_flop_step(y, &current, i) {
                Ok(next) => {
                    current = next;
                    l = log_likelihood(y, &current)?;
                    if tracker.record(l, current.factor(i)) {
                        return Ok(tracker.finish(FitStatus::Diverged, sweep, None));
                    }
                }
                Err(Error::DegenerateStatistic { .. }) => {
                    let status = if escape_along_null_space(y, &current, i, &mut tracker)? {
                        FitStatus::Diverged
                    } else {
                        FitStatus::DegenerateStatistic
                    };
                    return Ok(tracker.finish(status, sweep, None));
                }
                Err(e) => return Err(e),
            }
        }
        if (l - l_start).abs() <= opts.tol * l_start.abs().max(1.0)
            && stationarity_residuals(y, &current)?
                .iter()
                .all(|&r| r <= opts.stationarity_tol)
        {
            return Ok(tracker.finish(FitStatus::Converged, sweep, Some(current)));
        }
    }
    Ok(tracker.finish(FitStatus::MaxIterations, opts.max_iter, Some(current)))
}
