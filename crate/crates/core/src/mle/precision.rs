use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated in a factor.
const SYMMETRY_TOL: f64 = 1e-12;

/// Positive definite factors `Ψ_1, …, Ψ_k` of the concentration matrix
/// `Ψ_1 ⊗ ⋯ ⊗ Ψ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KroneckerPrecision {
    factors: Vec<DMatrix<f64>>,
}

impl KroneckerPrecision {
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (index, f) in factors.iter().enumerate() {
            if !f.is_square() || f.nrows() == 0 {
                return Err(Error::ShapeMismatch(format!(
                    "factor {index} has shape {:?}",
                    f.shape()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::NotPositiveDefinite { index });
            }
            let scale = f.norm().max(f64::MIN_POSITIVE);
            if (f - f.transpose()).norm() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidArgument(format!(
                    "factor {index} is not symmetric"
                )));
            }
            if f.clone().cholesky().is_none() {
                return Err(Error::NotPositiveDefinite { index });
            }
        }
        Ok(Self { factors })
    }

    #[cfg(test)]
    pub(crate) fn from_factors_unchecked(factors: Vec<DMatrix<f64>>) -> Self {
        Self { factors }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self {
            factors: dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
        }
    }

    /// `AᵀA + 10⁻²·I` per factor with `A` standard normal.
    pub fn random<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        let factors = dims
            .iter()
            .map(|&d| {
                let a = DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal));
                let mut psi = a.transpose() * &a + DMatrix::identity(d, d) * 1e-2;
                symmetrize(&mut psi);
                psi
            })
            .collect();
        Self { factors }
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<DMatrix<f64>> {
        self.factors
    }

    pub fn factor(&self, i: usize) -> &DMatrix<f64> {
        &self.factors[i]
    }

    pub(crate) fn set_factor(&mut self, i: usize, f: DMatrix<f64>) {
        self.factors[i] = f;
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// `log det Ψ_i` for each factor.
    pub fn log_dets(&self) -> Result<Vec<f64>> {
        self.factors
            .iter()
            .enumerate()
            .map(|(index, f)| log_det_pd(f).ok_or(Error::NotPositiveDefinite { index }))
            .collect()
    }

    /// Largest over factors of `λ_max / λ_min`.
    pub fn max_condition_number(&self) -> f64 {
        self.factors
            .iter()
            .map(condition_number)
            .fold(1.0, f64::max)
    }

    /// Rescales so `det Ψ_i = 1` for `i ≥ 2`, moving the scalars into `Ψ_1`.
    /// The Kronecker product is unchanged.
    pub fn gauge_fix(&self) -> Self {
        let mut factors = self.factors.clone();
        let mut log_absorbed = 0.0;
        for f in factors.iter_mut().skip(1) {
            let d = f.nrows() as f64;
            let log_c = log_det_pd(f).unwrap_or(0.0) / d;
            *f *= (-log_c).exp();
            log_absorbed += log_c;
        }
        factors[0] *= log_absorbed.exp();
        Self { factors }
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

pub(crate) fn log_det_pd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(
        2.0 * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum::<f64>(),
    )
}

pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `‖a − b‖_F / max(‖a‖_F, ‖b‖_F)`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}
