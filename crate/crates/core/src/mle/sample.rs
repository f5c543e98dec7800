use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::precision::KroneckerPrecision;
use super::tensor::multi_mode_product;
use crate::error::{Error, Result};

/// `m` real tensors of shape `d_1 × ⋯ × d_k`, stored sample-major and then
/// row-major with the last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dims: Vec<usize>,
    m: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SampleFile {
    dims: Vec<usize>,
    m: usize,
    field: String,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn new(dims: Vec<usize>, m: usize, data: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "dims {dims:?} and m = {m} must be nonempty and positive"
            )));
        }
        let n: usize = dims.iter().product();
        if data.len() != m * n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for {m} samples of shape {dims:?}, got {}",
                m * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("entry {pos} is not finite")));
        }
        Ok(Self { dims, m, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Entries per sample, `n = ∏d_i`.
    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn samples(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n())
    }

    pub fn to_json(&self) -> String {
        let file = SampleFile {
            dims: self.dims.clone(),
            m: self.m,
            field: "real".into(),
            data: self.data.clone(),
        };
        serde_json::to_string(&file).expect("sample serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SampleFile =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if file.field != "real" {
            return Err(Error::Format(format!("unsupported field {:?}", file.field)));
        }
        Self::new(file.dims, file.m, file.data)
    }

    pub fn write_file(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn read_file(path: &Path) -> std::result::Result<Self, Box<dyn std::error::Error>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }
}

fn standard_normals(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// I.i.d. standard normal entries from a seeded generator.
pub fn sample_standard(dims: &[usize], m: usize, seed: u64) -> Result<SampleSet> {
    let n: usize = dims.iter().product();
    SampleSet::new(dims.to_vec(), m, standard_normals(m * n, seed))
}

/// Draws from the model with concentration `Ψ_1 ⊗ ⋯ ⊗ Ψ_k`: each sample is
/// `z` with `L_i⁻ᵀ` applied along mode `i`, where `Ψ_i = L_i L_iᵀ`.
pub fn sample_from_model(factors: &KroneckerPrecision, m: usize, seed: u64) -> Result<SampleSet> {
    let dims = factors.dims();
    let transforms = factors
        .factors()
        .iter()
        .enumerate()
        .map(|(index, psi)| {
            let chol = psi
                .clone()
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { index })?;
            let d = psi.nrows();
            let l_inv = chol
                .l()
                .solve_lower_triangular(&DMatrix::identity(d, d))
                .ok_or(Error::NotPositiveDefinite { index })?;
            Ok(l_inv.transpose())
        })
        .collect::<Result<Vec<_>>>()?;
    let n: usize = dims.iter().product();
    let z = standard_normals(m * n, seed);
    let mut data = Vec::with_capacity(m * n);
    for chunk in z.chunks_exact(n) {
        data.extend(multi_mode_product(chunk, &dims, &transforms, None));
    }
    SampleSet::new(dims, m, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn standard_is_deterministic() {
        let a = sample_standard(&[2, 2], 1, 42).unwrap();
        let b = sample_standard(&[2, 2], 1, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.data().len(), 4);
        assert!(a.data().iter().all(|v| v.is_finite()));
        assert_ne!(a, sample_standard(&[2, 2], 1, 43).unwrap());
        assert_eq!(sample_standard(&[1], 3, 0).unwrap().data().len(), 3);
    }

    #[test]
    fn standard_moments() {
        let n = 100_000usize;
        let s = sample_standard(&[n], 1, 9).unwrap();
        let (mean, var) = mean_var(s.data());
        let nf = n as f64;
        assert!(mean.abs() < 3.0 / nf.sqrt(), "mean {mean}");
        // Var of the sample variance is 2/(n−1) for a standard normal.
        assert!(
            (var - 1.0).abs() < 3.0 * (2.0 / (nf - 1.0)).sqrt(),
            "var {var}"
        );
    }

    #[test]
    fn model_with_identity_matches_standard_moments() {
        let n = 10_000usize;
        let p = KroneckerPrecision::identity(&[1]);
        let s = sample_from_model(&p, n, 4).unwrap();
        let (mean, var) = mean_var(s.data());
        let nf = n as f64;
        assert!(mean.abs() < 3.0 / nf.sqrt());
        assert!((var - 1.0).abs() < 3.0 * (2.0 / (nf - 1.0)).sqrt());
        // identity factors reproduce the raw normals exactly
        let p = KroneckerPrecision::identity(&[2, 3]);
        assert_eq!(
            sample_from_model(&p, 5, 8).unwrap().data(),
            sample_standard(&[2, 3], 5, 8).unwrap().data()
        );
    }

    #[test]
    fn scalar_model_variance() {
        let n = 10_000usize;
        let p = KroneckerPrecision::new(vec![DMatrix::from_element(1, 1, 4.0)]).unwrap();
        let s = sample_from_model(&p, n, 21).unwrap();
        let (_, var) = mean_var(s.data());
        let sd_of_var = 0.25 * (2.0 / (n as f64 - 1.0)).sqrt();
        assert!((var - 0.25).abs() < 3.0 * sd_of_var, "var {var}");
    }

    #[test]
    fn model_sample_shapes() {
        let p = KroneckerPrecision::identity(&[2, 3]);
        let s = sample_from_model(&p, 5, 0).unwrap();
        assert_eq!(s.data().len(), 30);
        assert_eq!(s.samples().count(), 5);
    }

    #[test]
    fn model_rejects_non_pd() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = KroneckerPrecision::from_factors_unchecked(vec![bad]);
        assert_eq!(
            sample_from_model(&p, 1, 0),
            Err(Error::NotPositiveDefinite { index: 0 })
        );
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let s = sample_standard(&[2, 3], 4, 99).unwrap();
        let back = SampleSet::from_json(&s.to_json()).unwrap();
        assert_eq!(
            s.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            back.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(back.dims(), &[2, 3]);
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["field"], "real");
    }

    #[test]
    fn json_rejects_bad_files() {
        assert!(
            SampleSet::from_json(r#"{"dims":[2],"m":1,"field":"complex","data":[1,2]}"#).is_err()
        );
        assert!(matches!(
            SampleSet::from_json(r#"{"dims":[2],"m":2,"field":"real","data":[1,2]}"#),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
