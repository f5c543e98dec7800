use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tnm_core::mle::{
    fit_mle, flip_flop_step, gradient, log_likelihood, relative_frobenius, sample_standard,
    FitOptions, FitStatus, KroneckerPrecision, SampleSet,
};

fn dense(factors: &KroneckerPrecision) -> DMatrix<f64> {
    factors
        .factors()
        .iter()
        .skip(1)
        .fold(factors.factor(0).clone(), |acc, f| acc.kronecker(f))
}

fn dense_log_likelihood(y: &SampleSet, factors: &KroneckerPrecision) -> f64 {
    let psi = dense(factors);
    let log_det = 2.0
        * psi
            .clone()
            .cholesky()
            .unwrap()
            .l()
            .diagonal()
            .map(f64::ln)
            .sum();
    let quad: f64 = y
        .samples()
        .map(|s| {
            let v = DVector::from_column_slice(s);
            (v.transpose() * &psi * &v)[(0, 0)]
        })
        .sum();
    0.5 * y.m() as f64 * log_det - 0.5 * quad
}

fn small_dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=4, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn log_likelihood_matches_dense_oracle(dims in small_dims(), m in 1usize..=4, seed in 0u64..1000) {
        let y = sample_standard(&dims, m, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let p = KroneckerPrecision::random(&dims, &mut rng);
        let fast = log_likelihood(&y, &p).unwrap();
        let slow = dense_log_likelihood(&y, &p);
        prop_assert!((fast - slow).abs() <= 1e-9 * (1.0 + slow.abs()), "{fast} vs {slow}");
    }

    #[test]
    fn log_likelihood_is_gauge_invariant(dims in small_dims(), m in 1usize..=3, seed in 0u64..1000, c in 0.1f64..10.0) {
        prop_assume!(dims.len() >= 2);
        let y = sample_standard(&dims, m, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = KroneckerPrecision::random(&dims, &mut rng);
        let mut factors = p.factors().to_vec();
        factors[0] *= c;
        factors[1] /= c;
        let q = KroneckerPrecision::new(factors).unwrap();
        let a = log_likelihood(&y, &p).unwrap();
        let b = log_likelihood(&y, &q).unwrap();
        let g = log_likelihood(&y, &p.gauge_fix()).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        prop_assert!((a - g).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    /// Each block update maximizes over its factor, so `l_Y` never drops.
    #[test]
    fn flip_flop_is_monotone(dims in small_dims(), extra in 0usize..=3, seed in 0u64..1000) {
        let n: usize = dims.iter().product();
        let m = n + extra;
        let y = sample_standard(&dims, m, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let mut p = KroneckerPrecision::random(&dims, &mut rng);
        let mut l = log_likelihood(&y, &p).unwrap();
        for _ in 0..5 {
            for i in 0..dims.len() {
                p = flip_flop_step(&y, &p, i).unwrap();
                let next = log_likelihood(&y, &p).unwrap();
                prop_assert!(next >= l - 1e-9 * (1.0 + l.abs()), "{l} -> {next}");
                l = next;
            }
        }
    }

    #[test]
    fn fit_history_is_monotone(dims in small_dims(), seed in 0u64..200) {
        let n: usize = dims.iter().product();
        let y = sample_standard(&dims, n + 1, seed).unwrap();
        let report = fit_mle(&y, &KroneckerPrecision::identity(&dims), &FitOptions::default()).unwrap();
        for w in report.loglik_history.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()));
        }
    }

    /// With one factor and `m ≥ d` the MLE is `m·(Σ y yᵀ)⁻¹`.
    #[test]
    fn single_factor_fit_is_exact(d in 1usize..=5, extra in 0usize..=4, seed in 0u64..1000) {
        let m = d + extra;
        let y = sample_standard(&[d], m, seed).unwrap();
        let report = fit_mle(&y, &KroneckerPrecision::identity(&[d]), &FitOptions::default()).unwrap();
        prop_assert_eq!(report.status, FitStatus::Converged);
        let mut s = DMatrix::zeros(d, d);
        for x in y.samples() {
            let v = DVector::from_column_slice(x);
            s += &v * v.transpose();
        }
        let expected = s.try_inverse().unwrap() * m as f64;
        let fitted = report.factors.unwrap();
        prop_assert!(relative_frobenius(fitted.factor(0), &expected) < 1e-10);
    }

    /// The analytic gradient agrees with central differences along a random
    /// symmetric direction.
    #[test]
    fn gradient_matches_finite_differences(dims in small_dims(), seed in 0u64..1000) {
        let y = sample_standard(&dims, 2, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        let p = KroneckerPrecision::random(&dims, &mut rng);
        let p = KroneckerPrecision::new(
            p.factors().iter().map(|f| f + DMatrix::identity(f.nrows(), f.nrows())).collect(),
        ).unwrap();
        let grads = gradient(&y, &p).unwrap();
        for i in 0..dims.len() {
            let d = dims[i];
            let a = KroneckerPrecision::random(&[d], &mut rng).into_factors().remove(0);
            let dir = &a / a.norm();
            let h = 1e-5;
            let shifted = |t: f64| {
                let mut f = p.factors().to_vec();
                f[i] += &dir * t;
                KroneckerPrecision::new(f).unwrap()
            };
            let fd = (log_likelihood(&y, &shifted(h)).unwrap() - log_likelihood(&y, &shifted(-h)).unwrap()) / (2.0 * h);
            let analytic = grads[i].component_mul(&dir).sum();
            prop_assert!((fd - analytic).abs() <= 1e-5 * (1.0 + analytic.abs()), "factor {i}: {fd} vs {analytic}");
        }
    }
}
