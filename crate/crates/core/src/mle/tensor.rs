//! Mode-wise contractions on flat row-major tensors (last index fastest).

use nalgebra::DMatrix;

/// `(outer, d_mode, inner)` block sizes of a row-major tensor around `mode`.
pub fn mode_blocks(dims: &[usize], mode: usize) -> (usize, usize, usize) {
    let outer = dims[..mode].iter().product();
    let inner = dims[mode + 1..].iter().product();
    (outer, dims[mode], inner)
}

/// Multiplies `x` by `a` along `mode`: `out[…, p, …] = Σ_q a[p, q] x[…, q, …]`.
pub fn mode_product(x: &[f64], dims: &[usize], mode: usize, a: &DMatrix<f64>) -> Vec<f64> {
    let (outer, d, inner) = mode_blocks(dims, mode);
    debug_assert_eq!(x.len(), outer * d * inner);
    debug_assert_eq!(a.shape(), (d, d));
    let mut out = vec![0.0; x.len()];
    for o in 0..outer {
        let base = o * d * inner;
        for p in 0..d {
            let dst = &mut out[base + p * inner..base + (p + 1) * inner];
            for q in 0..d {
                let coef = a[(p, q)];
                if coef == 0.0 {
                    continue;
                }
                let src = &x[base + q * inner..base + (q + 1) * inner];
                for (y, s) in dst.iter_mut().zip(src) {
                    *y += coef * s;
                }
            }
        }
    }
    out
}

/// Applies `mats[j]` along every mode `j` except `skip`.
pub fn multi_mode_product(
    x: &[f64],
    dims: &[usize],
    mats: &[DMatrix<f64>],
    skip: Option<usize>,
) -> Vec<f64> {
    let mut cur = x.to_vec();
    for (j, a) in mats.iter().enumerate() {
        if Some(j) != skip {
            cur = mode_product(&cur, dims, j, a);
        }
    }
    cur
}

/// Accumulates `Σ x[…, p, …]·w[…, q, …]` over all indices but `mode` into `acc[p, q]`.
pub fn add_mode_gram(acc: &mut DMatrix<f64>, x: &[f64], w: &[f64], dims: &[usize], mode: usize) {
    let (outer, d, inner) = mode_blocks(dims, mode);
    for o in 0..outer {
        let base = o * d * inner;
        for p in 0..d {
            let xp = &x[base + p * inner..base + (p + 1) * inner];
            for q in 0..d {
                let wq = &w[base + q * inner..base + (q + 1) * inner];
                acc[(p, q)] += xp.iter().zip(wq).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
}
