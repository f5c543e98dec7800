//! Model data `(d_1, …, d_k; m)` and the exact integer quantities that
//! govern their classification.
//!
//! Every quantity here is computed with arbitrary-precision integers: the
//! classifiers only ever look at signs and equalities, and `m·∏d_i` leaves
//! the 64-bit range long before the inputs become unreasonable.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision signed integer used for every exact quantity.
pub type ExactInt = BigInt;

/// Largest number of tensor factors accepted. Inclusion–exclusion walks all
/// `2^k − 1` subsets.
pub const MAX_FACTORS: usize = 16;

/// A tensor normal model `(d_1, …, d_k)` together with a sample count `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Datum {
    dims: Vec<u64>,
    m: u64,
}

impl Datum {
    pub fn new(dims: Vec<u64>, m: u64) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDatum("dimension list is empty".into()));
        }
        if dims.len() > MAX_FACTORS {
            return Err(Error::InvalidDatum(format!(
                "{} factors exceeds the limit of {MAX_FACTORS}",
                dims.len()
            )));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidDatum(format!(
                "d_{} must be positive",
                pos + 1
            )));
        }
        if m == 0 {
            return Err(Error::InvalidDatum("sample count must be positive".into()));
        }
        Ok(Self { dims, m })
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.dims.len()
    }

    /// Same dimensions, different sample count.
    pub fn with_m(&self, m: u64) -> Result<Self> {
        Self::new(self.dims.clone(), m)
    }

    /// `n = d_1 ⋯ d_k`.
    pub fn dim_product(&self) -> ExactInt {
        self.dims.iter().map(|&d| BigInt::from(d)).product()
    }

    /// Sorts the dimensions ascending and drops every entry equal to one.
    /// An all-ones list becomes `(1)` so the result is still a model.
    pub fn normalize(&self) -> Datum {
        let mut dims: Vec<u64> = self.dims.iter().copied().filter(|&d| d != 1).collect();
        dims.sort_unstable();
        if dims.is_empty() {
            dims.push(1);
        }
        Datum { dims, m: self.m }
    }

    pub fn is_normalized(&self) -> bool {
        if self.dims == [1] {
            return true;
        }
        self.dims.iter().all(|&d| d >= 2) && self.dims.windows(2).all(|w| w[0] <= w[1])
    }

    /// `N = m·d_1⋯d_{k−1}` on the normalized (sorted) dimensions, paired
    /// with the largest dimension `d_k`.
    pub fn castling_bound(&self) -> (ExactInt, u64) {
        let norm = self.normalize();
        let (&largest, rest) = norm
            .dims
            .split_last()
            .expect("normalized datum is nonempty");
        let n = rest.iter().fold(BigInt::from(norm.m), |acc, &d| acc * d);
        (n, largest)
    }
}

impl fmt::Display for Datum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.dims.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "; {})", self.m)
    }
}

fn gcd_of_subset(values: &[u64], mask: u32) -> u64 {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .fold(0u64, |acc, (_, &v)| acc.gcd(&v))
}

/// `Σ_{∅≠I} (−1)^{|I|} · f(gcd(d_I))` over all nonempty subsets.
fn signed_subset_sum(values: &[u64], weight: impl Fn(u64) -> BigInt) -> BigInt {
    debug_assert!(values.len() <= MAX_FACTORS);
    let mut total = BigInt::zero();
    for mask in 1u32..(1u32 << values.len()) {
        let term = weight(gcd_of_subset(values, mask));
        if mask.count_ones() % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
    }
    total
}

/// `R(d;m) = m∏d_i + Σ_n (−1)^n Σ_{i_1<…<i_n} gcd(d_{i_1},…,d_{i_n})²`.
pub fn big_r(datum: &Datum) -> ExactInt {
    let lead = datum.dim_product() * datum.m;
    lead + signed_subset_sum(&datum.dims, |g| BigInt::from(g) * g)
}

/// `Δ(d;m) = m∏d_i − 1 − Σ(d_i² − 1)`.
pub fn delta(datum: &Datum) -> ExactInt {
    let squares: BigInt = datum.dims.iter().map(|&d| BigInt::from(d) * d - 1).sum();
    datum.dim_product() * datum.m - 1 - squares
}

/// Largest pairwise gcd; `1` for a single factor.
pub fn g_max(datum: &Datum) -> ExactInt {
    let dims = &datum.dims;
    let mut best = 1u64;
    for i in 0..dims.len() {
        for j in (i + 1)..dims.len() {
            best = best.max(dims[i].gcd(&dims[j]));
        }
    }
    BigInt::from(best)
}

/// Inclusion–exclusion count `Σ_n (−1)^{n+1} Σ gcd(v_{i_1},…,v_{i_n})`,
/// the number of rationals in `[0,1)` whose denominator divides some `v_i`.
pub fn z_quantity(values: &[u64]) -> Result<ExactInt> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.len() > MAX_FACTORS {
        return Err(Error::InvalidArgument(format!(
            "{} values exceeds the limit of {MAX_FACTORS}",
            values.len()
        )));
    }
    if values.contains(&0) {
        return Err(Error::InvalidArgument("values must be positive".into()));
    }
    Ok(-signed_subset_sum(values, BigInt::from))
}

/// Index of the representation with respect to `SL_{d_i}`,
/// `m·d_1⋯d_k / (2·d_i²)`, as a reduced rational. `factor` is zero-based.
pub fn index_of_factor(datum: &Datum, factor: usize) -> Result<BigRational> {
    let d = *datum.dims.get(factor).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "factor {factor} out of range for k = {}",
            datum.k()
        ))
    })?;
    if d == 1 {
        return Err(Error::TrivialFactor { index: factor });
    }
    let numer = datum.dim_product() * datum.m;
    let denom = BigInt::from(2u8) * d * d;
    Ok(BigRational::new(numer, denom))
}

/// Exact ceiling of `a / b` for `b > 0`.
pub(crate) fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(*b > BigInt::zero());
    let (q, r) = a.div_mod_floor(b);
    if r.is_zero() {
        q
    } else {
        q + BigInt::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn datum(dims: &[u64], m: u64) -> Datum {
        Datum::new(dims.to_vec(), m).unwrap()
    }

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    /// Counts `j/L` for `0 ≤ j < L = lcm(values)` whose reduced denominator
    /// divides some value.
    fn fraction_count_oracle(values: &[u64]) -> u64 {
        let l = values.iter().fold(1u64, |acc, v| acc.lcm(v));
        (0..l)
            .filter(|&j| {
                let denom = l / j.gcd(&l);
                values.iter().any(|v| v % denom == 0)
            })
            .count() as u64
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(datum(&[3, 1, 2], 5).normalize(), datum(&[2, 3], 5));
        assert_eq!(datum(&[1, 1, 1], 4).normalize(), datum(&[1], 4));
        assert_eq!(datum(&[2, 3, 7], 2).normalize(), datum(&[2, 3, 7], 2));
        assert!(datum(&[1], 3).is_normalized());
        assert!(!datum(&[3, 2], 3).is_normalized());
    }

    #[test]
    fn rejects_invalid_data() {
        assert!(matches!(
            Datum::new(vec![2, 0], 1),
            Err(Error::InvalidDatum(_))
        ));
        assert!(matches!(
            Datum::new(vec![2], 0),
            Err(Error::InvalidDatum(_))
        ));
        assert!(matches!(Datum::new(vec![], 1), Err(Error::InvalidDatum(_))));
        assert!(matches!(
            Datum::new(vec![2; 17], 1),
            Err(Error::InvalidDatum(_))
        ));
    }

    #[test]
    fn big_r_examples() {
        assert_eq!(big_r(&datum(&[1], 1)), int(0));
        assert_eq!(big_r(&datum(&[3, 3], 2)), int(9));
        assert_eq!(big_r(&datum(&[2, 2, 3], 1)), int(0));
        // two-factor closed form md1d2 − d1² − d2² + gcd²
        assert_eq!(big_r(&datum(&[4, 6], 3)), int(72 - 16 - 36 + 4));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&datum(&[2, 3, 3], 1)), int(-2));
        assert_eq!(delta(&datum(&[1], 1)), int(0));
        assert_eq!(delta(&datum(&[2, 2, 3], 1)), int(-3));
    }

    #[test]
    fn g_max_examples() {
        assert_eq!(g_max(&datum(&[7], 3)), int(1));
        assert_eq!(g_max(&datum(&[4, 6, 9], 2)), int(3));
        assert_eq!(g_max(&datum(&[2, 2, 8], 1)), int(2));
    }

    #[test]
    fn z_examples() {
        assert_eq!(z_quantity(&[5]).unwrap(), int(5));
        assert_eq!(z_quantity(&[2, 3]).unwrap(), int(4));
        assert_eq!(z_quantity(&[4, 6]).unwrap(), int(8));
        assert_eq!(z_quantity(&[]), Err(Error::EmptyInput));
        assert_eq!(fraction_count_oracle(&[2, 3]), 4);
        assert_eq!(fraction_count_oracle(&[4, 6]), 8);
    }

    #[test]
    fn index_examples() {
        let one = BigRational::one();
        assert_eq!(index_of_factor(&datum(&[2, 2, 2], 1), 0).unwrap(), one);
        assert_eq!(index_of_factor(&datum(&[2, 3, 3], 1), 2).unwrap(), one);
        assert_eq!(index_of_factor(&datum(&[2], 4), 0).unwrap(), one);
        assert_eq!(
            index_of_factor(&datum(&[2, 1], 4), 1),
            Err(Error::TrivialFactor { index: 1 })
        );
        let r = index_of_factor(&datum(&[2, 3], 1), 0).unwrap();
        assert_eq!(r, BigRational::new(int(3), int(4)));
    }

    #[test]
    fn large_inputs_do_not_overflow() {
        let d = datum(&[1_000_000; 16], 1_000_000);
        let r = big_r(&d);
        let lead = BigInt::from(10u8).pow(102);
        // every subset gcd is 10^6, so the alternating sum is −10^12
        assert_eq!(r, lead - BigInt::from(10u64.pow(12)));
    }

    #[test]
    fn r_z_identity_exhaustive() {
        for k in 1..=3usize {
            let mut idx = vec![1u64; k];
            loop {
                let squares: Vec<u64> = idx.iter().map(|d| d * d).collect();
                let z = z_quantity(&squares).unwrap();
                assert_eq!(z, BigInt::from(fraction_count_oracle(&squares)));
                for m in 1..=4 {
                    let d = datum(&idx, m);
                    assert_eq!(big_r(&d), d.dim_product() * m - &z, "{d}");
                }
                let mut pos = 0;
                while pos < k && idx[pos] == 6 {
                    idx[pos] = 1;
                    pos += 1;
                }
                if pos == k {
                    break;
                }
                idx[pos] += 1;
            }
        }
    }

    #[test]
    fn ceil_div_signs() {
        assert_eq!(ceil_div(&int(7), &int(2)), int(4));
        assert_eq!(ceil_div(&int(8), &int(2)), int(4));
        assert_eq!(ceil_div(&int(-7), &int(2)), int(-3));
    }

    proptest! {
        #[test]
        fn quantities_invariant_under_permutation_and_normalize(
            dims in prop::collection::vec(1u64..=12, 1..=5),
            m in 1u64..=6,
            rot in 0usize..5,
        ) {
            let d = datum(&dims, m);
            let mut shuffled = dims.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rot % len);
            shuffled.swap(0, len - 1);
            let p = datum(&shuffled, m);
            let n = d.normalize();
            for other in [&p, &n] {
                prop_assert_eq!(big_r(&d), big_r(other));
                prop_assert_eq!(delta(&d), delta(other));
                prop_assert_eq!(g_max(&d), g_max(other));
            }
        }

        #[test]
        fn big_r_is_linear_in_m(dims in prop::collection::vec(1u64..=12, 1..=5), m in 1u64..=6) {
            let a = datum(&dims, m);
            let b = datum(&dims, m + 1);
            prop_assert_eq!(big_r(&b) - big_r(&a), a.dim_product());
        }

        #[test]
        fn z_matches_fraction_count(values in prop::collection::vec(1u64..=60, 1..=4)) {
            let l = values.iter().fold(1u64, |acc, v| acc.lcm(v));
            prop_assume!(l <= 100_000);
            let z = z_quantity(&values).unwrap();
            prop_assert!(z >= BigInt::zero());
            prop_assert_eq!(z, BigInt::from(fraction_count_oracle(&values)));
        }
    }
}
