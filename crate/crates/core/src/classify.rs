//! Generic stability classification of tensor actions and its statistical
//! reading: almost-sure boundedness, existence and uniqueness of the MLE.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::castling::{castle_step, reduce_to_minimal, regime, CastlingTrace, Regime};
use crate::datum::{big_r, ceil_div, delta, g_max, index_of_factor, z_quantity, Datum, ExactInt};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Unstable,
    PolystableNotStable,
    Stable,
}

impl StabilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityClass::Unstable => "unstable",
            StabilityClass::PolystableNotStable => "polystable_not_stable",
            StabilityClass::Stable => "stable",
        }
    }

    /// Generically semistable. Semistable and polystable coincide for tensor actions.
    pub fn is_semistable(self) -> bool {
        self != StabilityClass::Unstable
    }
}

impl std::fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Uniform classification in terms of `R`, `Δ` and `g_max`.
pub fn classify_closed_form(datum: &Datum) -> StabilityClass {
    let r = big_r(datum);
    let g = g_max(datum);
    let stable = if r.is_negative() {
        return StabilityClass::Unstable;
    } else if r.is_zero() {
        g.is_one()
    } else if datum.m() == 1 {
        delta(datum) >= BigInt::from(-1)
    } else {
        g.is_one() || r > &g * &g
    };
    if stable {
        StabilityClass::Stable
    } else {
        StabilityClass::PolystableNotStable
    }
}

/// `(2,d,d;1)` or `(d,d;2)` with `d ≥ 2`, after normalization.
fn is_balanced_exception(norm: &Datum) -> bool {
    match (norm.dims(), norm.m()) {
        ([2, a, b], 1) => a == b,
        ([a, b], 2) => a == b && *a >= 2,
        _ => false,
    }
}

/// Recursive classification: terminal cases on `d_k` versus
/// `N = m·d_1⋯d_{k−1}`, castling in between.
pub fn classify_recursive(datum: &Datum) -> StabilityClass {
    let norm = datum.normalize();
    match regime(&norm) {
        Regime::Oversized => StabilityClass::Unstable,
        Regime::Boundary => {
            if norm.k() == 1 {
                StabilityClass::Stable
            } else {
                StabilityClass::PolystableNotStable
            }
        }
        Regime::Reducible => {
            let next = castle_step(&norm).expect("reducible data are castlable");
            classify_recursive(&next)
        }
        Regime::Balanced => {
            if is_balanced_exception(&norm) {
                StabilityClass::PolystableNotStable
            } else {
                StabilityClass::Stable
            }
        }
    }
}

/// Almost-sure behaviour of the log-likelihood and the MLE. Identical for the
/// real and the complex model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MleProfile {
    pub bounded_as: bool,
    pub exists_as: bool,
    pub unique_as: bool,
    pub always_unbounded: bool,
}

impl MleProfile {
    pub fn from_class(class: StabilityClass) -> Self {
        match class {
            StabilityClass::Unstable => MleProfile {
                bounded_as: false,
                exists_as: false,
                unique_as: false,
                always_unbounded: true,
            },
            _ => MleProfile {
                bounded_as: true,
                exists_as: true,
                unique_as: class == StabilityClass::Stable,
                always_unbounded: false,
            },
        }
    }
}

pub fn mle_profile(datum: &Datum) -> MleProfile {
    MleProfile::from_class(classify_closed_form(datum))
}

/// Minimal sample counts for almost-sure boundedness, existence and
/// uniqueness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub mlt_b: u64,
    pub mlt_e: u64,
    pub mlt_u: u64,
    /// `(⌈r⌉, ⌈r⌉ + 1)` with `r = d_k / (d_1⋯d_{k−1})`, present when the
    /// normalized model has at least three factors.
    pub cor_bounds: Option<(ExactInt, ExactInt)>,
}

pub fn thresholds(dims: &[u64]) -> Result<ThresholdReport> {
    let base = Datum::new(dims.to_vec(), 1)?;
    let norm = base.normalize();
    let product = base.dim_product();
    let squares: Vec<u64> = norm.dims().iter().map(|&d| d * d).collect();
    let z = z_quantity(&squares)?;

    // R(d;m) = m∏d_i − Z(d_i²) is increasing in m.
    let mlt_b = ceil_div(&z, &product).max(BigInt::one());
    let mlt_b = mlt_b.to_u64().expect("threshold is bounded by d_k");
    debug_assert!(!big_r(&norm.with_m(mlt_b)?).is_negative());

    let mut mlt_u = mlt_b;
    while classify_closed_form(&norm.with_m(mlt_u)?) != StabilityClass::Stable {
        mlt_u += 1;
    }

    let cor_bounds = (norm.k() >= 3).then(|| {
        let (largest, rest) = norm.dims().split_last().expect("nonempty");
        let rest: BigInt = rest.iter().map(|&d| BigInt::from(d)).product();
        let c = ceil_div(&BigInt::from(*largest), &rest);
        let c1 = &c + 1;
        (c, c1)
    });

    Ok(ThresholdReport {
        mlt_b,
        mlt_e: mlt_b,
        mlt_u,
        cor_bounds,
    })
}

/// Dimension of the projective GIT quotient over ℂ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GitDimension {
    Empty,
    Dim(ExactInt),
}

impl std::fmt::Display for GitDimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GitDimension::Empty => f.write_str("empty"),
            GitDimension::Dim(d) => write!(f, "{d}"),
        }
    }
}

pub fn git_dimension(datum: &Datum) -> GitDimension {
    let r = big_r(datum);
    if r.is_negative() {
        return GitDimension::Empty;
    }
    if r.is_zero() {
        return GitDimension::Dim(BigInt::zero());
    }
    let g = g_max(datum);
    let d = delta(datum);
    let dim = if datum.m() == 1 && d == BigInt::from(-2) {
        (&g - BigInt::from(3)).max(BigInt::zero())
    } else if datum.m() == 2 && r == &g * &g && g > BigInt::one() {
        g
    } else {
        d
    };
    GitDimension::Dim(dim)
}

/// Everything known about one datum.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub datum: Datum,
    pub normalized: Datum,
    pub r: ExactInt,
    pub delta: ExactInt,
    pub g_max: ExactInt,
    /// `Z(d_1², …, d_k²)`
    pub z: ExactInt,
    /// Index with respect to each factor of the normalized datum.
    pub indices: Vec<BigRational>,
    pub castling_trace: CastlingTrace,
    pub class: StabilityClass,
    pub class_recursive: StabilityClass,
    pub mle_profile: MleProfile,
    pub thresholds: ThresholdReport,
    pub git_dimension: GitDimension,
}

impl ClassificationReport {
    pub fn classifiers_agree(&self) -> bool {
        self.class == self.class_recursive
    }
}

pub fn explain(datum: &Datum) -> ClassificationReport {
    let normalized = datum.normalize();
    let squares: Vec<u64> = normalized.dims().iter().map(|&d| d * d).collect();
    let indices = (0..normalized.k())
        .filter_map(|i| index_of_factor(&normalized, i).ok())
        .collect();
    let class = classify_closed_form(datum);
    let class_recursive = classify_recursive(datum);
    if class != class_recursive {
        log::warn!(
            "classifier disagreement on {datum}: closed form {class}, recursive {class_recursive}"
        );
    }
    ClassificationReport {
        datum: datum.clone(),
        r: big_r(datum),
        delta: delta(datum),
        g_max: g_max(datum),
        z: z_quantity(&squares).expect("normalized dims are nonempty"),
        indices,
        castling_trace: reduce_to_minimal(datum),
        class,
        class_recursive,
        mle_profile: MleProfile::from_class(class),
        thresholds: thresholds(datum.dims()).expect("datum dims are valid"),
        git_dimension: git_dimension(datum),
        normalized,
    }
}
