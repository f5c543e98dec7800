//! Castling transforms on data and reduction to the minimal representative
//! of a castling class.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::datum::Datum;
use crate::error::{Error, Result};

/// Where a normalized datum sits relative to `N = m·d_1⋯d_{k−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `d_k > N`
    Oversized,
    /// `d_k = N`
    Boundary,
    /// `N/2 < d_k < N`; a castle step shrinks the datum.
    Reducible,
    /// `2·d_k ≤ N`
    Balanced,
}

pub fn regime(datum: &Datum) -> Regime {
    let (n, largest) = datum.castling_bound();
    let largest = BigInt::from(largest);
    if largest > n {
        Regime::Oversized
    } else if largest == n {
        Regime::Boundary
    } else if BigInt::from(2u8) * &largest > n {
        Regime::Reducible
    } else {
        Regime::Balanced
    }
}

/// Replaces the largest dimension `d_k` by `N − d_k` and renormalizes.
pub fn castle_step(datum: &Datum) -> Result<Datum> {
    let norm = datum.normalize();
    let (n, largest) = norm.castling_bound();
    if n <= BigInt::from(largest) {
        return Err(Error::NotCastlable {
            largest: largest.to_string(),
            n: n.to_string(),
        });
    }
    let replaced = &n - largest;
    let replaced = replaced
        .to_u64()
        .ok_or_else(|| Error::DimensionOverflow(replaced.to_string()))?;
    let mut dims = norm.dims().to_vec();
    *dims.last_mut().expect("nonempty") = replaced;
    Ok(Datum::new(dims, norm.m())?.normalize())
}

/// Normalized data from the input down to its minimal representative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CastlingTrace {
    pub steps: Vec<Datum>,
}

impl CastlingTrace {
    pub fn minimal(&self) -> &Datum {
        self.steps.last().expect("trace is never empty")
    }

    /// Number of castle steps taken.
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Castles while `N/2 < d_k < N`. Each step replaces `d_k` by something
/// smaller, so the dimension sum strictly decreases and this terminates.
pub fn reduce_to_minimal(datum: &Datum) -> CastlingTrace {
    let mut steps = vec![datum.normalize()];
    loop {
        let current = steps.last().expect("nonempty");
        if regime(current) != Regime::Reducible {
            break;
        }
        // The replacement is smaller than d_k, so it always fits.
        let next = castle_step(current).expect("reducible data are castlable");
        steps.push(next);
    }
    CastlingTrace { steps }
}

pub fn castling_equivalent(a: &Datum, b: &Datum) -> bool {
    a.m() == b.m() && reduce_to_minimal(a).minimal() == reduce_to_minimal(b).minimal()
}
