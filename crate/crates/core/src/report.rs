//! JSON form of [`ClassificationReport`]. Exact integers travel as decimal
//! strings so nothing is rounded through a double.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::classify::{
    ClassificationReport, GitDimension, MleProfile, StabilityClass, ThresholdReport,
};
use crate::datum::Datum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatumJson {
    pub dims: Vec<String>,
    pub m: String,
}

impl From<&Datum> for DatumJson {
    fn from(d: &Datum) -> Self {
        DatumJson {
            dims: d.dims().iter().map(u64::to_string).collect(),
            m: d.m().to_string(),
        }
    }
}

impl TryFrom<&DatumJson> for Datum {
    type Error = Error;

    fn try_from(j: &DatumJson) -> Result<Datum> {
        let dims = j
            .dims
            .iter()
            .map(|s| parse_u64(s))
            .collect::<Result<Vec<_>>>()?;
        Datum::new(dims, parse_u64(&j.m)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdJson {
    pub mlt_b: String,
    pub mlt_e: String,
    pub mlt_u: String,
    pub cor_bounds: Option<[String; 2]>,
}

impl From<&ThresholdReport> for ThresholdJson {
    fn from(t: &ThresholdReport) -> Self {
        ThresholdJson {
            mlt_b: t.mlt_b.to_string(),
            mlt_e: t.mlt_e.to_string(),
            mlt_u: t.mlt_u.to_string(),
            cor_bounds: t
                .cor_bounds
                .as_ref()
                .map(|(lo, hi)| [lo.to_string(), hi.to_string()]),
        }
    }
}

impl TryFrom<&ThresholdJson> for ThresholdReport {
    type Error = Error;

    fn try_from(j: &ThresholdJson) -> Result<Self> {
        let cor_bounds = match &j.cor_bounds {
            Some([lo, hi]) => Some((parse_int(lo)?, parse_int(hi)?)),
            None => None,
        };
        Ok(ThresholdReport {
            mlt_b: parse_u64(&j.mlt_b)?,
            mlt_e: parse_u64(&j.mlt_e)?,
            mlt_u: parse_u64(&j.mlt_u)?,
            cor_bounds,
        })
    }
}

/// Field order here is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReportJson {
    pub datum: DatumJson,
    pub normalized: DatumJson,
    #[serde(rename = "R")]
    pub r: String,
    #[serde(rename = "Delta")]
    pub delta: String,
    pub g_max: String,
    #[serde(rename = "Z")]
    pub z: String,
    /// Reduced fractions `"p/q"` (or `"p"` when integral).
    pub indices: Vec<String>,
    pub castling_trace: Vec<DatumJson>,
    pub class: StabilityClass,
    pub class_recursive: StabilityClass,
    pub classifiers_agree: bool,
    pub mle_profile: MleProfile,
    pub thresholds: ThresholdJson,
    /// `"empty"` or a decimal integer.
    pub git_dimension: String,
}

impl From<&ClassificationReport> for ClassificationReportJson {
    fn from(r: &ClassificationReport) -> Self {
        ClassificationReportJson {
            datum: (&r.datum).into(),
            normalized: (&r.normalized).into(),
            r: r.r.to_string(),
            delta: r.delta.to_string(),
            g_max: r.g_max.to_string(),
            z: r.z.to_string(),
            indices: r.indices.iter().map(BigRational::to_string).collect(),
            castling_trace: r.castling_trace.steps.iter().map(DatumJson::from).collect(),
            class: r.class,
            class_recursive: r.class_recursive,
            classifiers_agree: r.classifiers_agree(),
            mle_profile: r.mle_profile,
            thresholds: (&r.thresholds).into(),
            git_dimension: r.git_dimension.to_string(),
        }
    }
}

impl TryFrom<&ClassificationReportJson> for ClassificationReport {
    type Error = Error;

    fn try_from(j: &ClassificationReportJson) -> Result<Self> {
        let git_dimension = match j.git_dimension.as_str() {
            "empty" => GitDimension::Empty,
            s => GitDimension::Dim(parse_int(s)?),
        };
        let indices = j
            .indices
            .iter()
            .map(|s| {
                BigRational::from_str(s).map_err(|_| Error::Format(format!("bad rational {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let steps = j
            .castling_trace
            .iter()
            .map(Datum::try_from)
            .collect::<Result<Vec<_>>>()?;
        if steps.is_empty() {
            return Err(Error::Format("empty castling trace".into()));
        }
        Ok(ClassificationReport {
            datum: (&j.datum).try_into()?,
            normalized: (&j.normalized).try_into()?,
            r: parse_int(&j.r)?,
            delta: parse_int(&j.delta)?,
            g_max: parse_int(&j.g_max)?,
            z: parse_int(&j.z)?,
            indices,
            castling_trace: crate::castling::CastlingTrace { steps },
            class: j.class,
            class_recursive: j.class_recursive,
            mle_profile: j.mle_profile,
            thresholds: (&j.thresholds).try_into()?,
            git_dimension,
        })
    }
}

impl ClassificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ClassificationReportJson::from(self))
            .expect("report serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: ClassificationReportJson =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        (&j).try_into()
    }
}

fn parse_int(s: &str) -> Result<BigInt> {
    BigInt::from_str(s).map_err(|_| Error::Format(format!("bad integer {s:?}")))
}

fn parse_u64(s: &str) -> Result<u64> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad integer {s:?}")))
}
