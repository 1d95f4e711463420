//! The defect dependency metric.
//!
//! For a defect model with counts (dc, de, dr) and a product model with counts
//! (Pc, Pe, Pr):
//!
//! ```text
//! a = dc · (de + dr)
//! b = Pc · (Pe + Pr)
//! D = 1 − (b − a) / b          (= a / b)
//! ```
//!
//! D is kept as an exact rational; decimal text is produced only for display.

use chrono::{DateTime, SubsecRound, Utc};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::{format_decimal, format_percent};
use crate::graph::{count, DefectFlow, DependencyCounts};
use crate::istarml::SdModel;

/// Fractional digits used when D is rendered as text.
pub const DISPLAY_PLACES: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("product model has no actors or no dependency entries (b = 0)")]
    EmptyProductModel,
    #[error("defect spread a = {a} exceeds product spread b = {b}; the flow does not belong to this model version")]
    DefectExceedsProduct { a: u64, b: u64 },
    #[error("count product overflows 64 bits")]
    Overflow,
}

impl MetricError {
    pub fn code(&self) -> &'static str {
        match self {
            MetricError::EmptyProductModel => "EmptyProductModel",
            MetricError::DefectExceedsProduct { .. } => "DefectExceedsProduct",
            MetricError::Overflow => "Overflow",
        }
    }
}

/// The `a`, `b` and D of one defect against one product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectDependency {
    pub a: u64,
    pub b: u64,
    pub d: BigRational,
}

fn spread(counts: &DependencyCounts) -> Result<u64, MetricError> {
    counts
        .dependees
        .checked_add(counts.dependers)
        .and_then(|entries| counts.actors.checked_mul(entries))
        .ok_or(MetricError::Overflow)
}

pub fn defect_dependency(
    defect: &DependencyCounts,
    product: &DependencyCounts,
) -> Result<DefectDependency, MetricError> {
    let a = spread(defect)?;
    let b = spread(product)?;
    if b == 0 {
        return Err(MetricError::EmptyProductModel);
    }
    if a > b {
        return Err(MetricError::DefectExceedsProduct { a, b });
    }
    let (a_big, b_big) = (BigInt::from(a), BigInt::from(b));
    let missing = BigRational::new(&b_big - &a_big, b_big);
    let d = BigRational::one() - missing;
    Ok(DefectDependency { a, b, d })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "MetricRecord", try_from = "MetricRecord")]
pub struct MetricResult {
    pub defect_id: String,
    pub product_version: String,
    pub a: u64,
    pub b: u64,
    pub d: BigRational,
    pub computed_at: DateTime<Utc>,
}

impl MetricResult {
    pub fn d_decimal(&self) -> String {
        format_decimal(&self.d, DISPLAY_PLACES)
    }

    pub fn d_percent(&self) -> String {
        format_percent(&self.d)
    }

    /// Every field except `computed_at`.
    pub fn same_value(&self, other: &MetricResult) -> bool {
        self.defect_id == other.defect_id
            && self.product_version == other.product_version
            && self.a == other.a
            && self.b == other.b
            && self.d == other.d
    }
}

/// Flat serialized form of a [`MetricResult`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub defect_id: String,
    pub product_version: String,
    pub a: u64,
    pub b: u64,
    #[serde(rename = "D")]
    pub d: String,
    #[serde(rename = "D_percent")]
    pub d_percent: String,
    pub computed_at: String,
}

impl From<MetricResult> for MetricRecord {
    fn from(result: MetricResult) -> Self {
        MetricRecord {
            d: result.d_decimal(),
            d_percent: result.d_percent(),
            computed_at: result
                .computed_at
                .to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            defect_id: result.defect_id,
            product_version: result.product_version,
            a: result.a,
            b: result.b,
        }
    }
}

impl TryFrom<MetricRecord> for MetricResult {
    type Error = String;

    fn try_from(record: MetricRecord) -> Result<Self, Self::Error> {
        if record.b == 0 || record.a > record.b {
            return Err(format!("inconsistent a = {}, b = {}", record.a, record.b));
        }
        let computed_at = DateTime::parse_from_rfc3339(&record.computed_at)
            .map_err(|e| format!("computed_at: {e}"))?
            .with_timezone(&Utc);
        Ok(MetricResult {
            d: crate::decimal::ratio(record.a, record.b),
            defect_id: record.defect_id,
            product_version: record.product_version,
            a: record.a,
            b: record.b,
            computed_at,
        })
    }
}

/// Current time at the millisecond precision results are stored with.
pub fn now() -> DateTime<Utc> {
    Utc::now().trunc_subsecs(3)
}

/// D of a defect flow against the product model it was extracted from.
pub fn compute_metric(
    product: &SdModel,
    product_version: &str,
    flow: &DefectFlow,
) -> Result<MetricResult, MetricError> {
    let dep = defect_dependency(&count(&flow.subgraph), &count(product))?;
    Ok(MetricResult {
        defect_id: flow.defect_id.clone(),
        product_version: product_version.to_string(),
        a: dep.a,
        b: dep.b,
        d: dep.d,
        computed_at: now(),
    })
}
