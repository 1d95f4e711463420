//! Ranking defects by D combined with weighted business factors.
//!
//! ```text
//! score = (w_D · D + Σ w_f · norm_f) / (w_D + Σ w_f)
//! norm_f = i / (m − 1)   for level index i of an m-level scale (1 if m = 1)
//! ```
//!
//! Ties on score are broken by the configured key list, which always ends
//! with `defect_id`, so the ranking is a total order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::{self, format_decimal, format_exact, format_percent, DecimalError};
use crate::metric::DISPLAY_PLACES;

pub const DEFECT_ID_KEY: &str = "defect_id";
pub const D_KEY: &str = "D";
pub const SEVERITY: &str = "severity";
pub const CUSTOMER_CRITICALITY: &str = "customer_criticality";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PriorityError {
    #[error("all weights are zero")]
    EmptyConfig,
    #[error("weight for {0} is negative")]
    NegativeWeight(String),
    #[error("invalid weight: {0}")]
    InvalidWeight(#[from] DecimalError),
    #[error("factor {0:?} has an empty or repeated level list")]
    InvalidScale(String),
    #[error("invalid tie-break order: {0}")]
    InvalidTieBreak(String),
    #[error("defect {defect_id}: factor {factor:?} has no configured scale")]
    UnknownFactor { defect_id: String, factor: String },
    #[error("defect {defect_id}: {level:?} is not a level of factor {factor:?}")]
    UnknownFactorLevel {
        defect_id: String,
        factor: String,
        level: String,
    },
    #[error("defect {0} appears more than once")]
    DuplicateDefect(String),
    #[error("override adds factor {0:?} without a level list")]
    IncompleteOverride(String),
}

impl PriorityError {
    pub fn code(&self) -> &'static str {
        match self {
            PriorityError::EmptyConfig => "EmptyConfig",
            PriorityError::NegativeWeight(_) => "NegativeWeight",
            PriorityError::InvalidWeight(_) => "InvalidWeight",
            PriorityError::InvalidScale(_) => "InvalidScale",
            PriorityError::InvalidTieBreak(_) => "InvalidTieBreak",
            PriorityError::UnknownFactor { .. } => "UnknownFactor",
            PriorityError::UnknownFactorLevel { .. } => "UnknownFactorLevel",
            PriorityError::DuplicateDefect(_) => "DuplicateDefect",
            PriorityError::IncompleteOverride(_) => "IncompleteOverride",
        }
    }
}

/// An ordinal factor: its weight and its levels from lowest to highest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub weight: BigRational,
    pub levels: Vec<String>,
}

impl Factor {
    pub fn new(weight: BigRational, levels: &[&str]) -> Self {
        Factor {
            weight,
            levels: levels.iter().map(|l| l.to_string()).collect(),
        }
    }

    pub fn level_index(&self, level: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == level)
    }

    fn normalized(&self, index: usize) -> BigRational {
        if self.levels.len() <= 1 {
            return BigRational::one();
        }
        BigRational::new(
            BigInt::from(index),
            BigInt::from(self.levels.len() - 1),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ConfigFile", try_from = "ConfigFile")]
pub struct PriorityConfig {
    pub weight_d: BigRational,
    pub factors: BTreeMap<String, Factor>,
    /// Field names: `D`, a factor name, or `defect_id` (always last).
    pub tie_break: Vec<String>,
}

impl Default for PriorityConfig {
    fn default() -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(
            SEVERITY.to_string(),
            Factor::new(decimal::ratio(3, 10), &["low", "medium", "high", "critical"]),
        );
        factors.insert(
            CUSTOMER_CRITICALITY.to_string(),
            Factor::new(decimal::ratio(1, 5), &["low", "medium", "high"]),
        );
        PriorityConfig {
            weight_d: decimal::ratio(1, 2),
            factors,
            tie_break: vec![D_KEY.into(), SEVERITY.into(), DEFECT_ID_KEY.into()],
        }
    }
}

impl PriorityConfig {
    /// Only D counts; ties fall back to `defect_id`.
    pub fn metric_only() -> Self {
        PriorityConfig {
            weight_d: BigRational::one(),
            factors: BTreeMap::new(),
            tie_break: vec![D_KEY.into(), DEFECT_ID_KEY.into()],
        }
    }

    pub fn total_weight(&self) -> BigRational {
        self.factors
            .values()
            .fold(self.weight_d.clone(), |sum, f| sum + &f.weight)
    }

    pub fn check(&self) -> Result<(), PriorityError> {
        if self.weight_d.is_negative() {
            return Err(PriorityError::NegativeWeight(D_KEY.into()));
        }
        for (name, factor) in &self.factors {
            if factor.weight.is_negative() {
                return Err(PriorityError::NegativeWeight(name.clone()));
            }
            let distinct: HashSet<&String> = factor.levels.iter().collect();
            if factor.levels.is_empty() || distinct.len() != factor.levels.len() {
                return Err(PriorityError::InvalidScale(name.clone()));
            }
        }
        if !self.total_weight().is_positive() {
            return Err(PriorityError::EmptyConfig);
        }
        match self.tie_break.last() {
            Some(last) if last == DEFECT_ID_KEY => {}
            _ => {
                return Err(PriorityError::InvalidTieBreak(
                    "must be non-empty and end with defect_id".into(),
                ))
            }
        }
        for key in &self.tie_break {
            if key != D_KEY && key != DEFECT_ID_KEY && !self.factors.contains_key(key) {
                return Err(PriorityError::InvalidTieBreak(format!("unknown field {key:?}")));
            }
        }
        Ok(())
    }

    /// Multiplies every weight by `k`.
    pub fn scaled(&self, k: &BigRational) -> PriorityConfig {
        let mut out = self.clone();
        out.weight_d *= k;
        for factor in out.factors.values_mut() {
            factor.weight *= k;
        }
        out
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Applies what-if overrides and re-checks the result.
    pub fn with_overrides(&self, overrides: &PriorityOverrides) -> Result<Self, PriorityError> {
        let mut out = self.clone();
        if let Some(weight) = &overrides.weight_d {
            out.weight_d = weight.to_rational()?;
        }
        for (name, change) in &overrides.factors {
            match out.factors.get_mut(name) {
                Some(factor) => {
                    if let Some(weight) = &change.weight {
                        factor.weight = weight.to_rational()?;
                    }
                    if let Some(levels) = &change.levels {
                        factor.levels = levels.clone();
                    }
                }
                None => {
                    let levels = change
                        .levels
                        .clone()
                        .ok_or_else(|| PriorityError::IncompleteOverride(name.clone()))?;
                    let weight = match &change.weight {
                        Some(w) => w.to_rational()?,
                        None => BigRational::zero(),
                    };
                    out.factors.insert(name.clone(), Factor { weight, levels });
                }
            }
        }
        if let Some(tie_break) = &overrides.tie_break {
            out.tie_break = tie_break.clone();
        }
        out.check()?;
        Ok(out)
    }
}

/// A weight as written in a config: a number, a decimal string, or `"n/d"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Weight {
    pub fn to_rational(&self) -> Result<BigRational, DecimalError> {
        match self {
            Weight::Int(n) => Ok(BigRational::from_integer(BigInt::from(*n))),
            Weight::Float(x) => decimal::from_f64(*x),
            Weight::Text(text) => decimal::parse_decimal(text),
        }
    }

    fn from_rational(value: &BigRational) -> Self {
        Weight::Text(terminating_or_exact(value))
    }
}

/// Decimal text when the value has a finite expansion, `n/d` otherwise.
fn terminating_or_exact(value: &BigRational) -> String {
    let mut denom = value.denom().clone();
    let mut places = 0u32;
    for p in [2u32, 5] {
        while (&denom % p).is_zero() {
            denom /= p;
            places += 1;
        }
    }
    if denom.is_one() {
        let text = format_decimal(value, places);
        if text.contains('.') {
            text.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            text
        }
    } else {
        format_exact(value)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactorFile {
    weight: Weight,
    levels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigFile {
    weight_d: Weight,
    #[serde(default = "default_tie_break")]
    tie_break: Vec<String>,
    #[serde(default)]
    factors: BTreeMap<String, FactorFile>,
}

fn default_tie_break() -> Vec<String> {
    PriorityConfig::default().tie_break
}

impl From<PriorityConfig> for ConfigFile {
    fn from(config: PriorityConfig) -> Self {
        ConfigFile {
            weight_d: Weight::from_rational(&config.weight_d),
            tie_break: config.tie_break,
            factors: config
                .factors
                .into_iter()
                .map(|(name, f)| {
                    (
                        name,
                        FactorFile {
                            weight: Weight::from_rational(&f.weight),
                            levels: f.levels,
                        },
                    )
                })
                .collect(),
        }
    }
}

impl TryFrom<ConfigFile> for PriorityConfig {
    type Error = PriorityError;

    fn try_from(file: ConfigFile) -> Result<Self, Self::Error> {
        let mut factors = BTreeMap::new();
        for (name, f) in file.factors {
            factors.insert(
                name,
                Factor {
                    weight: f.weight.to_rational()?,
                    levels: f.levels,
                },
            );
        }
        let config = PriorityConfig {
            weight_d: file.weight_d.to_rational()?,
            factors,
            tie_break: file.tie_break,
        };
        config.check()?;
        Ok(config)
    }
}

/// Partial config changes for what-if ranking.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorityOverrides {
    pub weight_d: Option<Weight>,
    pub factors: BTreeMap<String, FactorOverride>,
    pub tie_break: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorOverride {
    pub weight: Option<Weight>,
    pub levels: Option<Vec<String>>,
}

/// What the ranking needs to know about one defect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankInput {
    pub defect_id: String,
    pub d: BigRational,
    pub factor_values: BTreeMap<String, String>,
}

/// Level index of every configured factor; a factor the defect does not set
/// sits at its lowest level.
fn level_indices(
    input: &RankInput,
    config: &PriorityConfig,
) -> Result<BTreeMap<String, usize>, PriorityError> {
    for factor in input.factor_values.keys() {
        if !config.factors.contains_key(factor) {
            return Err(PriorityError::UnknownFactor {
                defect_id: input.defect_id.clone(),
                factor: factor.clone(),
            });
        }
    }
    config
        .factors
        .iter()
        .map(|(name, factor)| {
            let index = match input.factor_values.get(name) {
                None => 0,
                Some(level) => factor.level_index(level).ok_or_else(|| {
                    PriorityError::UnknownFactorLevel {
                        defect_id: input.defect_id.clone(),
                        factor: name.clone(),
                        level: level.clone(),
                    }
                })?,
            };
            Ok((name.clone(), index))
        })
        .collect()
}

pub fn score(input: &RankInput, config: &PriorityConfig) -> Result<BigRational, PriorityError> {
    let total = config.total_weight();
    if !total.is_positive() {
        return Err(PriorityError::EmptyConfig);
    }
    let indices = level_indices(input, config)?;
    let mut weighted = &config.weight_d * &input.d;
    for (name, factor) in &config.factors {
        weighted += &factor.weight * factor.normalized(indices[name]);
    }
    Ok(weighted / total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "RankedRecord", try_from = "RankedRecord")]
pub struct RankedDefect {
    pub defect_id: String,
    pub d: BigRational,
    pub factor_values: BTreeMap<String, String>,
    pub score: BigRational,
    pub rank: u32,
}

/// Serialized row of a ranking: decimal text for display plus exact values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedRecord {
    pub rank: u32,
    pub defect_id: String,
    #[serde(rename = "D")]
    pub d: String,
    #[serde(rename = "D_percent")]
    pub d_percent: String,
    #[serde(rename = "D_exact")]
    pub d_exact: String,
    pub score: String,
    pub score_exact: String,
    pub factor_values: BTreeMap<String, String>,
}

impl From<RankedDefect> for RankedRecord {
    fn from(row: RankedDefect) -> Self {
        RankedRecord {
            rank: row.rank,
            d: format_decimal(&row.d, DISPLAY_PLACES),
            d_percent: format_percent(&row.d),
            d_exact: format_exact(&row.d),
            score: format_decimal(&row.score, DISPLAY_PLACES),
            score_exact: format_exact(&row.score),
            defect_id: row.defect_id,
            factor_values: row.factor_values,
        }
    }
}

impl TryFrom<RankedRecord> for RankedDefect {
    type Error = DecimalError;

    fn try_from(record: RankedRecord) -> Result<Self, Self::Error> {
        Ok(RankedDefect {
            defect_id: record.defect_id,
            d: decimal::parse_decimal(&record.d_exact)?,
            factor_values: record.factor_values,
            score: decimal::parse_decimal(&record.score_exact)?,
            rank: record.rank,
        })
    }
}

struct Scored<'a> {
    input: &'a RankInput,
    score: BigRational,
    levels: BTreeMap<String, usize>,
}

fn compare(left: &Scored<'_>, right: &Scored<'_>, tie_break: &[String]) -> Ordering {
    right.score.cmp(&left.score).then_with(|| {
        for key in tie_break {
            let ord = match key.as_str() {
                D_KEY => right.input.d.cmp(&left.input.d),
                DEFECT_ID_KEY => left.input.defect_id.cmp(&right.input.defect_id),
                factor => right.levels.get(factor).cmp(&left.levels.get(factor)),
            };
            if ord != Ordering::Equal {
                return ord;
            }
        }
        Ordering::Equal
    })
}

/// Scores every defect and orders them: score descending, then the tie-break
/// keys (`D` and factors descending, `defect_id` ascending). Ranks are 1..n.
pub fn rank(inputs: &[RankInput], config: &PriorityConfig) -> Result<Vec<RankedDefect>, PriorityError> {
    config.check()?;
    let mut seen = HashSet::new();
    let mut scored = Vec::with_capacity(inputs.len());
    for input in inputs {
        if !seen.insert(input.defect_id.as_str()) {
            return Err(PriorityError::DuplicateDefect(input.defect_id.clone()));
        }
        scored.push(Scored {
            score: score(input, config)?,
            levels: level_indices(input, config)?,
            input,
        });
    }
    scored.sort_by(|l, r| compare(l, r, &config.tie_break));
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, s)| RankedDefect {
            defect_id: s.input.defect_id.clone(),
            d: s.input.d.clone(),
            factor_values: s.input.factor_values.clone(),
            score: s.score,
            rank: i as u32 + 1,
        })
        .collect())
}
