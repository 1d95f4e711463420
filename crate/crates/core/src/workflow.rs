//! Store-level operations: per-defect evaluation, recomputation against a new
//! model version, ranking and the triage report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{extract_defect_flow, DefectFlow, GraphError};
use crate::istarml::SdModel;
use crate::metric::{compute_metric, MetricError, MetricRecord, MetricResult};
use crate::priority::{
    rank, PriorityConfig, PriorityError, RankInput, RankedDefect, RankedRecord, SEVERITY,
};
use crate::store::{DefectReport, DefectStatus, ModelStore, StoreError};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("defect {defect_id:?}: {source}")]
    Metric {
        defect_id: String,
        #[source]
        source: MetricError,
    },
    #[error(transparent)]
    Priority(#[from] PriorityError),
    #[error("the store holds no model versions")]
    NoVersions,
}

impl WorkflowError {
    pub fn code(&self) -> &'static str {
        match self {
            WorkflowError::Store(e) => e.code(),
            WorkflowError::Graph(e) => e.code(),
            WorkflowError::Metric { source, .. } => source.code(),
            WorkflowError::Priority(e) => e.code(),
            WorkflowError::NoVersions => "NotFound",
        }
    }
}

/// `version`, or the most recently ingested one.
pub fn resolve_version(store: &ModelStore, version: Option<&str>) -> Result<String, WorkflowError> {
    match version {
        Some(v) => Ok(store.version_entry(v)?.version.clone()),
        None => store
            .latest_version()
            .map(|v| v.version.clone())
            .ok_or(WorkflowError::NoVersions),
    }
}

/// A defect's flow and metric against one version.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub flow: DefectFlow,
    pub result: MetricResult,
    /// Whether `result` came from the store rather than being computed now.
    pub stored: bool,
}

fn flow_for(product: &SdModel, defect: &DefectReport) -> Result<DefectFlow, WorkflowError> {
    Ok(extract_defect_flow(
        product,
        &defect.defect_id,
        &defect.seed_actors,
        defect.depth,
    )?)
}

fn metric_for(
    product: &SdModel,
    version: &str,
    flow: &DefectFlow,
) -> Result<MetricResult, WorkflowError> {
    compute_metric(product, version, flow).map_err(|source| WorkflowError::Metric {
        defect_id: flow.defect_id.clone(),
        source,
    })
}

/// Evaluates a defect without writing anything. A stored result for the pair
/// is returned as is.
pub fn evaluate(
    store: &ModelStore,
    defect_id: &str,
    version: &str,
) -> Result<Evaluation, WorkflowError> {
    let defect = store.get_defect(defect_id)?;
    let product = store.get_model(version)?;
    evaluate_with(store, &product, version, defect)
}

fn evaluate_with(
    store: &ModelStore,
    product: &SdModel,
    version: &str,
    defect: &DefectReport,
) -> Result<Evaluation, WorkflowError> {
    let flow = flow_for(product, defect)?;
    if let Some(result) = store.get_result(&defect.defect_id, version) {
        return Ok(Evaluation {
            flow,
            result: result.clone(),
            stored: true,
        });
    }
    let result = metric_for(product, version, &flow)?;
    Ok(Evaluation {
        flow,
        result,
        stored: false,
    })
}

/// Serialized form of an [`Evaluation`], shared by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricView {
    #[serde(flatten)]
    pub record: MetricRecord,
    pub stored: bool,
    pub unknown_seeds: Vec<String>,
}

impl From<&Evaluation> for MetricView {
    fn from(evaluation: &Evaluation) -> Self {
        MetricView {
            record: evaluation.result.clone().into(),
            stored: evaluation.stored,
            unknown_seeds: evaluation.flow.unknown_seeds.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RecomputeOptions {
    /// Also recompute defects marked fixed. Closed defects are never touched.
    pub include_fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecomputeEntry {
    pub defect_id: String,
    /// Newest stored result from an earlier version, if any.
    pub previous: Option<MetricResult>,
    pub result: Option<MetricResult>,
    pub error: Option<ErrorInfo>,
    pub unknown_seeds: Vec<String>,
}

/// Recomputes and stores D for every open (and optionally fixed) defect
/// against `version`. Per-defect failures are reported in the entry; results
/// already stored for the version are kept.
pub fn recompute_all(
    store: &mut ModelStore,
    version: &str,
    options: RecomputeOptions,
) -> Result<Vec<RecomputeEntry>, WorkflowError> {
    let product = store.get_model(version)?;
    let defects: Vec<DefectReport> = store
        .list_defects(None)
        .into_iter()
        .filter(|d| match d.status {
            DefectStatus::Open => true,
            DefectStatus::Fixed => options.include_fixed,
            DefectStatus::Closed => false,
        })
        .cloned()
        .collect();

    let mut entries = Vec::with_capacity(defects.len());
    for defect in defects {
        let previous = store
            .get_results(&defect.defect_id)?
            .into_iter()
            .find(|r| r.product_version != version)
            .cloned();
        let mut entry = RecomputeEntry {
            defect_id: defect.defect_id.clone(),
            previous,
            result: None,
            error: None,
            unknown_seeds: Vec::new(),
        };
        let outcome = flow_for(&product, &defect).and_then(|flow| {
            entry.unknown_seeds = flow.unknown_seeds.clone();
            match store.get_result(&defect.defect_id, version) {
                Some(existing) => Ok(existing.clone()),
                None => {
                    let fresh = metric_for(&product, version, &flow)?;
                    Ok(store.put_result(fresh)?)
                }
            }
        });
        match outcome {
            Ok(result) => entry.result = Some(result),
            Err(e) => {
                entry.error = Some(ErrorInfo {
                    code: e.code().to_string(),
                    message: e.to_string(),
                })
            }
        }
        entries.push(entry);
    }
    Ok(entries)
}

/// Open defects of one version, ranked.
#[derive(Debug, Clone)]
pub struct Ranking {
    pub version: String,
    pub rows: Vec<RankedDefect>,
    /// Defect id to seeds missing from the version.
    pub unknown_seeds: BTreeMap<String, Vec<String>>,
}

/// Serialized form of a [`Ranking`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingView {
    pub version: String,
    pub rows: Vec<RankedRecord>,
    pub unknown_seeds: BTreeMap<String, Vec<String>>,
}

impl From<&Ranking> for RankingView {
    fn from(ranking: &Ranking) -> Self {
        RankingView {
            version: ranking.version.clone(),
            rows: ranking.rows.iter().cloned().map(RankedRecord::from).collect(),
            unknown_seeds: ranking.unknown_seeds.clone(),
        }
    }
}

/// Ranks the open defects against `version`, using stored results where they
/// exist and computing the rest without storing them.
pub fn rank_version(
    store: &ModelStore,
    version: &str,
    config: &PriorityConfig,
) -> Result<Ranking, WorkflowError> {
    config.check()?;
    let product = store.get_model(version)?;
    let mut inputs = Vec::new();
    let mut unknown_seeds = BTreeMap::new();
    for defect in store.list_defects(Some(DefectStatus::Open)) {
        let evaluation = evaluate_with(store, &product, version, defect)?;
        if !evaluation.flow.unknown_seeds.is_empty() {
            unknown_seeds.insert(defect.defect_id.clone(), evaluation.flow.unknown_seeds);
        }
        inputs.push(RankInput {
            defect_id: defect.defect_id.clone(),
            d: evaluation.result.d,
            factor_values: defect.rank_factors(config),
        });
    }
    Ok(Ranking {
        version: version.to_string(),
        rows: rank(&inputs, config)?,
        unknown_seeds,
    })
}

/// Plain-text triage summary of one version.
pub fn triage_report(
    store: &ModelStore,
    version: &str,
    config: &PriorityConfig,
) -> Result<String, WorkflowError> {
    let entry = store.version_entry(version)?.clone();
    let ranking = rank_version(store, version, config)?;
    let count_status = |s| store.list_defects(Some(s)).len();

    let mut out = String::new();
    let _ = writeln!(out, "Triage report for version {version}");
    let _ = writeln!(out, "product: {}", entry.counts());
    let _ = writeln!(
        out,
        "defects: {} open, {} fixed, {} closed",
        count_status(DefectStatus::Open),
        count_status(DefectStatus::Fixed),
        count_status(DefectStatus::Closed)
    );
    if ranking.rows.is_empty() {
        let _ = writeln!(out, "\nno open defects");
        return Ok(out);
    }

    let _ = writeln!(out);
    let id_width = ranking
        .rows
        .iter()
        .map(|r| r.defect_id.chars().count())
        .max()
        .unwrap_or(0)
        .max("defect".len());
    let _ = writeln!(
        out,
        "{:<4}  {:<id_width$}  {:>6}  {:>6}  {:>6}  {:<9}  title",
        "rank", "defect", "D", "D%", "score", SEVERITY
    );
    for row in &ranking.rows {
        let record = RankedRecord::from(row.clone());
        let defect = store.get_defect(&row.defect_id)?;
        let _ = writeln!(
            out,
            "{:<4}  {:<id_width$}  {:>6}  {:>6}  {:>6}  {:<9}  {}",
            record.rank,
            record.defect_id,
            record.d,
            record.d_percent,
            record.score,
            defect.severity,
            defect.title
        );
    }
    if !ranking.unknown_seeds.is_empty() {
        let _ = writeln!(out, "\nseeds missing from this version:");
        for (defect_id, seeds) in &ranking.unknown_seeds {
            let _ = writeln!(out, "  {defect_id}: {}", seeds.join(", "));
        }
    }
    Ok(out)
}
