//! Versioned, file-based persistence.
//!
//! ```text
//! <root>/catalog.toml                          version index, in ingestion order
//! <root>/models/<version>/original.xml         document as uploaded
//! <root>/models/<version>/canonical.xml        canonical emission
//! <root>/models/<version>/meta.toml
//! <root>/defects/<defect_id>.toml
//! <root>/results/<defect_id>/<version>.toml    append-only, one per pair
//! <root>/config/priority.toml
//! ```
//!
//! Path components are percent-encoded outside `[A-Za-z0-9._-]` (and a
//! leading `.`). Every record is TOML with a fixed field order. Writes go
//! through a temporary file and a rename.
//!
//! A store has one writer at a time: mutating methods take `&mut self`, and a
//! process sharing a store across threads wraps it in a lock.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graph::{count, DependencyCounts};
use crate::istarml::{
    emit_istarml, parse_istarml_with, validate, ParseError, ParseMode, SdModel, ValidationReport,
};
use crate::metric::{now, MetricResult};
use crate::priority::{PriorityConfig, SEVERITY};

/// Default store directory, relative to the working directory.
pub const DEFAULT_STORE_DIR: &str = "defectdep-store";

const CATALOG_FILE: &str = "catalog.toml";
const CATALOG_FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("model has {} validation error(s)", .0.error_count())]
    InvalidModel(ValidationReport),
    #[error("version {0:?} already exists")]
    DuplicateVersion(String),
    #[error("defect {0:?} already exists")]
    DuplicateDefect(String),
    #[error("severity {level:?} is not one of {levels:?}")]
    UnknownSeverityLevel { level: String, levels: Vec<String> },
    #[error("invalid defect report: {0}")]
    InvalidDefect(String),
    #[error("invalid identifier {0:?}")]
    InvalidId(String),
    #[error("{kind} {id:?} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("result refers to missing {kind} {id:?}")]
    DanglingResult { kind: &'static str, id: String },
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Io { .. } => "Io",
            StoreError::Corrupt { .. } => "CorruptStore",
            StoreError::Parse(e) => e.code(),
            StoreError::InvalidModel(_) => "InvalidModel",
            StoreError::DuplicateVersion(_) => "DuplicateVersion",
            StoreError::DuplicateDefect(_) => "DuplicateDefect",
            StoreError::UnknownSeverityLevel { .. } => "UnknownSeverityLevel",
            StoreError::InvalidDefect(_) => "InvalidDefect",
            StoreError::InvalidId(_) => "InvalidId",
            StoreError::NotFound { .. } => "NotFound",
            StoreError::DanglingResult { .. } => "DanglingResult",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectStatus {
    #[default]
    Open,
    Fixed,
    Closed,
}

impl DefectStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DefectStatus::Open => "open",
            DefectStatus::Fixed => "fixed",
            DefectStatus::Closed => "closed",
        }
    }
}

impl fmt::Display for DefectStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DefectStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open" => Ok(DefectStatus::Open),
            "fixed" => Ok(DefectStatus::Fixed),
            "closed" => Ok(DefectStatus::Closed),
            other => Err(format!("unknown status {other:?} (open, fixed, closed)")),
        }
    }
}

fn default_depth() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectReport {
    pub defect_id: String,
    pub title: String,
    #[serde(default)]
    pub module: String,
    #[serde(default)]
    pub product: String,
    #[serde(default)]
    pub cause: String,
    #[serde(default)]
    pub fix: String,
    pub severity: String,
    #[serde(default)]
    pub status: DefectStatus,
    /// Actor ids the defect maps onto in the product model.
    #[serde(default)]
    pub seed_actors: Vec<String>,
    #[serde(default = "default_depth")]
    pub depth: u32,
    /// Levels of business factors other than severity.
    #[serde(default)]
    pub factor_values: BTreeMap<String, String>,
}

impl DefectReport {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("defect reports serialize")
    }

    /// Factor levels used for ranking: `factor_values` plus severity when the
    /// config scores it.
    pub fn rank_factors(&self, config: &PriorityConfig) -> BTreeMap<String, String> {
        let mut factors = self.factor_values.clone();
        if config.factors.contains_key(SEVERITY) {
            factors.insert(SEVERITY.to_string(), self.severity.clone());
        }
        factors
    }
}

/// One ingested product model version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionEntry {
    pub version: String,
    pub ingested_at: String,
    pub actors: u64,
    pub dependees: u64,
    pub dependers: u64,
}

impl VersionEntry {
    pub fn counts(&self) -> DependencyCounts {
        DependencyCounts::new(self.actors, self.dependees, self.dependers)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct CatalogFile {
    format: u32,
    #[serde(default)]
    versions: Vec<VersionEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelMeta {
    version: String,
    ingested_at: String,
    source_id: String,
    original_sha256: String,
    canonical_sha256: String,
}

pub struct ModelStore {
    root: PathBuf,
    versions: Vec<VersionEntry>,
    defects: BTreeMap<String, DefectReport>,
    results: HashMap<(String, String), MetricResult>,
    config: Option<PriorityConfig>,
}

impl fmt::Debug for ModelStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelStore")
            .field("root", &self.root)
            .field("versions", &self.versions.len())
            .field("defects", &self.defects.len())
            .field("results", &self.results.len())
            .finish()
    }
}

/// Percent-encodes an identifier into a single safe path component.
pub fn encode_component(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for (i, byte) in id.bytes().enumerate() {
        let plain = byte.is_ascii_alphanumeric()
            || byte == b'-'
            || byte == b'_'
            || (byte == b'.' && i > 0);
        if plain {
            out.push(byte as char);
        } else {
            out.push_str(&format!("%{byte:02X}"));
        }
    }
    out
}

fn check_id(id: &str) -> Result<(), StoreError> {
    if id.trim().is_empty() || id.chars().any(char::is_control) {
        return Err(StoreError::InvalidId(id.to_string()));
    }
    Ok(())
}

fn read_record<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().unwrap_or_default().to_string_lossy()
    ));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn write_record<T: Serialize>(path: &Path, record: &T) -> Result<(), StoreError> {
    let text = toml::to_string(record).map_err(|e| StoreError::Corrupt {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    write_atomic(path, text.as_bytes())
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn toml_files(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        if path.is_file() && name.ends_with(".toml") && !name.starts_with('.') {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

impl ModelStore {
    /// Opens the store at `root`, creating an empty one if none exists.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        let catalog_path = root.join(CATALOG_FILE);
        let catalog: CatalogFile = if catalog_path.exists() {
            read_record(&catalog_path)?
        } else {
            fs::create_dir_all(&root).map_err(io_err(&root))?;
            let fresh = CatalogFile {
                format: CATALOG_FORMAT,
                versions: Vec::new(),
            };
            write_record(&catalog_path, &fresh)?;
            fresh
        };
        if catalog.format != CATALOG_FORMAT {
            return Err(StoreError::Corrupt {
                path: catalog_path,
                message: format!("unsupported catalog format {}", catalog.format),
            });
        }

        let mut defects = BTreeMap::new();
        for path in toml_files(&root.join("defects"))? {
            let report: DefectReport = read_record(&path)?;
            defects.insert(report.defect_id.clone(), report);
        }

        let mut results = HashMap::new();
        let results_dir = root.join("results");
        if results_dir.exists() {
            for entry in fs::read_dir(&results_dir).map_err(io_err(&results_dir))? {
                let dir = entry.map_err(io_err(&results_dir))?.path();
                if !dir.is_dir() {
                    continue;
                }
                for path in toml_files(&dir)? {
                    let result: MetricResult = read_record(&path)?;
                    results.insert(
                        (result.defect_id.clone(), result.product_version.clone()),
                        result,
                    );
                }
            }
        }

        let config_path = root.join("config").join("priority.toml");
        let config = if config_path.exists() {
            Some(read_record(&config_path)?)
        } else {
            None
        };

        Ok(ModelStore {
            root,
            versions: catalog.versions,
            defects,
            results,
            config,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn model_dir(&self, version: &str) -> PathBuf {
        self.root.join("models").join(encode_component(version))
    }

    fn defect_path(&self, defect_id: &str) -> PathBuf {
        self.root
            .join("defects")
            .join(format!("{}.toml", encode_component(defect_id)))
    }

    fn result_path(&self, defect_id: &str, version: &str) -> PathBuf {
        self.root
            .join("results")
            .join(encode_component(defect_id))
            .join(format!("{}.toml", encode_component(version)))
    }

    fn write_catalog(&self) -> Result<(), StoreError> {
        let catalog = CatalogFile {
            format: CATALOG_FORMAT,
            versions: self.versions.clone(),
        };
        write_record(&self.root.join(CATALOG_FILE), &catalog)
    }

    /// Parses, validates and stores a product model under a new version id.
    pub fn put_model(&mut self, document: &[u8], version: &str) -> Result<VersionEntry, StoreError> {
        check_id(version)?;
        if self.has_version(version) {
            return Err(StoreError::DuplicateVersion(version.to_string()));
        }
        let model = parse_istarml_with(document, ParseMode::Tolerant, version)?;
        let report = validate(&model);
        if !report.ok {
            return Err(StoreError::InvalidModel(report));
        }
        let canonical = emit_istarml(&model).map_err(|e| match e {
            crate::istarml::EmitError::InvalidModel(report) => StoreError::InvalidModel(report),
        })?;

        let counts = count(&model);
        let ingested_at = now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
        let dir = self.model_dir(version);
        write_atomic(&dir.join("original.xml"), document)?;
        write_atomic(&dir.join("canonical.xml"), &canonical)?;
        write_record(
            &dir.join("meta.toml"),
            &ModelMeta {
                version: version.to_string(),
                ingested_at: ingested_at.clone(),
                source_id: version.to_string(),
                original_sha256: sha256_hex(document),
                canonical_sha256: sha256_hex(&canonical),
            },
        )?;

        let entry = VersionEntry {
            version: version.to_string(),
            ingested_at,
            actors: counts.actors,
            dependees: counts.dependees,
            dependers: counts.dependers,
        };
        self.versions.push(entry.clone());
        if let Err(e) = self.write_catalog() {
            self.versions.pop();
            return Err(e);
        }
        Ok(entry)
    }

    pub fn has_version(&self, version: &str) -> bool {
        self.versions.iter().any(|v| v.version == version)
    }

    /// Versions in ingestion order.
    pub fn list_versions(&self) -> &[VersionEntry] {
        &self.versions
    }

    pub fn latest_version(&self) -> Option<&VersionEntry> {
        self.versions.last()
    }

    pub fn version_entry(&self, version: &str) -> Result<&VersionEntry, StoreError> {
        self.versions
            .iter()
            .find(|v| v.version == version)
            .ok_or_else(|| StoreError::NotFound {
                kind: "version",
                id: version.to_string(),
            })
    }

    /// The canonical model of `version`.
    pub fn get_model(&self, version: &str) -> Result<SdModel, StoreError> {
        self.version_entry(version)?;
        let bytes = self.canonical_document(version)?;
        Ok(parse_istarml_with(&bytes, ParseMode::Tolerant, version)?)
    }

    pub fn original_document(&self, version: &str) -> Result<Vec<u8>, StoreError> {
        self.version_entry(version)?;
        let path = self.model_dir(version).join("original.xml");
        fs::read(&path).map_err(io_err(&path))
    }

    pub fn canonical_document(&self, version: &str) -> Result<Vec<u8>, StoreError> {
        self.version_entry(version)?;
        let path = self.model_dir(version).join("canonical.xml");
        fs::read(&path).map_err(io_err(&path))
    }

    /// Severity levels accepted by [`put_defect`](Self::put_defect).
    pub fn severity_levels(&self) -> Vec<String> {
        self.priority_config()
            .factors
            .get(SEVERITY)
            .map(|f| f.levels.clone())
            .unwrap_or_default()
    }

    pub fn put_defect(&mut self, report: DefectReport) -> Result<DefectReport, StoreError> {
        check_id(&report.defect_id)?;
        if self.defects.contains_key(&report.defect_id) {
            return Err(StoreError::DuplicateDefect(report.defect_id));
        }
        if report.depth == 0 {
            return Err(StoreError::InvalidDefect("depth must be at least 1".into()));
        }
        if report.seed_actors.is_empty() && report.status != DefectStatus::Open {
            return Err(StoreError::InvalidDefect(
                "only open defects may be left without seed actors".into(),
            ));
        }
        let levels = self.severity_levels();
        if !levels.is_empty() && !levels.contains(&report.severity) {
            return Err(StoreError::UnknownSeverityLevel {
                level: report.severity,
                levels,
            });
        }
        write_record(&self.defect_path(&report.defect_id), &report)?;
        self.defects.insert(report.defect_id.clone(), report.clone());
        Ok(report)
    }

    pub fn set_defect_status(
        &mut self,
        defect_id: &str,
        status: DefectStatus,
    ) -> Result<DefectReport, StoreError> {
        let mut report = self.get_defect(defect_id)?.clone();
        if report.seed_actors.is_empty() && status != DefectStatus::Open {
            return Err(StoreError::InvalidDefect(
                "only open defects may be left without seed actors".into(),
            ));
        }
        report.status = status;
        write_record(&self.defect_path(defect_id), &report)?;
        self.defects.insert(defect_id.to_string(), report.clone());
        Ok(report)
    }

    pub fn get_defect(&self, defect_id: &str) -> Result<&DefectReport, StoreError> {
        self.defects.get(defect_id).ok_or_else(|| StoreError::NotFound {
            kind: "defect",
            id: defect_id.to_string(),
        })
    }

    /// Defects ordered by id, optionally restricted to one status.
    pub fn list_defects(&self, status: Option<DefectStatus>) -> Vec<&DefectReport> {
        self.defects
            .values()
            .filter(|d| status.is_none_or(|s| d.status == s))
            .collect()
    }

    /// Stores a result unless one already exists for its (defect, version)
    /// pair; history is never overwritten. Returns the stored result.
    pub fn put_result(&mut self, result: MetricResult) -> Result<MetricResult, StoreError> {
        if !self.defects.contains_key(&result.defect_id) {
            return Err(StoreError::DanglingResult {
                kind: "defect",
                id: result.defect_id,
            });
        }
        if !self.has_version(&result.product_version) {
            return Err(StoreError::DanglingResult {
                kind: "version",
                id: result.product_version,
            });
        }
        let key = (result.defect_id.clone(), result.product_version.clone());
        if let Some(existing) = self.results.get(&key) {
            return Ok(existing.clone());
        }
        write_record(
            &self.result_path(&result.defect_id, &result.product_version),
            &result,
        )?;
        self.results.insert(key, result.clone());
        Ok(result)
    }

    pub fn get_result(&self, defect_id: &str, version: &str) -> Option<&MetricResult> {
        self.results
            .get(&(defect_id.to_string(), version.to_string()))
    }

    /// All results for a defect, newest version first.
    pub fn get_results(&self, defect_id: &str) -> Result<Vec<&MetricResult>, StoreError> {
        self.get_defect(defect_id)?;
        Ok(self
            .versions
            .iter()
            .rev()
            .filter_map(|v| self.get_result(defect_id, &v.version))
            .collect())
    }

    /// The stored priority config, or the default one.
    pub fn priority_config(&self) -> PriorityConfig {
        self.config.clone().unwrap_or_default()
    }

    pub fn put_priority_config(&mut self, config: PriorityConfig) -> Result<(), StoreError> {
        write_atomic(
            &self.root.join("config").join("priority.toml"),
            config.to_toml().as_bytes(),
        )?;
        self.config = Some(config);
        Ok(())
    }

    /// SHA-256 over every file in the store (relative path and contents), in
    /// path order.
    pub fn digest(&self) -> Result<String, StoreError> {
        let mut files = Vec::new();
        collect_files(&self.root, &self.root, &mut files)?;
        files.sort();
        let mut hasher = Sha256::new();
        for relative in files {
            let path = self.root.join(&relative);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            hasher.update(relative.to_string_lossy().as_bytes());
            hasher.update([0]);
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
        Ok(hex::encode(hasher.finalize()))
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), StoreError> {
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if !path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .ends_with(".tmp")
        {
            out.push(path.strip_prefix(root).unwrap_or(&path).to_path_buf());
        }
    }
    Ok(())
}

/// Parses a `DateTime` written by the store.
pub fn parse_timestamp(text: &str) -> Option<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(text)
        .ok()
        .map(|t| t.with_timezone(&Utc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::ratio;

    const STOCK: &str = include_str!("../../../fixtures/stock.istarml");

    fn defect(id: &str, status: DefectStatus) -> DefectReport {
        DefectReport {
            defect_id: id.into(),
            title: format!("defect {id}"),
            module: String::new(),
            product: String::new(),
            cause: String::new(),
            fix: String::new(),
            severity: "high".into(),
            status,
            seed_actors: vec!["_T3outX21pQD".into()],
            depth: 1,
            factor_values: BTreeMap::new(),
        }
    }

    fn result(defect_id: &str, version: &str) -> MetricResult {
        MetricResult {
            defect_id: defect_id.into(),
            product_version: version.into(),
            a: 1,
            b: 2,
            d: ratio(1, 2),
            computed_at: now(),
        }
    }

    #[test]
    fn put_and_get_model() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ModelStore::open(dir.path()).unwrap();
        let entry = store.put_model(STOCK.as_bytes(), "v1").unwrap();
        assert_eq!(entry.counts(), DependencyCounts::new(2, 2, 2));
        assert_eq!(store.list_versions()[0].version, "v1");

        let model = store.get_model("v1").unwrap();
        let original = crate::istarml::parse_istarml(STOCK.as_bytes()).unwrap();
        assert!(model.structurally_eq(&original));
        assert_eq!(model.source_id, "v1");
        assert_eq!(store.original_document("v1").unwrap(), STOCK.as_bytes());

        let err = store.put_model(STOCK.as_bytes(), "v1").unwrap_err();
        assert_eq!(err.code(), "DuplicateVersion");
    }

    #[test]
    fn invalid_models_are_not_stored() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ModelStore::open(dir.path()).unwrap();
        let broken = STOCK.replace("aref=\"_LrmG117xey\"", "aref=\"_gone\"");
        assert_eq!(
            store.put_model(broken.as_bytes(), "v1").unwrap_err().code(),
            "InvalidModel"
        );
        assert_eq!(
            store.put_model(b"<istarml", "v1").unwrap_err().code(),
            "MalformedXml"
        );
        assert_eq!(store.put_model(STOCK.as_bytes(), " ").unwrap_err().code(), "InvalidId");
        assert!(store.list_versions().is_empty());
        assert!(!dir.path().join("models").join("v1").exists());
    }

    #[test]
    fn versions_keep_ingestion_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ModelStore::open(dir.path()).unwrap();
        for v in ["v10", "v2", "a1"] {
            store.put_model(STOCK.as_bytes(), v).unwrap();
        }
        let order: Vec<_> = store.list_versions().iter().map(|v| v.version.as_str()).collect();
        assert_eq!(order, ["v10", "v2", "a1"]);
        assert_eq!(store.latest_version().unwrap().version, "a1");
    }

    #[test]
    fn defect_rules() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ModelStore::open(dir.path()).unwrap();
        let stored = store.put_defect(defect("D1", DefectStatus::Open)).unwrap();
        assert_eq!(stored.status, DefectStatus::Open);
        assert_eq!(
            store.put_defect(defect("D1", DefectStatus::Open)).unwrap_err().code(),
            "DuplicateDefect"
        );
        assert_eq!(store.put_defect(defect("", DefectStatus::Open)).unwrap_err().code(), "InvalidId");

        let mut bad = defect("D2", DefectStatus::Open);
        bad.severity = "apocalyptic".into();
        assert_eq!(store.put_defect(bad).unwrap_err().code(), "UnknownSeverityLevel");

        let mut unmapped = defect("D3", DefectStatus::Fixed);
        unmapped.seed_actors.clear();
        assert_eq!(store.put_defect(unmapped.clone()).unwrap_err().code(), "InvalidDefect");
        unmapped.status = DefectStatus::Open;
        store.put_defect(unmapped).unwrap();
        assert_eq!(
            store.set_defect_status("D3", DefectStatus::Closed).unwrap_err().code(),
            "InvalidDefect"
        );
        store.set_defect_status("D1", DefectStatus::Fixed).unwrap();
        let open: Vec<_> = store
            .list_defects(Some(DefectStatus::Open))
            .iter()
            .map(|d| d.defect_id.as_str())
            .collect();
        assert_eq!(open, ["D3"]);
    }

    #[test]
    fn defect_parses_from_minimal_toml() {
        let report: DefectReport = toml::from_str(
            "defect_id = \"Defect #01\"\ntitle = \"t\"\nseverity = \"high\"\n",
        )
        .unwrap();
        assert_eq!(report.status, DefectStatus::Open);
        assert_eq!(report.depth, 1);
        assert!(report.seed_actors.is_empty());
    }

    #[test]
    fn results_are_append_only_and_newest_first() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ModelStore::open(dir.path()).unwrap();
        store.put_model(STOCK.as_bytes(), "v1").unwrap();
        store.put_model(STOCK.as_bytes(), "v2").unwrap();
        store.put_defect(defect("D1", DefectStatus::Open)).unwrap();

        let first = store.put_result(result("D1", "v1")).unwrap();
        let mut changed = result("D1", "v1");
        changed.a = 2;
        changed.d = ratio(1, 1);
        assert_eq!(store.put_result(changed).unwrap(), first);
        store.put_result(result("D1", "v2")).unwrap();

        let versions: Vec<_> = store
            .get_results("D1")
            .unwrap()
            .iter()
            .map(|r| r.product_version.as_str())
            .collect();
        assert_eq!(versions, ["v2", "v1"]);

        assert_eq!(store.put_result(result("D9", "v1")).unwrap_err().code(), "DanglingResult");
        assert_eq!(store.put_result(result("D1", "v9")).unwrap_err().code(), "DanglingResult");
        assert_eq!(store.get_results("D9").unwrap_err().code(), "NotFound");
    }

    #[test]
    fn reopen_is_lossless_and_read_only() {
        let dir = tempfile::tempdir().unwrap();
        let digest = {
            let mut store = ModelStore::open(dir.path()).unwrap();
            store.put_model(STOCK.as_bytes(), "v1").unwrap();
            store.put_defect(defect("Defect #01", DefectStatus::Open)).unwrap();
            store.put_result(result("Defect #01", "v1")).unwrap();
            store.put_priority_config(PriorityConfig::metric_only()).unwrap();
            store.digest().unwrap()
        };
        let store = ModelStore::open(dir.path()).unwrap();
        assert_eq!(store.digest().unwrap(), digest);
        assert_eq!(store.list_versions().len(), 1);
        assert_eq!(store.get_defect("Defect #01").unwrap().title, "defect Defect #01");
        assert!(store.get_result("Defect #01", "v1").is_some());
        assert_eq!(store.priority_config(), PriorityConfig::metric_only());
        assert!(dir.path().join("defects").join("Defect%20%2301.toml").exists());
    }

    #[test]
    fn component_encoding() {
        assert_eq!(encode_component("v1.2"), "v1.2");
        assert_eq!(encode_component(".."), "%2E.");
        assert_eq!(encode_component("a/b"), "a%2Fb");
        assert_eq!(encode_component("é"), "%C3%A9");
    }
}
