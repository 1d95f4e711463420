//! The `defectdep` command line. Each command is a thin adapter over the
//! library; [`run`] takes the output streams so it can be driven in-process.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use defectdep_core::decimal::format_decimal;
use defectdep_core::graph::{count, extract_defect_flow};
use defectdep_core::istarml::{emit_istarml, parse_istarml_with, validate, ParseMode};
use defectdep_core::metric::DISPLAY_PLACES;
use defectdep_core::priority::{PriorityConfig, RankedRecord};
use defectdep_core::store::{DefectReport, ModelStore, DEFAULT_STORE_DIR};
use defectdep_core::workflow::{
    evaluate, rank_version, recompute_all, resolve_version, triage_report, MetricView,
    RankingView, RecomputeOptions,
};
use serde_json::Value;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Human-readable text.
    Table,
    /// One JSON document per invocation.
    Records,
}

#[derive(Debug, Parser)]
#[command(name = "defectdep", version, about = "Defect dependency metrics over istarml SD models")]
pub struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "DEFECTDEP_STORE", default_value = DEFAULT_STORE_DIR)]
    pub store: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate an istarml file.
    Validate {
        file: PathBuf,
    },
    /// Print actor, dependee and depender counts of an istarml file.
    Counts {
        file: PathBuf,
    },
    /// Store a product model under a new version id.
    IngestModel {
        file: PathBuf,
        #[arg(long = "version")]
        version: String,
    },
    /// Store defect reports (TOML).
    IngestDefect {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Extract a defect's flow from a model version.
    Extract {
        #[arg(long)]
        defect: String,
        #[arg(long = "version")]
        version: Option<String>,
        /// Write the subgraph as istarml instead of a summary.
        #[arg(long)]
        emit: bool,
    },
    /// Compute D for one defect against a model version.
    Metric {
        #[arg(long)]
        defect: String,
        #[arg(long = "version")]
        version: Option<String>,
        /// Leave out the computation time.
        #[arg(long)]
        no_timestamp: bool,
    },
    /// Recompute and store D for open defects against a model version.
    Recompute {
        #[arg(long = "version")]
        version: Option<String>,
        #[arg(long)]
        include_fixed: bool,
    },
    /// Rank open defects.
    Rank {
        #[arg(long = "version")]
        version: Option<String>,
        /// Priority config (TOML) to use instead of the stored one.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also store that config.
        #[arg(long, requires = "config")]
        save: bool,
    },
    /// Plain-text triage summary.
    Report {
        #[arg(long = "version")]
        version: Option<String>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

/// A failure with its typed code.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub exit: i32,
}

impl CliError {
    fn domain(code: &str, message: impl ToString) -> Self {
        CliError {
            code: code.to_string(),
            message: message.to_string(),
            exit: EXIT_DOMAIN,
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::domain("Io", format!("{}: {e}", path.display()))
    }
}

macro_rules! typed {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::domain(e.code(), &e)
            }
        }
    )*};
}

typed!(
    defectdep_core::store::StoreError,
    defectdep_core::workflow::WorkflowError,
    defectdep_core::istarml::ParseError,
    defectdep_core::graph::GraphError,
    defectdep_core::priority::PriorityError
);

type CliResult = Result<i32, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {}", e.code, e.message);
            e.exit
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write_json(out: &mut dyn Write, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("records serialize");
    writeln!(out, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn line(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { line($out, format_args!($($arg)*)) };
}

fn open(cli: &Cli) -> Result<ModelStore, CliError> {
    Ok(ModelStore::open(&cli.store)?)
}

/// Runs a parsed command.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult {
    let records = cli.format == Format::Records;
    match &cli.command {
        Command::Validate { file } => {
            let model = parse_istarml_with(&read(file)?, ParseMode::Tolerant, &file.display().to_string())?;
            let report = validate(&model);
            if records {
                write_json(out, &report)?;
            } else {
                out.write_all(report.to_string().as_bytes())
                    .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            }
            Ok(if report.ok { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Counts { file } => {
            let model = parse_istarml_with(&read(file)?, ParseMode::Tolerant, &file.display().to_string())?;
            let counts = count(&model);
            if records {
                write_json(out, &counts)?;
            } else {
                say!(out, "{counts}")?;
            }
            Ok(EXIT_OK)
        }
        Command::IngestModel { file, version } => {
            let mut store = open(cli)?;
            let entry = store.put_model(&read(file)?, version)?;
            if records {
                write_json(out, &entry)?;
            } else {
                say!(out, "stored {} ({})", entry.version, entry.counts())?;
            }
            Ok(EXIT_OK)
        }
        Command::IngestDefect { files } => {
            let mut store = open(cli)?;
            let mut stored = Vec::new();
            for file in files {
                let text = String::from_utf8(read(file)?)
                    .map_err(|e| CliError::domain("InvalidDefect", format!("{}: {e}", file.display())))?;
                let report = DefectReport::from_toml(&text)
                    .map_err(|e| CliError::domain("InvalidDefect", format!("{}: {e}", file.display())))?;
                stored.push(store.put_defect(report)?);
            }
            if records {
                write_json(out, &stored)?;
            } else {
                for report in &stored {
                    say!(out, "stored {} [{}]", report.defect_id, report.status)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Extract { defect, version, emit } => {
            let store = open(cli)?;
            let report = store.get_defect(defect)?;
            let version = resolve_version(&store, version.as_deref())?;
            let product = store.get_model(&version)?;
            let flow = extract_defect_flow(&product, defect, &report.seed_actors, report.depth)?;
            if *emit {
                let xml = emit_istarml(&flow.subgraph)
                    .map_err(|e| CliError::domain("InvalidModel", e))?;
                out.write_all(&xml)
                    .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
                return Ok(EXIT_OK);
            }
            let counts = count(&flow.subgraph);
            let mut actors: Vec<&str> = flow.subgraph.actors().map(|a| a.id.as_str()).collect();
            actors.sort();
            if records {
                write_json(
                    out,
                    &serde_json::json!({
                        "defect_id": flow.defect_id,
                        "version": version,
                        "depth": flow.depth,
                        "counts": counts,
                        "actors": actors,
                        "unknown_seeds": flow.unknown_seeds,
                    }),
                )?;
            } else {
                say!(out, "defect={} version={} depth={}", flow.defect_id, version, flow.depth)?;
                say!(out, "{counts}")?;
                say!(out, "actors: {}", actors.join(", "))?;
                if !flow.unknown_seeds.is_empty() {
                    say!(out, "unknown seeds: {}", flow.unknown_seeds.join(", "))?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Metric { defect, version, no_timestamp } => {
            let store = open(cli)?;
            store.get_defect(defect)?;
            let version = resolve_version(&store, version.as_deref())?;
            let evaluation = evaluate(&store, defect, &version)?;
            let view = MetricView::from(&evaluation);
            if records {
                let mut value = serde_json::to_value(&view).expect("records serialize");
                if *no_timestamp {
                    if let Value::Object(map) = &mut value {
                        map.remove("computed_at");
                    }
                }
                write_json(out, &value)?;
            } else {
                say!(out, "defect={} version={}", view.record.defect_id, view.record.product_version)?;
                say!(out, "a={} b={}", view.record.a, view.record.b)?;
                say!(out, "D={} ({}%)", view.record.d, view.record.d_percent)?;
                if !view.unknown_seeds.is_empty() {
                    say!(out, "unknown seeds: {}", view.unknown_seeds.join(", "))?;
                }
                if !no_timestamp {
                    say!(out, "computed_at={}", view.record.computed_at)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Recompute { version, include_fixed } => {
            let mut store = open(cli)?;
            let version = resolve_version(&store, version.as_deref())?;
            let entries = recompute_all(
                &mut store,
                &version,
                RecomputeOptions {
                    include_fixed: *include_fixed,
                },
            )?;
            if records {
                write_json(out, &serde_json::json!({"version": version, "entries": entries}))?;
                return Ok(EXIT_OK);
            }
            say!(out, "recomputed {} defect(s) against {version}", entries.len())?;
            for entry in &entries {
                match (&entry.result, &entry.error) {
                    (Some(result), _) => {
                        let now = result.d_decimal();
                        match &entry.previous {
                            Some(prev) => {
                                let delta = format_decimal(&(&result.d - &prev.d), DISPLAY_PLACES);
                                let sign = if delta.starts_with('-') { "" } else { "+" };
                                say!(
                                    out,
                                    "{}: D {} ({}) -> {} ({}) delta {sign}{delta}",
                                    entry.defect_id,
                                    prev.d_decimal(),
                                    prev.product_version,
                                    now,
                                    version
                                )?
                            }
                            None => say!(out, "{}: D {} ({}) new", entry.defect_id, now, version)?,
                        }
                    }
                    (None, Some(error)) => {
                        say!(out, "{}: error[{}] {}", entry.defect_id, error.code, error.message)?
                    }
                    (None, None) => {}
                }
                if !entry.unknown_seeds.is_empty() {
                    say!(out, "  unknown seeds: {}", entry.unknown_seeds.join(", "))?;
                }
            }
            let failed = entries.iter().any(|e| e.error.is_some());
            Ok(if failed { EXIT_DOMAIN } else { EXIT_OK })
        }
        Command::Rank { version, config, save } => {
            let mut store = open(cli)?;
            let version = resolve_version(&store, version.as_deref())?;
            let config = match config {
                Some(path) => {
                    let text = String::from_utf8(read(path)?)
                        .map_err(|e| CliError::domain("InvalidConfig", format!("{}: {e}", path.display())))?;
                    PriorityConfig::from_toml(&text)
                        .map_err(|e| CliError::domain("InvalidConfig", format!("{}: {e}", path.display())))?
                }
                None => store.priority_config(),
            };
            let ranking = rank_version(&store, &version, &config)?;
            if *save {
                store.put_priority_config(config)?;
            }
            let view = RankingView::from(&ranking);
            if records {
                write_json(out, &view)?;
            } else {
                print_ranking(out, &view)?;
            }
            Ok(EXIT_OK)
        }
        Command::Report { version } => {
            let store = open(cli)?;
            let version = resolve_version(&store, version.as_deref())?;
            let text = triage_report(&store, &version, &store.priority_config())?;
            out.write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            Ok(EXIT_OK)
        }
        Command::Serve { addr } => {
            let runtime = tokio::runtime::Runtime::new()
                .map_err(|e| CliError::domain("Io", e))?;
            say!(out, "listening on http://{addr}")?;
            let _ = out.flush();
            runtime
                .block_on(defectdep_service::serve(&cli.store, *addr))
                .map_err(|e| CliError::domain("Io", e))?;
            Ok(EXIT_OK)
        }
    }
}

fn print_ranking(out: &mut dyn Write, view: &RankingView) -> Result<(), CliError> {
    say!(out, "version {}", view.version)?;
    let width = view
        .rows
        .iter()
        .map(|r| r.defect_id.chars().count())
        .max()
        .unwrap_or(0)
        .max("defect".len());
    say!(out, "{:<4}  {:<width$}  {:>6}  {:>6}  {:>6}  factors", "rank", "defect", "D", "D%", "score")?;
    for row in &view.rows {
        let RankedRecord { rank, defect_id, d, d_percent, score, factor_values, .. } = row;
        let factors: Vec<String> = factor_values.iter().map(|(k, v)| format!("{k}={v}")).collect();
        say!(
            out,
            "{rank:<4}  {defect_id:<width$}  {d:>6}  {d_percent:>6}  {score:>6}  {}",
            factors.join(" ")
        )?;
    }
    for (defect, seeds) in &view.unknown_seeds {
        say!(out, "unknown seeds for {defect}: {}", seeds.join(", "))?;
    }
    Ok(())
}
