//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p defectdep-cli --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request};
use defectdep_core::decimal::ratio;
use defectdep_core::graph::{count, extract_defect_flow, DependencyCounts};
use defectdep_core::istarml::{emit_istarml, parse_istarml, parse_istarml_with, validate, ParseMode};
use defectdep_core::metric::{compute_metric, defect_dependency, MetricError};
use defectdep_core::priority::{rank, Factor, PriorityConfig, RankInput};
use defectdep_core::store::{DefectReport, ModelStore};
use defectdep_core::workflow::{recompute_all, RecomputeOptions};
use defectdep_testkit::{
    fixture_models, fixtures_dir, flow_oracle, inject_fault, mutate, tally_tags, FaultClass,
    GenModel, GenParams,
};
use http_body_util::BodyExt;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use tower::ServiceExt;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_defectdep")
}

fn cli(store: &Path, args: &[&str]) -> (i32, String, String) {
    let output = Command::new(bin())
        .arg("--store")
        .arg(store)
        .args(args)
        .output()
        .expect("cli runs");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn stock_exchange_dir() -> PathBuf {
    fixtures_dir().join("stock_exchange")
}

fn defect_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(stock_exchange_dir().join("defects"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

fn params() -> GenParams {
    GenParams {
        min_actors: 0,
        max_actors: 8,
        max_dependencies: 12,
    }
}

fn seeds_for(model: &GenModel, rng: &mut StdRng) -> Vec<String> {
    model
        .actors
        .iter()
        .filter(|_| rng.random_bool(0.35))
        .map(|a| a.id.clone())
        .collect()
}

fn fixture_counting() -> Outcome {
    let path = fixtures_dir().join("stock.istarml");
    let model = parse_istarml_with(&fs::read(&path).unwrap(), ParseMode::Strict, "stock").unwrap();
    ensure!(
        count(&model) == DependencyCounts::new(2, 2, 2),
        "library counts {}",
        count(&model)
    );
    let scratch = tempfile::tempdir().unwrap();
    let started = Instant::now();
    let (code, stdout, _) = cli(scratch.path(), &["counts", path.to_str().unwrap()]);
    let elapsed = started.elapsed();
    ensure!(code == 0, "exit code {code}");
    ensure!(
        stdout == "actors=2 dependees=2 dependers=2\n",
        "cli printed {stdout:?}"
    );
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("\"{}\" in {} ms", stdout.trim_end(), elapsed.as_millis()))
}

fn metric_endpoints() -> Outcome {
    let one = BigRational::from_integer(BigInt::from(1));
    let zero = BigRational::from_integer(BigInt::from(0));
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..200 {
        let p = DependencyCounts::new(
            rng.random_range(1..1000),
            rng.random_range(0..1000),
            rng.random_range(1..1000),
        );
        ensure!(defect_dependency(&p, &p).unwrap().d == one, "D != 1 for {p}");
        ensure!(
            defect_dependency(&DependencyCounts::default(), &p).unwrap().d == zero,
            "D != 0 for empty defect against {p}"
        );
    }

    // full-coverage defect through the store and CLI
    let store = tempfile::tempdir().unwrap();
    let stock = fixtures_dir().join("stock.istarml");
    let defect = store.path().join("full.toml");
    fs::write(
        &defect,
        "defect_id = \"FULL\"\ntitle = \"everything\"\nseverity = \"low\"\nseed_actors = [\"_T3outX21pQD\", \"_LrmG117xey\"]\n",
    )
    .unwrap();
    let (c1, _, e1) = cli(store.path(), &["ingest-model", stock.to_str().unwrap(), "--version", "v1"]);
    let (c2, _, e2) = cli(store.path(), &["ingest-defect", defect.to_str().unwrap()]);
    ensure!(c1 == 0 && c2 == 0, "ingest failed: {e1}{e2}");
    let (code, stdout, stderr) = cli(store.path(), &["metric", "--defect", "FULL", "--no-timestamp"]);
    ensure!(code == 0, "metric failed: {stderr}");
    ensure!(stdout.contains("D=1.0000 (100%)\n"), "cli printed {stdout:?}");
    Ok("D=1 and D=0 exact on 200 count triples; CLI prints D=1.0000 (100%)".into())
}

fn algebraic_identity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    for _ in 0..1000 {
        let b: u64 = rng.random_range(1..=u64::from(u32::MAX));
        let a: u64 = rng.random_range(0..=b);
        let (a_big, b_big) = (BigInt::from(a), BigInt::from(b));
        let lhs = BigRational::from_integer(BigInt::from(1))
            - BigRational::new(&b_big - &a_big, b_big.clone());
        ensure!(lhs == BigRational::new(a_big, b_big), "identity fails for a={a} b={b}");
    }
    Ok("1 - (b-a)/b == a/b for 1000 pairs".into())
}

fn oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(3);
    let mut compared = 0;
    while compared < 500 {
        let model = GenModel::random(&mut rng, params());
        let xml = model.to_xml();
        let product = parse_istarml(xml.as_bytes()).map_err(|e| e.to_string())?;
        let tally = tally_tags(&xml).counts();
        let counts = count(&product);
        ensure!(
            (counts.actors, counts.dependees, counts.dependers) == tally,
            "counts {counts} vs tag tally {tally:?}"
        );
        let seeds = seeds_for(&model, &mut rng);
        let depth = rng.random_range(1..=3);
        let flow = extract_defect_flow(&product, "D", &seeds, depth).unwrap();
        let expected = flow_oracle(&model, &seeds, depth);
        match (compute_metric(&product, "v", &flow), expected.d()) {
            (Ok(result), Some((n, d))) => ensure!(
                result.d == ratio(n, d) && result.a == expected.a && result.b == expected.b,
                "pipeline {}/{} vs oracle {}/{}",
                result.a,
                result.b,
                expected.a,
                expected.b
            ),
            (Err(MetricError::EmptyProductModel), None) => {}
            (got, want) => return Err(format!("pipeline {got:?} vs oracle {want:?}")),
        }
        compared += 1;
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{compared} models match exactly in {} ms", elapsed.as_millis()))
}

fn monotonicity() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let cases = 500;
    for _ in 0..cases {
        let model = GenModel::random(&mut rng, params());
        let product = parse_istarml(model.to_xml().as_bytes()).unwrap();
        let larger = seeds_for(&model, &mut rng);
        let smaller: Vec<String> = larger.iter().filter(|_| rng.random_bool(0.5)).cloned().collect();
        let depth = rng.random_range(1..=3);
        let at = |seeds: &[String], k: u32| count(&extract_defect_flow(&product, "D", seeds, k).unwrap().subgraph);
        ensure!(at(&larger, depth).within(&at(&larger, depth + 1)), "depth monotonicity broken");
        ensure!(at(&smaller, depth).within(&at(&larger, depth)), "seed monotonicity broken");

        let base = DependencyCounts::new(
            rng.random_range(0..20),
            rng.random_range(0..20),
            rng.random_range(0..20),
        );
        let bump = |c: &DependencyCounts, rng: &mut StdRng| {
            DependencyCounts::new(
                c.actors + rng.random_range(0..5),
                c.dependees + rng.random_range(0..5),
                c.dependers + rng.random_range(0..5),
            )
        };
        let grown = bump(&base, &mut rng);
        let product_counts = DependencyCounts::new(30, 30, 30);
        let d_small = defect_dependency(&base, &product_counts).unwrap().d;
        let d_large = defect_dependency(&grown, &product_counts).unwrap().d;
        ensure!(d_small <= d_large, "D fell when defect counts grew");
        let bigger_product = bump(&product_counts, &mut rng);
        let d_bigger = defect_dependency(&base, &bigger_product).unwrap().d;
        ensure!(d_bigger <= d_small, "D rose when product counts grew");
    }
    Ok(format!("4 properties, {cases} cases each, no counterexample"))
}

fn round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut inputs: Vec<(String, Vec<u8>)> = fixture_models()
        .into_iter()
        .map(|p| (p.display().to_string(), fs::read(p).unwrap()))
        .collect();
    let fixtures = inputs.len();
    for i in 0..100 {
        inputs.push((format!("generated #{i}"), GenModel::random(&mut rng, params()).to_xml().into_bytes()));
    }
    for (name, bytes) in &inputs {
        let model = parse_istarml(bytes).map_err(|e| format!("{name}: {e}"))?;
        let emitted = emit_istarml(&model).map_err(|e| format!("{name}: {e}"))?;
        let back = parse_istarml(&emitted).map_err(|e| format!("{name}: {e}"))?;
        ensure!(model.structurally_eq(&back), "{name} changed on round trip");
    }

    let corpus: Vec<Vec<u8>> = inputs.iter().map(|(_, b)| b.clone()).collect();
    let mut crashes = 0;
    for i in 0..10_000 {
        let input = mutate(&corpus[i % corpus.len()], &mut rng);
        let survived = catch_unwind(AssertUnwindSafe(|| {
            let _ = parse_istarml_with(&input, ParseMode::Strict, "fuzz");
            if let Ok(model) = parse_istarml(&input) {
                let _ = validate(&model);
                let _ = emit_istarml(&model);
            }
        }));
        if survived.is_err() {
            crashes += 1;
        }
    }
    ensure!(crashes == 0, "{crashes} of 10000 mutated inputs crashed");
    Ok(format!("100 generated + {fixtures} fixtures equal; 10000 mutations, 0 crashes"))
}

fn fault_detection() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut summary = Vec::new();
    for class in FaultClass::ALL {
        let (mut injected, mut detected) = (0, 0);
        while injected < 100 {
            let model = GenModel::random(
                &mut rng,
                GenParams {
                    min_actors: 2,
                    ..params()
                },
            );
            if !class.applicable(&model) {
                continue;
            }
            let xml = inject_fault(&model, class, &mut rng);
            injected += 1;
            if let Ok(parsed) = parse_istarml(xml.as_bytes()) {
                let report = validate(&parsed);
                if !report.ok && report.has_code(class.expected_code()) {
                    detected += 1;
                }
            }
        }
        ensure!(detected == injected, "{class:?}: {detected}/{injected}");
        summary.push(format!("{}:{detected}/{injected}", class.expected_code()));
    }
    Ok(summary.join(" "))
}

fn load_stock_exchange(store: &mut ModelStore) {
    store
        .put_model(&fs::read(stock_exchange_dir().join("product.istarml")).unwrap(), "v1")
        .unwrap();
    for path in defect_files() {
        let report = DefectReport::from_toml(&fs::read_to_string(path).unwrap()).unwrap();
        store.put_defect(report).unwrap();
    }
}

fn recompute_semantics() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut store = ModelStore::open(dir.path()).unwrap();
    load_stock_exchange(&mut store);
    recompute_all(&mut store, "v1", RecomputeOptions::default()).map_err(|e| e.to_string())?;

    // two new actors linked only to each other
    let grown = fs::read_to_string(stock_exchange_dir().join("product.istarml"))
        .unwrap()
        .replace(
            "</diagram>",
            "<ielement type=\"resource\" id=\"quote_feed\" name=\"Quote Feed\"/>\n\
             <actor type=\"role\" id=\"market_desk\" name=\"Market Desk\">\n\
             <dependency>\n<depender iref=\"quote_feed\" aref=\"market_desk\"/>\n\
             <dependee iref=\"quote_feed\" aref=\"exchange_feed\"/>\n</dependency>\n</actor>\n\
             <actor type=\"agent\" id=\"exchange_feed\" name=\"Exchange Feed\"/>\n</diagram>",
        );
    store.put_model(grown.as_bytes(), "v2").map_err(|e| e.to_string())?;
    let entries = recompute_all(&mut store, "v2", RecomputeOptions::default()).map_err(|e| e.to_string())?;
    drop(store);

    let store = ModelStore::open(dir.path()).unwrap();
    let mut lines = Vec::new();
    for entry in &entries {
        let history = store.get_results(&entry.defect_id).map_err(|e| e.to_string())?;
        let versions: Vec<&str> = history.iter().map(|r| r.product_version.as_str()).collect();
        ensure!(versions == ["v2", "v1"], "{} history {versions:?}", entry.defect_id);
        ensure!(
            history[0].d < history[1].d,
            "{}: D {} -> {}",
            entry.defect_id,
            history[1].d_decimal(),
            history[0].d_decimal()
        );
        lines.push(format!("{} {}->{}", entry.defect_id, history[1].d_decimal(), history[0].d_decimal()));
    }
    ensure!(entries.len() == 3, "{} defects recomputed", entries.len());
    Ok(lines.join(", "))
}

fn ranking_determinism() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let severities = ["low", "medium", "high", "critical"];
    let mut inputs: Vec<RankInput> = (0..40)
        .map(|i| {
            let mut factor_values = BTreeMap::new();
            factor_values.insert("severity".to_string(), severities[rng.random_range(0..4)].to_string());
            RankInput {
                defect_id: format!("DEF-{i:02}"),
                d: ratio(rng.random_range(0..=4), 4),
                factor_values,
            }
        })
        .collect();
    let config = PriorityConfig::default();
    let reference = rank(&inputs, &config).map_err(|e| e.to_string())?;
    for run in 0..10 {
        inputs.shuffle(&mut rng);
        ensure!(rank(&inputs, &config).unwrap() == reference, "shuffled run {run} differs");
    }

    let seven = BigRational::from_integer(BigInt::from(7));
    let scaled = PriorityConfig {
        weight_d: &config.weight_d * &seven,
        factors: config
            .factors
            .iter()
            .map(|(name, f)| {
                let levels: Vec<&str> = f.levels.iter().map(String::as_str).collect();
                (name.clone(), Factor::new(&f.weight * &seven, &levels))
            })
            .collect(),
        tie_break: config.tie_break.clone(),
    };
    let times_seven = rank(&inputs, &scaled).unwrap();
    let ranks = |rows: &[defectdep_core::priority::RankedDefect]| -> Vec<(String, u32)> {
        rows.iter().map(|r| (r.defect_id.clone(), r.rank)).collect()
    };
    ensure!(ranks(&times_seven) == ranks(&reference), "ranks changed under x7 weights");
    Ok("10 shuffled runs identical; x7 weights keep all 40 ranks".into())
}

async fn api(app: &axum::Router, method: Method, uri: &str, body: &str) -> Value {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    serde_json::from_slice(&bytes).unwrap()
}

fn without_timestamp(mut value: Value) -> Value {
    if let Value::Object(map) = &mut value {
        map.remove("computed_at");
    }
    value
}

fn cli_api_parity() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let product = stock_exchange_dir().join("product.istarml");
    let (code, _, err) = cli(dir.path(), &["ingest-model", product.to_str().unwrap(), "--version", "v1"]);
    ensure!(code == 0, "ingest-model: {err}");
    let mut args = vec!["ingest-defect".to_string()];
    args.extend(defect_files().iter().map(|p| p.display().to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let (code, _, err) = cli(dir.path(), &refs);
    ensure!(code == 0, "ingest-defect: {err}");

    let (code, rank_out, err) = cli(dir.path(), &["--format", "records", "rank", "--version", "v1"]);
    ensure!(code == 0, "rank: {err}");
    let cli_rank: Value = serde_json::from_str(&rank_out).unwrap();
    let ids = ["Defect #01", "Defect #02", "Defect #03"];
    let mut cli_metrics = Vec::new();
    for id in ids {
        let (code, out, err) = cli(
            dir.path(),
            &["--format", "records", "metric", "--defect", id, "--version", "v1", "--no-timestamp"],
        );
        ensure!(code == 0, "metric {id}: {err}");
        cli_metrics.push(serde_json::from_str::<Value>(&out).unwrap());
    }

    let store = ModelStore::open(dir.path()).unwrap();
    let app = defectdep_service::router(defectdep_service::shared(store));
    let runtime = tokio::runtime::Runtime::new().unwrap();
    let (api_rank, api_metrics) = runtime.block_on(async {
        let ranked = api(&app, Method::POST, "/api/rank?version=v1", "").await;
        let mut metrics = Vec::new();
        for id in ids {
            let uri = format!("/api/defects/{}/metric?version=v1", id.replace(' ', "%20").replace('#', "%23"));
            metrics.push(api(&app, Method::GET, &uri, "").await);
        }
        (ranked, metrics)
    });

    ensure!(api_rank["ok"] == true, "api rank failed: {api_rank}");
    ensure!(api_rank["data"] == cli_rank, "rank differs:\nCLI {cli_rank}\nAPI {}", api_rank["data"]);
    for (cli_metric, api_metric) in cli_metrics.iter().zip(&api_metrics) {
        let api_data = without_timestamp(api_metric["data"].clone());
        ensure!(*cli_metric == api_data, "metric differs:\nCLI {cli_metric}\nAPI {api_data}");
    }

    // hand-scored oracle: 0.5·D + 0.3·s/3 + 0.2·c/2 with D = 40/128, 24/128, 24/128
    let order: Vec<&str> = cli_rank["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["defect_id"].as_str().unwrap())
        .collect();
    ensure!(order == ["Defect #02", "Defect #03", "Defect #01"], "order {order:?}");
    let scores: Vec<&str> = cli_rank["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["score_exact"].as_str().unwrap())
        .collect();
    ensure!(scores == ["19/32", "79/160", "73/160"], "scores {scores:?}");
    Ok(format!("rank and 3 metrics identical; order {}", order.join(" > ")))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("fixture counting", fixture_counting),
        ("metric endpoints", metric_endpoints),
        ("algebraic identity", algebraic_identity),
        ("oracle equivalence", oracle_equivalence),
        ("monotonicity suite", monotonicity),
        ("round-trip and parser fuzzing", round_trip),
        ("validator fault detection", fault_detection),
        ("recompute semantics", recompute_semantics),
        ("ranking determinism and scaling", ranking_determinism),
        ("CLI/API parity", cli_api_parity),
    ];

    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(check).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", n + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {reason}", n + 1);
            }
        }
    }
    std::panic::set_hook(default_hook);
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
