//! Test support: random istarml models, oracles that work on the raw text or
//! the generator's own description, fault injection and input mutation.
//!
//! Nothing here links against `defectdep-core`, so the oracles cannot share
//! its bugs.

use std::path::PathBuf;

pub mod fault;
pub mod gen;
pub mod mutate;
pub mod oracle;

pub use fault::{inject_fault, FaultClass};
pub use gen::{GenActor, GenDependency, GenDependum, GenModel, GenParams};
pub use mutate::mutate;
pub use oracle::{flow_oracle, tally_tags, FlowOracle, TagTally};

/// The workspace `fixtures/` directory.
pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("..")
        .join("..")
        .join("fixtures")
}

/// Every `.istarml` file under `fixtures/`, sorted.
pub fn fixture_models() -> Vec<PathBuf> {
    fn walk(dir: &std::path::Path, out: &mut Vec<PathBuf>) {
        let Ok(entries) = std::fs::read_dir(dir) else {
            return;
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(&path, out);
            } else if path.extension().is_some_and(|e| e == "istarml") {
                out.push(path);
            }
        }
    }
    let mut out = Vec::new();
    walk(&fixtures_dir(), &mut out);
    out.sort();
    out
}

/// Greatest common divisor, for comparing fractions.
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `a/b` in lowest terms; `b` must be non-zero.
pub fn reduce(a: u64, b: u64) -> (u64, u64) {
    let g = gcd(a, b).max(1);
    (a / g, b / g)
}
