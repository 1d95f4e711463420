use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ActorType, Dependency, DependumKind, Opaque, SdModel, ISTARML_VERSION};

/// Finding codes reported by [`validate`].
pub mod codes {
    pub const DUPLICATE_ID: &str = "DuplicateId";
    pub const MISSING_ID: &str = "MissingId";
    pub const DANGLING_REFERENCE: &str = "DanglingReference";
    pub const UNKNOWN_KIND: &str = "UnknownKind";
    pub const UNKNOWN_ACTOR_TYPE: &str = "UnknownActorType";
    pub const MISSING_DEPENDER: &str = "MissingDepender";
    pub const MISSING_DEPENDEE: &str = "MissingDependee";
    pub const DUPLICATE_ENDPOINT: &str = "DuplicateEndpoint";
    pub const EMPTY_NAME: &str = "EmptyName";
    pub const MISMATCHED_DEPENDUM: &str = "MismatchedDependum";
    pub const OWNER_NOT_ENDPOINT: &str = "OwnerNotEndpoint";
    pub const MISPLACED_ELEMENT: &str = "MisplacedElement";
    pub const UNSUPPORTED_VERSION: &str = "UnsupportedVersion";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: String,
    /// XPath-like location, e.g. `/istarml/diagram[1]/actor[2]/@id`.
    pub location: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn from_findings(findings: Vec<Finding>) -> Self {
        let ok = findings.iter().all(|f| f.severity != Severity::Error);
        ValidationReport { ok, findings }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "ok={} errors={} warnings={}",
            self.ok,
            self.error_count(),
            self.findings.len() - self.error_count()
        )?;
        for finding in &self.findings {
            writeln!(
                f,
                "{} {} {} {}",
                finding.severity, finding.code, finding.location, finding.message
            )?;
        }
        Ok(())
    }
}

const STRUCTURAL_NAMES: &[&str] = &[
    "istarml",
    "diagram",
    "actor",
    "ielement",
    "dependency",
    "depender",
    "dependee",
];

struct Collector {
    findings: Vec<Finding>,
}

impl Collector {
    fn push(&mut self, severity: Severity, code: &str, location: String, message: String) {
        self.findings.push(Finding {
            severity,
            code: code.to_string(),
            location,
            message,
        });
    }

    fn error(&mut self, code: &str, location: String, message: String) {
        self.push(Severity::Error, code, location, message);
    }

    fn warning(&mut self, code: &str, location: String, message: String) {
        self.push(Severity::Warning, code, location, message);
    }

    fn misplaced(&mut self, parent: &str, annotations: &[Opaque]) {
        for (name, index) in indexed_by_name(annotations) {
            if STRUCTURAL_NAMES.contains(&name) {
                self.warning(
                    codes::MISPLACED_ELEMENT,
                    format!("{parent}/{name}[{index}]"),
                    format!("<{name}> is not allowed here and is ignored"),
                );
            }
        }
    }
}

/// Pairs each annotation's name with its 1-based position among same-named
/// siblings.
fn indexed_by_name(annotations: &[Opaque]) -> Vec<(&str, usize)> {
    let mut seen: Vec<(&str, usize)> = Vec::new();
    annotations
        .iter()
        .map(|a| {
            let name = a.name.as_str();
            let index = match seen.iter_mut().find(|(n, _)| *n == name) {
                Some((_, count)) => {
                    *count += 1;
                    *count
                }
                None => {
                    seen.push((name, 1));
                    1
                }
            };
            (name, index)
        })
        .collect()
}

/// Checks every model invariant and reports all violations as findings.
///
/// Locations are paths into the document the model was parsed from.
pub fn validate(model: &SdModel) -> ValidationReport {
    let mut out = Collector {
        findings: Vec::new(),
    };
    if model.version != ISTARML_VERSION {
        out.error(
            codes::UNSUPPORTED_VERSION,
            "/istarml/@version".into(),
            format!("version {:?} is not \"{ISTARML_VERSION}\"", model.version),
        );
    }
    out.misplaced("/istarml", &model.annotations);

    let mut seen_ids: HashSet<&str> = HashSet::new();
    let mut actor_ids: HashSet<&str> = HashSet::new();
    let mut dependum_ids: HashSet<&str> = HashSet::new();

    // ids first, so that references can be resolved across diagrams
    for (d, diagram) in model.diagrams.iter().enumerate() {
        let base = format!("/istarml/diagram[{}]", d + 1);
        for (i, dependum) in diagram.dependums.iter().enumerate() {
            let path = format!("{base}/ielement[{}]", i + 1);
            check_id(&mut out, &mut seen_ids, &dependum.id, &path);
            dependum_ids.insert(dependum.id.as_str());
        }
        for (i, actor) in diagram.actors.iter().enumerate() {
            let path = format!("{base}/actor[{}]", i + 1);
            check_id(&mut out, &mut seen_ids, &actor.id, &path);
            actor_ids.insert(actor.id.as_str());
        }
    }

    for (d, diagram) in model.diagrams.iter().enumerate() {
        let base = format!("/istarml/diagram[{}]", d + 1);
        if diagram.name.trim().is_empty() {
            out.warning(codes::EMPTY_NAME, base.clone(), "diagram has no name".into());
        }
        out.misplaced(&base, &diagram.annotations);

        for (i, dependum) in diagram.dependums.iter().enumerate() {
            let path = format!("{base}/ielement[{}]", i + 1);
            if dependum.name.trim().is_empty() {
                out.warning(
                    codes::EMPTY_NAME,
                    path.clone(),
                    format!("ielement {:?} has no name", dependum.id),
                );
            }
            if let DependumKind::Unknown(raw) = &dependum.kind {
                let location = if raw.is_empty() { path.clone() } else { format!("{path}/@type") };
                out.error(
                    codes::UNKNOWN_KIND,
                    location,
                    format!("ielement type {raw:?} is not one of goal, task, resource, softgoal"),
                );
            }
        }

        for (i, actor) in diagram.actors.iter().enumerate() {
            let path = format!("{base}/actor[{}]", i + 1);
            if actor.name.trim().is_empty() {
                out.warning(
                    codes::EMPTY_NAME,
                    path.clone(),
                    format!("actor {:?} has no name", actor.id),
                );
            }
            if let ActorType::Unknown(raw) = &actor.actor_type {
                out.error(
                    codes::UNKNOWN_ACTOR_TYPE,
                    format!("{path}/@type"),
                    format!("actor type {raw:?} is not one of role, agent, position, plain"),
                );
            }
            out.misplaced(&path, &actor.annotations);
            for (k, dependency) in actor.dependencies.iter().enumerate() {
                let dep_path = format!("{path}/dependency[{}]", k + 1);
                check_dependency(
                    &mut out,
                    dependency,
                    &actor.id,
                    &dep_path,
                    &actor_ids,
                    &dependum_ids,
                );
            }
        }
    }

    ValidationReport::from_findings(out.findings)
}

fn check_id<'m>(out: &mut Collector, seen: &mut HashSet<&'m str>, id: &'m str, path: &str) {
    if id.is_empty() {
        out.error(codes::MISSING_ID, path.to_string(), "element has no id".into());
    } else if !seen.insert(id) {
        out.error(
            codes::DUPLICATE_ID,
            format!("{path}/@id"),
            format!("id {id:?} is already used by another element"),
        );
    }
}

fn check_dependency(
    out: &mut Collector,
    dependency: &Dependency,
    owner: &str,
    path: &str,
    actor_ids: &HashSet<&str>,
    dependum_ids: &HashSet<&str>,
) {
    out.misplaced(path, &dependency.annotations);
    for (tag, entries, missing_code) in [
        ("depender", &dependency.dependers, codes::MISSING_DEPENDER),
        ("dependee", &dependency.dependees, codes::MISSING_DEPENDEE),
    ] {
        if entries.is_empty() {
            out.error(missing_code, path.to_string(), format!("dependency has no {tag}"));
        }
        for (n, endpoint) in entries.iter().enumerate() {
            let ep_path = format!("{path}/{tag}[{}]", n + 1);
            if n > 0 {
                out.error(
                    codes::DUPLICATE_ENDPOINT,
                    ep_path.clone(),
                    format!("dependency has more than one {tag}"),
                );
            }
            for (attr, value, targets, what) in [
                ("iref", &endpoint.iref, dependum_ids, "ielement"),
                ("aref", &endpoint.aref, actor_ids, "actor"),
            ] {
                if value.is_empty() {
                    out.error(
                        codes::DANGLING_REFERENCE,
                        ep_path.clone(),
                        format!("{tag} has no {attr}"),
                    );
                } else if !targets.contains(value.as_str()) {
                    out.error(
                        codes::DANGLING_REFERENCE,
                        format!("{ep_path}/@{attr}"),
                        format!("{attr} {value:?} does not name an {what}"),
                    );
                }
            }
            out.misplaced(&ep_path, &endpoint.annotations);
        }
    }

    if let (Some(depender), Some(dependee)) =
        (dependency.dependers.first(), dependency.dependees.first())
    {
        let both_resolve = dependum_ids.contains(depender.iref.as_str())
            && dependum_ids.contains(dependee.iref.as_str());
        if both_resolve && depender.iref != dependee.iref {
            out.warning(
                codes::MISMATCHED_DEPENDUM,
                format!("{path}/dependee[1]/@iref"),
                format!(
                    "depender names ielement {:?} but dependee names {:?}",
                    depender.iref, dependee.iref
                ),
            );
        }
    }
    if dependency.endpoints().next().is_some() && !dependency.endpoints().any(|e| e.aref == owner) {
        out.warning(
            codes::OWNER_NOT_ENDPOINT,
            path.to_string(),
            format!("enclosing actor {owner:?} is neither depender nor dependee"),
        );
    }
}
