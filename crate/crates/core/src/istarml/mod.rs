//! Typed representation of istarml Strategic Dependency documents.
//!
//! The canonical schema accepted here:
//!
//! ```text
//! istarml(version="1.0")
//!   diagram(name)
//!     ielement(type, id, name)          goal | task | resource | softgoal
//!     actor(type, id, name)             role | agent | position | plain
//!       dependency
//!         depender(iref, aref)          iref = ielement id, aref = actor id
//!         dependee(iref, aref)
//! ```
//!
//! Anything else (`graphic`, SR-level links, boundaries, ...) is kept as an
//! [`Opaque`] annotation on the nearest known element and ignored by analytics.

mod emit;
mod parse;
mod validate;

use std::fmt;

pub use emit::{emit_istarml, EmitError};
pub use parse::{parse_istarml, parse_istarml_with, ParseError, ParseMode};
pub use validate::{codes, validate, Finding, Severity, ValidationReport};

/// The only istarml version this crate reads and writes.
pub const ISTARML_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SdModel {
    pub version: String,
    pub diagrams: Vec<Diagram>,
    /// Assigned at ingest; not part of structural equality.
    pub source_id: String,
    pub annotations: Vec<Opaque>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagram {
    pub name: String,
    pub dependums: Vec<Dependum>,
    pub actors: Vec<Actor>,
    pub annotations: Vec<Opaque>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Actor {
    pub id: String,
    pub name: String,
    pub actor_type: ActorType,
    /// Dependencies declared inside this actor's element.
    pub dependencies: Vec<Dependency>,
    pub annotations: Vec<Opaque>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActorType {
    Role,
    Agent,
    Position,
    Plain,
    /// Preserved by tolerant parsing, reported by validation.
    Unknown(String),
}

impl ActorType {
    pub fn parse(raw: &str) -> Self {
        match raw {
            "role" => ActorType::Role,
            "agent" => ActorType::Agent,
            "position" => ActorType::Position,
            "plain" | "actor" => ActorType::Plain,
            other => ActorType::Unknown(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            ActorType::Role => "role",
            ActorType::Agent => "agent",
            ActorType::Position => "position",
            ActorType::Plain => "plain",
            ActorType::Unknown(raw) => raw,
        }
    }
}

impl fmt::Display for ActorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An `ielement`: the object a dependency is formed around.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dependum {
    pub id: String,
    pub name: String,
    pub kind: DependumKind,
    pub annotations: Vec<Opaque>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DependumKind {
    Goal,
    Task,
    Resource,
    Softgoal,
    Unknown(String),
}

impl DependumKind {
    pub fn parse(raw: &str) -> Self {
        match raw {
            "goal" => DependumKind::Goal,
            "task" => DependumKind::Task,
            "resource" => DependumKind::Resource,
            "softgoal" => DependumKind::Softgoal,
            other => DependumKind::Unknown(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            DependumKind::Goal => "goal",
            DependumKind::Task => "task",
            DependumKind::Resource => "resource",
            DependumKind::Softgoal => "softgoal",
            DependumKind::Unknown(raw) => raw,
        }
    }
}

impl fmt::Display for DependumKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A `dependency` element as written in the document.
///
/// A well-formed dependency has exactly one depender and one dependee entry;
/// anything else is kept so that validation can report it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dependency {
    pub dependers: Vec<Endpoint>,
    pub dependees: Vec<Endpoint>,
    pub annotations: Vec<Opaque>,
}

/// A `depender` or `dependee` entry.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Endpoint {
    /// Dependum (`ielement`) id.
    pub iref: String,
    /// Actor id.
    pub aref: String,
    pub annotations: Vec<Opaque>,
}

impl Endpoint {
    pub fn new(iref: impl Into<String>, aref: impl Into<String>) -> Self {
        Endpoint {
            iref: iref.into(),
            aref: aref.into(),
            annotations: Vec::new(),
        }
    }
}

/// An element outside the SD vocabulary, retained verbatim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Opaque {
    pub name: String,
    pub attributes: Vec<(String, String)>,
    pub text: String,
    pub children: Vec<Opaque>,
}

/// Flattened view of one complete dependency.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DependencyLink {
    pub dependum_ref: String,
    pub depender_ref: String,
    pub dependee_ref: String,
    pub owner_actor: String,
}

impl Dependency {
    pub fn new(depender: Endpoint, dependee: Endpoint) -> Self {
        Dependency {
            dependers: vec![depender],
            dependees: vec![dependee],
            annotations: Vec::new(),
        }
    }

    /// The link view, present only when the dependency has exactly one
    /// depender and one dependee.
    pub fn link(&self, owner: &str) -> Option<DependencyLink> {
        match (self.dependers.as_slice(), self.dependees.as_slice()) {
            ([depender], [dependee]) => Some(DependencyLink {
                dependum_ref: depender.iref.clone(),
                depender_ref: depender.aref.clone(),
                dependee_ref: dependee.aref.clone(),
                owner_actor: owner.to_string(),
            }),
            _ => None,
        }
    }

    pub fn endpoints(&self) -> impl Iterator<Item = &Endpoint> {
        self.dependers.iter().chain(self.dependees.iter())
    }
}

impl Diagram {
    pub fn new(name: impl Into<String>) -> Self {
        Diagram {
            name: name.into(),
            dependums: Vec::new(),
            actors: Vec::new(),
            annotations: Vec::new(),
        }
    }
}

impl Actor {
    pub fn new(id: impl Into<String>, name: impl Into<String>, actor_type: ActorType) -> Self {
        Actor {
            id: id.into(),
            name: name.into(),
            actor_type,
            dependencies: Vec::new(),
            annotations: Vec::new(),
        }
    }
}

impl Dependum {
    pub fn new(id: impl Into<String>, name: impl Into<String>, kind: DependumKind) -> Self {
        Dependum {
            id: id.into(),
            name: name.into(),
            kind,
            annotations: Vec::new(),
        }
    }
}

impl SdModel {
    pub fn new(source_id: impl Into<String>) -> Self {
        SdModel {
            version: ISTARML_VERSION.to_string(),
            diagrams: Vec::new(),
            source_id: source_id.into(),
            annotations: Vec::new(),
        }
    }

    pub fn actors(&self) -> impl Iterator<Item = &Actor> {
        self.diagrams.iter().flat_map(|d| d.actors.iter())
    }

    pub fn dependums(&self) -> impl Iterator<Item = &Dependum> {
        self.diagrams.iter().flat_map(|d| d.dependums.iter())
    }

    /// Every dependency paired with the id of the actor that declares it.
    pub fn dependencies(&self) -> impl Iterator<Item = (&Actor, &Dependency)> {
        self.actors()
            .flat_map(|a| a.dependencies.iter().map(move |dep| (a, dep)))
    }

    pub fn links(&self) -> Vec<DependencyLink> {
        self.dependencies()
            .filter_map(|(owner, dep)| dep.link(&owner.id))
            .collect()
    }

    pub fn actor(&self, id: &str) -> Option<&Actor> {
        self.actors().find(|a| a.id == id)
    }

    /// Returns a copy with every id-keyed collection sorted, so that two models
    /// differing only in element order compare equal. Diagram order and
    /// annotation order are kept as written.
    pub fn canonicalized(&self) -> SdModel {
        let mut model = self.clone();
        for diagram in &mut model.diagrams {
            diagram
                .dependums
                .sort_by(|a, b| (&a.id, &a.name, &a.kind).cmp(&(&b.id, &b.name, &b.kind)));
            diagram
                .actors
                .sort_by(|a, b| (&a.id, &a.name).cmp(&(&b.id, &b.name)));
            for actor in &mut diagram.actors {
                for dep in &mut actor.dependencies {
                    dep.dependers.sort();
                    dep.dependees.sort();
                }
                actor.dependencies.sort();
            }
        }
        model
    }

    /// Equality of content, ignoring `source_id` and the order of ids within
    /// a diagram.
    pub fn structurally_eq(&self, other: &SdModel) -> bool {
        let mut left = self.canonicalized();
        let mut right = other.canonicalized();
        left.source_id.clear();
        right.source_id.clear();
        left == right
    }
}
