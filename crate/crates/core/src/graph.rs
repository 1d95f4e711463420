//! Counting and defect-flow extraction over an [`SdModel`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::istarml::{Diagram, SdModel};

/// Actors, dependee entries and depender entries of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct DependencyCounts {
    pub actors: u64,
    pub dependees: u64,
    pub dependers: u64,
}

impl DependencyCounts {
    pub fn new(actors: u64, dependees: u64, dependers: u64) -> Self {
        DependencyCounts {
            actors,
            dependees,
            dependers,
        }
    }

    /// Component-wise `<=`.
    pub fn within(&self, other: &DependencyCounts) -> bool {
        self.actors <= other.actors
            && self.dependees <= other.dependees
            && self.dependers <= other.dependers
    }

    pub fn is_zero(&self) -> bool {
        *self == DependencyCounts::default()
    }
}

impl fmt::Display for DependencyCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "actors={} dependees={} dependers={}",
            self.actors, self.dependees, self.dependers
        )
    }
}

/// Distinct actor ids, plus every depender and dependee entry as written.
pub fn count(model: &SdModel) -> DependencyCounts {
    let actors: HashSet<&str> = model.actors().map(|a| a.id.as_str()).collect();
    let (dependers, dependees) = model
        .dependencies()
        .fold((0u64, 0u64), |(r, e), (_, dep)| {
            (r + dep.dependers.len() as u64, e + dep.dependees.len() as u64)
        });
    DependencyCounts {
        actors: actors.len() as u64,
        dependees,
        dependers,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("extraction depth must be at least 1")]
    InvalidDepth,
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        "InvalidDepth"
    }
}

/// The part of a product model implicated by one defect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectFlow {
    pub defect_id: String,
    pub seed_actors: Vec<String>,
    pub depth: u32,
    pub subgraph: SdModel,
    /// Seeds that name no actor in the product model.
    pub unknown_seeds: Vec<String>,
}

struct Indexed<'m> {
    diagram: usize,
    actor: usize,
    dependency: usize,
    participants: Vec<&'m str>,
}

/// Breadth-first closure from `seeds` over dependencies, `depth` hops deep.
///
/// Each hop takes every dependency with a reached participant (its depender,
/// dependee or enclosing actor) and reaches the others. The subgraph keeps the
/// reached actors, the included dependencies and the ielements those
/// dependencies name. Seeds absent from the product are reported in
/// [`DefectFlow::unknown_seeds`] and otherwise ignored.
pub fn extract_defect_flow(
    product: &SdModel,
    defect_id: &str,
    seeds: &[String],
    depth: u32,
) -> Result<DefectFlow, GraphError> {
    if depth == 0 {
        return Err(GraphError::InvalidDepth);
    }
    let known: HashSet<&str> = product.actors().map(|a| a.id.as_str()).collect();

    let mut reached: HashSet<&str> = HashSet::new();
    let mut unknown_seeds = Vec::new();
    for seed in seeds {
        if known.contains(seed.as_str()) {
            reached.insert(seed.as_str());
        } else if !unknown_seeds.contains(seed) {
            unknown_seeds.push(seed.clone());
        }
    }

    let mut pending: Vec<Indexed<'_>> = Vec::new();
    for (d, diagram) in product.diagrams.iter().enumerate() {
        for (a, actor) in diagram.actors.iter().enumerate() {
            for (k, dependency) in actor.dependencies.iter().enumerate() {
                let participants = std::iter::once(actor.id.as_str())
                    .chain(dependency.endpoints().map(|e| e.aref.as_str()))
                    .filter(|id| known.contains(id))
                    .collect();
                pending.push(Indexed {
                    diagram: d,
                    actor: a,
                    dependency: k,
                    participants,
                });
            }
        }
    }

    let mut included: HashSet<(usize, usize, usize)> = HashSet::new();
    for _ in 0..depth {
        let (hit, rest): (Vec<_>, Vec<_>) = pending
            .into_iter()
            .partition(|dep| dep.participants.iter().any(|p| reached.contains(p)));
        pending = rest;
        if hit.is_empty() {
            break;
        }
        for dep in hit {
            reached.extend(dep.participants.iter().copied());
            included.insert((dep.diagram, dep.actor, dep.dependency));
        }
    }

    let subgraph = build_subgraph(product, defect_id, &reached, &included);
    Ok(DefectFlow {
        defect_id: defect_id.to_string(),
        seed_actors: seeds.to_vec(),
        depth,
        subgraph,
        unknown_seeds,
    })
}

fn build_subgraph(
    product: &SdModel,
    defect_id: &str,
    reached: &HashSet<&str>,
    included: &HashSet<(usize, usize, usize)>,
) -> SdModel {
    let mut subgraph = SdModel::new(format!("{}#{}", product.source_id, defect_id));
    subgraph.version = product.version.clone();
    subgraph.annotations = product.annotations.clone();

    let mut named: BTreeSet<&str> = BTreeSet::new();
    for &(d, a, k) in included {
        let dependency = &product.diagrams[d].actors[a].dependencies[k];
        named.extend(dependency.endpoints().map(|e| e.iref.as_str()));
    }

    for (d, diagram) in product.diagrams.iter().enumerate() {
        let mut part = Diagram::new(diagram.name.clone());
        part.annotations = diagram.annotations.clone();
        part.dependums = diagram
            .dependums
            .iter()
            .filter(|dependum| named.contains(dependum.id.as_str()))
            .cloned()
            .collect();
        for (a, actor) in diagram.actors.iter().enumerate() {
            if !reached.contains(actor.id.as_str()) {
                continue;
            }
            let mut kept = actor.clone();
            kept.dependencies = actor
                .dependencies
                .iter()
                .enumerate()
                .filter(|(k, _)| included.contains(&(d, a, *k)))
                .map(|(_, dep)| dep.clone())
                .collect();
            part.actors.push(kept);
        }
        subgraph.diagrams.push(part);
    }
    subgraph
}
