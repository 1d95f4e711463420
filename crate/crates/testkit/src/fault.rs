//! Seeded faults for validator tests.

use rand::Rng;

use crate::gen::GenModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultClass {
    DuplicateId,
    DanglingIref,
    DanglingAref,
    UnknownKind,
    MissingDepender,
}

impl FaultClass {
    pub const ALL: [FaultClass; 5] = [
        FaultClass::DuplicateId,
        FaultClass::DanglingIref,
        FaultClass::DanglingAref,
        FaultClass::UnknownKind,
        FaultClass::MissingDepender,
    ];

    /// Error code the validator must report.
    pub fn expected_code(&self) -> &'static str {
        match self {
            FaultClass::DuplicateId => "DuplicateId",
            FaultClass::DanglingIref | FaultClass::DanglingAref => "DanglingReference",
            FaultClass::UnknownKind => "UnknownKind",
            FaultClass::MissingDepender => "MissingDepender",
        }
    }

    /// Whether `model` has the elements this fault needs.
    pub fn applicable(&self, model: &GenModel) -> bool {
        match self {
            FaultClass::DuplicateId => model.actors.len() >= 2 || model.dependums.len() >= 2,
            FaultClass::UnknownKind => !model.dependums.is_empty(),
            _ => !model.dependencies.is_empty(),
        }
    }
}

/// A copy of `model` carrying one fault of `class`, as istarml text.
///
/// Panics if the class is not [`applicable`](FaultClass::applicable).
pub fn inject_fault<R: Rng>(model: &GenModel, class: FaultClass, rng: &mut R) -> String {
    assert!(class.applicable(model), "{class:?} needs more elements");
    let mut faulty = model.clone();
    match class {
        FaultClass::DuplicateId => {
            let use_actors = faulty.actors.len() >= 2
                && (faulty.dependums.len() < 2 || rng.random_bool(0.5));
            if use_actors {
                let n = faulty.actors.len();
                let (i, j) = distinct_pair(n, rng);
                faulty.actors[j].id = faulty.actors[i].id.clone();
            } else {
                let n = faulty.dependums.len();
                let (i, j) = distinct_pair(n, rng);
                faulty.dependums[j].id = faulty.dependums[i].id.clone();
            }
        }
        FaultClass::DanglingIref => {
            let k = rng.random_range(0..faulty.dependencies.len());
            let ghost = faulty.dependums.len();
            faulty.dependums.push(crate::gen::GenDependum {
                id: "ghost-ielement".into(),
                name: "Ghost".into(),
                kind: "goal".into(),
            });
            faulty.dependencies[k].dependum = ghost;
            let xml = faulty.to_xml();
            // drop the declaration again so the reference dangles
            return xml.replace(
                "<ielement type=\"goal\" id=\"ghost-ielement\" name=\"Ghost\"/>\n",
                "",
            );
        }
        FaultClass::DanglingAref => {
            let k = rng.random_range(0..faulty.dependencies.len());
            let ghost = faulty.actors.len();
            faulty.actors.push(crate::gen::GenActor {
                id: "ghost-actor".into(),
                name: "Ghost".into(),
                actor_type: Some("agent"),
            });
            if rng.random_bool(0.5) {
                faulty.dependencies[k].dependers[0] = ghost;
            } else {
                faulty.dependencies[k].dependees[0] = ghost;
            }
            let xml = faulty.to_xml();
            return xml.replace("<actor type=\"agent\" id=\"ghost-actor\" name=\"Ghost\"/>\n", "");
        }
        FaultClass::UnknownKind => {
            let k = rng.random_range(0..faulty.dependums.len());
            faulty.dependums[k].kind = "wish".into();
        }
        FaultClass::MissingDepender => {
            let k = rng.random_range(0..faulty.dependencies.len());
            faulty.dependencies[k].dependers.clear();
        }
    }
    faulty.to_xml()
}

fn distinct_pair<R: Rng>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let j = (i + rng.random_range(1..n)) % n;
    (i, j)
}
