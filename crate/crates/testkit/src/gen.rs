//! Random valid SD models, rendered straight to istarml text.

use rand::seq::IndexedRandom;
use rand::Rng;

pub const DEPENDUM_KINDS: [&str; 4] = ["goal", "task", "resource", "softgoal"];
const ACTOR_TYPES: [Option<&str>; 5] = [
    Some("role"),
    Some("agent"),
    Some("position"),
    Some("actor"),
    None,
];
const WORDS: [&str; 12] = [
    "Stock", "Data", "Portfolio", "Trend", "Payment", "Gateway", "User", "Broker", "Ledger",
    "Quote", "Alert", "Audit",
];
const ODD_WORDS: [&str; 6] = ["R&D", "a<b", "\"quoted\"", "naïve", "tab\there", "x > y"];

#[derive(Debug, Clone)]
pub struct GenActor {
    pub id: String,
    pub name: String,
    pub actor_type: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct GenDependum {
    pub id: String,
    pub name: String,
    pub kind: String,
}

/// A dependency declared inside `actors[owner]`. Endpoint entries are actor
/// indices (one of each in a valid model); every entry names `dependum` as
/// its iref.
#[derive(Debug, Clone)]
pub struct GenDependency {
    pub owner: usize,
    pub dependum: usize,
    pub dependers: Vec<usize>,
    pub dependees: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GenModel {
    pub diagram: String,
    pub actors: Vec<GenActor>,
    pub dependums: Vec<GenDependum>,
    pub dependencies: Vec<GenDependency>,
    /// Emit `<graphic>` children and stray unknown elements.
    pub decorate: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub min_actors: usize,
    pub max_actors: usize,
    pub max_dependencies: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            min_actors: 0,
            max_actors: 8,
            max_dependencies: 12,
        }
    }
}

fn name<R: Rng>(rng: &mut R) -> String {
    let words = rng.random_range(1..=3);
    (0..words)
        .map(|_| {
            if rng.random_bool(0.1) {
                *ODD_WORDS.choose(rng).unwrap()
            } else {
                *WORDS.choose(rng).unwrap()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl GenModel {
    pub fn random<R: Rng>(rng: &mut R, params: GenParams) -> GenModel {
        let n_actors = rng.random_range(params.min_actors..=params.max_actors);
        let actors: Vec<GenActor> = (0..n_actors)
            .map(|i| GenActor {
                id: format!("a{i}"),
                name: name(rng),
                actor_type: *ACTOR_TYPES.choose(rng).unwrap(),
            })
            .collect();

        let n_deps = if n_actors == 0 {
            0
        } else {
            rng.random_range(0..=params.max_dependencies)
        };
        let mut dependums = Vec::new();
        let mut dependencies = Vec::new();
        for _ in 0..n_deps {
            // a fresh dependum most of the time, sometimes a shared one
            let dependum = if dependums.is_empty() || rng.random_bool(0.8) {
                dependums.push(GenDependum {
                    id: format!("e{}", dependums.len()),
                    name: name(rng),
                    kind: DEPENDUM_KINDS.choose(rng).unwrap().to_string(),
                });
                dependums.len() - 1
            } else {
                rng.random_range(0..dependums.len())
            };
            let depender = rng.random_range(0..n_actors);
            // a self-dependency only when there is a single actor
            let dependee = if n_actors == 1 {
                depender
            } else {
                (depender + rng.random_range(1..n_actors)) % n_actors
            };
            let dependers = vec![depender];
            let dependees = vec![dependee];
            let owner = if rng.random_bool(0.9) {
                dependers[0]
            } else {
                rng.random_range(0..n_actors)
            };
            dependencies.push(GenDependency {
                owner,
                dependum,
                dependers,
                dependees,
            });
        }

        // an occasional unreferenced dependum
        if rng.random_bool(0.1) {
            dependums.push(GenDependum {
                id: format!("e{}", dependums.len()),
                name: name(rng),
                kind: DEPENDUM_KINDS.choose(rng).unwrap().to_string(),
            });
        }

        GenModel {
            diagram: name(rng),
            actors,
            dependums,
            dependencies,
            decorate: rng.random_bool(0.5),
        }
    }

    /// Actors, dependee entries and depender entries as generated.
    pub fn counts(&self) -> (u64, u64, u64) {
        let dependees = self.dependencies.iter().map(|d| d.dependees.len()).sum::<usize>();
        let dependers = self.dependencies.iter().map(|d| d.dependers.len()).sum::<usize>();
        (self.actors.len() as u64, dependees as u64, dependers as u64)
    }

    /// Every dependum is named by some dependency.
    pub fn all_dependums_referenced(&self) -> bool {
        (0..self.dependums.len()).all(|i| self.dependencies.iter().any(|d| d.dependum == i))
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str("<istarml version=\"1.0\">\n");
        out.push_str(&format!("<diagram name=\"{}\">\n", escape(&self.diagram)));
        for dependum in &self.dependums {
            out.push_str(&format!(
                "<ielement type=\"{}\" id=\"{}\" name=\"{}\"/>\n",
                escape(&dependum.kind),
                escape(&dependum.id),
                escape(&dependum.name)
            ));
        }
        if self.decorate {
            out.push_str("<note author=\"qa\">generated <b>model</b></note>\n");
        }
        for (index, actor) in self.actors.iter().enumerate() {
            let type_attr = actor
                .actor_type
                .map(|t| format!("type=\"{t}\" "))
                .unwrap_or_default();
            let owned: Vec<&GenDependency> = self
                .dependencies
                .iter()
                .filter(|d| d.owner == index)
                .collect();
            let open = format!(
                "<actor {type_attr}id=\"{}\" name=\"{}\"",
                escape(&actor.id),
                escape(&actor.name)
            );
            if owned.is_empty() {
                out.push_str(&open);
                out.push_str("/>\n");
                continue;
            }
            out.push_str(&open);
            out.push_str(">\n");
            for dependency in owned {
                out.push_str("<dependency>\n");
                let iref = &self.dependums[dependency.dependum].id;
                for (tag, entries) in [
                    ("depender", &dependency.dependers),
                    ("dependee", &dependency.dependees),
                ] {
                    for &entry in entries {
                        let attrs = format!(
                            "iref=\"{}\" aref=\"{}\"",
                            escape(iref),
                            escape(&self.actors[entry].id)
                        );
                        if self.decorate {
                            out.push_str(&format!(
                                "<{tag} {attrs}>\n<graphic content=\"SVG\"/>\n</{tag}>\n"
                            ));
                        } else {
                            out.push_str(&format!("<{tag} {attrs}/>\n"));
                        }
                    }
                }
                out.push_str("</dependency>\n");
            }
            out.push_str("</actor>\n");
        }
        out.push_str("</diagram>\n</istarml>\n");
        out
    }
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}
