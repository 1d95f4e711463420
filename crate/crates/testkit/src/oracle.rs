//! Brute-force oracles.

use std::collections::BTreeSet;

use crate::gen::GenModel;
use crate::reduce;

/// Tag occurrences found by scanning istarml text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagTally {
    pub actor_ids: BTreeSet<String>,
    pub dependers: u64,
    pub dependees: u64,
}

impl TagTally {
    /// (actors, dependees, dependers)
    pub fn counts(&self) -> (u64, u64, u64) {
        (self.actor_ids.len() as u64, self.dependees, self.dependers)
    }
}

/// Counts `<actor>` ids and `<depender>`/`<dependee>` start tags with plain
/// string scanning. Attribute values are expected to be escaped, as written by
/// [`GenModel::to_xml`].
pub fn tally_tags(xml: &str) -> TagTally {
    let mut tally = TagTally::default();
    let mut rest = xml;
    while let Some(start) = rest.find('<') {
        rest = &rest[start + 1..];
        if let Some(comment) = rest.strip_prefix("!--") {
            rest = comment.find("-->").map_or("", |close| &comment[close + 3..]);
            continue;
        }
        let end = rest.find('>').unwrap_or(rest.len());
        let tag = &rest[..end];
        let name_len = tag
            .find(|c: char| c.is_whitespace() || c == '/')
            .unwrap_or(tag.len());
        match &tag[..name_len] {
            "actor" => {
                if let Some(at) = tag.find(" id=\"") {
                    let value = &tag[at + 5..];
                    let close = value.find('"').unwrap_or(value.len());
                    tally.actor_ids.insert(value[..close].to_string());
                }
            }
            "depender" => tally.dependers += 1,
            "dependee" => tally.dependees += 1,
            _ => {}
        }
        rest = &rest[end.min(rest.len())..];
    }
    tally
}

/// Expected flow of a seed set, worked out from hop distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowOracle {
    pub actors: u64,
    pub dependees: u64,
    pub dependers: u64,
    pub a: u64,
    pub b: u64,
}

impl FlowOracle {
    /// D as a fraction in lowest terms, or `None` when `b` is zero.
    pub fn d(&self) -> Option<(u64, u64)> {
        (self.b != 0).then(|| reduce(self.a, self.b))
    }
}

const FAR: usize = usize::MAX / 4;

/// Flow of `seeds` in `depth` hops.
///
/// Actors sharing a dependency (as owner, depender or dependee) are one hop
/// apart. All-pairs distances come from Floyd–Warshall; a dependency is in the
/// flow when one of its participants lies within `depth - 1` hops of a seed,
/// and the flow's actors are the known seeds plus those participants.
pub fn flow_oracle(model: &GenModel, seeds: &[String], depth: u32) -> FlowOracle {
    let n = model.actors.len();
    let participants: Vec<Vec<usize>> = model
        .dependencies
        .iter()
        .map(|d| {
            let mut p = vec![d.owner];
            p.extend(&d.dependers);
            p.extend(&d.dependees);
            p
        })
        .collect();

    let mut dist = vec![vec![FAR; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    for p in &participants {
        for &x in p {
            for &y in p {
                if x != y {
                    dist[x][y] = 1;
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }

    let seed_idx: Vec<usize> = (0..n)
        .filter(|&i| seeds.iter().any(|s| *s == model.actors[i].id))
        .collect();
    let near = |x: usize| seed_idx.iter().any(|&s| dist[s][x] < depth as usize);

    let mut reached: BTreeSet<usize> = seed_idx.iter().copied().collect();
    let (mut dependees, mut dependers) = (0u64, 0u64);
    for (dependency, p) in model.dependencies.iter().zip(&participants) {
        if p.iter().any(|&x| near(x)) {
            reached.extend(p.iter().copied());
            dependees += dependency.dependees.len() as u64;
            dependers += dependency.dependers.len() as u64;
        }
    }

    let (pc, pe, pr) = model.counts();
    let actors = reached.len() as u64;
    FlowOracle {
        actors,
        dependees,
        dependers,
        a: actors * (dependees + dependers),
        b: pc * (pe + pr),
    }
}
