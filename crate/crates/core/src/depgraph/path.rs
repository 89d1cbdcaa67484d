//! Shortest paths over the undirected projection of a dependency tree.
//!
//! Each step records the relation label, whether it moved from dependent to
//! head (`up`) or head to dependent (`down`), and the lemma of the node it
//! reached. The final node is replaced by the second endpoint's role name so
//! signatures generalize across argument pairs.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{DepGraph, DepGraphError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// dependent -> head
    Up,
    /// head -> dependent
    Down,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub relation: String,
    pub direction: Direction,
    /// Lemma of the node reached, or the end role placeholder.
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathSignature {
    pub steps: Vec<PathStep>,
    /// Role placeholders of the start and end mention.
    pub endpoint_roles: (String, String),
    /// Token indices visited, start head first.
    pub tokens: Vec<usize>,
}

impl PathSignature {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Canonical text used for frequency counting, e.g.
    /// `SCENE obl:up:sit advcl:down:hear obj:down:SOUND`.
    pub fn text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PathSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.endpoint_roles.0)?;
        for s in &self.steps {
            write!(f, " {}:{}:{}", s.relation, s.direction.as_str(), s.node)?;
        }
        Ok(())
    }
}

pub const SCENE_ROLE: &str = "SCENE";
pub const SOUND_ROLE: &str = "SOUND";

/// Shortest path from the head of `a` (role SCENE) to the head of `b`
/// (role SOUND).
pub fn shortest_path(graph: &DepGraph, a: Span, b: Span) -> Result<PathSignature, DepGraphError> {
    shortest_path_with_roles(graph, a, b, (SCENE_ROLE, SOUND_ROLE))
}

type Adjacency = Vec<Vec<(usize, (String, Direction))>>;

fn adjacency(graph: &DepGraph) -> Adjacency {
    let mut adj: Adjacency = vec![Vec::new(); graph.len() + 1];
    for e in graph.edges() {
        if e.head == 0 {
            continue;
        }
        adj[e.dependent].push((e.head, (e.relation.clone(), Direction::Up)));
        adj[e.head].push((e.dependent, (e.relation.clone(), Direction::Down)));
    }
    adj
}

/// Among equally short paths, the one whose `(label, direction)` sequence is
/// lexicographically smallest wins; remaining ties go to lower token indices.
pub fn shortest_path_with_roles(
    graph: &DepGraph,
    a: Span,
    b: Span,
    roles: (&str, &str),
) -> Result<PathSignature, DepGraphError> {
    if a.overlaps(&b) {
        let (ha, hb) = (graph.span_head(a)?, graph.span_head(b)?);
        if ha == hb {
            return Err(DepGraphError::IdenticalEndpoints);
        }
        return Err(DepGraphError::OverlappingSpans);
    }
    let from = graph.span_head(a)?;
    let to = graph.span_head(b)?;
    if from == to {
        return Err(DepGraphError::IdenticalEndpoints);
    }
    let adj = adjacency(graph);

    let mut dist = vec![usize::MAX; graph.len() + 1];
    dist[to] = 0;
    let mut queue = VecDeque::from([to]);
    while let Some(u) = queue.pop_front() {
        for (v, _) in &adj[u] {
            if dist[*v] == usize::MAX {
                dist[*v] = dist[u] + 1;
                queue.push_back(*v);
            }
        }
    }
    if dist[from] == usize::MAX {
        return Err(DepGraphError::NoPath { from, to });
    }

    // Walk layer by layer towards `to`, keeping every node reachable by the
    // smallest step key so far.
    let mut frontier = vec![from];
    let mut layers: Vec<BTreeMap<usize, usize>> = Vec::new();
    let mut keys = Vec::new();
    for _ in 0..dist[from] {
        let mut best: Option<&(String, Direction)> = None;
        for &u in &frontier {
            for (v, key) in &adj[u] {
                if dist[*v] + 1 == dist[u] && best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let best = best.expect("a closer neighbour exists on a shortest path").clone();
        let mut parents = BTreeMap::new();
        for &u in &frontier {
            for (v, key) in &adj[u] {
                if dist[*v] + 1 == dist[u] && *key == best {
                    parents.entry(*v).or_insert(u);
                }
            }
        }
        frontier = parents.keys().copied().collect();
        layers.push(parents);
        keys.push(best);
    }

    let mut tokens = vec![to];
    let mut cur = to;
    for layer in layers.iter().rev() {
        cur = layer[&cur];
        tokens.push(cur);
    }
    tokens.reverse();

    let last = keys.len() - 1;
    let steps = keys
        .into_iter()
        .enumerate()
        .map(|(i, (relation, direction))| PathStep {
            relation,
            direction,
            node: if i == last {
                roles.1.to_string()
            } else {
                graph.token(tokens[i + 1]).lemma.clone()
            },
        })
        .collect();
    Ok(PathSignature {
        steps,
        endpoint_roles: (roles.0.to_string(), roles.1.to_string()),
        tokens,
    })
}
