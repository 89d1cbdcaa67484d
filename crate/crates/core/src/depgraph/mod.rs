//! Dependency graphs, scene/sound co-mentions and shortest-path signatures.

mod comention;
mod conllu;
mod path;
mod rank;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use comention::{build_scene_pairs, find_comentions, Comention, SceneLexicon, SoundDetector, SoundScenePair};
pub use conllu::{parse_conllu, parse_conllu_str, ParsedCorpus};
pub use path::{shortest_path, shortest_path_with_roles, Direction, PathSignature, PathStep};
pub use rank::{rank_paths_by_frequency, PathRanking, RankedPath, DEFAULT_MIN_FREQ};

#[derive(Debug, Error)]
pub enum DepGraphError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty parse: no valid sentences ({skipped} malformed skipped)")]
    EmptyParse { skipped: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid span {0:?}")]
    InvalidSpan(Span),
    #[error("spans overlap")]
    OverlappingSpans,
    #[error("identical endpoints")]
    IdenticalEndpoints,
    #[error("no path between token {from} and token {to}")]
    NoPath { from: usize, to: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceId {
    pub doc: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepToken {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
}

impl DepToken {
    /// The most specific tag available: XPOS when present, else UPOS.
    pub fn tag(&self) -> &str {
        if self.xpos.is_empty() || self.xpos == "_" {
            &self.upos
        } else {
            &self.xpos
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepEdge {
    /// 0 for the root's attachment.
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

/// Half-open 1-based token span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(index: usize) -> Self {
        Span::new(index, index + 1)
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

/// A parsed sentence. Every token has exactly one incoming edge and the
/// heads form a tree rooted at a single token attached to 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepGraph {
    pub sentence_id: SentenceId,
    tokens: Vec<DepToken>,
    edges: Vec<DepEdge>,
    #[serde(skip)]
    heads: Vec<usize>,
}

impl DepGraph {
    pub fn new(sentence_id: SentenceId, tokens: Vec<DepToken>, edges: Vec<DepEdge>) -> Result<Self, DepGraphError> {
        let n = tokens.len();
        if n == 0 {
            return Err(DepGraphError::InvalidGraph("no tokens".into()));
        }
        for (i, t) in tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(DepGraphError::InvalidGraph(format!(
                    "token ids must be 1..{n} in order, found {} at position {}",
                    t.index,
                    i + 1
                )));
            }
        }
        let mut heads = vec![usize::MAX; n + 1];
        let mut seen = HashSet::new();
        for e in &edges {
            if e.dependent == 0 || e.dependent > n || e.head > n {
                return Err(DepGraphError::InvalidGraph(format!(
                    "edge {} -> {} references a missing token",
                    e.head, e.dependent
                )));
            }
            if !seen.insert(e.dependent) {
                return Err(DepGraphError::InvalidGraph(format!(
                    "token {} has more than one head",
                    e.dependent
                )));
            }
            heads[e.dependent] = e.head;
        }
        if seen.len() != n {
            return Err(DepGraphError::InvalidGraph("every token needs a head".into()));
        }
        let roots = heads[1..].iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(DepGraphError::InvalidGraph(format!(
                "expected exactly one root, found {roots}"
            )));
        }
        // Every token must reach the root.
        for start in 1..=n {
            let mut cur = start;
            let mut steps = 0;
            while cur != 0 {
                cur = heads[cur];
                steps += 1;
                if steps > n {
                    return Err(DepGraphError::InvalidGraph(format!("cycle through token {start}")));
                }
            }
        }
        Ok(DepGraph {
            sentence_id,
            tokens,
            edges,
            heads,
        })
    }

    pub fn tokens(&self) -> &[DepToken] {
        &self.tokens
    }

    pub fn edges(&self) -> &[DepEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at 1-based `index`.
    pub fn token(&self, index: usize) -> &DepToken {
        &self.tokens[index - 1]
    }

    pub fn head(&self, index: usize) -> usize {
        if self.heads.is_empty() {
            // Deserialized graphs carry no head cache.
            return self.edges.iter().find(|e| e.dependent == index).map_or(0, |e| e.head);
        }
        self.heads[index]
    }

    /// The span token whose head lies outside the span.
    pub fn span_head(&self, span: Span) -> Result<usize, DepGraphError> {
        if span.is_empty() || span.start == 0 || span.end > self.len() + 1 {
            return Err(DepGraphError::InvalidSpan(span));
        }
        Ok(span
            .indices()
            .find(|&i| !span.contains(self.head(i)))
            .unwrap_or(span.start))
    }

    pub fn forms(&self, span: Span) -> Vec<String> {
        span.indices().map(|i| self.token(i).form.to_lowercase()).collect()
    }

    pub fn sentence_forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.form.to_lowercase()).collect()
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Builds a graph from `(form, head, relation)` triples; lemmas equal forms.
    pub fn graph(tokens: &[(&str, usize, &str)]) -> DepGraph {
        let toks = tokens
            .iter()
            .enumerate()
            .map(|(i, (form, _, _))| DepToken {
                index: i + 1,
                form: form.to_string(),
                lemma: form.to_string(),
                upos: "X".into(),
                xpos: "_".into(),
            })
            .collect();
        let edges = tokens
            .iter()
            .enumerate()
            .map(|(i, (_, head, rel))| DepEdge {
                head: *head,
                dependent: i + 1,
                relation: rel.to_string(),
            })
            .collect();
        DepGraph::new(
            SentenceId {
                doc: "t".into(),
                index: 0,
            },
            toks,
            edges,
        )
        .unwrap()
    }
}
