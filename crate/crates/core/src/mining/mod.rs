//! Pattern mining over plain-text corpora.
//!
//! [`extract_pattern_phrases`] scans every sentence for `<head> <connective>`
//! (e.g. `sound of`) and captures the words that follow, up to the first
//! punctuation token, the sentence end or the capture limit. Phrases are merged
//! on their normalized text. [`BigramFilter`] then turns two-word phrases with
//! a V-ing token into sound-source candidates.

mod corpus;
mod pairs;
mod text;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{Corpus, DocBody, Document, Sentence};
pub use pairs::{
    filter_bigram_pairs, is_gerund_heuristic, BigramFilter, BigramOutcome, NounLexicon, SoundSourcePair, SurfaceOrder,
};
pub use text::{normalize_phrase, split_sentences, tokenize, Token};

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("cannot read {doc}: {source}")]
    Io {
        doc: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {doc}: not valid UTF-8")]
    Utf8 { doc: String },
    #[error("invalid lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhraseKind {
    Sound,
    Smell,
}

impl PhraseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PhraseKind::Sound => "sound",
            PhraseKind::Smell => "smell",
        }
    }
}

impl std::str::FromStr for PhraseKind {
    type Err = MiningError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sound" => Ok(PhraseKind::Sound),
            "smell" => Ok(PhraseKind::Smell),
            other => Err(MiningError::InvalidPattern(format!(
                "unknown pattern {other:?} (expected sound or smell)"
            ))),
        }
    }
}

pub const DEFAULT_CAPTURE_MAX_TOKENS: usize = 5;

/// The `<head> <connective> <y>` pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSpec {
    kind: PhraseKind,
    head_noun: String,
    connective: String,
    capture_max_tokens: usize,
}

fn is_lower_alpha(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphabetic() && c.is_lowercase())
}

impl PatternSpec {
    pub fn new(
        kind: PhraseKind,
        head_noun: &str,
        connective: &str,
        capture_max_tokens: usize,
    ) -> Result<Self, MiningError> {
        if !is_lower_alpha(head_noun) {
            return Err(MiningError::InvalidPattern(format!(
                "head noun {head_noun:?} must be lowercase alphabetic"
            )));
        }
        if !is_lower_alpha(connective) {
            return Err(MiningError::InvalidPattern(format!(
                "connective {connective:?} must be lowercase alphabetic"
            )));
        }
        if capture_max_tokens == 0 {
            return Err(MiningError::InvalidPattern(
                "capture_max_tokens must be at least 1".into(),
            ));
        }
        Ok(PatternSpec {
            kind,
            head_noun: head_noun.to_string(),
            connective: connective.to_string(),
            capture_max_tokens,
        })
    }

    /// `sound of <y>`
    pub fn sound() -> Self {
        Self::for_kind(PhraseKind::Sound)
    }

    /// `smell of <y>`
    pub fn smell() -> Self {
        Self::for_kind(PhraseKind::Smell)
    }

    pub fn for_kind(kind: PhraseKind) -> Self {
        Self::new(kind, kind.as_str(), "of", DEFAULT_CAPTURE_MAX_TOKENS).expect("built-in patterns are valid")
    }

    pub fn with_max_capture(self, n: usize) -> Result<Self, MiningError> {
        Self::new(self.kind, &self.head_noun, &self.connective, n)
    }

    pub fn kind(&self) -> PhraseKind {
        self.kind
    }

    pub fn head_noun(&self) -> &str {
        &self.head_noun
    }

    pub fn connective(&self) -> &str {
        &self.connective
    }

    pub fn capture_max_tokens(&self) -> usize {
        self.capture_max_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Provenance {
    pub doc: String,
    pub sentence: usize,
}

/// A mined phrase with its exact occurrence count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePhrase {
    /// Normalized tokens joined by single spaces.
    pub text: String,
    pub kind: PhraseKind,
    pub frequency: usize,
    /// One entry per occurrence, in corpus order.
    pub provenance: Vec<Provenance>,
    /// POS tags of the first occurrence, when the corpus was tagged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
    /// Sentence of the first occurrence.
    #[serde(default)]
    pub context: String,
}

impl CandidatePhrase {
    pub fn tokens(&self) -> Vec<&str> {
        self.text.split(' ').collect()
    }

    pub fn len(&self) -> usize {
        self.text.split(' ').count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

#[derive(Debug, Default)]
struct Accum {
    provenance: Vec<Provenance>,
    tags: Option<Vec<String>>,
    context: String,
}

type ShardMap = HashMap<String, Accum>;

const SHARD_DOCS: usize = 64;
const BATCH_DOCS: usize = SHARD_DOCS * 64;

/// Captures of `spec` in one sentence: `(tokens, tags)`.
pub(crate) fn captures_in_sentence(sentence: &Sentence, spec: &PatternSpec) -> Vec<(Vec<String>, Option<Vec<String>>)> {
    let toks = &sentence.tokens;
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < toks.len() {
        if toks[i].word() == Some(spec.head_noun()) && toks[i + 1].word() == Some(spec.connective()) {
            let start = i + 2;
            let mut end = start;
            while end < toks.len() && end - start < spec.capture_max_tokens() {
                match toks[end].word() {
                    Some(w) if w != spec.head_noun() => end += 1,
                    _ => break,
                }
            }
            if end > start {
                let words = toks[start..end]
                    .iter()
                    .filter_map(|t| t.word().map(str::to_string))
                    .collect();
                let tags = sentence.tags.as_ref().map(|t| t[start..end].to_vec());
                out.push((words, tags));
            }
        }
        i += 1;
    }
    out
}

fn mine_shard(docs: &[Document], spec: &PatternSpec) -> ShardMap {
    let mut map = ShardMap::new();
    for doc in docs {
        for sentence in doc.sentences() {
            for (words, tags) in captures_in_sentence(&sentence, spec) {
                let acc = map.entry(words.join(" ")).or_default();
                if acc.provenance.is_empty() {
                    acc.tags = tags;
                    acc.context = sentence.text.clone();
                }
                acc.provenance.push(Provenance {
                    doc: doc.id.clone(),
                    sentence: sentence.index,
                });
            }
        }
    }
    map
}

fn merge_into(total: &mut ShardMap, shard: ShardMap) {
    for (text, acc) in shard {
        match total.get_mut(&text) {
            Some(t) => t.provenance.extend(acc.provenance),
            None => {
                total.insert(text, acc);
            }
        }
    }
}

/// Mines `spec` over a document stream.
///
/// Documents are processed in batches; each batch is cut into fixed-size
/// shards mined in parallel on the current rayon pool and merged in shard
/// order, so the result does not depend on the number of threads. Output is
/// sorted by frequency (descending) then text.
pub fn extract_pattern_phrases<I>(docs: I, spec: &PatternSpec) -> Result<Vec<CandidatePhrase>, MiningError>
where
    I: IntoIterator<Item = Result<Document, MiningError>>,
{
    let mut total = ShardMap::new();
    let mut batch = Vec::with_capacity(BATCH_DOCS);
    let flush = |batch: &mut Vec<Document>, total: &mut ShardMap| {
        let shards: Vec<ShardMap> = batch
            .par_chunks(SHARD_DOCS)
            .map(|chunk| mine_shard(chunk, spec))
            .collect();
        for shard in shards {
            merge_into(total, shard);
        }
        batch.clear();
    };
    for doc in docs {
        batch.push(doc?);
        if batch.len() == BATCH_DOCS {
            flush(&mut batch, &mut total);
        }
    }
    flush(&mut batch, &mut total);

    let mut phrases: Vec<CandidatePhrase> = total
        .into_iter()
        .map(|(text, acc)| CandidatePhrase {
            text,
            kind: spec.kind(),
            frequency: acc.provenance.len(),
            provenance: acc.provenance,
            tags: acc.tags,
            context: acc.context,
        })
        .collect();
    phrases.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.text.cmp(&b.text)));
    Ok(phrases)
}

/// Convenience wrapper over in-memory `(doc id, text)` pairs.
pub fn extract_from_texts<'a, I>(texts: I, spec: &PatternSpec) -> Vec<CandidatePhrase>
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let docs = texts.into_iter().map(|(id, t)| Ok(Document::text(id, t)));
    extract_pattern_phrases(docs, spec).expect("in-memory documents cannot fail")
}

/// Share of mined phrases that yield a sound-source pair.
pub fn bigram_fraction(phrases: &[CandidatePhrase], pairs: usize) -> f64 {
    if phrases.is_empty() {
        0.0
    } else {
        pairs as f64 / phrases.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mine(text: &str) -> Vec<CandidatePhrase> {
        extract_from_texts([("d", text)], &PatternSpec::sound())
    }

    #[test]
    fn captures_phrase_after_pattern() {
        let out = mine("the sound of singing children filled the hall");
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, "singing children filled the hall");
    }

    #[test]
    fn capture_stops_at_punctuation_and_limit() {
        let out = mine("the sound of singing children, filling the hall");
        assert_eq!(out[0].text, "singing children");
        assert_eq!(out[0].kind, PhraseKind::Sound);
        assert_eq!(out[0].frequency, 1);

        let spec = PatternSpec::sound().with_max_capture(1).unwrap();
        let out = extract_from_texts([("d", "sound of rain falling")], &spec);
        assert_eq!(out[0].text, "rain");
    }

    #[test]
    fn no_match_gives_empty_output() {
        assert!(mine("there is no matching text here").is_empty());
        assert!(mine("").is_empty());
        assert!(mine("sound of").is_empty());
    }

    #[test]
    fn capture_never_contains_head_noun() {
        let out = mine("the sound of sound of rain.");
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, "rain");
    }

    #[test]
    fn case_and_punctuation_variants_merge() {
        let out = extract_from_texts(
            [
                ("a", "The Sound of RAIN."),
                ("b", "sound of rain! And the sound of Rain, too"),
            ],
            &PatternSpec::sound(),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].frequency, 3);
        assert_eq!(out[0].provenance.len(), 3);
        assert_eq!(
            out[0].provenance[0],
            Provenance {
                doc: "a".into(),
                sentence: 0
            }
        );
        assert_eq!(out[0].context, "The Sound of RAIN.");
    }

    #[test]
    fn output_sorted_by_frequency_then_text() {
        let out = mine("sound of b. sound of a. sound of c. sound of c.");
        let texts: Vec<_> = out.iter().map(|p| p.text.as_str()).collect();
        assert_eq!(texts, ["c", "a", "b"]);
    }

    #[test]
    fn smell_pattern() {
        let out = extract_from_texts(
            [("d", "The smell of rotten eggs. The sound of rain.")],
            &PatternSpec::smell(),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, "rotten eggs");
        assert_eq!(out[0].kind, PhraseKind::Smell);
    }

    #[test]
    fn pattern_validation() {
        assert!(PatternSpec::new(PhraseKind::Sound, "Sound", "of", 5).is_err());
        assert!(PatternSpec::new(PhraseKind::Sound, "sound", "of", 0).is_err());
        assert!(PatternSpec::new(PhraseKind::Sound, "sound2", "of", 3).is_err());
        assert!("taste".parse::<PhraseKind>().is_err());
    }

    #[test]
    fn frequency_matches_provenance() {
        let out = mine("sound of x. sound of y sound of x. sound of x");
        for p in &out {
            assert_eq!(p.frequency, p.provenance.len());
        }
    }
}
