//! Pretrained word vectors in the plain-text format and the pairwise
//! composition modes used as classifier features.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty embedding file")]
    Empty,
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("{0} is produced by the LSTM encoder, not by vector composition")]
    NotComposable(Composition),
    #[error("unknown composition {0:?}")]
    UnknownComposition(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f32>,
    /// Lines whose word had already been seen; the later vector was kept.
    pub duplicates: usize,
}

impl EmbeddingTable {
    /// Reads `word v1 .. vd` lines, with an optional `count dim` header.
    /// Words are lowercased.
    pub fn read<R: BufRead>(input: R) -> Result<Self, EmbeddingError> {
        let mut dim = None;
        let mut table = EmbeddingTable {
            dim: 0,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
            duplicates: 0,
        };
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else {
                continue;
            };
            let rest: Vec<&str> = fields.collect();
            if i == 0 && rest.len() == 1 {
                if let (Ok(_), Ok(d)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                    if d == 0 {
                        return Err(EmbeddingError::Format {
                            line: lineno,
                            reason: "header declares dimension 0".into(),
                        });
                    }
                    dim = Some(d);
                    continue;
                }
            }
            let d = *dim.get_or_insert(rest.len());
            if rest.len() != d || d == 0 {
                return Err(EmbeddingError::Format {
                    line: lineno,
                    reason: format!("expected {d} values, found {}", rest.len()),
                });
            }
            let mut vector = Vec::with_capacity(d);
            for v in rest {
                vector.push(v.parse::<f32>().map_err(|_| EmbeddingError::Format {
                    line: lineno,
                    reason: format!("{v:?} is not a number"),
                })?);
            }
            table.dim = d;
            table.insert(word.to_lowercase(), &vector);
        }
        if table.words.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        Self::read(BufReader::new(File::open(path)?))
    }

    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        Self::read(text.as_bytes())
    }

    /// The small table bundled with the crate (d = 8).
    pub fn bundled() -> Self {
        Self::parse(crate::fixtures::EMBEDDINGS).expect("bundled embeddings are well-formed")
    }

    /// Builds a table from in-memory vectors, all of length `dim`.
    pub fn from_vectors<I>(dim: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let mut table = EmbeddingTable {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
            duplicates: 0,
        };
        for (w, v) in entries {
            if v.len() != dim {
                return Err(EmbeddingError::Dimension {
                    expected: dim,
                    found: v.len(),
                });
            }
            table.insert(w.to_lowercase(), &v);
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, vector: &[f32]) {
        match self.index.get(&word) {
            Some(&slot) => {
                self.duplicates += 1;
                self.data[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(vector);
            }
            None => {
                self.index.insert(word.clone(), self.words.len());
                self.words.push(word);
                self.data.extend_from_slice(vector);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in first-seen order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn lookup(&self, word: &str) -> Option<&[f32]> {
        let slot = *self.index.get(word)?;
        Some(&self.data[slot * self.dim..(slot + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Vectors of every token, or `None` if any token is out of vocabulary.
    pub fn lookup_all<S: AsRef<str>>(&self, tokens: &[S]) -> Option<Vec<&[f32]>> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    /// Sum of the in-vocabulary token vectors; `None` if no token is known.
    pub fn phrase_vector<S: AsRef<str>>(&self, tokens: &[S]) -> Option<Vec<f32>> {
        let mut sum = vec![0.0f32; self.dim];
        let mut any = false;
        for v in tokens.iter().filter_map(|t| self.lookup(t.as_ref())) {
            any = true;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
        any.then_some(sum)
    }

    /// Writes the table with a `count dim` header.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, w) in self.words.iter().enumerate() {
            write!(out, "{w}")?;
            for v in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    Concat,
    DiffSrcSnd,
    DiffSndSrc,
    Add,
    Lstm,
}

impl Composition {
    pub fn as_str(self) -> &'static str {
        match self {
            Composition::Concat => "concat",
            Composition::DiffSrcSnd => "diff_src_snd",
            Composition::DiffSndSrc => "diff_snd_src",
            Composition::Add => "add",
            Composition::Lstm => "lstm",
        }
    }

    /// Feature length for word vectors of length `d` (or hidden size `h`
    /// for the LSTM).
    pub fn output_len(self, d: usize, h: usize) -> usize {
        match self {
            Composition::Concat => 2 * d,
            Composition::Lstm => h,
            _ => d,
        }
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Composition {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Composition::Concat,
            Composition::DiffSrcSnd,
            Composition::DiffSndSrc,
            Composition::Add,
            Composition::Lstm,
        ]
        .into_iter()
        .find(|c| c.as_str() == s.replace('-', "_"))
        .ok_or_else(|| EmbeddingError::UnknownComposition(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f32>,
    pub mode: Composition,
    pub provenance: Vec<String>,
}

pub fn compose(v_src: &[f32], v_snd: &[f32], mode: Composition) -> Result<Vec<f32>, EmbeddingError> {
    if v_src.len() != v_snd.len() {
        return Err(EmbeddingError::Dimension {
            expected: v_src.len(),
            found: v_snd.len(),
        });
    }
    let zip = v_src.iter().zip(v_snd);
    Ok(match mode {
        Composition::Concat => v_src.iter().chain(v_snd).copied().collect(),
        Composition::DiffSrcSnd => zip.map(|(s, n)| s - n).collect(),
        Composition::DiffSndSrc => zip.map(|(s, n)| n - s).collect(),
        Composition::Add => zip.map(|(s, n)| s + n).collect(),
        Composition::Lstm => return Err(EmbeddingError::NotComposable(mode)),
    })
}

/// Composes the vectors of a source and a sound word, recording both words.
pub fn compose_words(
    table: &EmbeddingTable,
    source: &str,
    sound: &str,
    mode: Composition,
) -> Option<Result<FeatureVector, EmbeddingError>> {
    let (s, n) = (table.lookup(source)?, table.lookup(sound)?);
    Some(compose(s, n, mode).map(|values| FeatureVector {
        values,
        mode,
        provenance: vec![source.to_string(), sound.to_string()],
    }))
}
