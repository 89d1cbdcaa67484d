//! Streaming access to plain-text and POS-tagged corpora.
//!
//! A plain-text file holds one document per line. A tagged file holds one
//! `token<TAB>POS` pair per line with blank lines between sentences and counts
//! as a single document. The format is detected per file.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use super::text::{classify_token, split_sentences, tokenize, Token};
use super::MiningError;

/// One corpus document.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub body: DocBody,
}

#[derive(Debug, Clone)]
pub enum DocBody {
    Text(String),
    /// Sentences of `(token, tag)` pairs.
    Tagged(Vec<Vec<(String, String)>>),
}

/// A tokenized sentence with optional per-token tags.
#[derive(Debug, Clone)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<Token>,
    pub tags: Option<Vec<String>>,
}

impl Document {
    pub fn text(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            body: DocBody::Text(text.into()),
        }
    }

    pub fn sentences(&self) -> Vec<Sentence> {
        match &self.body {
            DocBody::Text(text) => split_sentences(text)
                .into_iter()
                .enumerate()
                .map(|(index, s)| Sentence {
                    index,
                    text: s.to_string(),
                    tokens: tokenize(s),
                    tags: None,
                })
                .collect(),
            DocBody::Tagged(sents) => sents
                .iter()
                .enumerate()
                .map(|(index, toks)| Sentence {
                    index,
                    text: toks.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>().join(" "),
                    tokens: toks.iter().map(|(t, _)| classify_token(t)).collect(),
                    tags: Some(toks.iter().map(|(_, tag)| tag.clone()).collect()),
                })
                .collect(),
        }
    }
}

/// A corpus rooted at a file or a directory of files.
#[derive(Debug, Clone)]
pub struct Corpus {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Corpus {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, MiningError> {
        let root = path.as_ref().to_path_buf();
        let io_err = |source| MiningError::Io {
            doc: root.display().to_string(),
            source,
        };
        let meta = std::fs::metadata(&root).map_err(io_err)?;
        let files = if meta.is_dir() {
            let mut files = Vec::new();
            for entry in WalkDir::new(&root).sort_by_file_name() {
                let entry = entry.map_err(|e| MiningError::Io {
                    doc: root.display().to_string(),
                    source: e.into(),
                })?;
                if entry.file_type().is_file() {
                    files.push(entry.into_path());
                }
            }
            files
        } else {
            vec![root.clone()]
        };
        Ok(Corpus { root, files })
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    fn file_id(&self, file: &Path) -> String {
        match file.strip_prefix(&self.root) {
            Ok(rel) if !rel.as_os_str().is_empty() => rel.display().to_string(),
            _ => file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.display().to_string()),
        }
    }

    /// Streams documents file by file in path order.
    pub fn documents(&self) -> impl Iterator<Item = Result<Document, MiningError>> + '_ {
        self.files.iter().flat_map(move |file| {
            let id = self.file_id(file);
            match FileDocuments::open(file, id) {
                Ok(docs) => Box::new(docs) as Box<dyn Iterator<Item = _>>,
                Err(e) => Box::new(std::iter::once(Err(e))),
            }
        })
    }
}

const DETECT_LINES: usize = 200;

/// Lazily yields the documents of one file.
struct FileDocuments {
    file_id: String,
    reader: BufReader<File>,
    /// Lines read ahead for format detection, not yet yielded.
    pending: std::collections::VecDeque<(usize, Vec<u8>)>,
    next_line: usize,
    done: bool,
}

impl FileDocuments {
    fn open(path: &Path, file_id: String) -> Result<Self, MiningError> {
        let file = File::open(path).map_err(|source| MiningError::Io {
            doc: file_id.clone(),
            source,
        })?;
        Ok(FileDocuments {
            file_id,
            reader: BufReader::new(file),
            pending: Default::default(),
            next_line: 0,
            done: false,
        })
    }

    fn read_raw(&mut self) -> Option<Result<(usize, Vec<u8>), MiningError>> {
        if let Some(l) = self.pending.pop_front() {
            return Some(Ok(l));
        }
        if self.done {
            return None;
        }
        let mut buf = Vec::new();
        self.next_line += 1;
        match self.reader.read_until(b'\n', &mut buf) {
            Ok(0) => {
                self.done = true;
                None
            }
            Ok(_) => Some(Ok((self.next_line, buf))),
            Err(source) => {
                self.done = true;
                Some(Err(MiningError::Io {
                    doc: format!("{}:{}", self.file_id, self.next_line),
                    source,
                }))
            }
        }
    }

    fn decode(&self, lineno: usize, bytes: Vec<u8>) -> Result<String, MiningError> {
        String::from_utf8(bytes)
            .map(|s| s.trim_end_matches(['\n', '\r']).to_string())
            .map_err(|_| MiningError::Utf8 {
                doc: format!("{}:{}", self.file_id, lineno),
            })
    }

    /// Reads ahead and reports whether every non-blank line has one tab.
    fn detect_tagged(&mut self) -> Result<bool, MiningError> {
        let mut seen = 0;
        let mut tagged = true;
        while self.pending.len() < DETECT_LINES && !self.done {
            let mut buf = Vec::new();
            self.next_line += 1;
            match self.reader.read_until(b'\n', &mut buf) {
                Ok(0) => self.done = true,
                Ok(_) => self.pending.push_back((self.next_line, buf)),
                Err(source) => {
                    return Err(MiningError::Io {
                        doc: format!("{}:{}", self.file_id, self.next_line),
                        source,
                    })
                }
            }
        }
        for (_, bytes) in &self.pending {
            let Ok(line) = std::str::from_utf8(bytes) else {
                return Ok(false);
            };
            if line.trim().is_empty() {
                continue;
            }
            seen += 1;
            if line.trim_end_matches(['\n', '\r']).matches('\t').count() != 1 {
                tagged = false;
            }
        }
        Ok(tagged && seen > 0)
    }

    fn read_tagged(&mut self) -> Result<Document, MiningError> {
        let mut sentences = Vec::new();
        let mut current = Vec::new();
        while let Some(raw) = self.read_raw() {
            let (lineno, bytes) = raw?;
            let line = self.decode(lineno, bytes)?;
            if line.trim().is_empty() {
                if !current.is_empty() {
                    sentences.push(std::mem::take(&mut current));
                }
                continue;
            }
            let (tok, tag) = line.split_once('\t').unwrap_or((line.as_str(), ""));
            current.push((tok.to_string(), tag.trim().to_string()));
        }
        if !current.is_empty() {
            sentences.push(current);
        }
        Ok(Document {
            id: self.file_id.clone(),
            body: DocBody::Tagged(sentences),
        })
    }
}

enum Mode {
    Unknown,
    Plain,
    Finished,
}

impl Iterator for FileDocuments {
    type Item = Result<Document, MiningError>;

    fn next(&mut self) -> Option<Self::Item> {
        // Format detection happens on the first call.
        let mode = if self.next_line == 0 && self.pending.is_empty() && !self.done {
            Mode::Unknown
        } else if self.done && self.pending.is_empty() {
            Mode::Finished
        } else {
            Mode::Plain
        };
        match mode {
            Mode::Finished => None,
            Mode::Unknown => match self.detect_tagged() {
                Err(e) => {
                    self.done = true;
                    self.pending.clear();
                    Some(Err(e))
                }
                Ok(true) => {
                    let doc = self.read_tagged();
                    self.done = true;
                    self.pending.clear();
                    Some(doc)
                }
                Ok(false) => self.next_plain(),
            },
            Mode::Plain => self.next_plain(),
        }
    }
}

impl FileDocuments {
    fn next_plain(&mut self) -> Option<Result<Document, MiningError>> {
        loop {
            let (lineno, bytes) = match self.read_raw()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e)),
            };
            match self.decode(lineno, bytes) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => return Some(Ok(Document::text(format!("{}:{}", self.file_id, lineno), line))),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn plain_file_is_one_document_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.txt");
        std::fs::write(&path, "The sound of rain. More text.\n\nsecond doc\n").unwrap();
        let corpus = Corpus::open(dir.path()).unwrap();
        let docs: Vec<_> = corpus.documents().collect::<Result<_, _>>().unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].id, "a.txt:1");
        assert_eq!(docs[1].id, "a.txt:3");
        assert_eq!(docs[0].sentences().len(), 2);
    }

    #[test]
    fn tagged_file_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let mut f = File::create(&path).unwrap();
        write!(f, "the\tDT\nsound\tNN\nof\tIN\nbirds\tNNS\nchirping\tVBG\n\nok\tUH\n").unwrap();
        let corpus = Corpus::open(&path).unwrap();
        let docs: Vec<_> = corpus.documents().collect::<Result<_, _>>().unwrap();
        assert_eq!(docs.len(), 1);
        let sents = docs[0].sentences();
        assert_eq!(sents.len(), 2);
        assert_eq!(sents[0].tags.as_ref().unwrap()[4], "VBG");
    }

    #[test]
    fn invalid_utf8_names_the_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, b"fine line\n\xff\xfe broken\n").unwrap();
        let corpus = Corpus::open(&path).unwrap();
        let results: Vec<_> = corpus.documents().collect();
        assert!(results[0].is_ok());
        let err = results[1].as_ref().unwrap_err().to_string();
        assert!(err.contains("bad.txt:2"), "{err}");
    }

    #[test]
    fn missing_path_is_an_io_error() {
        let err = Corpus::open("/definitely/not/here").unwrap_err();
        assert!(matches!(err, MiningError::Io { .. }));
    }
}
