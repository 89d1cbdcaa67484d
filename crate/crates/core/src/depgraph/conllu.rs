//! CoNLL-U reader. Multiword-token ranges (`3-4`) and empty nodes (`5.1`)
//! are ignored; a sentence with any malformed line is skipped and counted.

use std::io::BufRead;

use super::{DepEdge, DepGraph, DepGraphError, DepToken, SentenceId};

#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    pub graphs: Vec<DepGraph>,
    /// Malformed sentences that were skipped.
    pub skipped: usize,
}

/// Reads CoNLL-U from `input`. `source` names the stream in sentence ids when
/// a sentence has no `# sent_id` comment.
pub fn parse_conllu<R: BufRead>(input: R, source: &str) -> Result<ParsedCorpus, DepGraphError> {
    let mut graphs = Vec::new();
    let mut skipped = 0;
    let mut block: Vec<String> = Vec::new();
    let mut ordinal = 0;

    let mut finish = |block: &mut Vec<String>, ordinal: &mut usize| {
        if block.iter().all(|l| l.starts_with('#')) {
            block.clear();
            return;
        }
        match sentence_from_block(block, source, *ordinal) {
            Some(g) => graphs.push(g),
            None => skipped += 1,
        }
        *ordinal += 1;
        block.clear();
    };

    for line in input.lines() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut block, &mut ordinal);
        } else {
            block.push(line.to_string());
        }
    }
    finish(&mut block, &mut ordinal);

    if graphs.is_empty() {
        return Err(DepGraphError::EmptyParse { skipped });
    }
    Ok(ParsedCorpus { graphs, skipped })
}

pub fn parse_conllu_str(text: &str, source: &str) -> Result<ParsedCorpus, DepGraphError> {
    parse_conllu(text.as_bytes(), source)
}

fn sentence_from_block(block: &[String], source: &str, ordinal: usize) -> Option<DepGraph> {
    let mut sent_id = None;
    let mut tokens = Vec::new();
    let mut edges = Vec::new();
    for line in block {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    sent_id = Some(value.trim().to_string());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return None;
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0].parse().ok()?;
        let head: usize = cols[6].parse().ok()?;
        if cols[1].is_empty() || cols[7].is_empty() {
            return None;
        }
        let lemma = if cols[2] == "_" { cols[1] } else { cols[2] };
        tokens.push(DepToken {
            index,
            form: cols[1].to_string(),
            lemma: lemma.to_lowercase(),
            upos: cols[3].to_string(),
            xpos: cols[4].to_string(),
        });
        edges.push(DepEdge {
            head,
            dependent: index,
            relation: cols[7].to_string(),
        });
    }
    let id = SentenceId {
        doc: sent_id.unwrap_or_else(|| source.to_string()),
        index: ordinal,
    };
    DepGraph::new(id, tokens, edges).ok()
}
