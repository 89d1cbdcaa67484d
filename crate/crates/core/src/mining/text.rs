//! Tokenization shared by the miner and the phrase normalizer.

/// A corpus token: either a normalized word or a punctuation mark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Word(String),
    Punct,
}

impl Token {
    pub fn word(&self) -> Option<&str> {
        match self {
            Token::Word(w) => Some(w),
            Token::Punct => None,
        }
    }
}

fn is_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

/// Lowercases, splits on whitespace, strips leading/trailing punctuation from
/// each token and drops tokens that end up empty.
pub fn normalize_phrase(raw: &str) -> Vec<String> {
    raw.to_lowercase()
        .split_whitespace()
        .map(|t| t.trim_matches(is_punct))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Splits text into sentences at `.`, `!` or `?` followed by whitespace (or
/// the end of the text).
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let at_boundary = match chars.peek() {
                None => true,
                Some((_, next)) => next.is_whitespace(),
            };
            if at_boundary {
                let end = i + c.len_utf8();
                let s = text[start..end].trim();
                if !s.is_empty() {
                    out.push(s);
                }
                start = end;
            }
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}

/// Tokenizes one sentence. Punctuation attached to either end of a
/// whitespace-delimited chunk becomes separate [`Token::Punct`] tokens.
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for chunk in sentence.split_whitespace() {
        let lower = chunk.to_lowercase();
        let core = lower.trim_matches(is_punct);
        if core.is_empty() {
            out.push(Token::Punct);
            continue;
        }
        let lead = lower.find(core).unwrap_or(0);
        let trail = lower.len() - lead - core.len();
        if lead > 0 {
            out.push(Token::Punct);
        }
        out.push(Token::Word(core.to_string()));
        if trail > 0 {
            out.push(Token::Punct);
        }
    }
    out
}

/// Tokenizes one pre-tokenized token (tagged input): punctuation-only tokens
/// become [`Token::Punct`], everything else is normalized.
pub fn classify_token(raw: &str) -> Token {
    let lower = raw.to_lowercase();
    let core = lower.trim_matches(is_punct);
    if core.is_empty() {
        Token::Punct
    } else {
        Token::Word(core.to_string())
    }
}
