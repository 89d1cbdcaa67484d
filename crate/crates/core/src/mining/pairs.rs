//! Sound-source candidates from gerund bi-grams ("birds chirping",
//! "squealing brakes").

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CandidatePhrase, MiningError};
use crate::fixtures;

/// Words ending in "-ing" that are not gerunds.
const NOT_GERUNDS: &[&str] = &[
    "anything",
    "awning",
    "ceiling",
    "clothing",
    "darling",
    "during",
    "evening",
    "everything",
    "herring",
    "icing",
    "king",
    "lightning",
    "morning",
    "nothing",
    "pudding",
    "ring",
    "shilling",
    "sibling",
    "something",
    "spring",
    "string",
    "thing",
    "viking",
    "wedding",
    "wing",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceOrder {
    #[serde(rename = "verb-noun")]
    VerbNoun,
    #[serde(rename = "noun-verb")]
    NounVerb,
}

/// A plausible (sound, source) pair: the gerund is the sound, the noun its
/// source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundSourcePair {
    pub sound: String,
    pub source: String,
    /// Text of the originating two-token phrase.
    pub origin: String,
    pub frequency: usize,
    pub surface_order: SurfaceOrder,
    #[serde(default)]
    pub context: String,
}

impl SoundSourcePair {
    /// Origin tokens in surface order.
    pub fn phrase_tokens(&self) -> Vec<String> {
        match self.surface_order {
            SurfaceOrder::VerbNoun => vec![self.sound.clone(), self.source.clone()],
            SurfaceOrder::NounVerb => vec![self.source.clone(), self.sound.clone()],
        }
    }
}

/// Known word classes; anything absent counts as a plausible noun.
#[derive(Debug, Clone, Default)]
pub struct NounLexicon {
    is_noun: HashMap<String, bool>,
}

impl NounLexicon {
    /// Parses `word<TAB>noun|other` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, MiningError> {
        let mut is_noun = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, class) = line.split_once('\t').ok_or_else(|| MiningError::Lexicon {
                line: i + 1,
                reason: "expected word<TAB>class".into(),
            })?;
            let noun = match class.trim() {
                "noun" => true,
                "other" => false,
                c => {
                    return Err(MiningError::Lexicon {
                        line: i + 1,
                        reason: format!("unknown class {c:?}"),
                    })
                }
            };
            is_noun.insert(word.trim().to_lowercase(), noun);
        }
        Ok(NounLexicon { is_noun })
    }

    pub fn bundled() -> Self {
        Self::parse(fixtures::LEXICON).expect("bundled lexicon parses")
    }

    pub fn is_plausible_noun(&self, word: &str) -> bool {
        self.is_noun.get(word).copied().unwrap_or(true)
    }
}

/// Suffix heuristic for V-ing forms: "-ing" after a stem of at least two
/// characters containing a vowel, minus a list of common -ing nouns.
pub fn is_gerund_heuristic(word: &str) -> bool {
    let Some(stem) = word.strip_suffix("ing") else {
        return false;
    };
    stem.chars().count() >= 2 && stem.chars().any(|c| "aeiouy".contains(c)) && !NOT_GERUNDS.contains(&word)
}

fn tag_is_gerund(tag: &str, word: &str) -> bool {
    tag == "VBG" || (tag == "VERB" && word.ends_with("ing"))
}

fn tag_is_noun(tag: &str) -> bool {
    tag.starts_with("NN") || tag == "NOUN" || tag == "PROPN"
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BigramOutcome {
    pub pairs: Vec<SoundSourcePair>,
    /// Phrases that did not qualify.
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct BigramFilter {
    lexicon: NounLexicon,
}

impl Default for BigramFilter {
    fn default() -> Self {
        BigramFilter::new(NounLexicon::bundled())
    }
}

impl BigramFilter {
    pub fn new(lexicon: NounLexicon) -> Self {
        BigramFilter { lexicon }
    }

    pub fn lexicon(&self) -> &NounLexicon {
        &self.lexicon
    }

    fn is_gerund(&self, word: &str, tag: Option<&str>) -> bool {
        match tag {
            Some(t) if !t.is_empty() => tag_is_gerund(t, word),
            _ => is_gerund_heuristic(word),
        }
    }

    fn is_noun(&self, word: &str, tag: Option<&str>) -> bool {
        match tag {
            Some(t) if !t.is_empty() => tag_is_noun(t),
            _ => self.lexicon.is_plausible_noun(word),
        }
    }

    /// Classifies an adjacent token pair; returns `(sound index, order)` when
    /// exactly one token is a gerund and the other a plausible noun.
    pub fn classify(&self, words: [&str; 2], tags: Option<[&str; 2]>) -> Option<(usize, SurfaceOrder)> {
        if words[0] == words[1] {
            return None;
        }
        let tag = |i: usize| tags.map(|t| t[i]);
        let gerund = [self.is_gerund(words[0], tag(0)), self.is_gerund(words[1], tag(1))];
        let (sound, order) = match gerund {
            [true, false] => (0, SurfaceOrder::VerbNoun),
            [false, true] => (1, SurfaceOrder::NounVerb),
            _ => return None,
        };
        let other = 1 - sound;
        self.is_noun(words[other], tag(other)).then_some((sound, order))
    }

    /// Keeps the two-token phrases that pair one gerund with a plausible
    /// noun, in input order.
    pub fn filter(&self, phrases: &[CandidatePhrase]) -> BigramOutcome {
        let mut out = BigramOutcome::default();
        for p in phrases {
            let toks = p.tokens();
            let pair = if toks.len() == 2 {
                let tags = p
                    .tags
                    .as_ref()
                    .filter(|t| t.len() == 2)
                    .map(|t| [t[0].as_str(), t[1].as_str()]);
                self.classify([toks[0], toks[1]], tags)
            } else {
                None
            };
            match pair {
                Some((sound, surface_order)) => out.pairs.push(SoundSourcePair {
                    sound: toks[sound].to_string(),
                    source: toks[1 - sound].to_string(),
                    origin: p.text.clone(),
                    frequency: p.frequency,
                    surface_order,
                    context: p.context.clone(),
                }),
                None => out.dropped += 1,
            }
        }
        out
    }
}

/// [`BigramFilter::filter`] with the bundled lexicon.
pub fn filter_bigram_pairs(phrases: &[CandidatePhrase]) -> BigramOutcome {
    BigramFilter::default().filter(phrases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::PhraseKind;
    use proptest::prelude::*;

    fn phrase(text: &str) -> CandidatePhrase {
        CandidatePhrase {
            text: text.into(),
            kind: PhraseKind::Sound,
            frequency: 1,
            provenance: vec![],
            tags: None,
            context: String::new(),
        }
    }

    fn one(text: &str) -> Option<SoundSourcePair> {
        let out = filter_bigram_pairs(&[phrase(text)]);
        out.pairs.into_iter().next()
    }

    #[test]
    fn noun_verb_order() {
        let p = one("birds chirping").unwrap();
        assert_eq!((p.sound.as_str(), p.source.as_str()), ("chirping", "birds"));
        assert_eq!(p.surface_order, SurfaceOrder::NounVerb);
    }

    #[test]
    fn verb_noun_order() {
        let p = one("squealing brakes").unwrap();
        assert_eq!((p.sound.as_str(), p.source.as_str()), ("squealing", "brakes"));
        assert_eq!(p.surface_order, SurfaceOrder::VerbNoun);
    }

    #[test]
    fn negative_candidates_still_emitted() {
        let p = one("surrounding nature").unwrap();
        assert_eq!((p.sound.as_str(), p.source.as_str()), ("surrounding", "nature"));
        let p = one("standing ovation").unwrap();
        assert_eq!(p.source, "ovation");
    }

    #[test]
    fn non_qualifying_phrases_are_counted() {
        let out = filter_bigram_pairs(&[
            phrase("loud noise"),
            phrase("rain"),
            phrase("morning traffic"),
            phrase("something burning"),
            phrase("singing children loudly"),
            phrase("birds chirping"),
        ]);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.dropped, 5);
    }

    #[test]
    fn gerund_heuristic() {
        for w in ["chirping", "singing", "surrounding", "honking"] {
            assert!(is_gerund_heuristic(w), "{w}");
        }
        for w in ["thing", "king", "ring", "sing", "string", "morning", "during", "noise"] {
            assert!(!is_gerund_heuristic(w), "{w}");
        }
    }

    #[test]
    fn tags_override_heuristic() {
        let mut p = phrase("morning birds");
        p.tags = Some(vec!["VBG".into(), "NNS".into()]);
        assert!(filter_bigram_pairs(&[p]).pairs.len() == 1);

        let mut p = phrase("birds chirping");
        p.tags = Some(vec!["NNS".into(), "NN".into()]);
        assert!(filter_bigram_pairs(&[p]).pairs.is_empty());
    }

    #[test]
    fn lexicon_marks_closed_class_words() {
        let lex = NounLexicon::bundled();
        assert!(!lex.is_plausible_noun("the"));
        assert!(lex.is_plausible_noun("birds"));
        assert!(lex.is_plausible_noun("zyzzyva"));
        assert!(NounLexicon::parse("x\tverb").is_err());
    }

    proptest! {
        #[test]
        fn sound_is_the_ing_token_in_both_orders(
            stem in "[bcdfghklmnprstvwz][aeiou][bcdfghklmnprstvwz]{1,3}",
            noun in "[bcdfghklmnprstvwz][aeiou][a-z]{1,5}[s]",
        ) {
            let gerund = format!("{stem}ing");
            prop_assume!(is_gerund_heuristic(&gerund) && !noun.ends_with("ing"));
            let f = BigramFilter::new(NounLexicon::default());
            let a = f.filter(&[phrase(&format!("{noun} {gerund}"))]);
            let b = f.filter(&[phrase(&format!("{gerund} {noun}"))]);
            prop_assert_eq!(&a.pairs[0].sound, &gerund);
            prop_assert_eq!(&b.pairs[0].sound, &gerund);
            prop_assert_eq!(&a.pairs[0].source, &b.pairs[0].source);
            prop_assert_eq!(a.pairs[0].surface_order, SurfaceOrder::NounVerb);
            prop_assert_eq!(b.pairs[0].surface_order, SurfaceOrder::VerbNoun);
        }
    }
}
