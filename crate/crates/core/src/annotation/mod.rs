//! Annotation questions, majority aggregation and Fleiss' kappa.

mod aggregate;
mod kappa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use aggregate::{
    aggregate_all, aggregate_majority, effective_responses, label_proportions, read_labels_csv, training_label,
    write_labels_csv, AggregatedLabel, Majority,
};
pub use kappa::{
    agreement_report, fleiss_kappa, rating_matrix, read_rating_matrix_csv, write_rating_matrix_csv, AgreementReport,
    RatingGroups, RatingRow,
};

pub const DEFAULT_RATERS: usize = 3;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("unknown choice {0:?}")]
    UnknownChoice(String),
    #[error("{relation} questions cannot be built from a {payload} payload")]
    PayloadMismatch { relation: Relation, payload: &'static str },
    #[error("payload field {0:?} is empty")]
    EmptyField(&'static str),
    #[error("invalid choice {choice} for {relation}; allowed: {allowed}")]
    InvalidChoice {
        relation: Relation,
        choice: Choice,
        allowed: String,
    },
    #[error("no responses")]
    NoResponses,
    #[error("responses reference more than one question")]
    MixedQuestions,
    #[error("ragged rating matrix: row {row} sums to {found}, expected {expected}")]
    RaggedMatrix { row: usize, expected: u32, found: u32 },
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("need at least 2 raters per item, got {0}")]
    TooFewRaters(u32),
    #[error("malformed CSV at record {record}: {reason}")]
    Malformed { record: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Relation {
    SoundSource,
    SoundScene,
    SmellSentiment,
    SoundPhraseCheck,
    SmellPhraseCheck,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::SoundSource,
        Relation::SoundScene,
        Relation::SmellSentiment,
        Relation::SoundPhraseCheck,
        Relation::SmellPhraseCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::SoundSource => "soundSource",
            Relation::SoundScene => "soundScene",
            Relation::SmellSentiment => "smellSentiment",
            Relation::SoundPhraseCheck => "soundPhraseCheck",
            Relation::SmellPhraseCheck => "smellPhraseCheck",
        }
    }

    /// Options in display order.
    pub fn options(self) -> &'static [Choice] {
        use Choice::*;
        match self {
            Relation::SmellSentiment => &[Pleasant, Unpleasant, Neutral, NotSure, NotASmell],
            _ => &[Yes, No, NotSure],
        }
    }

    /// Number of training classes once non-labels are excluded.
    pub fn n_classes(self) -> usize {
        match self {
            Relation::SmellSentiment => 3,
            _ => 2,
        }
    }

    pub fn allows(self, choice: Choice) -> bool {
        self.options().contains(&choice)
    }

    pub fn check_choice(self, choice: Choice) -> Result<(), AnnotationError> {
        if self.allows(choice) {
            return Ok(());
        }
        let allowed = self.options().iter().map(|c| c.as_str()).collect::<Vec<_>>().join(", ");
        Err(AnnotationError::InvalidChoice {
            relation: self,
            choice,
            allowed,
        })
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AnnotationError::UnknownRelation(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Yes,
    No,
    NotSure,
    Pleasant,
    Unpleasant,
    Neutral,
    NotASmell,
}

impl Choice {
    /// Column order of exported rating matrices.
    pub const ALL: [Choice; 7] = [
        Choice::Yes,
        Choice::No,
        Choice::NotSure,
        Choice::Pleasant,
        Choice::Unpleasant,
        Choice::Neutral,
        Choice::NotASmell,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Choice::Yes => "yes",
            Choice::No => "no",
            Choice::NotSure => "notsure",
            Choice::Pleasant => "pleasant",
            Choice::Unpleasant => "unpleasant",
            Choice::Neutral => "neutral",
            Choice::NotASmell => "notasmell",
        }
    }

    pub fn column(self) -> usize {
        Choice::ALL.iter().position(|&c| c == self).unwrap()
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Choice {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Choice::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AnnotationError::UnknownChoice(s.to_string()))
    }
}

/// What a question asks about.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Pair { sound: String, source: String },
    Scene { scene: String, sound: String },
    Phrase { text: String },
}

impl Payload {
    fn kind(&self) -> &'static str {
        match self {
            Payload::Pair { .. } => "pair",
            Payload::Scene { .. } => "scene",
            Payload::Phrase { .. } => "phrase",
        }
    }

    /// The `(arg1, arg2)` columns of label exports: sound/source for pairs,
    /// scene/sound for scene pairs, and the phrase with an empty second
    /// argument.
    pub fn args(&self) -> (&str, &str) {
        match self {
            Payload::Pair { sound, source } => (sound, source),
            Payload::Scene { scene, sound } => (scene, sound),
            Payload::Phrase { text } => (text, ""),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationQuestion {
    pub id: String,
    pub relation: Relation,
    pub prompt: String,
    pub options: Vec<Choice>,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    /// Dependency path linking a scene and a sound, for soundScene questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationResponse {
    pub question_id: String,
    pub worker_id: String,
    pub choice: Choice,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

/// Stable id: the first 16 hex digits of SHA-256 over relation and payload.
pub fn question_id(relation: Relation, payload: &Payload) -> String {
    let (a, b) = payload.args();
    let mut h = Sha256::new();
    h.update(relation.as_str().as_bytes());
    h.update([0x1f]);
    h.update(payload.kind().as_bytes());
    h.update([0x1f]);
    h.update(a.as_bytes());
    h.update([0x1f]);
    h.update(b.as_bytes());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn prompt(relation: Relation, payload: &Payload) -> Result<String, AnnotationError> {
    let mismatch = || AnnotationError::PayloadMismatch {
        relation,
        payload: payload.kind(),
    };
    Ok(match (relation, payload) {
        (Relation::SoundSource, Payload::Pair { sound, source }) => {
            format!("Is {sound} a sound produced by {source}?")
        }
        (Relation::SoundScene, Payload::Scene { scene, sound }) => {
            format!("Is {sound} a sound found in the {scene}?")
        }
        (Relation::SoundPhraseCheck, Payload::Phrase { text }) => {
            format!("Does \"{text}\" refer to a sound?")
        }
        (Relation::SmellPhraseCheck, Payload::Phrase { text }) => {
            format!("Does \"{text}\" refer to a smell?")
        }
        (Relation::SmellSentiment, Payload::Phrase { text }) => {
            format!("Is the smell of {text} pleasant, unpleasant or neutral?")
        }
        _ => return Err(mismatch()),
    })
}

pub fn generate_question(
    payload: Payload,
    relation: Relation,
    context: Option<String>,
) -> Result<AnnotationQuestion, AnnotationError> {
    let empty = match &payload {
        Payload::Pair { sound, .. } if sound.is_empty() => Some("sound"),
        Payload::Pair { source, .. } if source.is_empty() => Some("source"),
        Payload::Scene { scene, .. } if scene.is_empty() => Some("scene"),
        Payload::Scene { sound, .. } if sound.is_empty() => Some("sound"),
        Payload::Phrase { text } if text.is_empty() => Some("text"),
        _ => None,
    };
    if let Some(field) = empty {
        return Err(AnnotationError::EmptyField(field));
    }
    Ok(AnnotationQuestion {
        id: question_id(relation, &payload),
        relation,
        prompt: prompt(relation, &payload)?,
        options: relation.options().to_vec(),
        payload,
        context,
        path: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(sound: &str, source: &str) -> Payload {
        Payload::Pair {
            sound: sound.into(),
            source: source.into(),
        }
    }

    #[test]
    fn sound_source_prompts() {
        let q = generate_question(pair("chirping", "birds"), Relation::SoundSource, None).unwrap();
        assert_eq!(q.prompt, "Is chirping a sound produced by birds?");
        assert_eq!(q.options, [Choice::Yes, Choice::No, Choice::NotSure]);
        let q = generate_question(pair("standing", "ovation"), Relation::SoundSource, None).unwrap();
        assert_eq!(q.prompt, "Is standing a sound produced by ovation?");
    }

    #[test]
    fn smell_sentiment_has_five_options() {
        let q = generate_question(
            Payload::Phrase {
                text: "rotten eggs".into(),
            },
            Relation::SmellSentiment,
            Some("the smell of rotten eggs filled the room".into()),
        )
        .unwrap();
        assert_eq!(q.options.len(), 5);
        assert_eq!(q.options[4], Choice::NotASmell);
        assert!(q.context.is_some());
    }

    #[test]
    fn ids_are_stable_and_distinct() {
        let a = question_id(Relation::SoundSource, &pair("chirping", "birds"));
        assert_eq!(a, question_id(Relation::SoundSource, &pair("chirping", "birds")));
        assert_eq!(a.len(), 16);
        assert_ne!(a, question_id(Relation::SoundSource, &pair("birds", "chirping")));
        let phrase = Payload::Phrase { text: "rain".into() };
        assert_ne!(
            question_id(Relation::SoundPhraseCheck, &phrase),
            question_id(Relation::SmellPhraseCheck, &phrase)
        );
    }

    #[test]
    fn mismatched_payload_and_empty_fields_are_errors() {
        assert!(matches!(
            generate_question(pair("a", "b"), Relation::SmellSentiment, None),
            Err(AnnotationError::PayloadMismatch { .. })
        ));
        assert!(matches!(
            generate_question(pair("chirping", ""), Relation::SoundSource, None),
            Err(AnnotationError::EmptyField("source"))
        ));
        assert!(matches!(
            "soundColour".parse::<Relation>(),
            Err(AnnotationError::UnknownRelation(_))
        ));
    }

    #[test]
    fn serde_names() {
        assert_eq!(serde_json::to_string(&Choice::NotASmell).unwrap(), "\"notasmell\"");
        assert_eq!(serde_json::to_string(&Relation::SoundScene).unwrap(), "\"soundScene\"");
        let err = Relation::SoundSource.check_choice(Choice::Pleasant).unwrap_err();
        assert!(err.to_string().contains("yes, no, notsure"));
    }

    proptest! {
        #[test]
        fn questions_round_trip(
            a in "[a-z]{1,8}",
            b in "[a-z]{1,8}",
            which in 0..5usize,
            ctx in proptest::option::of("[a-z ]{0,20}"),
        ) {
            let (payload, relation) = match which {
                0 => (pair(&a, &b), Relation::SoundSource),
                1 => (Payload::Scene { scene: a, sound: b }, Relation::SoundScene),
                2 => (Payload::Phrase { text: a }, Relation::SmellSentiment),
                3 => (Payload::Phrase { text: a }, Relation::SoundPhraseCheck),
                _ => (Payload::Phrase { text: a }, Relation::SmellPhraseCheck),
            };
            let q = generate_question(payload, relation, ctx).unwrap();
            let line = serde_json::to_string(&q).unwrap();
            prop_assert_eq!(serde_json::from_str::<AnnotationQuestion>(&line).unwrap(), q);
        }
    }
}
