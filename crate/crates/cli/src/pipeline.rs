//! Glue between pipeline stages shared by the subcommands and the demo.

use std::collections::{BTreeMap, HashMap};

use anyhow::{Context as _, Result};
use senscommon::annotation::{generate_question, AnnotationQuestion, Choice, Payload, Relation};
use senscommon::depgraph::SoundScenePair;
use senscommon::experiments::Context;
use senscommon::mining::{tokenize, CandidatePhrase, SoundSourcePair};
use serde::{Deserialize, Serialize};

/// A plausible scene/sound pair with the first co-mention that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneCandidate {
    pub scene: String,
    pub sound: String,
    pub signature: String,
    pub path: Vec<String>,
    pub sentence: Vec<String>,
}

/// The first co-mention of each plausible pair, in `plausible` order.
pub fn scene_candidates(pairs: &[SoundScenePair], plausible: &[(String, String)]) -> Vec<SceneCandidate> {
    let mut first: HashMap<(&str, &str), &SoundScenePair> = HashMap::new();
    for p in pairs {
        first.entry(p.key()).or_insert(p);
    }
    plausible
        .iter()
        .filter_map(|(scene, sound)| {
            let p = first.get(&(scene.as_str(), sound.as_str()))?;
            Some(SceneCandidate {
                scene: scene.clone(),
                sound: sound.clone(),
                signature: p.path.text(),
                path: p.path_tokens(),
                sentence: p.sentence_text.clone(),
            })
        })
        .collect()
}

pub fn words(text: &str) -> Vec<String> {
    tokenize(text)
        .iter()
        .filter_map(|t| t.word().map(str::to_string))
        .collect()
}

/// Questions for every candidate, first occurrence wins on repeated ids.
pub fn build_questions(
    pairs: &[SoundSourcePair],
    scenes: &[SceneCandidate],
    smells: &[CandidatePhrase],
) -> Result<Vec<AnnotationQuestion>> {
    let mut out: Vec<AnnotationQuestion> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut push = |q: AnnotationQuestion| {
        if seen.insert(q.id.clone()) {
            out.push(q);
        }
    };
    for p in pairs {
        let payload = Payload::Pair {
            sound: p.sound.clone(),
            source: p.source.clone(),
        };
        let context = (!p.context.is_empty()).then(|| p.context.clone());
        push(generate_question(payload, Relation::SoundSource, context).context("sound-source question")?);
    }
    for s in scenes {
        let payload = Payload::Scene {
            scene: s.scene.clone(),
            sound: s.sound.clone(),
        };
        let mut q = generate_question(payload, Relation::SoundScene, Some(s.sentence.join(" ")))
            .context("sound-scene question")?;
        q.path = Some(s.signature.clone());
        push(q);
    }
    for p in smells {
        let payload = Payload::Phrase { text: p.text.clone() };
        let context = (!p.context.is_empty()).then(|| p.context.clone());
        push(generate_question(payload, Relation::SmellSentiment, context).context("smell question")?);
    }
    Ok(out)
}

/// Context views keyed by the aggregated `(arg1, arg2)` of each relation.
pub fn build_contexts(
    pairs: &[SoundSourcePair],
    scenes: &[SceneCandidate],
    smells: &[CandidatePhrase],
) -> HashMap<(String, String), Context> {
    let mut out = HashMap::new();
    for p in pairs {
        out.entry((p.sound.clone(), p.source.clone()))
            .or_insert_with(|| Context {
                phrase: p.phrase_tokens(),
                path: Vec::new(),
                sentence: words(&p.context),
            });
    }
    for s in scenes {
        out.entry((s.scene.clone(), s.sound.clone()))
            .or_insert_with(|| Context {
                phrase: s.sound.split_whitespace().map(str::to_string).collect(),
                path: s.path.clone(),
                sentence: s.sentence.iter().map(|w| w.to_lowercase()).collect(),
            });
    }
    for p in smells {
        out.entry((p.text.clone(), String::new())).or_insert_with(|| Context {
            phrase: p.tokens().into_iter().map(str::to_string).collect(),
            path: Vec::new(),
            sentence: words(&p.context),
        });
    }
    out
}

/// Ground truth rows `relation, arg1, arg2, truth`.
pub type Gold = BTreeMap<(Relation, String, String), Choice>;

pub fn parse_gold(text: &str) -> Result<Gold> {
    senscommon::fixtures::gold_rows(text)
        .into_iter()
        .map(|(r, a, b, t)| {
            let relation: Relation = r.parse()?;
            let truth: Choice = t.parse()?;
            Ok(((relation, a, b), truth))
        })
        .collect()
}

pub fn truth_of(gold: &Gold, q: &AnnotationQuestion) -> Option<Choice> {
    let (a, b) = q.payload.args();
    gold.get(&(q.relation, a.to_string(), b.to_string())).copied()
}
