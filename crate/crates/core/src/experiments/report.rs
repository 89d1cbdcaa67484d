use std::fmt::Write as _;

use super::EvalReport;
use crate::annotation::Relation;
use crate::models::{FeatureMode, ModelConfig};

pub const REFERENCE_LABEL: &str = "reference — original data unavailable";

#[derive(Debug, Clone, PartialEq)]
pub struct LineupEntry {
    pub name: String,
    pub config: ModelConfig,
}

fn slots(relation: Relation) -> &'static [(&'static str, FeatureMode, usize, Option<f64>)] {
    use FeatureMode::*;
    match relation {
        Relation::SoundSource => &[
            ("LSTM encoder (phrase)", Phrase, 1, Some(0.90)),
            ("linear (source - sound)", DiffSrcSnd, 1, Some(0.88)),
            ("linear (sound - source)", DiffSndSrc, 1, Some(0.87)),
            ("linear (concat)", Concat, 1, Some(0.83)),
            ("memory network, 1 hop", Memory, 1, Some(0.87)),
            ("memory network, 3 hops", Memory, 3, Some(0.85)),
        ],
        Relation::SoundScene => &[
            ("LSTM encoder (path)", Path, 1, Some(0.81)),
            ("LSTM encoder (path + sentence)", PathSentence, 1, Some(0.80)),
            ("LSTM encoder (sentence)", Sentence, 1, Some(0.75)),
            ("memory network, 1 hop", Memory, 1, Some(0.75)),
            ("memory network, 3 hops", Memory, 3, Some(0.80)),
        ],
        Relation::SmellSentiment => &[
            ("LSTM encoder (phrase)", Phrase, 1, Some(0.84)),
            ("linear (vector addition)", Add, 1, Some(0.81)),
            ("memory network, 1 hop", Memory, 1, Some(0.82)),
            ("memory network, 3 hops", Memory, 3, Some(0.82)),
        ],
        Relation::SoundPhraseCheck | Relation::SmellPhraseCheck => &[
            ("LSTM encoder (phrase)", Phrase, 1, None),
            ("linear (vector addition)", Add, 1, None),
        ],
    }
}

/// The model lineup evaluated for a relation. Every entry starts from `base`
/// and overrides the feature mode, family, hop count and class count.
pub fn standard_lineup(relation: Relation, base: &ModelConfig) -> Vec<LineupEntry> {
    slots(relation)
        .iter()
        .map(|&(name, mode, hops, _)| {
            let mut config = base.clone();
            config.feature_mode = mode;
            config.family = mode.family();
            config.hops = hops;
            config.n_classes = relation.n_classes();
            LineupEntry {
                name: name.to_string(),
                config,
            }
        })
        .collect()
}

/// Published accuracies per lineup entry, in lineup order.
pub fn reference_rows(relation: Relation) -> Vec<(&'static str, Option<f64>)> {
    slots(relation).iter().map(|&(n, _, _, r)| (n, r)).collect()
}

fn reference_for(relation: Relation, model: &str) -> Option<f64> {
    reference_rows(relation)
        .into_iter()
        .find(|(n, _)| *n == model)
        .and_then(|(_, r)| r)
}

pub fn render_markdown(relation: Relation, reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "## {relation}\n");
    if let Some(r) = reports.first() {
        let _ = writeln!(
            out,
            "Train {} / test {} examples, seed {}.\n",
            r.train_size, r.test_size, r.seed
        );
    }
    let _ = writeln!(
        out,
        "| Model | Accuracy | Correct / Total | Dropped | {REFERENCE_LABEL} |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|");
    for r in reports {
        let reference = reference_for(relation, &r.model).map_or("-".to_string(), |v| format!("{v:.2}"));
        let _ = writeln!(
            out,
            "| {} | {:.4} | {}/{} | {} | {} |",
            r.model, r.accuracy, r.correct, r.total, r.dropped, reference
        );
    }
    out
}

pub fn render_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("relation,model,accuracy,correct,total,dropped,train_size,test_size,seed,reference\n");
    for r in reports {
        let reference = reference_for(r.relation, &r.model).map_or(String::new(), |v| format!("{v:.2}"));
        let _ = writeln!(
            out,
            "{},\"{}\",{:.4},{},{},{},{},{},{},{}",
            r.relation,
            r.model,
            r.accuracy,
            r.correct,
            r.total,
            r.dropped,
            r.train_size,
            r.test_size,
            r.seed,
            reference
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;

    #[test]
    fn lineups_follow_relation() {
        let base = ModelConfig::new(FeatureMode::Concat);
        let ss = standard_lineup(Relation::SoundSource, &base);
        assert_eq!(ss.len(), 6);
        assert_eq!(ss[0].config.family, Family::LstmEncoder);
        assert_eq!(ss[5].config.hops, 3);
        let smell = standard_lineup(Relation::SmellSentiment, &base);
        assert!(smell.iter().all(|e| e.config.n_classes == 3));
        assert_eq!(standard_lineup(Relation::SoundScene, &base).len(), 5);
        assert_eq!(reference_rows(Relation::SoundScene)[0].1, Some(0.81));
    }
}
