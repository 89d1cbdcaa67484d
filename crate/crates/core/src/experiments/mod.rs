//! Datasets built from aggregated labels, seeded splits, cross-validation,
//! evaluation and Markdown/CSV reports.

mod cv;
mod report;
mod synthetic;

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{training_label, AggregatedLabel, Relation};
use crate::embeddings::EmbeddingTable;
use crate::models::{
    logreg_train, lstm_train, memnet_train, Classifier, Differentiable, Family, FeatureMode, ModelConfig, ModelError,
    TrainedModel,
};

pub use cv::{cross_validate, default_grid, folds, CvOutcome, DEFAULT_FOLDS};
pub use report::{reference_rows, render_csv, render_markdown, standard_lineup, LineupEntry, REFERENCE_LABEL};
pub use synthetic::{keyword_dataset, synthetic_sound_source, SyntheticData};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("test size {test_size} must be smaller than the dataset ({len})")]
    TestSize { test_size: usize, len: usize },
    #[error("need at least 2 folds, got {0}")]
    Folds(usize),
    #[error("fold {fold} is empty ({len} training examples for {folds} folds)")]
    EmptyFold { fold: usize, len: usize, folds: usize },
    #[error("empty configuration grid")]
    EmptyGrid,
    #[error("empty test set")]
    EmptyTestSet,
    #[error("no usable training examples after dropping out-of-vocabulary words")]
    NoUsableExamples,
    #[error("model has {model} classes, dataset has {dataset}")]
    ClassMismatch { model: usize, dataset: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One labelled example with every view a model might need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    /// `arg1<TAB>arg2` of the label row; unique within a dataset.
    pub key: String,
    /// Words on the `v_src` side: the source, the scene, or the smell phrase.
    pub first: Vec<String>,
    /// Words on the `v_snd` side: the sound; empty for smell phrases.
    pub second: Vec<String>,
    /// Mention tokens in surface order.
    pub phrase: Vec<String>,
    /// Dependency path words, scene first.
    #[serde(default)]
    pub path: Vec<String>,
    /// The sentence the mention came from.
    #[serde(default)]
    pub sentence: Vec<String>,
    pub label: usize,
}

impl Instance {
    /// Argument words as one query.
    pub fn query(&self) -> Vec<String> {
        self.first.iter().chain(&self.second).cloned().collect()
    }
}

/// Extra views for a label row, keyed by `(arg1, arg2)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Context {
    pub phrase: Vec<String>,
    pub path: Vec<String>,
    pub sentence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub relation: Relation,
    pub examples: Vec<Instance>,
    /// Label rows without a class (notsure, notasmell, unresolved).
    pub excluded: usize,
    /// Label rows repeating an earlier key.
    pub duplicates: usize,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.relation.n_classes()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }
}

fn split_words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Builds the dataset for `relation` from aggregated labels. Rows without a
/// class are excluded and repeated keys keep their first occurrence.
pub fn build_dataset(
    relation: Relation,
    labels: &[AggregatedLabel],
    contexts: &HashMap<(String, String), Context>,
) -> LabeledDataset {
    let mut seen = HashSet::new();
    let mut out = LabeledDataset {
        relation,
        examples: Vec::new(),
        excluded: 0,
        duplicates: 0,
    };
    for row in labels.iter().filter(|r| r.relation == relation) {
        let Some(label) = training_label(relation, row.label) else {
            out.excluded += 1;
            continue;
        };
        let key = (row.arg1.clone(), row.arg2.clone());
        if !seen.insert(key.clone()) {
            out.duplicates += 1;
            continue;
        }
        let (first, second) = match relation {
            Relation::SoundSource => (split_words(&row.arg2), split_words(&row.arg1)),
            Relation::SoundScene => (split_words(&row.arg1), split_words(&row.arg2)),
            _ => (split_words(&row.arg1), Vec::new()),
        };
        let ctx = contexts.get(&key).cloned().unwrap_or_default();
        let phrase = if ctx.phrase.is_empty() {
            first.iter().chain(&second).cloned().collect()
        } else {
            ctx.phrase
        };
        out.examples.push(Instance {
            key: format!("{}\t{}", row.arg1, row.arg2),
            first,
            second,
            phrase,
            path: ctx.path,
            sentence: ctx.sentence,
            label,
        });
    }
    out
}

/// Training side of a split. Only [`split_dataset`] creates one, so a test
/// set cannot be passed where training data is expected.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    relation: Relation,
    examples: Vec<Instance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    relation: Relation,
    examples: Vec<Instance>,
}

impl TrainSet {
    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn examples(&self) -> &[Instance] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

impl TestSet {
    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn examples(&self) -> &[Instance] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Uniform random split: a seeded shuffle, the first `test_size` examples
/// become the test set. Both sides keep the shuffled order.
pub fn split_dataset(
    dataset: &LabeledDataset,
    test_size: usize,
    seed: u64,
) -> Result<(TrainSet, TestSet), ExperimentError> {
    let len = dataset.examples.len();
    if test_size >= len {
        return Err(ExperimentError::TestSize { test_size, len });
    }
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset.examples[i].clone()).collect();
    Ok((
        TrainSet {
            relation: dataset.relation,
            examples: pick(&order[test_size..]),
        },
        TestSet {
            relation: dataset.relation,
            examples: pick(&order[..test_size]),
        },
    ))
}

/// Model input for one instance, or `None` when it must be dropped.
#[derive(Debug, Clone, PartialEq)]
pub enum Features {
    Vector(Vec<f64>),
    Sequences(Vec<Vec<Vec<f64>>>),
    Memory { query: Vec<String>, memory: Vec<String> },
}

fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

/// Sum of the vectors of `words`; `None` if any is out of vocabulary.
fn strict_sum(table: &EmbeddingTable, words: &[String]) -> Option<Vec<f64>> {
    let vs = table.lookup_all(words)?;
    let mut sum = vec![0.0; table.dim()];
    for v in vs {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += *x as f64;
        }
    }
    (!words.is_empty()).then_some(sum)
}

/// In-vocabulary token vectors; `None` if none are known.
fn sequence(table: &EmbeddingTable, words: &[String]) -> Option<Vec<Vec<f64>>> {
    let seq: Vec<Vec<f64>> = words.iter().filter_map(|w| table.lookup(w)).map(to_f64).collect();
    (!seq.is_empty()).then_some(seq)
}

/// Memory words for the memory network: the sentence for sound-source and
/// smell instances, the dependency path for sound-scene instances, falling
/// back to the mention itself.
pub fn memory_words(relation: Relation, inst: &Instance) -> Vec<String> {
    let preferred = match relation {
        Relation::SoundScene => &inst.path,
        _ => &inst.sentence,
    };
    if preferred.is_empty() {
        inst.phrase.clone()
    } else {
        preferred.clone()
    }
}

/// Builds the input a model of `mode` sees. Instances whose argument words
/// are out of vocabulary are dropped; inside phrase, path and sentence
/// sequences unknown tokens are skipped, and the instance is dropped if
/// nothing remains. Smell phrases sum their known tokens.
pub fn featurize(relation: Relation, inst: &Instance, mode: FeatureMode, table: &EmbeddingTable) -> Option<Features> {
    if mode == FeatureMode::Memory {
        return Some(Features::Memory {
            query: inst.query(),
            memory: memory_words(relation, inst),
        });
    }
    let phrase_only = inst.second.is_empty();
    if phrase_only {
        table.phrase_vector(&inst.first)?;
    } else {
        table.lookup_all(&inst.first)?;
        table.lookup_all(&inst.second)?;
    }
    match mode {
        FeatureMode::Add if phrase_only => Some(Features::Vector(to_f64(&table.phrase_vector(&inst.first)?))),
        FeatureMode::Concat | FeatureMode::DiffSrcSnd | FeatureMode::DiffSndSrc | FeatureMode::Add => {
            if phrase_only {
                return None;
            }
            let (a, b) = (strict_sum(table, &inst.first)?, strict_sum(table, &inst.second)?);
            let v = match mode {
                FeatureMode::Concat => a.into_iter().chain(b).collect(),
                FeatureMode::DiffSrcSnd => a.iter().zip(&b).map(|(x, y)| x - y).collect(),
                FeatureMode::DiffSndSrc => a.iter().zip(&b).map(|(x, y)| y - x).collect(),
                _ => a.iter().zip(&b).map(|(x, y)| x + y).collect(),
            };
            Some(Features::Vector(v))
        }
        FeatureMode::Phrase => Some(Features::Sequences(vec![sequence(table, &inst.phrase)?])),
        FeatureMode::Path => Some(Features::Sequences(vec![sequence(table, &inst.path)?])),
        FeatureMode::Sentence => Some(Features::Sequences(vec![sequence(table, &inst.sentence)?])),
        FeatureMode::PathSentence => Some(Features::Sequences(vec![
            sequence(table, &inst.path)?,
            sequence(table, &inst.sentence)?,
        ])),
        FeatureMode::Memory => unreachable!(),
    }
}

/// A trained model together with the number of training instances dropped.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: TrainedModel,
    pub dropped: usize,
    pub used: usize,
}

/// Trains `config` on `examples`, dropping instances that cannot be
/// featurized.
pub fn train_on(
    relation: Relation,
    examples: &[Instance],
    config: &ModelConfig,
    table: &EmbeddingTable,
) -> Result<Fitted, ExperimentError> {
    let feats: Vec<(Features, usize)> = examples
        .iter()
        .filter_map(|e| Some((featurize(relation, e, config.feature_mode, table)?, e.label)))
        .collect();
    let dropped = examples.len() - feats.len();
    if feats.is_empty() {
        return Err(ExperimentError::NoUsableExamples);
    }
    let used = feats.len();
    let model = match config.family {
        Family::LogReg => {
            let data: Vec<_> = feats
                .into_iter()
                .filter_map(|(f, y)| match f {
                    Features::Vector(v) => Some((v, y)),
                    _ => None,
                })
                .collect();
            logreg_train(&data, config)?
        }
        Family::LstmEncoder => {
            let data: Vec<_> = feats
                .into_iter()
                .filter_map(|(f, y)| match f {
                    Features::Sequences(s) => Some((s, y)),
                    _ => None,
                })
                .collect();
            lstm_train(&data, config)?
        }
        Family::MemNet => {
            let data: Vec<_> = feats
                .into_iter()
                .filter_map(|(f, y)| match f {
                    Features::Memory { query, memory } => Some((query, memory, y)),
                    _ => None,
                })
                .collect();
            memnet_train(&data, config)?
        }
    };
    Ok(Fitted { model, dropped, used })
}

/// Predicted class, or `None` if the instance cannot be featurized.
pub fn predict(
    model: &TrainedModel,
    relation: Relation,
    inst: &Instance,
    table: &EmbeddingTable,
) -> Result<Option<usize>, ExperimentError> {
    let Some(f) = featurize(relation, inst, model.config.feature_mode, table) else {
        return Ok(None);
    };
    let p = match (&model.classifier, f) {
        (Classifier::LogReg(m), Features::Vector(v)) => m.predict(&v)?,
        (Classifier::LstmEncoder(m), Features::Sequences(s)) => m.predict(&s)?,
        (Classifier::MemNet(m), Features::Memory { query, memory }) => m.predict(&m.encode(&query, &memory)?)?,
        _ => return Ok(None),
    };
    Ok(Some(p))
}

fn accuracy_on(
    model: &TrainedModel,
    relation: Relation,
    examples: &[Instance],
    table: &EmbeddingTable,
) -> Result<(usize, usize), ExperimentError> {
    let mut correct = 0;
    let mut total = 0;
    for e in examples {
        if let Some(p) = predict(model, relation, e, table)? {
            total += 1;
            correct += usize::from(p == e.label);
        }
    }
    Ok((correct, total))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub key: String,
    pub label: usize,
    /// `None` when the instance was dropped (out of vocabulary).
    pub predicted: Option<usize>,
}

/// `(correct, total, accuracy)` over the predictions that were made.
pub fn tally(predictions: &[Prediction]) -> (usize, usize, f64) {
    let made: Vec<_> = predictions
        .iter()
        .filter_map(|p| Some((p.predicted?, p.label)))
        .collect();
    let correct = made.iter().filter(|(p, y)| p == y).count();
    let total = made.len();
    let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    (correct, total, accuracy)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub relation: Relation,
    pub model: String,
    /// `correct / total` over the test instances the model could read.
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// Test instances dropped for out-of-vocabulary words.
    pub dropped: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub config: ModelConfig,
    pub seed: u64,
    pub predictions: Vec<Prediction>,
}

/// Exact accuracy on the test set, with per-example predictions.
pub fn evaluate(
    model: &TrainedModel,
    test: &TestSet,
    table: &EmbeddingTable,
    train_size: usize,
) -> Result<EvalReport, ExperimentError> {
    if test.is_empty() {
        return Err(ExperimentError::EmptyTestSet);
    }
    let dataset_classes = test.relation.n_classes();
    if model.config.n_classes != dataset_classes {
        return Err(ExperimentError::ClassMismatch {
            model: model.config.n_classes,
            dataset: dataset_classes,
        });
    }
    let predictions = test
        .examples
        .iter()
        .map(|e| {
            Ok(Prediction {
                key: e.key.clone(),
                label: e.label,
                predicted: predict(model, test.relation, e, table)?,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let (correct, total, accuracy) = tally(&predictions);
    Ok(EvalReport {
        relation: test.relation,
        model: model.config.label(),
        accuracy,
        correct,
        total,
        dropped: test.len() - total,
        train_size,
        test_size: test.len(),
        config: model.config.clone(),
        seed: model.config.seed,
        predictions,
    })
}

/// Trains every lineup entry on the training split and evaluates it on the
/// test split.
pub fn run_lineup(
    train: &TrainSet,
    test: &TestSet,
    lineup: &[LineupEntry],
    table: &EmbeddingTable,
) -> Result<Vec<EvalReport>, ExperimentError> {
    use rayon::prelude::*;
    lineup
        .par_iter()
        .map(|entry| {
            let fitted = train_on(train.relation, &train.examples, &entry.config, table)?;
            let mut report = evaluate(&fitted.model, test, table, train.len())?;
            report.model = entry.name.clone();
            Ok(report)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{Choice, Majority};

    fn inst(i: usize, label: usize) -> Instance {
        Instance {
            key: format!("k{i}"),
            first: vec![format!("s{i}")],
            second: vec![format!("n{i}")],
            phrase: vec![format!("s{i}"), format!("n{i}")],
            path: vec![],
            sentence: vec![],
            label,
        }
    }

    fn dataset(n: usize) -> LabeledDataset {
        LabeledDataset {
            relation: Relation::SoundSource,
            examples: (0..n).map(|i| inst(i, i % 2)).collect(),
            excluded: 0,
            duplicates: 0,
        }
    }

    #[test]
    fn split_sizes_are_exact() {
        for (n, train) in [(634, 534), (584, 484), (600, 500)] {
            let (tr, te) = split_dataset(&dataset(n), 100, 7).unwrap();
            assert_eq!((tr.len(), te.len()), (train, 100));
            let keys: HashSet<_> = tr.examples().iter().map(|e| &e.key).collect();
            assert!(te.examples().iter().all(|e| !keys.contains(&e.key)));
        }
        assert!(matches!(
            split_dataset(&dataset(100), 100, 0),
            Err(ExperimentError::TestSize { .. })
        ));
    }

    #[test]
    fn build_dataset_maps_labels_and_dedups() {
        let row = |a: &str, b: &str, l: Majority| AggregatedLabel {
            relation: Relation::SoundSource,
            arg1: a.into(),
            arg2: b.into(),
            label: l,
        };
        let labels = vec![
            row("chirping", "birds", Majority::Label(Choice::Yes)),
            row("standing", "ovation", Majority::Label(Choice::No)),
            row("chirping", "birds", Majority::Label(Choice::No)),
            row("humming", "fridge", Majority::Label(Choice::NotSure)),
            row("ticking", "clock", Majority::Unresolved),
        ];
        let mut ctx = HashMap::new();
        ctx.insert(
            ("chirping".to_string(), "birds".to_string()),
            Context {
                phrase: vec!["birds".into(), "chirping".into()],
                ..Context::default()
            },
        );
        let ds = build_dataset(Relation::SoundSource, &labels, &ctx);
        assert_eq!(ds.len(), 2);
        assert_eq!((ds.excluded, ds.duplicates), (2, 1));
        assert_eq!(ds.examples[0].first, ["birds"]);
        assert_eq!(ds.examples[0].second, ["chirping"]);
        assert_eq!(ds.examples[0].label, 1);
        assert_eq!(ds.examples[1].phrase, ["ovation", "standing"]);
    }

    #[test]
    fn oov_arguments_drop_the_instance() {
        let table = EmbeddingTable::parse("s1 1 0\nn1 0 1\ns2 1 1\n").unwrap();
        let r = Relation::SoundSource;
        assert!(featurize(r, &inst(1, 0), FeatureMode::Concat, &table).is_some());
        assert!(featurize(r, &inst(2, 0), FeatureMode::Concat, &table).is_none());
        assert!(featurize(r, &inst(2, 0), FeatureMode::Phrase, &table).is_none());
        assert!(featurize(r, &inst(2, 0), FeatureMode::Memory, &table).is_some());
        assert_eq!(
            featurize(r, &inst(1, 0), FeatureMode::DiffSndSrc, &table),
            Some(Features::Vector(vec![-1.0, 1.0]))
        );
    }

    #[test]
    fn perfect_and_random_predictors() {
        let examples: Vec<Instance> = (0..1000).map(|i| inst(i, i % 2)).collect();
        let oracle: Vec<Prediction> = examples
            .iter()
            .map(|e| Prediction {
                key: e.key.clone(),
                label: e.label,
                predicted: Some(e.label),
            })
            .collect();
        assert_eq!(tally(&oracle), (1000, 1000, 1.0));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let coin: Vec<Prediction> = examples
            .iter()
            .map(|e| Prediction {
                key: e.key.clone(),
                label: e.label,
                predicted: Some(rand::Rng::random_range(&mut rng, 0..2)),
            })
            .collect();
        assert!((tally(&coin).2 - 0.5).abs() <= 0.05);

        let mut partial = oracle[..4].to_vec();
        partial[0].predicted = None;
        partial[1].predicted = Some(1 - partial[1].label);
        assert_eq!(tally(&partial), (2, 3, 2.0 / 3.0));
    }
}
