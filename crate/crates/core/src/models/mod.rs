//! Classifiers with hand-written gradients: softmax regression, an LSTM
//! encoder feeding a linear layer, and an end-to-end memory network.
//!
//! All models train by plain SGD on single examples and minimise the
//! cross-entropy of a softmax output.

mod checkpoint;
mod logreg;
mod lstm;
mod memnet;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use logreg::SoftmaxRegression;
pub use lstm::{Lstm, LstmClassifier, LstmTrace};
pub use memnet::{MemNet, MemoryInput, MemoryTrace, Vocab, PAD, UNK};
pub use train::{fit, grad_check, Differentiable};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate labels: training data needs at least two classes")]
    DegenerateLabels,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("empty sequence")]
    EmptySequence,
    #[error("no memory slots")]
    EmptyMemory,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("non-finite loss")]
    NonFinite,
    #[error("epsilon {0} outside [1e-6, 1e-3]")]
    Epsilon(f64),
    #[error("model holds a {found} classifier, expected {expected}")]
    WrongFamily { expected: Family, found: Family },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// A named parameter tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<f64>,
    #[serde(skip)]
    pub grad: Vec<f64>,
}

impl Param {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Param {
            name: name.into(),
            shape: shape.to_vec(),
            value: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    /// Uniform in [-0.1, 0.1].
    pub fn uniform<R: Rng>(name: impl Into<String>, shape: &[usize], rng: &mut R) -> Self {
        let mut p = Self::zeros(name, shape);
        for v in &mut p.value {
            *v = rng.random_range(-0.1..=0.1);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.clear();
        self.grad.resize(self.value.len(), 0.0);
    }

    /// Row `r` of a matrix parameter.
    pub fn row(&self, r: usize) -> &[f64] {
        let cols = self.shape[1];
        &self.value[r * cols..(r + 1) * cols]
    }

    pub fn grad_row_mut(&mut self, r: usize) -> &mut [f64] {
        let cols = self.shape[1];
        &mut self.grad[r * cols..(r + 1) * cols]
    }

    fn check_shape(&self) -> Result<(), ModelError> {
        let n: usize = self.shape.iter().product();
        if n != self.value.len() {
            return Err(ModelError::Checkpoint(format!(
                "parameter {} has {} values for shape {:?}",
                self.name,
                self.value.len(),
                self.shape
            )));
        }
        Ok(())
    }
}

/// `out = W x + b` for `W` of shape `[rows x cols]`.
pub(crate) fn affine(w: &Param, b: &Param, x: &[f64]) -> Vec<f64> {
    let cols = w.shape[1];
    debug_assert_eq!(cols, x.len());
    (0..w.shape[0])
        .map(|r| b.value[r] + dot(&w.value[r * cols..(r + 1) * cols], x))
        .collect()
}

/// Accumulates gradients of `W x + b` given `dout`; returns `dx`.
pub(crate) fn affine_backward(w: &mut Param, b: &mut Param, x: &[f64], dout: &[f64]) -> Vec<f64> {
    let cols = w.shape[1];
    let mut dx = vec![0.0; cols];
    for (r, &d) in dout.iter().enumerate() {
        b.grad[r] += d;
        let row = r * cols;
        for c in 0..cols {
            w.grad[row + c] += d * x[c];
            dx[c] += d * w.value[row + c];
        }
    }
    dx
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(rename = "logreg")]
    LogReg,
    LstmEncoder,
    #[serde(rename = "memnet")]
    MemNet,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::LogReg => "logreg",
            Family::LstmEncoder => "lstm_encoder",
            Family::MemNet => "memnet",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "logreg" => Ok(Family::LogReg),
            "lstm_encoder" | "lstm" => Ok(Family::LstmEncoder),
            "memnet" => Ok(Family::MemNet),
            _ => Err(ModelError::Config(format!("unknown model family {s:?}"))),
        }
    }
}

/// Which inputs a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// `[v_src ; v_snd]`
    Concat,
    /// `v_src - v_snd`
    DiffSrcSnd,
    /// `v_snd - v_src`
    DiffSndSrc,
    /// Sum of the argument (or phrase token) vectors.
    Add,
    /// LSTM over the phrase tokens in surface order.
    Phrase,
    /// LSTM over the dependency path words.
    Path,
    /// LSTM over the sentence.
    Sentence,
    /// Path and sentence encodings, concatenated.
    PathSentence,
    /// Query/memory words for the memory network.
    Memory,
}

impl FeatureMode {
    pub const ALL: [FeatureMode; 9] = [
        FeatureMode::Concat,
        FeatureMode::DiffSrcSnd,
        FeatureMode::DiffSndSrc,
        FeatureMode::Add,
        FeatureMode::Phrase,
        FeatureMode::Path,
        FeatureMode::Sentence,
        FeatureMode::PathSentence,
        FeatureMode::Memory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Concat => "concat",
            FeatureMode::DiffSrcSnd => "diff_src_snd",
            FeatureMode::DiffSndSrc => "diff_snd_src",
            FeatureMode::Add => "add",
            FeatureMode::Phrase => "phrase",
            FeatureMode::Path => "path",
            FeatureMode::Sentence => "sentence",
            FeatureMode::PathSentence => "path_sentence",
            FeatureMode::Memory => "memory",
        }
    }

    pub fn family(self) -> Family {
        match self {
            FeatureMode::Concat | FeatureMode::DiffSrcSnd | FeatureMode::DiffSndSrc | FeatureMode::Add => {
                Family::LogReg
            }
            FeatureMode::Memory => Family::MemNet,
            _ => Family::LstmEncoder,
        }
    }

    /// Number of sequences an LSTM model encodes.
    pub fn n_sequences(self) -> usize {
        match self {
            FeatureMode::PathSentence => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.replace('-', "_");
        FeatureMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown feature mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub family: Family,
    pub feature_mode: FeatureMode,
    pub hidden_size: usize,
    pub hops: usize,
    pub memory_capacity: usize,
    pub embed_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub n_classes: usize,
}

impl ModelConfig {
    pub fn new(feature_mode: FeatureMode) -> Self {
        ModelConfig {
            family: feature_mode.family(),
            feature_mode,
            hidden_size: 50,
            hops: 1,
            memory_capacity: 30,
            embed_dim: 32,
            learning_rate: 0.1,
            epochs: 200,
            seed: 0,
            n_classes: 2,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.feature_mode.family() != self.family {
            return bad(format!(
                "feature mode {} does not apply to {}",
                self.feature_mode, self.family
            ));
        }
        if self.hidden_size == 0 {
            return bad("hidden_size must be at least 1".into());
        }
        if self.hops == 0 {
            return bad("hops must be at least 1".into());
        }
        if self.memory_capacity == 0 || self.embed_dim == 0 {
            return bad("memory_capacity and embed_dim must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.n_classes < 2 {
            return bad("n_classes must be at least 2".into());
        }
        Ok(())
    }

    /// A short description such as `lstm_encoder/path h=50 lr=0.1`.
    pub fn label(&self) -> String {
        match self.family {
            Family::LogReg => format!("{}/{} lr={}", self.family, self.feature_mode, self.learning_rate),
            Family::LstmEncoder => format!(
                "{}/{} h={} lr={}",
                self.family, self.feature_mode, self.hidden_size, self.learning_rate
            ),
            Family::MemNet => format!(
                "{} k={} d={} lr={}",
                self.family, self.hops, self.embed_dim, self.learning_rate
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Classifier {
    #[serde(rename = "logreg")]
    LogReg(SoftmaxRegression),
    LstmEncoder(LstmClassifier),
    #[serde(rename = "memnet")]
    MemNet(MemNet),
}

impl Classifier {
    pub fn family(&self) -> Family {
        match self {
            Classifier::LogReg(_) => Family::LogReg,
            Classifier::LstmEncoder(_) => Family::LstmEncoder,
            Classifier::MemNet(_) => Family::MemNet,
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Classifier::LogReg(m) => m.params(),
            Classifier::LstmEncoder(m) => m.params(),
            Classifier::MemNet(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Classifier::LogReg(m) => m.params_mut(),
            Classifier::LstmEncoder(m) => m.params_mut(),
            Classifier::MemNet(m) => m.params_mut(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub classifier: Classifier,
    /// Mean training loss after each epoch.
    pub history: Vec<f64>,
}

fn check_labels(labels: impl Iterator<Item = usize>, n_classes: usize) -> Result<(), ModelError> {
    let mut seen = vec![false; n_classes];
    let mut any = false;
    for label in labels {
        any = true;
        if label >= n_classes {
            return Err(ModelError::Label { label, n_classes });
        }
        seen[label] = true;
    }
    if !any {
        return Err(ModelError::EmptyDataset);
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(ModelError::DegenerateLabels);
    }
    Ok(())
}

fn init_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Softmax regression over fixed feature vectors.
pub fn logreg_train(data: &[(Vec<f64>, usize)], config: &ModelConfig) -> Result<TrainedModel, ModelError> {
    config.validate()?;
    if config.family != Family::LogReg {
        return Err(ModelError::WrongFamily {
            expected: Family::LogReg,
            found: config.family,
        });
    }
    check_labels(data.iter().map(|d| d.1), config.n_classes)?;
    let dim = data[0].0.len();
    if let Some((x, _)) = data.iter().find(|(x, _)| x.len() != dim) {
        return Err(ModelError::Dimension {
            expected: dim,
            found: x.len(),
        });
    }
    let mut model = SoftmaxRegression::new(dim, config.n_classes, &mut init_rng(config.seed));
    let history = fit(&mut model, data, config.learning_rate, config.epochs, config.seed)?;
    Ok(TrainedModel {
        config: config.clone(),
        classifier: Classifier::LogReg(model),
        history,
    })
}

/// LSTM encoder(s) over pretrained vectors, trained jointly with the output
/// layer. Each example holds one sequence per encoder.
pub fn lstm_train(data: &[(Vec<Vec<Vec<f64>>>, usize)], config: &ModelConfig) -> Result<TrainedModel, ModelError> {
    config.validate()?;
    if config.family != Family::LstmEncoder {
        return Err(ModelError::WrongFamily {
            expected: Family::LstmEncoder,
            found: config.family,
        });
    }
    check_labels(data.iter().map(|d| d.1), config.n_classes)?;
    let n_seq = config.feature_mode.n_sequences();
    let input_dim = data[0]
        .0
        .first()
        .and_then(|s| s.first())
        .map(Vec::len)
        .ok_or(ModelError::EmptySequence)?;
    for (x, _) in data {
        if x.len() != n_seq {
            return Err(ModelError::Dimension {
                expected: n_seq,
                found: x.len(),
            });
        }
        for step in x.iter().flatten() {
            if step.len() != input_dim {
                return Err(ModelError::Dimension {
                    expected: input_dim,
                    found: step.len(),
                });
            }
        }
        if x.iter().any(Vec::is_empty) {
            return Err(ModelError::EmptySequence);
        }
    }
    let mut model = LstmClassifier::new(
        n_seq,
        input_dim,
        config.hidden_size,
        config.n_classes,
        &mut init_rng(config.seed),
    );
    let history = fit(&mut model, data, config.learning_rate, config.epochs, config.seed)?;
    Ok(TrainedModel {
        config: config.clone(),
        classifier: Classifier::LstmEncoder(model),
        history,
    })
}

/// Memory network over word instances; the vocabulary is built from the
/// training data.
pub fn memnet_train(
    data: &[(Vec<String>, Vec<String>, usize)],
    config: &ModelConfig,
) -> Result<TrainedModel, ModelError> {
    config.validate()?;
    if config.family != Family::MemNet {
        return Err(ModelError::WrongFamily {
            expected: Family::MemNet,
            found: config.family,
        });
    }
    check_labels(data.iter().map(|d| d.2), config.n_classes)?;
    let vocab = Vocab::build(data.iter().flat_map(|(q, m, _)| q.iter().chain(m)));
    let mut model = MemNet::new(
        vocab,
        config.embed_dim,
        config.hops,
        config.memory_capacity,
        config.n_classes,
        &mut init_rng(config.seed),
    );
    let encoded: Vec<(MemoryInput, usize)> = data
        .iter()
        .map(|(q, m, y)| Ok((model.encode(q, m)?, *y)))
        .collect::<Result<_, ModelError>>()?;
    let history = fit(&mut model, &encoded, config.learning_rate, config.epochs, config.seed)?;
    Ok(TrainedModel {
        config: config.clone(),
        classifier: Classifier::MemNet(model),
        history,
    })
}
