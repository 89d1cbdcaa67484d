use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, affine_backward, dot, softmax, Differentiable, ModelError, Param};

/// Padding id; padded slots are masked out of attention.
pub const PAD: usize = 0;
/// Shared id for words unseen in training.
pub const UNK: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// `<pad>`, `<unk>`, then the distinct words in sorted order.
    pub fn build<'a, I: IntoIterator<Item = &'a String>>(words: I) -> Self {
        let distinct: BTreeSet<&String> = words.into_iter().collect();
        let mut all = vec!["<pad>".to_string(), "<unk>".to_string()];
        all.extend(distinct.into_iter().cloned());
        Vocab::from(all)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }
}

impl From<Vec<String>> for Vocab {
    fn from(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocab { words, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.words
    }
}

/// Word ids of a query and its memory, padded to capacity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryInput {
    pub query: Vec<usize>,
    pub memory: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MemoryTrace {
    /// Controller state before each hop and after the last (`k + 1` entries).
    pub states: Vec<Vec<f64>>,
    /// Attention over memory slots per hop; padded slots get 0.
    pub attention: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

/// End-to-end memory network with adjacent weight tying: hop `k` reads keys
/// from embedding `E_{k-1}` and values from `E_k`; the query is embedded
/// with `E_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemNet {
    pub vocab: Vocab,
    pub capacity: usize,
    pub embeddings: Vec<Param>,
    pub out_w: Param,
    pub out_b: Param,
}

impl MemNet {
    pub fn new<R: Rng>(
        vocab: Vocab,
        embed_dim: usize,
        hops: usize,
        capacity: usize,
        n_classes: usize,
        rng: &mut R,
    ) -> Self {
        let v = vocab.len();
        let embeddings = (0..=hops)
            .map(|k| Param::uniform(format!("E{k}"), &[v, embed_dim], rng))
            .collect();
        MemNet {
            vocab,
            capacity,
            embeddings,
            out_w: Param::uniform("out.w", &[n_classes, embed_dim], rng),
            out_b: Param::uniform("out.b", &[n_classes], rng),
        }
    }

    pub fn hops(&self) -> usize {
        self.embeddings.len() - 1
    }

    pub fn embed_dim(&self) -> usize {
        self.embeddings[0].shape[1]
    }

    /// Maps words to ids, keeps the first `capacity` memory words and pads
    /// the rest.
    pub fn encode<S: AsRef<str>>(&self, query: &[S], memory: &[S]) -> Result<MemoryInput, ModelError> {
        if query.is_empty() {
            return Err(ModelError::EmptySequence);
        }
        if memory.is_empty() {
            return Err(ModelError::EmptyMemory);
        }
        let mut mem: Vec<usize> = memory
            .iter()
            .take(self.capacity)
            .map(|w| self.vocab.id(w.as_ref()))
            .collect();
        mem.resize(self.capacity, PAD);
        Ok(MemoryInput {
            query: query.iter().map(|w| self.vocab.id(w.as_ref())).collect(),
            memory: mem,
        })
    }

    pub fn forward(&self, x: &MemoryInput) -> Result<MemoryTrace, ModelError> {
        if x.memory.iter().all(|&m| m == PAD) {
            return Err(ModelError::EmptyMemory);
        }
        let d = self.embed_dim();
        let mut u = vec![0.0; d];
        for &q in x.query.iter().filter(|&&q| q != PAD) {
            for (a, b) in u.iter_mut().zip(self.embeddings[0].row(q)) {
                *a += b;
            }
        }
        let mut states = vec![u.clone()];
        let mut attention = Vec::with_capacity(self.hops());
        for k in 1..=self.hops() {
            let (keys, values) = (&self.embeddings[k - 1], &self.embeddings[k]);
            let slots: Vec<usize> = (0..x.memory.len()).filter(|&i| x.memory[i] != PAD).collect();
            let scores: Vec<f64> = slots.iter().map(|&i| dot(&u, keys.row(x.memory[i]))).collect();
            let p_live = softmax(&scores);
            let mut p = vec![0.0; x.memory.len()];
            let mut o = vec![0.0; d];
            for (&i, &pi) in slots.iter().zip(&p_live) {
                p[i] = pi;
                for (a, b) in o.iter_mut().zip(values.row(x.memory[i])) {
                    *a += pi * b;
                }
            }
            for (a, b) in u.iter_mut().zip(&o) {
                *a += b;
            }
            states.push(u.clone());
            attention.push(p);
        }
        let probs = softmax(&affine(&self.out_w, &self.out_b, &u));
        Ok(MemoryTrace {
            states,
            attention,
            probs,
        })
    }
}

impl Differentiable for MemNet {
    type Input = MemoryInput;

    fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.embeddings.iter().collect();
        out.extend([&self.out_w, &self.out_b]);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.embeddings.iter_mut().collect();
        out.extend([&mut self.out_w, &mut self.out_b]);
        out
    }

    fn predict_proba(&self, x: &MemoryInput) -> Result<Vec<f64>, ModelError> {
        Ok(self.forward(x)?.probs)
    }

    fn accumulate_grad(&mut self, x: &MemoryInput, y: usize) -> Result<f64, ModelError> {
        let trace = self.forward(x)?;
        let mut dlogits = trace.probs.clone();
        let loss = -dlogits[y].ln();
        dlogits[y] -= 1.0;
        let u_last = trace.states.last().unwrap();
        let mut du = affine_backward(&mut self.out_w, &mut self.out_b, u_last, &dlogits);

        for k in (1..=self.hops()).rev() {
            let u_prev = &trace.states[k - 1];
            let p = &trace.attention[k - 1];
            // o = Σ p_i c_i, so dc_i = p_i du and dp_i = du · c_i.
            let dp: Vec<f64> = x
                .memory
                .iter()
                .map(|&m| {
                    if m == PAD {
                        0.0
                    } else {
                        dot(&du, self.embeddings[k].row(m))
                    }
                })
                .collect();
            let p_dot_dp: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
            let mut du_prev = du.clone();
            for (i, &m) in x.memory.iter().enumerate() {
                if m == PAD {
                    continue;
                }
                let pi = p[i];
                for (g, d) in self.embeddings[k].grad_row_mut(m).iter_mut().zip(&du) {
                    *g += pi * d;
                }
                let dscore = pi * (dp[i] - p_dot_dp);
                let key = self.embeddings[k - 1].row(m).to_vec();
                for (g, uv) in self.embeddings[k - 1].grad_row_mut(m).iter_mut().zip(u_prev) {
                    *g += dscore * uv;
                }
                for (a, kv) in du_prev.iter_mut().zip(&key) {
                    *a += dscore * kv;
                }
            }
            du = du_prev;
        }
        for &q in x.query.iter().filter(|&&q| q != PAD) {
            for (g, d) in self.embeddings[0].grad_row_mut(q).iter_mut().zip(&du) {
                *g += d;
            }
        }
        Ok(loss)
    }
}
