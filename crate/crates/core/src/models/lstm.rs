use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, affine_backward, sigmoid, softmax, Differentiable, ModelError, Param};

/// Single-layer LSTM. Gate blocks in `w`/`b` are ordered input, forget,
/// output, candidate; `w` acts on `[x_t ; h_{t-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub w: Param,
    pub b: Param,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    /// `[x_t ; h_{t-1}]` per step.
    pub inputs: Vec<Vec<f64>>,
    /// Gate activations `[i ; f ; o ; g]` per step.
    pub gates: Vec<Vec<f64>>,
    /// Cell states `c_0 = 0, c_1, .., c_T`.
    pub cells: Vec<Vec<f64>>,
    /// Hidden states `h_1, .., h_T`.
    pub hidden: Vec<Vec<f64>>,
}

impl LstmTrace {
    pub fn output(&self) -> &[f64] {
        self.hidden.last().expect("traces are non-empty")
    }
}

impl Lstm {
    pub fn new<R: Rng>(name: &str, input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Lstm {
            w: Param::uniform(format!("{name}.w"), &[4 * hidden, input_dim + hidden], rng),
            b: Param::uniform(format!("{name}.b"), &[4 * hidden], rng),
        }
    }

    pub fn zeros(name: &str, input_dim: usize, hidden: usize) -> Self {
        Lstm {
            w: Param::zeros(format!("{name}.w"), &[4 * hidden, input_dim + hidden]),
            b: Param::zeros(format!("{name}.b"), &[4 * hidden]),
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w.shape[0] / 4
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape[1] - self.hidden_size()
    }

    pub fn forward(&self, seq: &[Vec<f64>]) -> Result<LstmTrace, ModelError> {
        if seq.is_empty() {
            return Err(ModelError::EmptySequence);
        }
        let (d, h) = (self.input_dim(), self.hidden_size());
        let mut trace = LstmTrace {
            inputs: Vec::with_capacity(seq.len()),
            gates: Vec::with_capacity(seq.len()),
            cells: vec![vec![0.0; h]],
            hidden: Vec::with_capacity(seq.len()),
        };
        let mut h_prev = vec![0.0; h];
        for x in seq {
            if x.len() != d {
                return Err(ModelError::Dimension {
                    expected: d,
                    found: x.len(),
                });
            }
            let input: Vec<f64> = x.iter().chain(&h_prev).copied().collect();
            let mut z = affine(&self.w, &self.b, &input);
            for (k, v) in z.iter_mut().enumerate() {
                *v = if k < 3 * h { sigmoid(*v) } else { v.tanh() };
            }
            let c_prev = trace.cells.last().unwrap();
            let c: Vec<f64> = (0..h).map(|j| z[h + j] * c_prev[j] + z[j] * z[3 * h + j]).collect();
            let hid: Vec<f64> = (0..h).map(|j| z[2 * h + j] * c[j].tanh()).collect();
            trace.inputs.push(input);
            trace.gates.push(z);
            trace.cells.push(c);
            h_prev = hid.clone();
            trace.hidden.push(hid);
        }
        Ok(trace)
    }

    /// Final hidden state.
    pub fn encode(&self, seq: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        Ok(self.forward(seq)?.output().to_vec())
    }

    /// Backpropagates `dh` at the last step through time, accumulating into
    /// `w` and `b`.
    pub fn backward(&mut self, trace: &LstmTrace, dh_last: &[f64]) {
        let (d, h) = (self.input_dim(), self.hidden_size());
        let mut dh = dh_last.to_vec();
        let mut dc = vec![0.0; h];
        for t in (0..trace.gates.len()).rev() {
            let g = &trace.gates[t];
            let (c, c_prev) = (&trace.cells[t + 1], &trace.cells[t]);
            let mut dz = vec![0.0; 4 * h];
            for j in 0..h {
                let (i_, f_, o_, g_) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = c[j].tanh();
                dc[j] += dh[j] * o_ * (1.0 - tc * tc);
                dz[j] = dc[j] * g_ * i_ * (1.0 - i_);
                dz[h + j] = dc[j] * c_prev[j] * f_ * (1.0 - f_);
                dz[2 * h + j] = dh[j] * tc * o_ * (1.0 - o_);
                dz[3 * h + j] = dc[j] * i_ * (1.0 - g_ * g_);
                dc[j] *= f_;
            }
            let dinput = affine_backward(&mut self.w, &mut self.b, &trace.inputs[t], &dz);
            dh.copy_from_slice(&dinput[d..]);
        }
    }
}

/// One LSTM per input sequence; final states are concatenated and fed to a
/// linear softmax layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmClassifier {
    pub encoders: Vec<Lstm>,
    pub out_w: Param,
    pub out_b: Param,
}

impl LstmClassifier {
    pub fn new<R: Rng>(n_sequences: usize, input_dim: usize, hidden: usize, n_classes: usize, rng: &mut R) -> Self {
        let encoders = (0..n_sequences)
            .map(|i| Lstm::new(&format!("enc{i}"), input_dim, hidden, rng))
            .collect();
        LstmClassifier {
            encoders,
            out_w: Param::uniform("out.w", &[n_classes, n_sequences * hidden], rng),
            out_b: Param::uniform("out.b", &[n_classes], rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.encoders[0].input_dim()
    }

    fn traces(&self, x: &[Vec<Vec<f64>>]) -> Result<Vec<LstmTrace>, ModelError> {
        if x.len() != self.encoders.len() {
            return Err(ModelError::Dimension {
                expected: self.encoders.len(),
                found: x.len(),
            });
        }
        self.encoders.iter().zip(x).map(|(enc, seq)| enc.forward(seq)).collect()
    }

    /// Concatenated encodings of the input sequences.
    pub fn encode(&self, x: &[Vec<Vec<f64>>]) -> Result<Vec<f64>, ModelError> {
        Ok(self.traces(x)?.iter().flat_map(|t| t.output().to_vec()).collect())
    }
}

impl Differentiable for LstmClassifier {
    type Input = Vec<Vec<Vec<f64>>>;

    fn params(&self) -> Vec<&Param> {
        let mut out: Vec<&Param> = self.encoders.iter().flat_map(|e| [&e.w, &e.b]).collect();
        out.extend([&self.out_w, &self.out_b]);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut out: Vec<&mut Param> = self.encoders.iter_mut().flat_map(|e| [&mut e.w, &mut e.b]).collect();
        out.extend([&mut self.out_w, &mut self.out_b]);
        out
    }

    fn predict_proba(&self, x: &Self::Input) -> Result<Vec<f64>, ModelError> {
        let v = self.encode(x)?;
        Ok(softmax(&affine(&self.out_w, &self.out_b, &v)))
    }

    fn accumulate_grad(&mut self, x: &Self::Input, y: usize) -> Result<f64, ModelError> {
        let traces = self.traces(x)?;
        let v: Vec<f64> = traces.iter().flat_map(|t| t.output().to_vec()).collect();
        let mut p = softmax(&affine(&self.out_w, &self.out_b, &v));
        let loss = -p[y].ln();
        p[y] -= 1.0;
        let dv = affine_backward(&mut self.out_w, &mut self.out_b, &v, &p);
        let h = self.encoders[0].hidden_size();
        for (k, (enc, trace)) in self.encoders.iter_mut().zip(&traces).enumerate() {
            enc.backward(trace, &dv[k * h..(k + 1) * h]);
        }
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::grad_check;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_seq<R: Rng>(rng: &mut R, len: usize, d: usize) -> Vec<Vec<f64>> {
        (0..len)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let lstm = Lstm::zeros("e", 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for len in 1..5 {
            assert_eq!(lstm.encode(&random_seq(&mut rng, len, 3)).unwrap(), vec![0.0; 4]);
        }
    }

    #[test]
    fn hand_computed_single_step() {
        // d = 1, h = 2, x = [1]. Only the x column matters at t = 1.
        let mut lstm = Lstm::zeros("e", 1, 2);
        let cols = 3;
        let set = |lstm: &mut Lstm, gate: usize, unit: usize, w: f64, b: f64| {
            let row = gate * 2 + unit;
            lstm.w.value[row * cols] = w;
            lstm.b.value[row] = b;
        };
        set(&mut lstm, 0, 0, 1.0, 0.0);
        set(&mut lstm, 0, 1, -1.0, 0.0);
        set(&mut lstm, 2, 0, 0.0, 1.0);
        set(&mut lstm, 2, 1, 1.0, 0.0);
        set(&mut lstm, 3, 0, 2.0, 0.0);
        set(&mut lstm, 3, 1, 1.0, -1.0);
        // i = [σ(1), σ(-1)], o = [σ(1), σ(1)], g = [tanh 2, 0]
        // c = [σ(1) tanh 2, 0], h = [σ(1) tanh(σ(1) tanh 2), 0]
        let h = lstm.encode(&[vec![1.0]]).unwrap();
        assert!((h[0] - 0.4440309787835238).abs() < 1e-6, "{h:?}");
        assert!(h[1].abs() < 1e-12);
    }

    #[test]
    fn output_length_is_hidden_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for h in [1, 3, 7] {
            let lstm = Lstm::new("e", 5, h, &mut rng);
            assert_eq!(lstm.encode(&random_seq(&mut rng, 4, 5)).unwrap().len(), h);
        }
        assert!(matches!(
            Lstm::zeros("e", 2, 2).encode(&[]),
            Err(ModelError::EmptySequence)
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n_seq in [1, 2] {
            let mut m = LstmClassifier::new(n_seq, 3, 4, 2, &mut rng);
            for p in m.params_mut() {
                for v in &mut p.value {
                    *v *= 10.0;
                }
            }
            let x: Vec<_> = (0..n_seq).map(|_| random_seq(&mut rng, 3, 3)).collect();
            let err = grad_check(&mut m, &x, 1, 1e-5).unwrap();
            assert!(err < 1e-4, "relative error {err}");
        }
    }
}
