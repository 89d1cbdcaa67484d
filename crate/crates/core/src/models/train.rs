use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelError, Param};

pub trait Differentiable {
    type Input;

    fn params(&self) -> Vec<&Param>;

    fn params_mut(&mut self) -> Vec<&mut Param>;

    /// Class distribution for one input.
    fn predict_proba(&self, x: &Self::Input) -> Result<Vec<f64>, ModelError>;

    /// Adds the gradient of the cross-entropy on `(x, y)` to every
    /// parameter's accumulator and returns the loss.
    fn accumulate_grad(&mut self, x: &Self::Input, y: usize) -> Result<f64, ModelError>;

    fn loss(&self, x: &Self::Input, y: usize) -> Result<f64, ModelError> {
        let p = self.predict_proba(x)?;
        let l = -p[y].ln();
        if l.is_finite() {
            Ok(l)
        } else {
            Err(ModelError::NonFinite)
        }
    }

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn predict(&self, x: &Self::Input) -> Result<usize, ModelError> {
        Ok(super::argmax(&self.predict_proba(x)?))
    }
}

/// SGD with batch size 1. Examples are reshuffled every epoch from `seed`;
/// returns the mean training loss after each epoch.
pub fn fit<M: Differentiable>(
    model: &mut M,
    data: &[(M::Input, usize)],
    learning_rate: f64,
    epochs: usize,
    seed: u64,
) -> Result<Vec<f64>, ModelError> {
    if data.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Keep the shuffle stream apart from the one used for initialisation.
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, y) = &data[i];
            model.zero_grad();
            let loss = model.accumulate_grad(x, *y)?;
            if !loss.is_finite() {
                return Err(ModelError::NonFinite);
            }
            for p in model.params_mut() {
                for (v, g) in p.value.iter_mut().zip(&p.grad) {
                    *v -= learning_rate * g;
                }
            }
        }
        let mut total = 0.0;
        for (x, y) in data {
            total += model.loss(x, *y)?;
        }
        history.push(total / data.len() as f64);
    }
    Ok(history)
}

/// Worst relative error between analytic gradients and central differences
/// `(f(θ+ε) − f(θ−ε)) / 2ε` over every parameter. Relative error is
/// `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check<M: Differentiable>(model: &mut M, x: &M::Input, y: usize, eps: f64) -> Result<f64, ModelError> {
    if !(1e-6..=1e-3).contains(&eps) {
        return Err(ModelError::Epsilon(eps));
    }
    model.zero_grad();
    model.accumulate_grad(x, y)?;
    let analytic: Vec<Vec<f64>> = model.params().iter().map(|p| p.grad.clone()).collect();
    let mut worst: f64 = 0.0;
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let orig = model.params()[pi].value[j];
            model.params_mut()[pi].value[j] = orig + eps;
            let plus = model.loss(x, y)?;
            model.params_mut()[pi].value[j] = orig - eps;
            let minus = model.loss(x, y)?;
            model.params_mut()[pi].value[j] = orig;
            let n = (plus - minus) / (2.0 * eps);
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
