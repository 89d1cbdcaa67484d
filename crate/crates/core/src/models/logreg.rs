use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{affine, affine_backward, softmax, Differentiable, ModelError, Param};

/// Multinomial logistic regression; with two classes this is the binary
/// logistic model written as a 2-way softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxRegression {
    pub w: Param,
    pub b: Param,
}

impl SoftmaxRegression {
    pub fn new<R: Rng>(dim: usize, n_classes: usize, rng: &mut R) -> Self {
        SoftmaxRegression {
            w: Param::uniform("w", &[n_classes, dim], rng),
            b: Param::uniform("b", &[n_classes], rng),
        }
    }

    pub fn zeros(dim: usize, n_classes: usize) -> Self {
        SoftmaxRegression {
            w: Param::zeros("w", &[n_classes, dim]),
            b: Param::zeros("b", &[n_classes]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape[1]
    }

    fn check(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::Dimension {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

impl Differentiable for SoftmaxRegression {
    type Input = Vec<f64>;

    fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    fn predict_proba(&self, x: &Vec<f64>) -> Result<Vec<f64>, ModelError> {
        self.check(x)?;
        Ok(softmax(&affine(&self.w, &self.b, x)))
    }

    fn accumulate_grad(&mut self, x: &Vec<f64>, y: usize) -> Result<f64, ModelError> {
        let mut p = self.predict_proba(x)?;
        let loss = -p[y].ln();
        p[y] -= 1.0;
        affine_backward(&mut self.w, &mut self.b, x, &p);
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{fit, grad_check, logreg_train, FeatureMode, ModelConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_uniform() {
        let m = SoftmaxRegression::zeros(4, 2);
        for x in [vec![0.0; 4], vec![3.0, -1.0, 2.0, 9.0]] {
            assert_eq!(m.predict_proba(&x).unwrap(), [0.5, 0.5]);
        }
    }

    #[test]
    fn separable_1d_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<(Vec<f64>, usize)> = (0..100)
            .map(|_| {
                let mag = rng.random_range(1.0..5.0);
                if rng.random_bool(0.5) {
                    (vec![mag], 1)
                } else {
                    (vec![-mag], 0)
                }
            })
            .collect();
        let mut cfg = ModelConfig::new(FeatureMode::Concat);
        cfg.epochs = 200;
        let model = logreg_train(&data, &cfg).unwrap();
        let crate::models::Classifier::LogReg(m) = &model.classifier else {
            unreachable!()
        };
        let correct = data.iter().filter(|(x, y)| m.predict(x).unwrap() == *y).count();
        assert!(correct as f64 / data.len() as f64 >= 0.99);
        assert_eq!(model.history.len(), 200);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let mut m = SoftmaxRegression::new(6, 3, &mut rng);
            for v in &mut m.w.value {
                *v *= 10.0;
            }
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let err = grad_check(&mut m, &x, rng.random_range(0..3), 1e-4).unwrap();
            assert!(err < 1e-4, "relative error {err}");
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut m = SoftmaxRegression::zeros(3, 2);
        assert!(m.predict_proba(&vec![1.0]).is_err());
        assert!(fit(&mut m, &[(vec![1.0], 0)], 0.1, 1, 0).is_err());
    }
}
