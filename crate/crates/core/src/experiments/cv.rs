use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy_on, train_on, ExperimentError, TrainSet};
use crate::embeddings::EmbeddingTable;
use crate::models::{Family, ModelConfig};

pub const DEFAULT_FOLDS: usize = 5;

/// Contiguous fold ranges over `n` examples; the first `n % k` folds get one
/// extra example.
pub fn folds(n: usize, k: usize) -> Result<Vec<Range<usize>>, ExperimentError> {
    if k < 2 {
        return Err(ExperimentError::Folds(k));
    }
    if n < k {
        return Err(ExperimentError::EmptyFold {
            fold: n,
            len: n,
            folds: k,
        });
    }
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// The tuning grid for `base`'s family: learning rate in {0.01, 0.1}, plus
/// hidden size in {25, 50, 100} for LSTM models or hops in {1, 2, 3} for
/// memory networks; 200 epochs.
pub fn default_grid(base: &ModelConfig) -> Vec<ModelConfig> {
    let mut grid = Vec::new();
    let rates = [0.01, 0.1];
    let with = |f: &dyn Fn(&mut ModelConfig)| {
        let mut c = base.clone();
        c.epochs = 200;
        f(&mut c);
        c
    };
    match base.family {
        Family::LogReg => {
            for lr in rates {
                grid.push(with(&|c| c.learning_rate = lr));
            }
        }
        Family::LstmEncoder => {
            for h in [25, 50, 100] {
                for lr in rates {
                    grid.push(with(&|c| {
                        c.hidden_size = h;
                        c.learning_rate = lr;
                    }));
                }
            }
        }
        Family::MemNet => {
            for k in [1, 2, 3] {
                for lr in rates {
                    grid.push(with(&|c| {
                        c.hops = k;
                        c.learning_rate = lr;
                    }));
                }
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    /// Index into the grid.
    pub best: usize,
    pub best_config: ModelConfig,
    /// Mean validation accuracy per grid entry.
    pub scores: Vec<f64>,
}

/// Mean validation accuracy of every grid entry over `k` contiguous folds of
/// the training set. The best entry has the highest mean; ties go to the
/// earlier entry.
pub fn cross_validate(
    train: &TrainSet,
    grid: &[ModelConfig],
    k: usize,
    table: &EmbeddingTable,
) -> Result<CvOutcome, ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::EmptyGrid);
    }
    let ranges = folds(train.len(), k)?;
    let relation = train.relation();
    let examples = train.examples();
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..ranges.len()).map(move |f| (g, f)))
        .collect();
    let accs: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let r = ranges[f].clone();
            let fit_on: Vec<_> = examples[..r.start].iter().chain(&examples[r.end..]).cloned().collect();
            let fitted = train_on(relation, &fit_on, &grid[g], table)?;
            let (correct, total) = accuracy_on(&fitted.model, relation, &examples[r], table)?;
            Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
        })
        .collect::<Result<_, ExperimentError>>()?;
    let scores: Vec<f64> = accs
        .chunks(ranges.len())
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(CvOutcome {
        best,
        best_config: grid[best].clone(),
        scores,
    })
}
