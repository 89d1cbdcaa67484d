//! JSON checkpoints: `{"format": "senscommon.model", "version": 1, "model": ..}`
//! where `model` holds the config, the classifier parameters and the
//! training history.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelError, TrainedModel};

pub const CHECKPOINT_FORMAT: &str = "senscommon.model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &TrainedModel) -> Result<(), ModelError> {
    let mut out = BufWriter::new(File::create(path)?);
    let env = Envelope {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        model,
    };
    serde_json::to_writer(&mut out, &env).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<TrainedModel, ModelError> {
    let input = BufReader::new(File::open(path)?);
    let env: Envelope<TrainedModel> =
        serde_json::from_reader(input).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    if env.format != CHECKPOINT_FORMAT || env.version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported checkpoint {} v{}",
            env.format, env.version
        )));
    }
    let mut model = env.model;
    model.config.validate()?;
    if model.classifier.family() != model.config.family {
        return Err(ModelError::WrongFamily {
            expected: model.config.family,
            found: model.classifier.family(),
        });
    }
    for p in model.classifier.params_mut() {
        p.check_shape()?;
        p.zero_grad();
    }
    Ok(model)
}
