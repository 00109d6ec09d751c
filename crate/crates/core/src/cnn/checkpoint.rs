//! Checkpoint file: a JSON object
//!
//! ```json
//! { "format": "edgekit-cnn", "version": 1, "model": { "layers": [...], "feature_tap": 22 } }
//! ```
//!
//! Each layer carries `kind` (`conv`, `transposed_conv`, `batch_norm`, `relu`,
//! `max_pool`, `sigmoid`), and the parametric ones a `name` plus their tensors
//! as `{ "shape": [...], "data": [...] }` in row-major order. Floats are
//! written in shortest round-trip form, so a save/load cycle is lossless.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::CnnModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const FORMAT: &str = "edgekit-cnn";

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

pub fn save_checkpoint(model: &CnnModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let env = Envelope {
        format: FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        model,
    };
    let json = serde_json::to_string(&env)?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<CnnModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let env: Envelope<CnnModel> = serde_json::from_str(&text)?;
    if env.format != FORMAT || env.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "{} is a {} v{} file, expected {FORMAT} v{CHECKPOINT_VERSION}",
            path.display(),
            env.format,
            env.version
        )));
    }
    env.model.validate()?;
    Ok(env.model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::build_model;

    #[test]
    fn round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let m = build_model(5);
        save_checkpoint(&m, &p).unwrap();
        assert_eq!(load_checkpoint(&p).unwrap(), m);
    }

    #[test]
    fn wrong_format_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        std::fs::write(
            &p,
            r#"{"format":"other","version":1,"model":{"layers":[],"feature_tap":0}}"#,
        )
        .unwrap();
        assert!(load_checkpoint(&p).is_err());
    }
}
