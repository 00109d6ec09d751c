//! A detector bundle is a directory holding `cnn.json`, `svm.json`,
//! `calibration.json` and a `bundle.json` manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cnn::{load_checkpoint, save_checkpoint};
use crate::error::{Error, Result};
use crate::svm::SvmModel;

use super::{Calibration, HybridDetector};

pub const BUNDLE_VERSION: u32 = 1;
const BUNDLE_FORMAT: &str = "edgekit-bundle";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    cnn: String,
    svm: String,
    calibration: String,
    feature_channels: usize,
    postprocess: bool,
    min_component: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationFile {
    percentiles: [f64; 2],
    low: f64,
    high: f64,
}

fn write(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn save_bundle(det: &HybridDetector, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    det.validate()?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_checkpoint(&det.cnn, dir.join("cnn.json"))?;
    det.svm.save(dir.join("svm.json"))?;
    let cal = CalibrationFile {
        percentiles: [1.0, 99.0],
        low: det.calibration.low,
        high: det.calibration.high,
    };
    write(&dir.join("calibration.json"), serde_json::to_string_pretty(&cal)?)?;
    let manifest = Manifest {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        cnn: "cnn.json".into(),
        svm: "svm.json".into(),
        calibration: "calibration.json".into(),
        feature_channels: det.cnn.feature_channels(),
        postprocess: det.postprocess,
        min_component: det.min_component,
    };
    write(&dir.join("bundle.json"), serde_json::to_string_pretty(&manifest)?)
}

pub fn load_bundle(dir: impl AsRef<Path>) -> Result<HybridDetector> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("bundle.json");
    let m: Manifest = serde_json::from_str(&read(&manifest_path)?)?;
    if m.format != BUNDLE_FORMAT || m.version != BUNDLE_VERSION {
        return Err(Error::Config(format!(
            "{} is not an {BUNDLE_FORMAT} v{BUNDLE_VERSION} manifest",
            manifest_path.display()
        )));
    }
    let cal: CalibrationFile = serde_json::from_str(&read(&dir.join(&m.calibration))?)?;
    let det = HybridDetector {
        cnn: load_checkpoint(dir.join(&m.cnn))?,
        svm: SvmModel::load(dir.join(&m.svm))?,
        calibration: Calibration {
            low: cal.low,
            high: cal.high,
        },
        postprocess: m.postprocess,
        min_component: m.min_component,
    };
    det.validate()?;
    if det.cnn.feature_channels() != m.feature_channels {
        return Err(Error::Config(
            "bundle feature_channels disagrees with the cnn checkpoint".into(),
        ));
    }
    Ok(det)
}
