pub mod compare;
pub mod detect;
pub mod evaluate;
pub mod fixture;
pub mod ingest;
pub mod train;

use std::path::Path;

use edgekit_core::dataset::{DatasetManifest, Split};
use edgekit_core::pipeline::{detect_hybrid_binary, load_bundle};
use edgekit_core::{Detector, EdgeMap, GrayImage, Method};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// A detector plus the output mode chosen on the command line.
pub struct Runner {
    pub detector: Detector,
    pub binary: bool,
}

impl Runner {
    pub fn from_config(name: &str, cfg: &RunConfig) -> CliResult<Self> {
        let method: Method = name
            .parse()
            .map_err(|e: edgekit_core::Error| CliError::Usage(e.to_string()))?;
        let detector = if method == Method::Hybrid {
            let dir = cfg
                .bundle
                .as_ref()
                .ok_or_else(|| CliError::Usage("method 'hybrid' needs --bundle <dir>".into()))?;
            let mut det = load_bundle(dir)?;
            if cfg.postprocess {
                det.postprocess = true;
            }
            det.min_component = cfg.min_component;
            Detector::Hybrid(Box::new(det))
        } else {
            Detector::classical(method)?
        };
        Ok(Runner {
            detector,
            binary: cfg.binary && method == Method::Hybrid,
        })
    }

    pub fn label(&self) -> String {
        let base = self.detector.method().label();
        if self.binary {
            format!("{base} (sign)")
        } else {
            base.to_string()
        }
    }

    pub fn detect(&self, img: &GrayImage) -> edgekit_core::Result<EdgeMap> {
        match (&self.detector, self.binary) {
            (Detector::Hybrid(det), true) => Ok(detect_hybrid_binary(det, img)?.to_edge_map()),
            (d, _) => d.detect(img),
        }
    }
}

pub fn parse_split(s: &str) -> CliResult<Split> {
    s.parse()
        .map_err(|e: edgekit_core::Error| CliError::Usage(e.to_string()))
}

pub fn load_manifest(cfg: &RunConfig) -> CliResult<DatasetManifest> {
    let path = RunConfig::require(&cfg.manifest, "manifest")?;
    Ok(DatasetManifest::load(path)?)
}

pub fn write_text(path: &Path, text: &str) -> CliResult {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
