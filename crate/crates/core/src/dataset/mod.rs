//! Datasets of images with one or more annotated boundary maps.
//!
//! Two directory layouts are understood:
//!
//! ```text
//! bsds-like:  images/{train,val,test}/<id>.png|jpg
//!             groundtruth/{train,val,test}/<id>_gt0.png, <id>_gt1.png, ...
//! flat-pairs: images/<id>.png|jpg
//!             groundtruth/<id>_gt0.png, ...
//! ```
//!
//! Ground-truth masks are single-channel PNGs; any nonzero pixel is a
//! boundary pixel.

mod fixture;
mod ingest;
mod load;

pub use fixture::{generate_fixture, FixtureConfig};
pub use ingest::{ingest_directory, Layout};
pub use load::{eval_items, load_eval_gts, load_gt_mask, load_sample_image, load_training_targets, training_samples};

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown split '{s}'; expected train, val or test")))
    }
}

/// One image and its annotator masks; paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub image_path: PathBuf,
    pub gt_paths: Vec<PathBuf>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub name: String,
    pub root: PathBuf,
    pub layout: Layout,
    /// Seconds since the Unix epoch at ingestion.
    pub created_unix: u64,
    pub samples: Vec<Sample>,
    pub skipped: Vec<SkippedSample>,
}

impl DatasetManifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Config(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        let mut ids = HashSet::new();
        for s in &self.samples {
            if !ids.insert(&s.id) {
                return Err(Error::Data(format!("duplicate sample id '{}'", s.id)));
            }
            if s.gt_paths.is_empty() {
                return Err(Error::Data(format!("sample '{}' has no ground truth", s.id)));
            }
            for p in std::iter::once(&s.image_path).chain(&s.gt_paths) {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(Error::Data(format!("missing file {}", full.display())));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Read and validate a manifest. A relative root is taken relative to
    /// the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: DatasetManifest =
            serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if m.root.is_relative() {
            m.root = path.parent().unwrap_or(Path::new(".")).join(&m.root);
        }
        m.validate()?;
        Ok(m)
    }
}
