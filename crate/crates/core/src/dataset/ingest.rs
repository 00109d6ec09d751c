use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::load::load_gt_mask;
use super::{DatasetManifest, Sample, SkippedSample, Split, MANIFEST_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    BsdsLike,
    FlatPairs,
}

impl std::str::FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bsds-like" => Ok(Layout::BsdsLike),
            "flat-pairs" => Ok(Layout::FlatPairs),
            _ => Err(Error::arg(format!(
                "unknown layout '{s}'; expected bsds-like or flat-pairs"
            ))),
        }
    }
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

fn stem_and_ext(p: &Path) -> Option<(String, String)> {
    Some((
        p.file_stem()?.to_str()?.to_string(),
        p.extension()?.to_str()?.to_ascii_lowercase(),
    ))
}

/// `<id>_gt<k>.png` split into `(id, k)`.
fn parse_gt_name(p: &Path) -> Option<(String, usize)> {
    let (stem, ext) = stem_and_ext(p)?;
    if ext != "png" {
        return None;
    }
    let (id, k) = stem.rsplit_once("_gt")?;
    Some((id.to_string(), k.parse().ok()?))
}

fn relative(root: &Path, p: &Path) -> PathBuf {
    p.strip_prefix(root).unwrap_or(p).to_path_buf()
}

fn scan_split(
    root: &Path,
    image_dir: &Path,
    gt_dir: &Path,
    split: Split,
    samples: &mut Vec<Sample>,
    skipped: &mut Vec<SkippedSample>,
) -> Result<()> {
    let mut gts: BTreeMap<String, Vec<(usize, PathBuf)>> = BTreeMap::new();
    if gt_dir.is_dir() {
        for p in list_dir(gt_dir)? {
            if let Some((id, k)) = parse_gt_name(&p) {
                gts.entry(id).or_default().push((k, p));
            }
        }
    }
    for p in list_dir(image_dir)? {
        let Some((id, ext)) = stem_and_ext(&p) else { continue };
        if !p.is_file() || !IMAGE_EXTENSIONS.contains(&ext.as_str()) {
            continue;
        }
        match gts.get_mut(&id) {
            None => skipped.push(SkippedSample {
                path: relative(root, &p),
                reason: "no ground-truth maps".into(),
            }),
            Some(list) => {
                list.sort();
                for (_, g) in list.iter() {
                    load_gt_mask(g)?;
                }
                crate::image::load_image(&p)?;
                samples.push(Sample {
                    id,
                    image_path: relative(root, &p),
                    gt_paths: list.iter().map(|(_, g)| relative(root, g)).collect(),
                    split,
                });
            }
        }
    }
    Ok(())
}

/// Scan `root` and build a manifest. Every referenced file is decoded once;
/// an unreadable file is fatal. Images without ground truth are listed in
/// `skipped`. With the flat layout every sample goes to `flat_split`.
pub fn ingest_directory(root: impl AsRef<Path>, layout: Layout, flat_split: Split) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let root = root.canonicalize().map_err(|e| Error::io(root, e))?;
    let images = root.join("images");
    let groundtruth = root.join("groundtruth");
    if !images.is_dir() {
        return Err(Error::Data(format!("{} has no images/ directory", root.display())));
    }
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    match layout {
        Layout::FlatPairs => scan_split(&root, &images, &groundtruth, flat_split, &mut samples, &mut skipped)?,
        Layout::BsdsLike => {
            for split in Split::ALL {
                let dir = images.join(split.name());
                if dir.is_dir() {
                    scan_split(
                        &root,
                        &dir,
                        &groundtruth.join(split.name()),
                        split,
                        &mut samples,
                        &mut skipped,
                    )?;
                }
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::Data(format!("no usable samples under {}", root.display())));
    }
    samples.sort_by(|a, b| (a.split, &a.id).cmp(&(b.split, &b.id)));
    for w in samples.windows(2) {
        if w[0].id == w[1].id {
            return Err(Error::Data(format!(
                "sample id '{}' appears in more than one split",
                w[0].id
            )));
        }
    }
    let name = root
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("dataset")
        .to_string();
    let created_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(DatasetManifest {
        version: MANIFEST_VERSION,
        name,
        root,
        layout,
        created_unix,
        samples,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gt_names() {
        assert_eq!(parse_gt_name(Path::new("a/b_gt3.png")), Some(("b".into(), 3)));
        assert_eq!(parse_gt_name(Path::new("x_y_gt0.png")), Some(("x_y".into(), 0)));
        assert_eq!(parse_gt_name(Path::new("b_gt.png")), None);
        assert_eq!(parse_gt_name(Path::new("b_gt1.jpg")), None);
    }

    #[test]
    fn empty_and_missing_roots() {
        let d = tempfile::tempdir().unwrap();
        assert!(matches!(
            ingest_directory(d.path(), Layout::BsdsLike, Split::Test),
            Err(Error::Data(_))
        ));
        std::fs::create_dir(d.path().join("images")).unwrap();
        assert!(matches!(
            ingest_directory(d.path(), Layout::FlatPairs, Split::Test),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            ingest_directory(d.path().join("nope"), Layout::BsdsLike, Split::Test),
            Err(Error::Io { .. })
        ));
    }
}
