use std::path::PathBuf;

use edgekit_core::dataset::load_sample_image;
use edgekit_core::image::save_luma8_png;
use edgekit_core::pipeline::prepare_image;
use edgekit_core::WORKING_SIZE;

use super::Runner;
use crate::config::{apply, RunConfig};
use crate::error::{CliError, CliResult};

/// White columns between panels.
pub const PANEL_GAP: usize = 8;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    split: Option<String>,
    /// Comma-separated methods, drawn left to right after the input.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Number of images (taken in manifest order).
    #[arg(long)]
    n_images: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    binary: bool,
    #[arg(long)]
    post: bool,
}

pub fn run(a: Args, mut cfg: RunConfig) -> CliResult {
    let Args {
        manifest,
        split,
        methods,
        bundle,
        n_images,
        out,
        binary,
        post,
    } = a;
    apply!(cfg, manifest, split, methods, bundle, n_images, out);
    cfg.binary |= binary;
    cfg.postprocess |= post;
    if cfg.methods.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    let runners = cfg
        .methods
        .iter()
        .map(|m| Runner::from_config(m, &cfg))
        .collect::<CliResult<Vec<_>>>()?;
    let out = RunConfig::require(&cfg.out, "out")?.clone();
    let split = super::parse_split(&cfg.split)?;
    let manifest = super::load_manifest(&cfg)?;
    cfg.echo(&out)?;
    let n = WORKING_SIZE;
    let panels = runners.len() + 1;
    let width = panels * n + (panels - 1) * PANEL_GAP;
    for sample in manifest.split(split).take(cfg.n_images) {
        let img = load_sample_image(&manifest, sample)?;
        let mut tiles = vec![prepare_image(&img)?
            .pixels()
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect::<Vec<u8>>()];
        for r in &runners {
            tiles.push(r.detect(&img)?.to_luma8());
        }
        let mut sheet = vec![255u8; n * width];
        for (k, tile) in tiles.iter().enumerate() {
            let x0 = k * (n + PANEL_GAP);
            for y in 0..n {
                sheet[y * width + x0..y * width + x0 + n].copy_from_slice(&tile[y * n..(y + 1) * n]);
            }
        }
        let path = out.join(format!("{}_compare.png", sample.id));
        save_luma8_png(&path, n, width, &sheet)?;
        println!("{}", path.display());
    }
    Ok(())
}
