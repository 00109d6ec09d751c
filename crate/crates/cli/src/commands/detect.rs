use std::path::PathBuf;

use edgekit_core::image::{load_image, save_luma8_png};

use super::Runner;
use crate::config::{apply, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Input images (PNG or JPEG).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// sobel, prewitt, roberts, log, zerocross, canny or hybrid
    /// [default: hybrid with --bundle, else sobel].
    #[arg(long)]
    method: Option<String>,
    /// Trained bundle directory for the hybrid method.
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Output directory; one <stem>.png per input.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Hybrid only: write the sign of the decision value instead of
    /// calibrated confidences.
    #[arg(long)]
    binary: bool,
    /// Hybrid only: apply morphological post-processing.
    #[arg(long)]
    post: bool,
    #[arg(long)]
    min_component: Option<usize>,
}

pub fn run(a: Args, mut cfg: RunConfig) -> CliResult {
    let Args {
        inputs,
        method,
        bundle,
        out,
        binary,
        post,
        min_component,
    } = a;
    apply!(cfg, bundle, out, min_component);
    cfg.binary |= binary;
    cfg.postprocess |= post;
    let method = method.unwrap_or_else(|| if cfg.bundle.is_some() { "hybrid" } else { "sobel" }.into());
    cfg.methods = vec![method.clone()];
    let runner = Runner::from_config(&method, &cfg)?;
    let out = RunConfig::require(&cfg.out, "out")?.clone();
    cfg.echo(&out)?;
    for input in &inputs {
        let img = load_image(input)?;
        let edges = runner.detect(&img)?;
        let stem = input
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Usage(format!("cannot name output for {}", input.display())))?;
        let path = out.join(format!("{stem}.png"));
        save_luma8_png(&path, edges.height(), edges.width(), &edges.to_luma8())?;
        println!("{}", path.display());
    }
    Ok(())
}
