use std::path::PathBuf;

use clap::ValueEnum;
use edgekit_core::dataset::{ingest_directory, Layout};

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    /// images/{train,val,test}/<id>.png with groundtruth/{split}/<id>_gtK.png
    BsdsLike,
    /// images/<id>.png with groundtruth/<id>_gtK.png, all in one split
    FlatPairs,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Dataset root containing images/ and groundtruth/.
    root: PathBuf,
    #[arg(long, value_enum, default_value = "bsds-like")]
    layout: LayoutArg,
    /// Split assigned to every sample of a flat-pairs dataset.
    #[arg(long, default_value = "test")]
    flat_split: String,
    /// Manifest path [default: <root>/manifest.json].
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args, mut cfg: RunConfig) -> CliResult {
    let layout = match args.layout {
        LayoutArg::BsdsLike => Layout::BsdsLike,
        LayoutArg::FlatPairs => Layout::FlatPairs,
    };
    let split = super::parse_split(&args.flat_split)?;
    let manifest = ingest_directory(&args.root, layout, split)?;
    let out = args.out.unwrap_or_else(|| manifest.root.join("manifest.json"));
    manifest.save(&out)?;
    cfg.manifest = Some(out.clone());
    cfg.echo(
        out.parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(std::path::Path::new(".")),
    )?;
    for s in edgekit_core::dataset::Split::ALL {
        let n = manifest.split(s).count();
        if n > 0 {
            println!("{s}: {n} samples");
        }
    }
    if !manifest.skipped.is_empty() {
        println!("skipped {} image(s) without ground truth:", manifest.skipped.len());
        for s in &manifest.skipped {
            println!("  {}", s.path.display());
        }
    }
    println!("manifest written to {}", out.display());
    Ok(())
}
