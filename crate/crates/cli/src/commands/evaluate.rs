use std::path::PathBuf;

use edgekit_core::dataset::eval_items;
use edgekit_core::eval::{evaluate_method, per_image_csv, pr_csv, pr_svg, summary_csv, summary_table, threshold_grid};

use super::Runner;
use crate::config::{apply, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// train, val or test.
    #[arg(long)]
    split: Option<String>,
    /// Comma-separated methods, reported in this order.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    /// Matching tolerance as a fraction of the image diagonal.
    #[arg(long)]
    max_dist: Option<f64>,
    /// Evaluate the hybrid's sign output instead of its confidences.
    #[arg(long)]
    binary: bool,
    #[arg(long)]
    post: bool,
    #[arg(long)]
    min_component: Option<usize>,
}

pub fn run(a: Args, mut cfg: RunConfig) -> CliResult {
    let Args {
        manifest,
        split,
        methods,
        bundle,
        out,
        grid_size,
        grid_min,
        grid_max,
        max_dist,
        binary,
        post,
        min_component,
    } = a;
    apply!(
        cfg,
        manifest,
        split,
        methods,
        bundle,
        out,
        grid_size,
        grid_min,
        grid_max,
        max_dist,
        min_component
    );
    cfg.binary |= binary;
    cfg.postprocess |= post;
    if cfg.methods.is_empty() {
        return Err(CliError::Usage("no methods given".into()));
    }
    let grid = threshold_grid(cfg.grid_size, cfg.grid_min, cfg.grid_max)?;
    let runners = cfg
        .methods
        .iter()
        .map(|m| Runner::from_config(m, &cfg))
        .collect::<CliResult<Vec<_>>>()?;
    let out = RunConfig::require(&cfg.out, "out")?.clone();
    let split = super::parse_split(&cfg.split)?;
    let manifest = super::load_manifest(&cfg)?;
    let items = eval_items(&manifest, split)?;
    if items.is_empty() {
        return Err(CliError::Data(format!("the manifest has no {split} samples")));
    }
    cfg.echo(&out)?;
    let mut rows = Vec::new();
    for (name, runner) in cfg.methods.iter().zip(&runners) {
        let summary = evaluate_method(&runner.label(), |img| runner.detect(img), &items, &grid, cfg.max_dist)?;
        let key = name.trim().to_ascii_lowercase();
        super::write_text(&out.join(format!("{key}_pr.csv")), &pr_csv(&summary.curve))?;
        super::write_text(&out.join(format!("{key}_per_image.csv")), &per_image_csv(&summary))?;
        rows.push(summary);
    }
    let table = summary_table(&rows);
    super::write_text(&out.join("summary.txt"), &table)?;
    super::write_text(&out.join("summary.csv"), &summary_csv(&rows))?;
    super::write_text(&out.join("pr_curves.svg"), &pr_svg(&rows))?;
    print!("{table}");
    Ok(())
}
