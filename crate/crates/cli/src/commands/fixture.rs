use std::path::PathBuf;

use edgekit_core::dataset::{generate_fixture, FixtureConfig};

use crate::error::{CliError, CliResult};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output dataset root (bsds-like layout).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    n_train: usize,
    #[arg(long, default_value_t = 0)]
    n_val: usize,
    #[arg(long, default_value_t = 10)]
    n_test: usize,
    /// Side length of the square images.
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 1)]
    annotators: usize,
    /// Standard deviation of the additive Gaussian noise, in gray levels.
    #[arg(long, default_value_t = 12.0)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

pub fn run(a: Args) -> CliResult {
    let cfg = FixtureConfig {
        n_train: a.n_train,
        n_val: a.n_val,
        n_test: a.n_test,
        size: a.size,
        annotators: a.annotators,
        noise_sigma: a.noise,
        seed: a.seed,
    };
    generate_fixture(&a.out, &cfg)?;
    let text = toml::to_string(&cfg).map_err(|e| CliError::Internal(e.to_string()))?;
    super::write_text(&a.out.join("effective_config.toml"), &text)?;
    println!(
        "wrote {} train, {} val, {} test images to {}",
        cfg.n_train,
        cfg.n_val,
        cfg.n_test,
        a.out.display()
    );
    Ok(())
}
