use std::path::{Path, PathBuf};

use clap::ValueEnum;
use edgekit_core::cnn::{build_model, load_checkpoint, save_checkpoint, train_cnn, TrainConfig};
use edgekit_core::dataset::{training_samples, Split};
use edgekit_core::pipeline::{save_bundle, train_hybrid_svm};
use edgekit_core::svm::SvmConfig;

use crate::config::{apply, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Cnn,
    Svm,
    All,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Dataset manifest; the train split is used.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "all")]
    stage: Stage,
    /// Bundle directory to write.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Save a CNN checkpoint every N epochs (0 disables).
    #[arg(long)]
    checkpoint_interval: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    n_per_class: Option<usize>,
    /// Enable morphological post-processing in the saved bundle.
    #[arg(long)]
    post: bool,
    #[arg(long)]
    min_component: Option<usize>,
}

pub fn run(a: Args, mut cfg: RunConfig) -> CliResult {
    let Args {
        manifest,
        stage,
        out,
        seed,
        epochs,
        batch_size,
        lr,
        checkpoint_interval,
        lambda,
        tol,
        max_epochs,
        n_per_class,
        post,
        min_component,
    } = a;
    apply!(
        cfg,
        manifest,
        out,
        seed,
        epochs,
        batch_size,
        lr,
        checkpoint_interval,
        lambda,
        tol,
        max_epochs,
        n_per_class,
        min_component
    );
    cfg.postprocess |= post;
    if cfg.epochs == 0 {
        return Err(CliError::Usage("epochs must be at least 1".into()));
    }
    let out = RunConfig::require(&cfg.out, "out")?.clone();
    let manifest = super::load_manifest(&cfg)?;
    cfg.echo(&out)?;
    let data = training_samples(&manifest, Split::Train)?;
    if data.is_empty() {
        return Err(CliError::Data("the manifest has no train samples".into()));
    }
    let cnn_path = out.join("cnn.json");
    if matches!(stage, Stage::Cnn | Stage::All) {
        train_cnn_stage(&cfg, &data, &out, &cnn_path)?;
    }
    if matches!(stage, Stage::Svm | Stage::All) {
        if !cnn_path.is_file() {
            return Err(CliError::Data(format!(
                "missing CNN checkpoint {}; run `edgekit train --stage cnn` first",
                cnn_path.display()
            )));
        }
        let cnn = load_checkpoint(&cnn_path)?;
        let svm_cfg = SvmConfig {
            lambda: cfg.lambda,
            max_epochs: cfg.max_epochs,
            tol: cfg.tol,
            seed: cfg.seed,
            standardize: true,
        };
        let mut fit = train_hybrid_svm(cnn, &data, &svm_cfg, cfg.n_per_class, cfg.seed)?;
        fit.detector.postprocess = cfg.postprocess;
        fit.detector.min_component = cfg.min_component;
        save_bundle(&fit.detector, &out)?;
        let report = serde_json::to_string_pretty(&fit.report).map_err(|e| CliError::Internal(e.to_string()))?;
        super::write_text(&out.join("svm_report.json"), &report)?;
        println!(
            "svm: {} samples, {} epochs, duality gap {:.3e}{}",
            fit.samples,
            fit.report.epochs,
            fit.report.duality_gap,
            if fit.report.converged { "" } else { " (not converged)" }
        );
        println!("bundle written to {}", out.display());
    }
    Ok(())
}

fn train_cnn_stage(cfg: &RunConfig, data: &[edgekit_core::cnn::TrainSample], out: &Path, cnn_path: &Path) -> CliResult {
    let tc = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        seed: cfg.seed,
        checkpoint_interval: (cfg.checkpoint_interval > 0).then_some(cfg.checkpoint_interval),
        checkpoint_dir: Some(out.join("checkpoints")),
        log_path: Some(out.join("train_log.csv")),
    };
    let (model, log) = train_cnn(build_model(cfg.seed), data, &tc)?;
    save_checkpoint(&model, cnn_path)?;
    if let (Some(first), Some(last)) = (log.records.first(), log.records.last()) {
        println!(
            "cnn: {} iterations, loss {:.6} -> {:.6}",
            log.records.len(),
            first.loss,
            last.loss
        );
    }
    Ok(())
}
