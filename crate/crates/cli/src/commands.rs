use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use s2mamba::bench::{bench_blocks, BENCH_PATCHES};
use s2mamba::eval::{evaluate, render_class_map};
use s2mamba::gradcheck::{gradcheck, GRADCHECK_TOLERANCE};
use s2mamba::model::{count_params, load_checkpoint, ModelConfig, ModelParams};
use s2mamba::train::{train, Dataset, TrainConfig, CHECKPOINT_FILE};

use crate::overrides::{load_config, UsageError};

/// Dataset root used when the config names no data directory.
pub const DATA_DIR_ENV: &str = "S2MAMBA_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "s2mamba",
    version,
    about = "Spatial-spectral state space model for hyperspectral classification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on the configured scene; writes model.ckpt, train.log and config.json.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on the test split; prints a JSON report.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render the predicted class map as PNG (or PPM for a .ppm path).
    PredictMap {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Predict unlabeled pixels too instead of leaving them black.
        #[arg(long)]
        all_pixels: bool,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value = "tiny")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time the scanning blocks against the token count N = P^2.
    Bench {
        #[arg(long, default_value_t = 64)]
        latent: usize,
        #[arg(long, default_value_t = 32)]
        state: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Patch sides to time.
        #[arg(long, value_delimiter = ',', default_values_t = BENCH_PATCHES)]
        patches: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved config, parameter count and dataset summary.
    Info {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config value by dot path, e.g. `--set model.tau=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Disable patch cross scanning.
    #[arg(long)]
    pub no_pcs: bool,
    /// Disable bi-directional spectral scanning.
    #[arg(long)]
    pub no_bss: bool,
    /// Replace the mixture gate by a plain sum.
    #[arg(long)]
    pub no_smg: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<TrainConfig> {
        let mut cfg = load_config(self.config.as_deref(), &self.sets)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        cfg.model.use_pcs &= !self.no_pcs;
        cfg.model.use_bss &= !self.no_bss;
        cfg.model.use_smg &= !self.no_smg;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn data_root() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

fn load_dataset(cfg: &TrainConfig) -> Result<Dataset> {
    let root = data_root();
    let paths = cfg.data.resolve(root.as_deref());
    Dataset::load(&cfg.data, root.as_deref(), cfg.seed)
        .with_context(|| format!("loading dataset from {}", paths.cube.display()))
}

fn load_model(path: &Path) -> Result<(ModelConfig, ModelParams<f32>)> {
    let path = if path.is_dir() {
        path.join(CHECKPOINT_FILE)
    } else {
        path.to_path_buf()
    };
    load_checkpoint(&path).with_context(|| format!("loading checkpoint {}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, out } => {
            let cfg = common.resolve()?;
            let dataset = load_dataset(&cfg)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("config.json"), serde_json::to_string_pretty(&cfg)?)?;
            let outcome = train(&cfg, &dataset, &out)?;
            let last = outcome.history.last().expect("at least one epoch");
            println!(
                "trained {} epochs on {} patches; final loss {:.6}",
                outcome.history.len(),
                dataset.split.train.len(),
                last.loss
            );
            println!("checkpoint: {}", outcome.checkpoint.display());
            println!("log: {}", outcome.log.display());
        }
        Command::Eval {
            common,
            checkpoint,
            out,
        } => {
            let cfg = common.resolve()?;
            let (model, params) = load_model(&checkpoint)?;
            let dataset = load_dataset(&cfg)?;
            dataset.check_model(&model)?;
            let (_, report) = evaluate(
                &params,
                &model,
                &dataset.cube,
                &dataset.split.test,
                cfg.threads,
            )?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(out) = out {
                std::fs::write(out, &json)?;
            }
        }
        Command::PredictMap {
            common,
            checkpoint,
            out,
            all_pixels,
        } => {
            let cfg = common.resolve()?;
            let (model, params) = load_model(&checkpoint)?;
            let dataset = load_dataset(&cfg)?;
            dataset.check_model(&model)?;
            render_class_map(
                &params,
                &model,
                &dataset.cube,
                &dataset.manifest.palette(),
                all_pixels,
                cfg.threads,
                &out,
            )?;
            println!("map: {}", out.display());
        }
        Command::Gradcheck { preset, seed } => {
            let config = match preset.as_str() {
                "tiny" => ModelConfig::tiny(),
                other => {
                    return Err(UsageError(format!("unknown gradcheck preset {other:?}")).into())
                }
            };
            let report = gradcheck(&config, seed)?;
            println!(
                "checked {} values in {:.2} s; worst {} ; pruned gate weights {}",
                report.checked, report.seconds, report.worst, report.pruned
            );
            println!("max_rel_err = {:.3e}", report.max_rel_err);
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            println!("max_rel_err < {GRADCHECK_TOLERANCE:e}: {verdict}");
            if !report.passed() {
                bail!("gradient check failed");
            }
        }
        Command::Bench {
            latent,
            state,
            repeats,
            patches,
            seed,
            out,
        } => {
            if patches.len() < 2 {
                return Err(UsageError("bench needs at least two patch sizes".into()).into());
            }
            let report = bench_blocks(latent, state, &patches, repeats, seed)?;
            println!("{:>4} {:>8} {:>12}", "P", "N=P^2", "seconds");
            for p in &report.points {
                println!("{:>4} {:>8} {:>12.6}", p.patch, p.tokens, p.seconds);
            }
            println!(
                "linear fit: seconds = {:.4e} * N + {:.4e}, r^2 = {:.5}",
                report.slope, report.intercept, report.r2
            );
            if let Some(out) = out {
                std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
            }
        }
        Command::Info { common } => {
            let cfg = common.resolve()?;
            println!("config:\n{}", serde_json::to_string_pretty(&cfg)?);
            print_param_summary(&cfg.model);
            match load_dataset(&cfg) {
                Ok(ds) => {
                    println!(
                        "dataset: {} ({}x{}x{}), {} classes, {} train / {} test pixels",
                        ds.manifest.name,
                        ds.cube.height,
                        ds.cube.width,
                        ds.cube.bands,
                        ds.manifest.num_classes(),
                        ds.split.train.len(),
                        ds.split.test.len()
                    );
                    if let Err(e) = ds.check_model(&cfg.model) {
                        println!("warning: {e}");
                    }
                }
                Err(e) => println!("dataset: unavailable ({})", crate::one_line(&e)),
            }
        }
    }
    Ok(())
}

fn print_param_summary(model: &ModelConfig) {
    let params = ModelParams::<f32>::zeros(model);
    let group = |ts: Vec<&s2mamba::Tensor<f32>>| ts.iter().map(|t| t.len()).sum::<usize>();
    let embed = params.embed_w.len() + params.embed_b.len();
    let head = params.head_w.len() + params.head_b.len();
    let (mut pcs, mut bss, mut gate) = (0, 0, 0);
    for layer in &params.layers {
        pcs += layer.pcs.iter().map(|p| p.num_params()).sum::<usize>();
        bss += layer.bss.iter().map(|p| p.num_params()).sum::<usize>();
        gate += group(layer.gate.tensors().to_vec());
    }
    let total = count_params(&params);
    println!("parameters: embed {embed}, pcs {pcs}, bss {bss}, gate {gate}, head {head}");
    println!("total parameters: {total} ({:.3}M)", total as f64 / 1e6);
}
