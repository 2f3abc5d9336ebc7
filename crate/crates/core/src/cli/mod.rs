//! `snapid` command line: generate, train, eval, episode.

pub mod bundle;
pub mod eval;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::probe::IdentificationPolicyConfig;
use crate::profile::{load_dataset, LabeledSample, OffsetPattern};
use crate::sim::{generate_dataset, run_episode, write_dataset, GridSpec, PlantConfig};
use crate::tree::TreeConfig;

pub use bundle::{accuracy_table, train_bundle, ModelBundle, FORMAT_VERSION};
pub use eval::{evaluate, render_report, EvalMode, EvalReport};

#[derive(Debug, Parser)]
#[command(name = "snapid", version, about = "Early failure identification and recovery for snap assembly")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the training grid and validation set.
    Generate {
        /// Output directory; `train/` and `validation/` are created inside.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plant_config: Option<PathBuf>,
        /// JSON grid spec (extent, steps, extra offsets).
        #[arg(long)]
        grid_spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit fPCA models and the three decision trees.
    Train {
        /// Dataset directory (a generated root or one split).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        t_span: f64,
        /// Model bundle to write.
        #[arg(long)]
        out: PathBuf,
        /// Group node-accuracy numerators by true class.
        #[arg(long)]
        eq1_corrected: bool,
        #[arg(long, default_value_t = crate::svm::DEFAULT_C)]
        c: f64,
    },
    /// Measure identification rates on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// Dataset directory (a generated root or one split).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "probe_after_assembly")]
        mode: EvalMode,
        /// Expected model horizon; rejected if it differs from the bundle's.
        #[arg(long)]
        t_span: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        /// Report JSON path; the text table always goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one closed-loop identification and recovery episode.
    Episode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        dx: f64,
        #[arg(long, allow_hyphen_values = true)]
        dtheta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        plant_config: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
        #[arg(long, default_value_t = 3)]
        max_retries: usize,
        /// Log JSON path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn read_plant_config(path: Option<&Path>) -> Result<PlantConfig> {
    let config = match path {
        None => PlantConfig::default(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
    };
    config.validate()?;
    Ok(config)
}

fn read_grid_spec(path: Option<&Path>) -> Result<GridSpec> {
    match path {
        None => Ok(GridSpec::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Loads `dir` if it holds a manifest, else `dir/<split>`.
pub fn load_split(dir: &Path, split: &str) -> Result<Vec<LabeledSample>> {
    if dir.join("manifest.json").is_file() {
        load_dataset(dir)
    } else {
        load_dataset(&dir.join(split))
    }
}

/// SHA-256 of the JSON form of `value`, hex encoded.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let text = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&text))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_generate(plant_config: Option<&Path>, out: &Path, grid_spec: Option<&Path>, seed: u64) -> Result<()> {
    let plant = read_plant_config(plant_config)?;
    let grid = read_grid_spec(grid_spec)?;
    let split = generate_dataset(&plant, &grid, seed)?;
    write_dataset(out, &split)?;
    println!(
        "wrote {} training and {} validation samples to {}",
        split.train.len(),
        split.validation.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_train(data: &Path, t_span: f64, out: &Path, config: &TreeConfig) -> Result<ModelBundle> {
    let samples = load_split(data, "train")?;
    let bundle = train_bundle(&samples, t_span, config)?;
    bundle.save(out)?;
    print!("{}", accuracy_table(&bundle));
    Ok(bundle)
}

#[derive(Serialize)]
struct EvalHashInput<'a> {
    mode: EvalMode,
    policy: &'a IdentificationPolicyConfig,
    training: &'a bundle::TrainingEcho,
    t_span: f64,
}

pub fn cmd_eval(
    model: &Path,
    data: &Path,
    mode: EvalMode,
    t_span: Option<f64>,
    threshold: f64,
    seed: u64,
) -> Result<EvalReport> {
    let bundle = ModelBundle::load(model)?;
    if let Some(t) = t_span {
        if (t - bundle.t_span).abs() > 1e-9 {
            return Err(Error::Compatibility(format!(
                "model was trained for t_span {} s, not {t} s",
                bundle.t_span
            )));
        }
    }
    let samples = load_split(data, "validation")?;
    let policy = IdentificationPolicyConfig {
        probability_threshold: threshold,
        t_span: bundle.t_span,
        ..IdentificationPolicyConfig::default()
    };
    policy.validate()?;
    let hash = config_hash(&EvalHashInput {
        mode,
        policy: &policy,
        training: &bundle.training,
        t_span: bundle.t_span,
    });
    evaluate(&bundle, &samples, mode, &policy, seed, hash)
}

#[derive(Serialize)]
struct EpisodeReport<'a> {
    format_version: u32,
    config_hash: String,
    #[serde(flatten)]
    log: &'a crate::sim::EpisodeLog,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_episode(
    model: &Path,
    offset: OffsetPattern,
    seed: u64,
    plant_config: Option<&Path>,
    threshold: f64,
    max_retries: usize,
) -> Result<(crate::sim::EpisodeLog, String)> {
    let bundle = ModelBundle::load(model)?;
    let plant = read_plant_config(plant_config)?;
    let policy = IdentificationPolicyConfig {
        probability_threshold: threshold,
        t_span: bundle.t_span,
        max_retries,
        ..IdentificationPolicyConfig::default()
    };
    let log = run_episode(offset, bundle.trees(), &policy, &plant, seed)?;
    let hash = config_hash(&(&plant, &policy, &bundle.training));
    let report = EpisodeReport {
        format_version: FORMAT_VERSION,
        config_hash: hash,
        log: &log,
    };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    Ok((log, text))
}

/// Executes a parsed command.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            out,
            plant_config,
            grid_spec,
            seed,
        } => cmd_generate(plant_config.as_deref(), &out, grid_spec.as_deref(), seed),
        Command::Train {
            data,
            t_span,
            out,
            eq1_corrected,
            c,
        } => {
            let config = TreeConfig {
                c,
                eq1_corrected,
                ..TreeConfig::default()
            };
            cmd_train(&data, t_span, &out, &config).map(|_| ())
        }
        Command::Eval {
            model,
            data,
            mode,
            t_span,
            threshold,
            out,
            seed,
        } => {
            let report = cmd_eval(&model, &data, mode, t_span, threshold, seed)?;
            print!("{}", render_report(&report));
            match out {
                Some(path) => write_json(&path, &report),
                None => Ok(()),
            }
        }
        Command::Episode {
            model,
            dx,
            dtheta,
            seed,
            plant_config,
            threshold,
            max_retries,
            out,
        } => {
            let offset = OffsetPattern::new(dx, dtheta);
            let (_, text) = cmd_episode(&model, offset, seed, plant_config.as_deref(), threshold, max_retries)?;
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| Error::io(&path, e)),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

/// Parses `args`, runs the command, and maps the outcome to an exit code:
/// 0 success, 1 usage, 2 data or configuration, 3 training or evaluation.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
