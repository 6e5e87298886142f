//! Command-line front end: `simulate`, `dereverb`, `evaluate`, `experiment`.
//!
//! Every subcommand builds its configuration from flags and then overlays
//! the JSON object given with `--config`, so a config file wins over flags.

pub mod config;
pub mod dereverb;
pub mod evaluate;
pub mod experiment;
pub mod simulate;

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use convpred::experiment::SweepConfig;
use convpred::scene::SceneConfig;
use convpred::wav::WavFormat;
use convpred::{Algorithm, LambdaMode};
use serde::Serialize;

use crate::config::{parse_enum, with_overrides, EstimateSpec, PredOverrides, RunConfig, RunPaths};
use crate::simulate::SimulateConfig;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "convpred",
    version,
    about = "Single-channel dereverberation by convolutive prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a reverberant scene and write its components as WAV files.
    Simulate(SimulateArgs),
    /// Dereverberate a mixture.
    Dereverb(DereverbArgs),
    /// Score estimates against references.
    Evaluate(EvaluateArgs),
    /// Run a parameter sweep over simulated scenes.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 16_000)]
    pub sample_rate: u32,
    /// Seconds.
    #[arg(long, default_value_t = 4.0)]
    pub duration: f64,
    /// Zero gives an anechoic scene.
    #[arg(long, default_value_t = 0.4)]
    pub t60: f64,
    #[arg(long, default_value_t = 0)]
    pub interferers: usize,
    #[arg(long, default_value_t = 0.0)]
    pub sir_db: f64,
    /// Omit for a noise-free scene.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Keep only the direct path and early reflections.
    #[arg(long)]
    pub early_only: bool,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `float32` or `pcm16`.
    #[arg(long, default_value = "float32", value_parser = parse_enum::<WavFormat>)]
    pub format: WavFormat,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DereverbArgs {
    /// Scene directory written by `simulate`.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Mixture WAV.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Direct-path reference per source (overrides the scene's).
    #[arg(long = "reference")]
    pub references: Vec<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Report JSON; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// wpe_vanilla, wpe_supplied, icp, fcp, fcp_per_source, wpe_sf or wpe_mf.
    #[arg(long, default_value = "fcp")]
    pub algorithm: Algorithm,
    /// oracle, degraded or external.
    #[arg(long, default_value = "oracle")]
    pub estimate_mode: String,
    /// Error SNR for degraded estimates.
    #[arg(long, default_value_t = 10.0)]
    pub error_snr_db: f64,
    /// Estimate WAV per source, for external estimates.
    #[arg(long = "estimate")]
    pub estimates: Vec<PathBuf>,
    #[arg(long)]
    pub taps: Option<usize>,
    #[arg(long)]
    pub delay: Option<usize>,
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long, value_parser = parse_enum::<LambdaMode>)]
    pub lambda_mode: Option<LambdaMode>,
    #[arg(long)]
    pub diag_load: Option<f64>,
    /// Alternations for vanilla WPE.
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub passes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "float32", value_parser = parse_enum::<WavFormat>)]
    pub format: WavFormat,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long = "estimate", required = true)]
    pub estimates: Vec<PathBuf>,
    #[arg(long = "reference", required = true)]
    pub references: Vec<PathBuf>,
    /// Largest GCC-PHAT lag searched, in samples.
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Start from the early-reflections-only comparison.
    #[arg(long)]
    pub early_reflections: bool,
    /// Number of scene seeds, counted from `--first-seed`.
    #[arg(long, default_value_t = 0)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    #[arg(long)]
    pub sample_rate: Option<u32>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub passes: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write one CSV line per row.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn to_config(&self) -> anyhow::Result<SimulateConfig> {
        let base = SimulateConfig {
            scene: SceneConfig {
                sample_rate: self.sample_rate,
                duration: self.duration,
                t60: self.t60,
                interferers: self.interferers,
                sir_db: self.sir_db,
                snr_db: self.snr_db,
                early_only: self.early_only,
                normalize: !self.no_normalize,
                seed: self.seed,
            },
            format: self.format,
            out_dir: self.out_dir.clone(),
        };
        with_overrides(base, self.config.as_deref())
    }
}

impl DereverbArgs {
    pub fn to_config(&self) -> anyhow::Result<RunConfig> {
        let estimate_mode = match self.estimate_mode.as_str() {
            "oracle" => EstimateSpec::Oracle,
            "degraded" => EstimateSpec::Degraded {
                error_snr_db: self.error_snr_db,
            },
            "external" => EstimateSpec::External {
                paths: self.estimates.clone(),
            },
            other => {
                return Err(convpred::Error::Config(format!(
                    "unknown estimate mode `{other}` (expected oracle, degraded or external)"
                ))
                .into())
            }
        };
        let base = RunConfig {
            stft: None,
            pred: PredOverrides {
                taps: self.taps,
                delay: self.delay,
                floor: self.floor,
                lambda_mode: self.lambda_mode,
                diag_load: self.diag_load,
                iters: self.iters,
            },
            algorithm: self.algorithm,
            estimate_mode,
            passes: self.passes,
            seed: self.seed,
            paths: RunPaths {
                scene: self.scene.clone(),
                input: self.input.clone(),
                references: self.references.clone(),
                output: self.output.clone(),
                report: self.report.clone(),
            },
            format: self.format,
        };
        with_overrides(base, self.config.as_deref())
    }
}

impl ExperimentArgs {
    pub fn to_config(&self) -> anyhow::Result<SweepConfig> {
        let seeds: Vec<u64> = (self.first_seed..self.first_seed + self.seeds).collect();
        let mut base = if self.early_reflections {
            SweepConfig::early_reflections(seeds)
        } else {
            SweepConfig {
                seeds,
                ..SweepConfig::default()
            }
        };
        if let Some(v) = self.sample_rate {
            base.sample_rate = v;
        }
        if let Some(v) = self.duration {
            base.duration = v;
        }
        if let Some(v) = self.passes {
            base.passes = v;
        }
        with_overrides(base, self.config.as_deref())
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout"),
    }
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Simulate(a) => {
            let cfg = a.to_config()?;
            let m = simulate::cmd_simulate(&cfg)?;
            eprintln!(
                "wrote {} samples at {} Hz to {}",
                m.samples,
                m.sample_rate,
                cfg.out_dir.display()
            );
            Ok(())
        }
        Command::Dereverb(a) => {
            let cfg = a.to_config()?;
            let report = dereverb::cmd_dereverb(&cfg)?;
            emit(&report, cfg.paths.report.as_deref())
        }
        Command::Evaluate(a) => {
            let report = evaluate::cmd_evaluate(&a.estimates, &a.references, a.max_lag)?;
            emit(&report, a.report.as_deref())
        }
        Command::Experiment(a) => {
            let cfg = a.to_config()?;
            let result = experiment::cmd_experiment(&cfg)?;
            if let Some(p) = &a.csv {
                experiment::write_csv(&result, p)?;
            }
            emit(&result, a.output.as_deref())
        }
    }
}

/// Process exit code for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<convpred::Error>() {
            return match e {
                convpred::Error::Config(_) | convpred::Error::Shape(_) => EXIT_CONFIG,
                convpred::Error::Io { .. } | convpred::Error::Wav { .. } => EXIT_IO,
                convpred::Error::Numerical(_) => EXIT_NUMERICAL,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return EXIT_IO;
        }
        if cause.is::<serde_json::Error>() {
            return EXIT_CONFIG;
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let e: anyhow::Error = convpred::Error::Config("x".into()).into();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        let e: anyhow::Error = convpred::Error::Numerical("x".into()).into();
        assert_eq!(exit_code(&e.context("while running")), EXIT_NUMERICAL);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(exit_code(&anyhow::Error::new(io)), EXIT_IO);
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from([
            "convpred",
            "dereverb",
            "--input",
            "y.wav",
            "-o",
            "o.wav",
            "--algorithm",
            "icp",
        ])
        .unwrap();
        let Command::Dereverb(a) = cli.command else {
            panic!()
        };
        let cfg = a.to_config().unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Icp);
        assert!(Cli::try_parse_from(["convpred", "dereverb", "--algorithm", "nope"]).is_err());
    }
}
