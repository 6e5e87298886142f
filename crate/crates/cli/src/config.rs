//! Run configuration: built from flags, then overlaid with `--config` JSON.

use std::path::{Path, PathBuf};

use anyhow::Context;
use convpred::wav::WavFormat;
use convpred::{Algorithm, Error, LambdaMode, PredConfig, StftConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Where the target estimates come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EstimateSpec {
    /// The reference direct-path signals themselves.
    Oracle,
    /// References plus seeded white noise `error_snr_db` below them.
    Degraded { error_snr_db: f64 },
    /// One WAV file per source.
    External { paths: Vec<PathBuf> },
}

/// Per-field overrides of an algorithm's default [`PredConfig`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredOverrides {
    pub taps: Option<usize>,
    pub delay: Option<usize>,
    pub floor: Option<f64>,
    pub lambda_mode: Option<LambdaMode>,
    pub diag_load: Option<f64>,
    pub iters: Option<usize>,
}

impl PredOverrides {
    pub fn apply(&self, mut cfg: PredConfig) -> PredConfig {
        if let Some(v) = self.taps {
            cfg.taps = v;
        }
        if let Some(v) = self.delay {
            cfg.delay = v;
        }
        if let Some(v) = self.floor {
            cfg.floor = v;
        }
        if let Some(v) = self.lambda_mode {
            cfg.lambda_mode = v;
        }
        if let Some(v) = self.diag_load {
            cfg.diag_load = v;
        }
        if let Some(v) = self.iters {
            cfg.iters = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunPaths {
    /// Directory written by `simulate`; supplies the mixture and references.
    pub scene: Option<PathBuf>,
    /// Mixture WAV, when no scene directory is given.
    pub input: Option<PathBuf>,
    /// Direct-path references, one per source, for oracle estimates and scoring.
    pub references: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    /// Report destination; stdout when absent.
    pub report: Option<PathBuf>,
}

/// Everything `dereverb` needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// STFT layout; the standard one for the input rate when absent.
    pub stft: Option<StftConfig>,
    pub pred: PredOverrides,
    pub algorithm: Algorithm,
    pub estimate_mode: EstimateSpec,
    pub passes: usize,
    /// Seed for degraded estimates.
    pub seed: u64,
    pub paths: RunPaths,
    pub format: WavFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            stft: None,
            pred: PredOverrides::default(),
            algorithm: Algorithm::Fcp,
            estimate_mode: EstimateSpec::Oracle,
            passes: 1,
            seed: 0,
            paths: RunPaths::default(),
            format: WavFormat::Float32,
        }
    }
}

impl RunConfig {
    /// Algorithm defaults with the overrides applied.
    pub fn pred_config(&self) -> PredConfig {
        self.pred.apply(self.algorithm.default_config())
    }

    /// Check everything that can be checked before touching any file.
    pub fn validate(&self) -> convpred::Result<()> {
        let pred = self.pred_config();
        self.algorithm.validate(&pred)?;
        if self.passes == 0 {
            return Err(Error::Config("at least one pass is required".into()));
        }
        if self.passes > 1 && !self.algorithm.is_refinable() {
            return Err(Error::Config(format!(
                "{} outputs cannot be fed back as estimates; use passes = 1",
                self.algorithm
            )));
        }
        if let Some(stft) = &self.stft {
            stft.validate()?;
        }
        if let EstimateSpec::Degraded { error_snr_db } = self.estimate_mode {
            if error_snr_db.is_nan() {
                return Err(Error::Config("estimate error SNR is NaN".into()));
            }
        }
        match (&self.paths.scene, &self.paths.input) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either a scene directory or an input file, not both".into(),
                ))
            }
            (None, None) => return Err(Error::Config("no input: pass --scene or --input".into())),
            _ => {}
        }
        if self.paths.output.is_none() {
            return Err(Error::Config("no output path: pass --output".into()));
        }
        Ok(())
    }
}

/// Overlay `patch` onto `base`: objects merge key by key, anything else replaces.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// `base` overlaid with the JSON object in `path`, if any.
pub fn with_overrides<T: Serialize + DeserializeOwned>(
    base: T,
    path: Option<&Path>,
) -> anyhow::Result<T> {
    let Some(path) = path else {
        return Ok(base);
    };
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let patch: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if !patch.is_object() {
        return Err(Error::Config(format!("{}: expected a JSON object", path.display())).into());
    }
    let mut value = serde_json::to_value(base)?;
    merge(&mut value, patch);
    Ok(serde_json::from_value(value)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?)
}

/// Parse a snake_case enum value the way it appears in JSON.
pub fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}
