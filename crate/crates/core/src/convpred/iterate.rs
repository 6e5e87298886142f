use serde::{Deserialize, Serialize};

use super::multi::{wpe_multi, WpeVariant};
use super::predict::{fcp, fcp_per_source, icp};
use super::wpe::{wpe_supplied, wpe_vanilla};
use super::PredConfig;
use crate::error::{Error, Result};
use crate::stft::ComplexSpectrogram;

/// Every dereverberation algorithm the toolkit can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    WpeVanilla,
    WpeSupplied,
    Icp,
    Fcp,
    FcpPerSource,
    WpeSf,
    WpeMf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::WpeVanilla,
        Algorithm::WpeSupplied,
        Algorithm::Icp,
        Algorithm::Fcp,
        Algorithm::FcpPerSource,
        Algorithm::WpeSf,
        Algorithm::WpeMf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::WpeVanilla => "wpe_vanilla",
            Algorithm::WpeSupplied => "wpe_supplied",
            Algorithm::Icp => "icp",
            Algorithm::Fcp => "fcp",
            Algorithm::FcpPerSource => "fcp_per_source",
            Algorithm::WpeSf => "wpe_sf",
            Algorithm::WpeMf => "wpe_mf",
        }
    }

    /// Default hyperparameters for this algorithm.
    pub fn default_config(self) -> PredConfig {
        match self {
            Algorithm::WpeVanilla => PredConfig::wpe(),
            Algorithm::WpeSupplied | Algorithm::WpeSf | Algorithm::WpeMf => PredConfig::dnn_wpe(),
            Algorithm::Icp => PredConfig::icp(),
            Algorithm::Fcp | Algorithm::FcpPerSource => PredConfig::fcp(),
        }
    }

    pub fn needs_estimate(self) -> bool {
        self != Algorithm::WpeVanilla
    }

    /// Whether outputs correspond one-to-one with the supplied estimates and
    /// can be fed back as estimates of a further pass.
    pub fn is_refinable(self) -> bool {
        !matches!(self, Algorithm::WpeVanilla | Algorithm::WpeSf)
    }

    /// Check `cfg` against this algorithm's preconditions.
    pub fn validate(self, cfg: &PredConfig) -> Result<()> {
        match self {
            Algorithm::WpeVanilla
            | Algorithm::WpeSupplied
            | Algorithm::WpeSf
            | Algorithm::WpeMf => cfg.validate_wpe(),
            Algorithm::Icp | Algorithm::Fcp | Algorithm::FcpPerSource => {
                cfg.validate()?;
                if cfg.delay != 0 {
                    return Err(Error::config(format!(
                        "{} uses no prediction delay (got {})",
                        self.name(),
                        cfg.delay
                    )));
                }
                Ok(())
            }
        }
    }

    /// Run once. Single-source algorithms use the first estimate only.
    pub fn run(
        self,
        y: &ComplexSpectrogram,
        ests: &[ComplexSpectrogram],
        cfg: &PredConfig,
    ) -> Result<Vec<ComplexSpectrogram>> {
        self.validate(cfg)?;
        if self.needs_estimate() && ests.is_empty() {
            return Err(Error::config(format!(
                "{} needs a target estimate",
                self.name()
            )));
        }
        Ok(match self {
            Algorithm::WpeVanilla => vec![wpe_vanilla(y, cfg)?.estimate],
            Algorithm::WpeSupplied => {
                let lambda = cfg.lambda_mode.weights_for(y, &ests[0], cfg.floor)?;
                vec![wpe_supplied(y, &lambda, cfg.taps, cfg.delay, cfg.diag_load)?.estimate]
            }
            Algorithm::Icp => vec![icp(y, &ests[0], cfg)?.estimate],
            Algorithm::Fcp => vec![fcp(y, &ests[0], cfg)?.estimate],
            Algorithm::FcpPerSource => fcp_per_source(y, ests, cfg)?
                .into_iter()
                .map(|o| o.estimate)
                .collect(),
            Algorithm::WpeSf | Algorithm::WpeMf => {
                let variant = if self == Algorithm::WpeSf {
                    WpeVariant::SingleFilter
                } else {
                    WpeVariant::MultiFilter
                };
                wpe_multi(
                    y,
                    ests,
                    cfg.taps,
                    cfg.delay,
                    cfg.floor,
                    variant,
                    cfg.diag_load,
                )?
                .into_iter()
                .map(|o| o.estimate)
                .collect()
            }
        })
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown algorithm `{s}`")))
    }
}

/// Run `passes` rounds of `algorithm`, each round using the previous round's
/// outputs as its estimates. Returns the outputs of every pass; the last entry
/// is the final result.
pub fn iterate(
    y: &ComplexSpectrogram,
    initial: &[ComplexSpectrogram],
    algorithm: Algorithm,
    cfg: &PredConfig,
    passes: usize,
) -> Result<Vec<Vec<ComplexSpectrogram>>> {
    if passes == 0 {
        return Err(Error::config("at least one pass is required"));
    }
    if passes > 1 && !algorithm.is_refinable() {
        return Err(Error::config(format!(
            "{} outputs cannot be fed back as source estimates",
            algorithm.name()
        )));
    }
    let mut history: Vec<Vec<ComplexSpectrogram>> = Vec::with_capacity(passes);
    for _ in 0..passes {
        let ests = history.last().map_or(initial, Vec::as_slice);
        let out = algorithm.run(y, ests, cfg)?;
        history.push(out);
    }
    Ok(history)
}

/// Convenience for the single-estimate pipeline.
pub fn iterate_single(
    y: &ComplexSpectrogram,
    initial: &ComplexSpectrogram,
    algorithm: Algorithm,
    cfg: &PredConfig,
    passes: usize,
) -> Result<ComplexSpectrogram> {
    let mut history = iterate(y, std::slice::from_ref(initial), algorithm, cfg, passes)?;
    Ok(history
        .pop()
        .and_then(|mut v| (!v.is_empty()).then(|| v.swap_remove(0)))
        .expect("non-empty"))
}
