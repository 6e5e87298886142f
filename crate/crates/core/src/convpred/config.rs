use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which power spectrogram feeds the per-unit weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// Floored power of the supplied target estimate.
    EstPower,
    /// Floored power of the mixture.
    MixPower,
    /// All weights equal to one.
    Unit,
}

/// Hyperparameters shared by every prediction algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredConfig {
    /// Filter length `K` in frames.
    pub taps: usize,
    /// Prediction delay `Δ` in frames.
    pub delay: usize,
    /// Weight floor `ε`, relative to the peak power.
    pub floor: f64,
    pub lambda_mode: LambdaMode,
    /// Diagonal loading, relative to `trace(R) / K` of each normal matrix.
    pub diag_load: f64,
    /// Alternations for vanilla WPE.
    pub iters: usize,
}

impl PredConfig {
    pub const DEFAULT_DIAG_LOAD: f64 = 1e-6;

    /// Vanilla WPE: K = 37, Δ = 3, mixture-power initialisation, 3 iterations.
    pub fn wpe() -> Self {
        PredConfig {
            taps: 37,
            delay: 3,
            floor: 1e-3,
            lambda_mode: LambdaMode::MixPower,
            diag_load: Self::DEFAULT_DIAG_LOAD,
            iters: 3,
        }
    }

    /// WPE with weights from a supplied estimate.
    pub fn dnn_wpe() -> Self {
        PredConfig {
            lambda_mode: LambdaMode::EstPower,
            iters: 1,
            ..Self::wpe()
        }
    }

    /// Inverse convolutive prediction: K = 40, no delay, unweighted (ε = 1).
    pub fn icp() -> Self {
        PredConfig {
            taps: 40,
            delay: 0,
            floor: 1.0,
            lambda_mode: LambdaMode::EstPower,
            diag_load: Self::DEFAULT_DIAG_LOAD,
            iters: 1,
        }
    }

    /// Forward convolutive prediction: K = 40, no delay, mixture power, ε = 1e-3.
    pub fn fcp() -> Self {
        PredConfig {
            taps: 40,
            delay: 0,
            floor: 1e-3,
            lambda_mode: LambdaMode::MixPower,
            diag_load: Self::DEFAULT_DIAG_LOAD,
            iters: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::config("filter taps must be at least 1"));
        }
        if !(self.floor > 0.0 && self.floor <= 1.0) {
            return Err(Error::config(format!(
                "weight floor must lie in (0, 1], got {}",
                self.floor
            )));
        }
        if !(self.diag_load >= 0.0 && self.diag_load.is_finite()) {
            return Err(Error::config(format!(
                "diagonal loading must be a finite non-negative number, got {}",
                self.diag_load
            )));
        }
        if self.iters == 0 {
            return Err(Error::config("iteration count must be at least 1"));
        }
        Ok(())
    }

    /// Delayed prediction on the mixture needs `Δ >= 1`.
    pub fn validate_wpe(&self) -> Result<()> {
        self.validate()?;
        check_wpe_delay(self.delay)
    }
}

pub(crate) fn check_wpe_delay(delay: usize) -> Result<()> {
    if delay == 0 {
        return Err(Error::config(
            "WPE needs a prediction delay of at least 1 frame: with delay 0 the \
             current mixture frame is in its own prediction stack and the identity \
             filter [1, 0, ..., 0] predicts it perfectly, which removes everything",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let w = PredConfig::wpe();
        assert_eq!((w.taps, w.delay, w.iters), (37, 3, 3));
        let f = PredConfig::fcp();
        assert_eq!((f.taps, f.delay, f.floor), (40, 0, 1e-3));
        assert_eq!(f.lambda_mode, LambdaMode::MixPower);
        let i = PredConfig::icp();
        assert_eq!((i.taps, i.delay, i.floor), (40, 0, 1.0));
        assert_eq!(i.lambda_mode, LambdaMode::EstPower);
        for c in [w, f, i, PredConfig::dnn_wpe()] {
            c.validate().unwrap();
        }
    }

    #[test]
    fn wpe_rejects_zero_delay() {
        let cfg = PredConfig {
            delay: 0,
            ..PredConfig::wpe()
        };
        cfg.validate().unwrap();
        let err = cfg.validate_wpe().unwrap_err().to_string();
        assert!(err.contains("identity filter"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        let base = PredConfig::fcp();
        for bad in [
            PredConfig { taps: 0, ..base },
            PredConfig { floor: 0.0, ..base },
            PredConfig { floor: 1.5, ..base },
            PredConfig {
                diag_load: -1.0,
                ..base
            },
            PredConfig { iters: 0, ..base },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn serde_names() {
        let s = serde_json::to_string(&LambdaMode::MixPower).unwrap();
        assert_eq!(s, "\"mix_power\"");
    }
}
