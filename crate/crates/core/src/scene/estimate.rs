//! Stand-ins for a learned target estimate.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Scene;
use crate::dsp::energy;
use crate::error::{Error, Result};
use crate::stft::{analyze, ComplexSpectrogram, StftConfig};
use crate::wav::read_wav;

/// Where a target estimate comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum EstimateMode {
    /// The true direct-path signal.
    Oracle,
    /// The direct-path signal plus seeded white noise at `error_snr_db`.
    /// An infinite SNR adds nothing.
    Degraded { error_snr_db: f64, seed: u64 },
    /// Samples read from a mono WAV file.
    External { path: PathBuf },
}

/// A complex spectrogram standing in for the network output.
#[derive(Debug, Clone)]
pub struct TargetEstimate {
    pub spec: ComplexSpectrogram,
    pub provenance: EstimateMode,
}

/// Time-domain estimate of source `index` under `mode`.
pub fn estimate_signal(scene: &Scene, index: usize, mode: &EstimateMode) -> Result<Vec<f64>> {
    let src = scene.sources.get(index).ok_or_else(|| {
        Error::config(format!(
            "source {index} requested but the scene has {}",
            scene.num_sources()
        ))
    })?;
    match mode {
        EstimateMode::Oracle => Ok(src.s.clone()),
        EstimateMode::Degraded { error_snr_db, seed } => degrade(&src.s, *error_snr_db, *seed),
        EstimateMode::External { path } => {
            let (x, rate) = read_wav(path)?;
            if rate != scene.sample_rate {
                return Err(Error::config(format!(
                    "{} is sampled at {rate} Hz but the scene at {} Hz",
                    path.display(),
                    scene.sample_rate
                )));
            }
            if x.len() != scene.len() {
                return Err(Error::shape(format!(
                    "{} has {} samples but the scene has {}",
                    path.display(),
                    x.len(),
                    scene.len()
                )));
            }
            Ok(x)
        }
    }
}

/// `clean` plus seeded white Gaussian noise at `error_snr_db` below it.
/// An infinite SNR returns `clean` unchanged.
pub fn degrade(clean: &[f64], error_snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    if error_snr_db.is_nan() {
        return Err(Error::config("estimate error SNR is NaN"));
    }
    if error_snr_db == f64::INFINITY {
        return Ok(clean.to_vec());
    }
    let es = energy(clean);
    if es == 0.0 {
        return Err(Error::config("signal is silent; cannot set an error SNR"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e: Vec<f64> = (0..clean.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    let k = (es / (energy(&e) * 10f64.powf(error_snr_db / 10.0))).sqrt();
    Ok(clean.iter().zip(e).map(|(s, e)| s + k * e).collect())
}

/// Analyze the estimate of source `index` with `cfg`.
pub fn make_estimate(
    scene: &Scene,
    index: usize,
    mode: &EstimateMode,
    cfg: &StftConfig,
) -> Result<TargetEstimate> {
    if cfg.sample_rate != scene.sample_rate {
        return Err(Error::config(format!(
            "STFT configured for {} Hz but the scene is at {} Hz",
            cfg.sample_rate, scene.sample_rate
        )));
    }
    let x = estimate_signal(scene, index, mode)?;
    Ok(TargetEstimate {
        spec: analyze(&x, cfg)?,
        provenance: mode.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::si_sdr;
    use crate::scene::{simulate, SceneConfig};
    use crate::wav::{write_wav, WavFormat};

    fn scene(duration: f64) -> Scene {
        simulate(&SceneConfig {
            duration,
            interferers: 1,
            ..SceneConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn oracle_is_exact() {
        let sc = scene(0.5);
        let cfg = StftConfig::wideband();
        let est = make_estimate(&sc, 1, &EstimateMode::Oracle, &cfg).unwrap();
        assert_eq!(est.spec, analyze(&sc.sources[1].s, &cfg).unwrap());
    }

    #[test]
    fn infinite_snr_matches_oracle() {
        let sc = scene(0.5);
        let cfg = StftConfig::wideband();
        let a = make_estimate(&sc, 0, &EstimateMode::Oracle, &cfg).unwrap();
        let mode = EstimateMode::Degraded {
            error_snr_db: f64::INFINITY,
            seed: 3,
        };
        let b = make_estimate(&sc, 0, &mode, &cfg).unwrap();
        assert!(a.spec.relative_distance(&b.spec).unwrap() < 1e-12);
    }

    #[test]
    fn degraded_error_snr() {
        let sc = scene(4.0);
        let mode = EstimateMode::Degraded {
            error_snr_db: 10.0,
            seed: 8,
        };
        let x = estimate_signal(&sc, 0, &mode).unwrap();
        let e: Vec<f64> = x.iter().zip(&sc.s).map(|(a, b)| a - b).collect();
        let snr = 10.0 * (energy(&sc.s) / energy(&e)).log10();
        assert!((snr - 10.0).abs() < 1e-9);
        let d = si_sdr(&x, &sc.s).unwrap();
        assert!((d - 10.0).abs() < 0.1, "{d}");
    }

    #[test]
    fn bad_index_and_rate() {
        let sc = scene(0.25);
        assert!(estimate_signal(&sc, 2, &EstimateMode::Oracle).is_err());
        assert!(make_estimate(&sc, 0, &EstimateMode::Oracle, &StftConfig::narrowband()).is_err());
    }

    #[test]
    fn external_file() {
        let sc = scene(0.25);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("est.wav");
        write_wav(&p, &sc.s, sc.sample_rate, WavFormat::Float32).unwrap();
        let x = estimate_signal(&sc, 0, &EstimateMode::External { path: p.clone() }).unwrap();
        for (a, b) in x.iter().zip(&sc.s) {
            assert!((a - b).abs() < 1e-6);
        }
        write_wav(&p, &sc.s[..100], sc.sample_rate, WavFormat::Float32).unwrap();
        assert!(estimate_signal(&sc, 0, &EstimateMode::External { path: p }).is_err());
        let missing = dir.path().join("none.wav");
        assert!(estimate_signal(&sc, 0, &EstimateMode::External { path: missing }).is_err());
    }
}
