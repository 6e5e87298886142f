//! Parametric room impulse responses: a direct impulse, sparse early
//! reflections and an exponentially decaying Gaussian tail.

use std::f64::consts::LN_10;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Early reflections end this long after the direct-path peak.
pub const EARLY_WINDOW_MS: f64 = 50.0;

/// Parameters of a synthetic RIR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RirSpec {
    pub sample_rate: u32,
    /// Time for the tail energy to fall by 60 dB, in seconds.
    pub t60: f64,
    /// Position of the direct-path impulse in samples.
    pub direct_delay: usize,
    pub direct_gain: f64,
    /// Early/late boundary after the direct peak, in milliseconds.
    pub early_window_ms: f64,
    /// Discrete reflections placed inside the early window.
    pub n_early_taps: usize,
    pub rir_len: usize,
    /// Whether to add the diffuse tail at all.
    pub late_tail: bool,
    /// Direct-path energy over diffuse-tail energy, in dB.
    pub tail_ratio_db: f64,
    pub seed: u64,
}

impl RirSpec {
    /// Defaults: 2 ms direct delay, unit gain, 8 early taps, 0 dB
    /// direct-to-tail ratio and a length covering one T60.
    pub fn new(sample_rate: u32, t60: f64, seed: u64) -> Self {
        let direct_delay = (sample_rate as usize) / 500;
        RirSpec {
            sample_rate,
            t60,
            direct_delay,
            direct_gain: 1.0,
            early_window_ms: EARLY_WINDOW_MS,
            n_early_taps: 8,
            rir_len: direct_delay + (t60.max(0.0) * sample_rate as f64).ceil() as usize + 1,
            late_tail: true,
            tail_ratio_db: 0.0,
            seed,
        }
    }

    /// Length in samples of the early window.
    pub fn early_samples(&self) -> usize {
        early_samples(self.sample_rate, self.early_window_ms)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if !(self.t60 > 0.0 && self.t60.is_finite()) {
            return Err(Error::config(format!(
                "T60 must be positive, got {}",
                self.t60
            )));
        }
        if !self.direct_gain.is_finite() || self.direct_gain == 0.0 {
            return Err(Error::config(
                "direct-path gain must be finite and non-zero",
            ));
        }
        if !(self.early_window_ms >= 0.0 && self.early_window_ms.is_finite()) {
            return Err(Error::config("early window must be non-negative"));
        }
        if !self.tail_ratio_db.is_finite() {
            return Err(Error::config("tail ratio must be finite"));
        }
        if self.rir_len <= self.direct_delay {
            return Err(Error::config(format!(
                "RIR length {} does not reach the direct path at {}",
                self.rir_len, self.direct_delay
            )));
        }
        if self.late_tail {
            let needed = self.direct_delay + (self.t60 * self.sample_rate as f64).ceil() as usize;
            if self.rir_len < needed {
                return Err(Error::config(format!(
                    "RIR length {} is shorter than T60 ({} samples after the direct path)",
                    self.rir_len,
                    needed - self.direct_delay
                )));
            }
        }
        if self.n_early_taps > 0 && self.early_samples() == 0 {
            return Err(Error::config(
                "early taps requested with an empty early window",
            ));
        }
        Ok(())
    }
}

fn early_samples(sample_rate: u32, window_ms: f64) -> usize {
    (window_ms * sample_rate as f64 / 1000.0).round() as usize
}

/// A room impulse response with its direct-path peak located.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rir {
    pub taps: Vec<f64>,
    pub peak: usize,
    pub sample_rate: u32,
    pub early_window_ms: f64,
}

/// Direct, early and late parts; each as long as the RIR.
#[derive(Debug, Clone, PartialEq)]
pub struct RirParts {
    pub direct: Vec<f64>,
    pub early: Vec<f64>,
    pub late: Vec<f64>,
}

impl Rir {
    /// Wrap measured or external taps; the peak is the largest magnitude.
    pub fn from_taps(taps: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if taps.is_empty() || taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("RIR taps must be non-empty and finite"));
        }
        let peak = taps
            .iter()
            .enumerate()
            .fold(
                (0, 0.0),
                |best, (i, &v)| if v.abs() > best.1 { (i, v.abs()) } else { best },
            )
            .0;
        if taps[peak] == 0.0 {
            return Err(Error::config("RIR is all zeros"));
        }
        Ok(Rir {
            taps,
            peak,
            sample_rate,
            early_window_ms: EARLY_WINDOW_MS,
        })
    }

    /// A lone direct-path impulse.
    pub fn anechoic(sample_rate: u32, delay: usize, gain: f64) -> Self {
        let mut taps = vec![0.0; delay + 1];
        taps[delay] = gain;
        Rir {
            taps,
            peak: delay,
            sample_rate,
            early_window_ms: EARLY_WINDOW_MS,
        }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Last sample index (inclusive) of the early part.
    pub fn early_end(&self) -> usize {
        self.peak + early_samples(self.sample_rate, self.early_window_ms)
    }

    /// Partition the taps. The direct part is the peak sample alone; the
    /// early part holds everything else up to and including
    /// `peak + early window`; the late part holds the rest. The three parts
    /// sum back to the taps exactly.
    pub fn split(&self) -> RirParts {
        let n = self.taps.len();
        let mut parts = RirParts {
            direct: vec![0.0; n],
            early: vec![0.0; n],
            late: vec![0.0; n],
        };
        let early_end = self.early_end();
        for (i, &v) in self.taps.iter().enumerate() {
            if i == self.peak {
                parts.direct[i] = v;
            } else if i <= early_end {
                parts.early[i] = v;
            } else {
                parts.late[i] = v;
            }
        }
        parts
    }
}

/// Free-function form of [`Rir::split`].
pub fn split_rir(rir: &Rir) -> RirParts {
    rir.split()
}

/// Generate a seeded RIR.
///
/// The direct impulse sits at `direct_delay`. Early reflections are placed
/// uniformly in `(0, early window]` after it with random signs and
/// magnitudes between 0.2 and 0.7 of the direct gain, decaying at the same
/// rate as the tail. The tail is white Gaussian noise from the sample after
/// the direct path to the end, with amplitude envelope
/// `exp(-(3 ln 10 / T60) t)`, scaled to the requested direct-to-tail ratio.
pub fn gen_rir(spec: &RirSpec) -> Result<Rir> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fs = spec.sample_rate as f64;
    let decay = 3.0 * LN_10 / spec.t60;
    let d = spec.direct_delay;
    let mut taps = vec![0.0; spec.rir_len];
    taps[d] = spec.direct_gain;

    let window = spec.early_samples();
    for _ in 0..spec.n_early_taps {
        let offset = rng.random_range(1..=window);
        if d + offset >= spec.rir_len {
            continue;
        }
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mag = rng.random_range(0.2..0.7) * (-decay * offset as f64 / fs).exp();
        taps[d + offset] += sign * mag * spec.direct_gain;
    }

    if spec.late_tail && d + 1 < spec.rir_len {
        let tail: Vec<f64> = (d + 1..spec.rir_len)
            .map(|n| {
                let g: f64 = rng.sample(StandardNormal);
                g * (-decay * (n - d) as f64 / fs).exp()
            })
            .collect();
        let e: f64 = tail.iter().map(|v| v * v).sum();
        if e > 0.0 {
            let target = spec.direct_gain.powi(2) / 10f64.powf(spec.tail_ratio_db / 10.0);
            let scale = (target / e).sqrt();
            for (t, v) in taps[d + 1..].iter_mut().zip(tail) {
                *t += scale * v;
            }
        }
    }

    Ok(Rir {
        taps,
        peak: d,
        sample_rate: spec.sample_rate,
        early_window_ms: spec.early_window_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anechoic_limit() {
        let spec = RirSpec {
            n_early_taps: 0,
            late_tail: false,
            ..RirSpec::new(16_000, 0.3, 1)
        };
        let r = gen_rir(&spec).unwrap();
        let parts = r.split();
        assert_eq!(parts.direct, r.taps);
        assert!(parts.early.iter().chain(&parts.late).all(|&v| v == 0.0));
        assert_eq!(r.taps.iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(r.taps[spec.direct_delay], 1.0);
    }

    #[test]
    fn tail_decays_sixty_db_per_t60() {
        let spec = RirSpec {
            n_early_taps: 0,
            rir_len: 16_000,
            ..RirSpec::new(16_000, 0.6, 7)
        };
        let r = gen_rir(&spec).unwrap();
        // Least-squares line through the log energy of 20 ms blocks.
        let block = 320;
        let start = spec.direct_delay + 1;
        let pts: Vec<(f64, f64)> = r.taps[start..]
            .chunks_exact(block)
            .enumerate()
            .map(|(i, c)| {
                let e: f64 = c.iter().map(|v| v * v).sum::<f64>() / block as f64;
                ((i as f64 + 0.5) * block as f64 / 16_000.0, 10.0 * e.log10())
            })
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let drop = -slope * 0.6;
        assert!((drop - 60.0).abs() < 3.0, "decay over T60 = {drop} dB");
    }

    #[test]
    fn tail_energy_matches_ratio() {
        let spec = RirSpec {
            n_early_taps: 0,
            tail_ratio_db: 6.0,
            ..RirSpec::new(8_000, 0.4, 3)
        };
        let r = gen_rir(&spec).unwrap();
        let tail: f64 = r.taps[spec.direct_delay + 1..].iter().map(|v| v * v).sum();
        assert!((10.0 * (1.0 / tail).log10() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = RirSpec::new(16_000, 0.5, 42);
        assert_eq!(gen_rir(&spec).unwrap(), gen_rir(&spec).unwrap());
        let other = RirSpec { seed: 43, ..spec };
        assert_ne!(gen_rir(&spec).unwrap(), gen_rir(&other).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let ok = RirSpec::new(16_000, 0.5, 0);
        assert!(gen_rir(&RirSpec { t60: 0.0, ..ok }).is_err());
        assert!(gen_rir(&RirSpec { t60: -1.0, ..ok }).is_err());
        assert!(gen_rir(&RirSpec {
            rir_len: 1000,
            ..ok
        })
        .is_err());
        assert!(gen_rir(&RirSpec {
            rir_len: 1000,
            late_tail: false,
            ..ok
        })
        .is_ok());
        assert!(gen_rir(&RirSpec {
            rir_len: ok.direct_delay,
            late_tail: false,
            ..ok
        })
        .is_err());
    }

    #[test]
    fn split_boundary_at_fifty_ms() {
        let mut taps = vec![0.0; 2000];
        taps[100] = 1.0;
        taps[100 + 784] = 0.3; // 49 ms
        taps[100 + 800] = 0.2; // exactly 50 ms
        taps[100 + 816] = 0.1; // 51 ms
        let r = Rir::from_taps(taps, 16_000).unwrap();
        assert_eq!(r.peak, 100);
        let p = r.split();
        assert_eq!(p.early[884], 0.3);
        assert_eq!(p.early[900], 0.2);
        assert_eq!(p.late[901 - 1 + 16], 0.1);
        assert_eq!(p.late[900], 0.0);
        assert_eq!(p.direct[100], 1.0);
    }

    #[test]
    fn split_is_an_exact_partition() {
        let r = gen_rir(&RirSpec::new(16_000, 0.8, 11)).unwrap();
        let p = split_rir(&r);
        for i in 0..r.len() {
            assert_eq!(p.direct[i] + p.early[i] + p.late[i], r.taps[i]);
            let nz = [p.direct[i], p.early[i], p.late[i]]
                .iter()
                .filter(|v| **v != 0.0)
                .count();
            assert!(nz <= 1);
        }
    }

    #[test]
    fn single_impulse_split() {
        let p = Rir::anechoic(8_000, 5, 0.7).split();
        assert_eq!(p.direct[5], 0.7);
        assert!(p.early.iter().chain(&p.late).all(|&v| v == 0.0));
    }
}
