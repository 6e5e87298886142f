//! Reverberant scene synthesis with ground-truth components.
//!
//! A scene follows `y = s + h + v`: `s` is the target convolved with the
//! direct part of its RIR, `h` the target convolved with the early and late
//! parts, and `v` everything else (competing reverberant speakers and
//! noise).

mod estimate;
mod rir;
mod source;

pub use estimate::{degrade, estimate_signal, make_estimate, EstimateMode, TargetEstimate};
pub use rir::{gen_rir, split_rir, Rir, RirParts, RirSpec, EARLY_WINDOW_MS};
pub use source::{speech_surrogate, white_noise};

use crate::dsp::{convolve, energy, variance};
use crate::error::{Error, Result};

/// One source's contribution to the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceImage {
    pub dry: Vec<f64>,
    pub rir: Rir,
    /// Direct-path image `a * r_d`.
    pub s: Vec<f64>,
    /// Early reflections `a * r_e`.
    pub early: Vec<f64>,
    /// Late reverberation `a * r_l`.
    pub late: Vec<f64>,
    /// `early + late`.
    pub h: Vec<f64>,
}

impl SourceImage {
    /// Reverberant image `s + h`.
    pub fn reverberant(&self) -> Vec<f64> {
        self.s.iter().zip(&self.h).map(|(a, b)| a + b).collect()
    }

    fn scale(&mut self, k: f64) {
        for buf in [&mut self.s, &mut self.early, &mut self.late] {
            buf.iter_mut().for_each(|v| *v *= k);
        }
        self.h = add(&self.early, &self.late);
    }
}

/// A rendered mixture. Source 0 is the target.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub sample_rate: u32,
    pub sources: Vec<SourceImage>,
    /// Scaled additive noise (all zeros when none was requested).
    pub noise: Vec<f64>,
    pub s: Vec<f64>,
    pub h: Vec<f64>,
    pub v: Vec<f64>,
    pub y: Vec<f64>,
    /// Requested SNR of the target direct path over the noise.
    pub snr_db: Option<f64>,
    /// Factor applied to every component by variance normalization.
    pub scale: f64,
}

impl Scene {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn num_sources(&self) -> usize {
        self.sources.len()
    }

    pub fn target(&self) -> &SourceImage {
        &self.sources[0]
    }

    /// Check the construction identities. They hold exactly, so any
    /// difference is a bug.
    pub fn check_identities(&self) -> Result<()> {
        for (c, src) in self.sources.iter().enumerate() {
            let parts = src.rir.split();
            for i in 0..src.rir.len() {
                if parts.direct[i] + parts.early[i] + parts.late[i] != src.rir.taps[i] {
                    return Err(Error::numerical(format!(
                        "source {c}: RIR split is not a partition"
                    )));
                }
            }
            if src.h != add(&src.early, &src.late) {
                return Err(Error::numerical(format!("source {c}: h != early + late")));
            }
        }
        if self.y != add(&add(&self.s, &self.h), &self.v) {
            return Err(Error::numerical("y != s + h + v"));
        }
        Ok(())
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Convolve each dry source with its RIR, add scaled noise and mix.
///
/// All outputs have the length of the dry signals. `noise` is scaled so that
/// the target's direct-path image over the noise has `snr_db`; an infinite
/// `snr_db` or absent noise leaves `noise` all zeros. With `normalize`, every
/// component is multiplied by the same factor so that `y` has unit sample
/// variance.
pub fn render_scene(
    dry: &[Vec<f64>],
    rirs: &[Rir],
    noise: Option<&[f64]>,
    snr_db: f64,
    normalize: bool,
) -> Result<Scene> {
    if dry.is_empty() {
        return Err(Error::config("a scene needs at least one source"));
    }
    if dry.len() != rirs.len() {
        return Err(Error::shape(format!(
            "{} dry sources but {} RIRs",
            dry.len(),
            rirs.len()
        )));
    }
    let len = dry[0].len();
    if len == 0 {
        return Err(Error::shape("dry sources are empty"));
    }
    let sample_rate = rirs[0].sample_rate;
    for (c, (d, r)) in dry.iter().zip(rirs).enumerate() {
        if d.len() != len {
            return Err(Error::shape(format!(
                "source {c} has {} samples, expected {len}",
                d.len()
            )));
        }
        if r.sample_rate != sample_rate {
            return Err(Error::config(format!(
                "RIR {c} has a different sample rate"
            )));
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "source {c} contains non-finite samples"
            )));
        }
    }
    if snr_db.is_nan() {
        return Err(Error::config("SNR is NaN"));
    }

    let mut sources: Vec<SourceImage> = dry
        .iter()
        .zip(rirs)
        .map(|(a, r)| {
            let parts = r.split();
            let s = convolve(a, &parts.direct, len);
            let early = convolve(a, &parts.early, len);
            let late = convolve(a, &parts.late, len);
            let h = add(&early, &late);
            SourceImage {
                dry: a.clone(),
                rir: r.clone(),
                s,
                early,
                late,
                h,
            }
        })
        .collect();

    let mut noise_out = vec![0.0; len];
    let mut snr = None;
    if let Some(n) = noise {
        if n.len() != len {
            return Err(Error::shape(format!(
                "noise has {} samples, expected {len}",
                n.len()
            )));
        }
        if snr_db.is_finite() {
            let es = energy(&sources[0].s);
            if es == 0.0 {
                return Err(Error::config(
                    "target direct path is silent; cannot set an SNR",
                ));
            }
            let en = energy(n);
            if en == 0.0 || !en.is_finite() {
                return Err(Error::config(
                    "noise is silent or non-finite; cannot set an SNR",
                ));
            }
            let k = (es / (en * 10f64.powf(snr_db / 10.0))).sqrt();
            noise_out = n.iter().map(|v| v * k).collect();
            snr = Some(snr_db);
        }
    }

    let mut scale = 1.0;
    if normalize {
        let y = mix(&sources, &noise_out);
        let var = variance(&y);
        if var == 0.0 {
            return Err(Error::numerical(
                "mixture is constant; cannot normalize its variance",
            ));
        }
        scale = 1.0 / var.sqrt();
        for src in &mut sources {
            src.scale(scale);
        }
        noise_out.iter_mut().for_each(|v| *v *= scale);
    }

    let mut v = noise_out.clone();
    for src in &sources[1..] {
        for (acc, x) in v.iter_mut().zip(src.reverberant()) {
            *acc += x;
        }
    }
    let s = sources[0].s.clone();
    let h = sources[0].h.clone();
    let y = add(&add(&s, &h), &v);
    Ok(Scene {
        sample_rate,
        sources,
        noise: noise_out,
        s,
        h,
        v,
        y,
        snr_db: snr,
        scale,
    })
}

fn mix(sources: &[SourceImage], noise: &[f64]) -> Vec<f64> {
    let mut y = noise.to_vec();
    for src in sources {
        for (acc, (a, b)) in y.iter_mut().zip(src.s.iter().zip(&src.h)) {
            *acc += a + b;
        }
    }
    y
}

/// Parameters for [`simulate`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SceneConfig {
    pub sample_rate: u32,
    /// Signal length in seconds.
    pub duration: f64,
    /// Target T60; zero gives an anechoic target.
    pub t60: f64,
    /// Competing speakers; each gets its own RIR with the same T60.
    pub interferers: usize,
    /// Interferer direct-path energy relative to the target's, in dB.
    pub sir_db: f64,
    /// SNR of target direct path over white noise; `None` means no noise.
    pub snr_db: Option<f64>,
    /// Drop the late tail and keep only direct path and early reflections.
    pub early_only: bool,
    pub normalize: bool,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            sample_rate: 16_000,
            duration: 4.0,
            t60: 0.4,
            interferers: 0,
            sir_db: 0.0,
            snr_db: None,
            early_only: false,
            normalize: true,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn len(&self) -> usize {
        (self.duration * self.sample_rate as f64).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) || self.is_empty() {
            return Err(Error::config("duration must be positive"));
        }
        if !(self.t60 >= 0.0 && self.t60.is_finite()) {
            return Err(Error::config(format!(
                "T60 must be non-negative, got {}",
                self.t60
            )));
        }
        if !self.sir_db.is_finite() {
            return Err(Error::config("SIR must be finite"));
        }
        if matches!(self.snr_db, Some(v) if v.is_nan()) {
            return Err(Error::config("SNR is NaN"));
        }
        Ok(())
    }

    /// RIR spec for source `c`; `None` for an anechoic source.
    pub fn rir_spec(&self, c: usize) -> Option<RirSpec> {
        if self.t60 == 0.0 {
            return None;
        }
        let seed = mix_seed(self.seed, 1 + c as u64);
        let mut spec = RirSpec::new(self.sample_rate, self.t60, seed);
        if self.early_only {
            spec.late_tail = false;
        }
        Some(spec)
    }
}

/// Derive independent stream seeds from one user seed.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generate dry sources, RIRs and noise from a [`SceneConfig`] and render.
pub fn simulate(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let len = cfg.len();
    let n_src = 1 + cfg.interferers;
    let mut dry = Vec::with_capacity(n_src);
    let mut rirs = Vec::with_capacity(n_src);
    for c in 0..n_src {
        let mut a = speech_surrogate(len, cfg.sample_rate, mix_seed(cfg.seed, 100 + c as u64));
        let rir = match cfg.rir_spec(c) {
            Some(spec) => gen_rir(&spec)?,
            None => Rir::anechoic(cfg.sample_rate, cfg.sample_rate as usize / 500, 1.0),
        };
        if c > 0 {
            // Interferers are referenced to the target at the dry level; all
            // RIRs share the same direct gain, so this fixes the direct-path SIR.
            let k = 10f64.powf(-cfg.sir_db / 20.0);
            a.iter_mut().for_each(|v| *v *= k);
        }
        dry.push(a);
        rirs.push(rir);
    }
    let noise = cfg
        .snr_db
        .map(|_| white_noise(len, mix_seed(cfg.seed, 999)));
    render_scene(
        &dry,
        &rirs,
        noise.as_deref(),
        cfg.snr_db.unwrap_or(f64::INFINITY),
        cfg.normalize,
    )
}
