//! Short-time Fourier transform with a square-root Hann window.
//!
//! Analysis and synthesis share the same window. Frame `t` covers samples
//! `[t * hop, t * hop + window_len)` of the signal after `window_len - hop`
//! zeros have been prepended, so every input sample is seen by exactly
//! `window_len / hop` frames. The frame count for a signal of length `L` is
//! therefore `ceil(L / hop) + window_len / hop - 1` (128 frames for one
//! second at 16 kHz).
//!
//! Analysis applies no scaling; synthesis divides the overlap-added output by
//! the summed squared window, which makes `synthesize(analyze(x)) == x` up to
//! round-off.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Analysis/synthesis parameters of the time-frequency transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub window_len: usize,
    pub hop: usize,
    pub fft_size: usize,
}

impl StftConfig {
    /// 32 ms square-root Hann window with an 8 ms hop.
    pub fn for_rate(sample_rate: u32) -> Result<Self> {
        if !sample_rate.is_multiple_of(1000) || sample_rate == 0 {
            return Err(Error::config(format!(
                "sample rate {sample_rate} Hz does not give an integer 32 ms window"
            )));
        }
        let window_len = sample_rate as usize * 32 / 1000;
        let cfg = StftConfig {
            sample_rate,
            window_len,
            hop: window_len / 4,
            fft_size: window_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 16 kHz: 512-sample window, 128-sample hop, 257 bins.
    pub fn wideband() -> Self {
        StftConfig {
            sample_rate: 16_000,
            window_len: 512,
            hop: 128,
            fft_size: 512,
        }
    }

    /// 8 kHz: 256-sample window, 64-sample hop, 129 bins.
    pub fn narrowband() -> Self {
        StftConfig {
            sample_rate: 8_000,
            window_len: 256,
            hop: 64,
            fft_size: 256,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::config("sample rate must be positive"));
        }
        if self.hop == 0 || self.window_len == 0 {
            return Err(Error::config("window length and hop must be positive"));
        }
        if !self.window_len.is_multiple_of(self.hop) {
            return Err(Error::config(format!(
                "hop {} does not divide window length {}",
                self.hop, self.window_len
            )));
        }
        if self.window_len / self.hop < 2 {
            return Err(Error::config(
                "square-root Hann synthesis needs at least 50% overlap",
            ));
        }
        if self.fft_size < self.window_len {
            return Err(Error::config(format!(
                "fft size {} is shorter than the window ({})",
                self.fft_size, self.window_len
            )));
        }
        if !self.fft_size.is_multiple_of(2) {
            return Err(Error::config("fft size must be even"));
        }
        Ok(())
    }

    /// Number of retained frequency bins, `fft_size / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames overlapping any given sample.
    pub fn overlap(&self) -> usize {
        self.window_len / self.hop
    }

    /// Zeros prepended before framing.
    pub fn front_pad(&self) -> usize {
        self.window_len - self.hop
    }

    /// Frame count produced by [`analyze`] for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        len.div_ceil(self.hop) + self.overlap() - 1
    }

    /// Longest signal that [`synthesize`] can rebuild from `frames` frames.
    pub fn max_len_for(&self, frames: usize) -> usize {
        if frames == 0 {
            return 0;
        }
        (frames - 1) * self.hop + self.window_len - self.front_pad()
    }

    /// Periodic square-root Hann window of length `window_len`.
    pub fn window(&self) -> Vec<f64> {
        let n = self.window_len as f64;
        (0..self.window_len)
            .map(|i| (0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos()).sqrt())
            .collect()
    }

    /// Ratio between the spectrogram energy (counted over the full, two-sided
    /// spectrum) and the energy of the analysed signal:
    /// `fft_size * sum_k w[n + k hop]^2`, i.e. `fft_size * overlap / 2`.
    pub fn energy_gain(&self) -> f64 {
        self.fft_size as f64 * self.overlap() as f64 / 2.0
    }
}

/// A `frames x bins` complex matrix, stored frame-major.
#[derive(Clone, PartialEq)]
pub struct ComplexSpectrogram {
    frames: usize,
    bins: usize,
    data: Vec<Complex64>,
    config: StftConfig,
}

impl fmt::Debug for ComplexSpectrogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComplexSpectrogram")
            .field("frames", &self.frames)
            .field("bins", &self.bins)
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl ComplexSpectrogram {
    pub fn zeros(frames: usize, config: StftConfig) -> Self {
        let bins = config.bins();
        ComplexSpectrogram {
            frames,
            bins,
            data: vec![Complex64::new(0.0, 0.0); frames * bins],
            config,
        }
    }

    /// Wrap frame-major data.
    pub fn from_data(frames: usize, config: StftConfig, data: Vec<Complex64>) -> Result<Self> {
        let bins = config.bins();
        if data.len() != frames * bins {
            return Err(Error::shape(format!(
                "expected {} values for {frames}x{bins}, got {}",
                frames * bins,
                data.len()
            )));
        }
        Ok(ComplexSpectrogram {
            frames,
            bins,
            data,
            config,
        })
    }

    /// Assemble from per-bin time series (`columns[f][t]`).
    pub fn from_bins(config: StftConfig, columns: &[Vec<Complex64>]) -> Result<Self> {
        if columns.len() != config.bins() {
            return Err(Error::shape(format!(
                "expected {} bins, got {}",
                config.bins(),
                columns.len()
            )));
        }
        let frames = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != frames) {
            return Err(Error::shape("bins have different frame counts"));
        }
        let mut out = ComplexSpectrogram::zeros(frames, config);
        for (f, col) in columns.iter().enumerate() {
            out.set_bin(f, col);
        }
        Ok(out)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, t: usize, f: usize) -> Complex64 {
        self.data[t * self.bins + f]
    }

    #[inline]
    pub fn set(&mut self, t: usize, f: usize, v: Complex64) {
        self.data[t * self.bins + f] = v;
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    /// Time series of one frequency bin.
    pub fn bin(&self, f: usize) -> Vec<Complex64> {
        (0..self.frames).map(|t| self.get(t, f)).collect()
    }

    pub fn set_bin(&mut self, f: usize, values: &[Complex64]) {
        assert_eq!(
            values.len(),
            self.frames,
            "bin length must equal frame count"
        );
        for (t, &v) in values.iter().enumerate() {
            self.set(t, f, v);
        }
    }

    pub fn same_shape(&self, other: &ComplexSpectrogram) -> bool {
        self.frames == other.frames && self.bins == other.bins && self.config == other.config
    }

    pub(crate) fn ensure_same_shape(&self, other: &ComplexSpectrogram, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{what}: {}x{} ({:?}) vs {}x{} ({:?})",
                self.frames, self.bins, self.config, other.frames, other.bins, other.config
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub(crate) fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::numerical(format!(
                "{what} contains NaN or infinite values"
            )))
        }
    }

    /// `|X(t, f)|^2`, frame-major.
    pub fn power(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn max_power(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max)
    }

    /// Sum of `|X(t, f)|^2` over the stored half spectrum.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Energy counted over the implicit full spectrum (interior bins twice).
    pub fn full_energy(&self) -> f64 {
        let last = self.bins - 1;
        let mut e = 0.0;
        for t in 0..self.frames {
            for (f, c) in self.frame(t).iter().enumerate() {
                let w = if f == 0 || f == last { 1.0 } else { 2.0 };
                e += w * c.norm_sqr();
            }
        }
        e
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|c| *c *= alpha);
        out
    }

    pub fn zip_map(
        &self,
        other: &ComplexSpectrogram,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.ensure_same_shape(other, "elementwise op")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(ComplexSpectrogram {
            data,
            ..self.clone()
        })
    }

    pub fn add(&self, other: &ComplexSpectrogram) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexSpectrogram) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `||self - other|| / ||other||` over all units.
    pub fn relative_distance(&self, other: &ComplexSpectrogram) -> Result<f64> {
        self.ensure_same_shape(other, "relative distance")?;
        let num: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den = other.norm_sqr();
        Ok(if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        })
    }
}

/// A planned transform for one configuration.
pub struct Stft {
    config: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl Stft {
    pub fn new(config: StftConfig) -> Result<Self> {
        config.validate()?;
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Stft {
            window: config.window(),
            forward: planner.plan_fft_forward(config.fft_size),
            inverse: planner.plan_fft_inverse(config.fft_size),
            config,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn analyze(&self, signal: &[f64]) -> Result<ComplexSpectrogram> {
        if signal.is_empty() {
            return Err(Error::config("cannot analyse an empty signal"));
        }
        if signal.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical("signal contains NaN or infinite samples"));
        }
        let cfg = &self.config;
        let frames = cfg.frames_for(signal.len());
        let pad = cfg.front_pad();
        let mut out = ComplexSpectrogram::zeros(frames, *cfg);

        let mut buf = self.forward.make_input_vec();
        let mut spec = self.forward.make_output_vec();
        let mut scratch = self.forward.make_scratch_vec();
        for t in 0..frames {
            buf.iter_mut().for_each(|x| *x = 0.0);
            let start = (t * cfg.hop) as isize - pad as isize;
            for (n, w) in self.window.iter().enumerate() {
                let i = start + n as isize;
                if i >= 0 && (i as usize) < signal.len() {
                    buf[n] = signal[i as usize] * w;
                }
            }
            self.forward
                .process_with_scratch(&mut buf, &mut spec, &mut scratch)
                .map_err(|e| Error::numerical(format!("forward fft: {e}")))?;
            out.data[t * out.bins..(t + 1) * out.bins].copy_from_slice(&spec);
        }
        Ok(out)
    }

    /// Overlap-add resynthesis truncated to `length` samples.
    ///
    /// The imaginary parts of the DC and Nyquist bins are discarded, which is
    /// what a real-valued inverse transform implies.
    pub fn synthesize(&self, spec: &ComplexSpectrogram, length: usize) -> Result<Vec<f64>> {
        let cfg = &self.config;
        if spec.config != *cfg {
            return Err(Error::config(format!(
                "spectrogram was produced with {:?}, synthesis configured with {:?}",
                spec.config, cfg
            )));
        }
        let max_len = cfg.max_len_for(spec.frames);
        if length > max_len {
            return Err(Error::shape(format!(
                "cannot rebuild {length} samples from {} frames (at most {max_len})",
                spec.frames
            )));
        }
        spec.ensure_finite("spectrogram")?;

        let pad = cfg.front_pad();
        let total = pad + length;
        let mut acc = vec![0.0; total];
        let mut norm = vec![0.0; total];
        let mut bins = self.inverse.make_input_vec();
        let mut frame = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        let scale = 1.0 / cfg.fft_size as f64;
        let last = bins.len() - 1;
        for t in 0..spec.frames {
            let start = t * cfg.hop;
            if start >= total {
                break;
            }
            bins.copy_from_slice(spec.frame(t));
            bins[0].im = 0.0;
            bins[last].im = 0.0;
            self.inverse
                .process_with_scratch(&mut bins, &mut frame, &mut scratch)
                .map_err(|e| Error::numerical(format!("inverse fft: {e}")))?;
            for (n, w) in self.window.iter().enumerate() {
                let i = start + n;
                if i >= total {
                    break;
                }
                acc[i] += frame[n] * scale * w;
                norm[i] += w * w;
            }
        }
        Ok(acc[pad..]
            .iter()
            .zip(&norm[pad..])
            .map(|(&a, &w)| if w > 1e-12 { a / w } else { 0.0 })
            .collect())
    }
}

/// One-shot forward transform.
pub fn analyze(signal: &[f64], config: &StftConfig) -> Result<ComplexSpectrogram> {
    Stft::new(*config)?.analyze(signal)
}

/// One-shot inverse transform under the spectrogram's own configuration.
pub fn synthesize(spec: &ComplexSpectrogram, length: usize) -> Result<Vec<f64>> {
    Stft::new(spec.config)?.synthesize(spec, length)
}
