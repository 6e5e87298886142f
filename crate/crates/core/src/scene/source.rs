//! Seeded speech-like test signals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Speech surrogate: syllable-length bursts of resonance-filtered noise mixed
/// with a voiced pulse train, separated by short pauses.
///
/// Each burst draws its own pitch and two formant resonances, so the
/// spectrum changes over time the way speech does. The output has unit
/// variance unless `len` is zero.
pub fn speech_surrogate(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = sample_rate as f64;
    let mut out = vec![0.0; len];
    let mut pos = rng.random_range(0..(0.05 * fs) as usize + 1);
    while pos < len {
        let dur = (rng.random_range(0.12..0.35) * fs) as usize;
        let end = (pos + dur).min(len);
        render_burst(&mut out[pos..end], fs, &mut rng);
        pos = end + (rng.random_range(0.02..0.15) * fs) as usize;
    }
    normalize(&mut out);
    out
}

fn render_burst(seg: &mut [f64], fs: f64, rng: &mut ChaCha8Rng) {
    let n = seg.len();
    if n == 0 {
        return;
    }
    let pitch = rng.random_range(90.0..240.0);
    let voicing: f64 = rng.random_range(0.3..1.0);
    let formants = [
        (rng.random_range(300.0..900.0), rng.random_range(0.90..0.97)),
        (
            rng.random_range(900.0..(0.4 * fs).min(3000.0)),
            rng.random_range(0.85..0.95),
        ),
    ];
    let gain = rng.random_range(0.3..1.0);

    // Excitation: pulse train plus aspiration noise.
    let period = fs / pitch;
    let mut next_pulse = rng.random_range(0.0..period);
    let mut exc = vec![0.0; n];
    for (i, e) in exc.iter_mut().enumerate() {
        let noise: f64 = rng.sample(StandardNormal);
        *e = (1.0 - voicing) * noise;
        if i as f64 >= next_pulse {
            *e += voicing * 4.0;
            next_pulse += period * rng.random_range(0.97..1.03);
        }
    }

    // Cascade of two-pole resonators.
    let mut sig = exc;
    for (freq, radius) in formants {
        let theta = 2.0 * PI * freq / fs;
        let a1 = 2.0 * radius * theta.cos();
        let a2 = -radius * radius;
        let (mut y1, mut y2) = (0.0, 0.0);
        for v in sig.iter_mut() {
            let y = *v + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            *v = y;
        }
    }
    normalize(&mut sig);

    // Raised-cosine attack and release.
    let ramp = (n / 5).max(1);
    for (i, (s, v)) in seg.iter_mut().zip(sig).enumerate() {
        let env = if i < ramp {
            0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos()
        } else if i >= n - ramp {
            0.5 - 0.5 * (PI * (n - 1 - i) as f64 / ramp as f64).cos()
        } else {
            1.0
        };
        *s += gain * env * v;
    }
}

fn normalize(x: &mut [f64]) {
    let var = crate::dsp::variance(x);
    if var > 0.0 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let s = 1.0 / var.sqrt();
        x.iter_mut().for_each(|v| *v = (*v - mean) * s);
    }
}

/// Unit-variance white Gaussian noise.
pub fn white_noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}
