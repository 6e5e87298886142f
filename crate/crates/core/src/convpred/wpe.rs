//! Weighted prediction error: delayed linear prediction on the mixture.

use super::config::check_wpe_delay;
use super::solver::{solve_wls, FilterBank};
use super::{lambda_weights, LambdaMode, PredConfig, PredictionOutput, WeightMap};
use crate::error::Result;
use crate::stft::ComplexSpectrogram;

/// Result of the iterative (unsupervised) WPE.
#[derive(Debug, Clone)]
pub struct WpeOutput {
    pub estimate: ComplexSpectrogram,
    pub filters: FilterBank,
    /// Weighted prediction error `sum |Ŝ|^2 / λ` of every iteration, with
    /// each iteration's variances rescaled so that the previous filter scores
    /// the same under the old and the new variances. Non-increasing up to the
    /// diagonal loading.
    pub objective_trace: Vec<f64>,
    /// The same error under the unscaled floored variances of each iteration.
    pub raw_objective: Vec<f64>,
}

/// `Y - g^H Y~(t - Δ)`.
pub fn subtract_prediction(
    y: &ComplexSpectrogram,
    filters: &FilterBank,
) -> Result<ComplexSpectrogram> {
    y.sub(&filters.apply(y)?)
}

/// Iterative WPE.
///
/// The variances start from the floored mixture power. Each iteration solves
/// the filter for the current variances, dereverberates, and then replaces the
/// variances with the floored power of the new estimate. The floor is
/// `cfg.floor` times the peak of whichever power map is being floored.
/// `cfg.lambda_mode` is not consulted: the first iteration always uses the
/// mixture.
///
/// Without the log-variance term the overall scale of the variances is
/// arbitrary, so the new variances are rescaled to keep the previous
/// estimate's error unchanged. The filters do not depend on that scale.
pub fn wpe_vanilla(y: &ComplexSpectrogram, cfg: &PredConfig) -> Result<WpeOutput> {
    cfg.validate_wpe()?;
    y.ensure_finite("mixture")?;
    let mut lambda = lambda_weights(y, LambdaMode::MixPower, cfg.floor)?;
    let mut raw_scale = 1.0;
    let mut trace = Vec::with_capacity(cfg.iters);
    let mut raw = Vec::with_capacity(cfg.iters);
    let mut last = None;
    for i in 0..cfg.iters {
        let filters = solve_wls(y, y, cfg.taps, cfg.delay, &lambda, cfg.diag_load)?;
        let estimate = subtract_prediction(y, &filters)?;
        let q = quadratic(&estimate, &lambda);
        trace.push(q);
        raw.push(q * raw_scale);
        if i + 1 < cfg.iters {
            let next = lambda_weights(&estimate, LambdaMode::EstPower, cfg.floor)?;
            let q_next = quadratic(&estimate, &next);
            raw_scale = if q > 0.0 && q_next > 0.0 {
                q_next / q
            } else {
                1.0
            };
            lambda = next.scaled(raw_scale);
        }
        last = Some((estimate, filters));
    }
    let (estimate, filters) = last.expect("at least one iteration");
    Ok(WpeOutput {
        estimate,
        filters,
        objective_trace: trace,
        raw_objective: raw,
    })
}

fn quadratic(residual: &ComplexSpectrogram, lambda: &WeightMap) -> f64 {
    residual
        .data()
        .iter()
        .zip(lambda.values())
        .map(|(r, l)| r.norm_sqr() / l)
        .sum()
}

/// WPE with externally supplied variances: one closed-form solve.
pub fn wpe_supplied(
    y: &ComplexSpectrogram,
    lambda: &WeightMap,
    taps: usize,
    delay: usize,
    diag_load: f64,
) -> Result<PredictionOutput> {
    check_wpe_delay(delay)?;
    let filters = solve_wls(y, y, taps, delay, lambda, diag_load)?;
    let estimate = subtract_prediction(y, &filters)?;
    Ok(PredictionOutput { estimate, filters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convpred::solver::StackSource;
    use crate::stft::StftConfig;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> StftConfig {
        StftConfig {
            sample_rate: 8000,
            window_len: 8,
            hop: 4,
            fft_size: 8,
        }
    }

    fn white(frames: usize, seed: u64) -> ComplexSpectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..frames * cfg().bins())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexSpectrogram::from_data(frames, cfg(), data).unwrap()
    }

    #[test]
    fn zero_delay_is_rejected() {
        let y = white(50, 1);
        let err = wpe_vanilla(
            &y,
            &PredConfig {
                delay: 0,
                ..PredConfig::wpe()
            },
        )
        .unwrap_err();
        assert!(err.to_string().contains("identity filter"));
        let w = WeightMap::unit(50, y.bins());
        assert!(wpe_supplied(&y, &w, 3, 0, 0.0).is_err());
    }

    #[test]
    fn zero_delay_inner_problem_is_trivial() {
        // The guard exists because this solution wipes the signal.
        let y = white(60, 2);
        let w = WeightMap::unit(60, y.bins());
        let fb = solve_wls(&y, &y, 4, 0, &w, 0.0).unwrap();
        let residual = subtract_prediction(&y, &fb).unwrap();
        assert!(residual.norm_sqr() < 1e-20 * y.norm_sqr());
        for f in 0..fb.bins() {
            assert!((fb.filter(f)[0] - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn planted_autoregression() {
        let frames = 4000;
        let (taps, delay) = (3, 2);
        let c = [
            Complex64::new(0.5, 0.2),
            Complex64::new(-0.2, 0.1),
            Complex64::new(0.1, 0.0),
        ];
        let e = white(frames, 3);
        let mut y = e.clone();
        for f in 0..y.bins() {
            for t in 0..frames {
                let mut v = e.get(t, f);
                for (k, ck) in c.iter().enumerate() {
                    if t >= delay + k {
                        v += ck.conj() * y.get(t - delay - k, f);
                    }
                }
                y.set(t, f, v);
            }
        }
        let w = WeightMap::unit(frames, y.bins());
        let out = wpe_supplied(&y, &w, taps, delay, 0.0).unwrap();
        let planted =
            FilterBank::new(delay, StackSource::Mixture, vec![c.to_vec(); y.bins()]).unwrap();
        assert!(out.filters.relative_distance(&planted).unwrap() < 0.05);
        assert!(out.estimate.relative_distance(&e).unwrap() < 0.05);
    }

    #[test]
    fn trace_is_non_increasing_and_rescaling_keeps_filters() {
        let y = white(200, 4);
        let cfg = PredConfig {
            taps: 5,
            delay: 2,
            ..PredConfig::wpe()
        };
        let out = wpe_vanilla(&y, &cfg).unwrap();
        assert_eq!(out.objective_trace.len(), 3);
        for w in out.objective_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10));
        }
        // Plain alternation without rescaling.
        let mut lambda = lambda_weights(&y, LambdaMode::MixPower, cfg.floor).unwrap();
        let mut last = None;
        for _ in 0..3 {
            let fb = solve_wls(&y, &y, cfg.taps, cfg.delay, &lambda, cfg.diag_load).unwrap();
            let est = subtract_prediction(&y, &fb).unwrap();
            lambda = lambda_weights(&est, LambdaMode::EstPower, cfg.floor).unwrap();
            last = Some(fb);
        }
        assert!(out.filters.relative_distance(&last.unwrap()).unwrap() < 1e-9);
        assert!(
            (out.raw_objective[0] - out.objective_trace[0]).abs() < 1e-12 * out.raw_objective[0]
        );
    }
}
