//! Signal-level evaluation: SI-SDR, 512-tap SDR and GCC-PHAT delay.
//!
//! Ratios that would be infinite are reported as `±SENTINEL_DB`, so reports
//! always serialize to plain numbers.

use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::convpred::RealCholesky;
use crate::dsp::{energy, fft_convolve};
use crate::error::{Error, Result};

/// Value reported for a perfect (`+`) or hopeless (`-`) estimate.
pub const SENTINEL_DB: f64 = 300.0;

/// Ratios at or beyond this magnitude are reported as the sentinel. Anything
/// past it is rounding noise on an exact match.
pub const SENTINEL_THRESHOLD_DB: f64 = 200.0;

/// Number of reference shifts spanned by [`sdr_512`].
pub const SDR_TAPS: usize = 512;

/// Default search range for [`gcc_phat_delay`] in [`evaluate`].
pub const DEFAULT_MAX_LAG: usize = 256;

/// Metrics of one estimate against one reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub si_sdr: f64,
    pub sdr_512: f64,
    pub gcc_phat_delay: i64,
    /// One entry per source when the estimate covers several.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_source: Vec<MetricsReport>,
}

fn ratio_db(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        return if signal == 0.0 {
            -SENTINEL_DB
        } else {
            SENTINEL_DB
        };
    }
    if signal == 0.0 {
        return -SENTINEL_DB;
    }
    let db = 10.0 * (signal / noise).log10();
    if db >= SENTINEL_THRESHOLD_DB {
        SENTINEL_DB
    } else if db <= -SENTINEL_THRESHOLD_DB {
        -SENTINEL_DB
    } else {
        db
    }
}

fn check_pair(est: &[f64], reference: &[f64], min_len: usize) -> Result<()> {
    if est.len() != reference.len() {
        return Err(Error::shape(format!(
            "estimate has {} samples, reference {}",
            est.len(),
            reference.len()
        )));
    }
    if est.len() < min_len {
        return Err(Error::shape(format!(
            "need at least {min_len} samples, got {}",
            est.len()
        )));
    }
    if est.iter().chain(reference).any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite samples"));
    }
    if reference.iter().all(|&v| v == 0.0) {
        return Err(Error::config("reference is all zeros"));
    }
    Ok(())
}

/// Scale-invariant SDR in dB.
pub fn si_sdr(est: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(est, reference, 2)?;
    let alpha = dot(est, reference) / energy(reference);
    let (mut sig, mut err) = (0.0, 0.0);
    for (e, r) in est.iter().zip(reference) {
        let t = alpha * r;
        sig += t * t;
        err += (e - t) * (e - t);
    }
    Ok(ratio_db(sig, err))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `c[k] = sum_n x[n] r[n - k]` for `k < lags`.
fn xcorr(x: &[f64], r: &[f64], lags: usize) -> Vec<f64> {
    let n = x.len();
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    let z = fft_convolve(&rev, r, n);
    (0..lags)
        .map(|k| if k < n { z[n - 1 - k] } else { 0.0 })
        .collect()
}

/// SDR after least-squares projection of `est` onto the reference and its
/// first 511 delays (each delayed copy truncated to the signal length).
///
/// The Gram matrix of the delayed copies is the reference autocorrelation
/// minus end-of-signal corrections, built diagonal by diagonal. It is solved
/// with light diagonal loading and then refined against the unloaded
/// problem, so an estimate that lies in the span reaches the sentinel.
pub fn sdr_512(est: &[f64], reference: &[f64]) -> Result<f64> {
    check_pair(est, reference, SDR_TAPS)?;
    let n = est.len();
    let l = SDR_TAPS;
    let acf = xcorr(reference, reference, l);
    let mut gram = vec![0.0; l * l];
    for d in 0..l {
        let mut v = acf[d];
        for i in 0..l - d {
            if i > 0 {
                v -= reference[n - i] * reference[n - i - d];
            }
            gram[(i + d) * l + i] = v;
            gram[i * l + i + d] = v;
        }
    }
    let load = 1e-12 * acf[0];
    let mut loaded = gram.clone();
    for i in 0..l {
        loaded[i * l + i] += load;
    }
    let chol = RealCholesky::new(&loaded, l)?;
    let mut coef = vec![0.0; l];
    let mut residual = est.to_vec();
    for _ in 0..4 {
        let rhs = xcorr(&residual, reference, l);
        let step = chol.solve(&rhs);
        coef.iter_mut().zip(&step).for_each(|(c, s)| *c += s);
        let proj = fft_convolve(reference, &coef, n);
        residual = est.iter().zip(&proj).map(|(e, p)| e - p).collect();
    }
    let proj: Vec<f64> = est.iter().zip(&residual).map(|(e, r)| e - r).collect();
    Ok(ratio_db(energy(&proj), energy(&residual)))
}

/// Integer delay of `est` relative to `reference` by GCC-PHAT.
///
/// Positive when `est` lags `reference`. The cross-spectrum is whitened to
/// unit magnitude; bins below `1e-12` of the strongest bin are dropped.
/// Ties go to the smallest absolute lag.
pub fn gcc_phat_delay(est: &[f64], reference: &[f64], max_lag: usize) -> Result<i64> {
    check_pair(est, reference, (2 * max_lag).max(2))?;
    if est.iter().all(|&v| v == 0.0) {
        return Err(Error::config("estimate is all zeros"));
    }
    let nfft = (2 * est.len()).next_power_of_two();
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(nfft);
    let inv = planner.plan_fft_inverse(nfft);
    let spectrum = |x: &[f64]| {
        let mut buf = fwd.make_input_vec();
        buf[..x.len()].copy_from_slice(x);
        let mut out = fwd.make_output_vec();
        fwd.process(&mut buf, &mut out).expect("sized by planner");
        out
    };
    let a = spectrum(est);
    let b = spectrum(reference);
    let mut cross: Vec<_> = a.iter().zip(&b).map(|(x, y)| x * y.conj()).collect();
    let peak = cross.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut kept = 0;
    for c in cross.iter_mut() {
        let m = c.norm();
        if m < 1e-12 * peak || m == 0.0 {
            *c = 0.0.into();
        } else {
            *c /= m;
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::numerical("no usable frequency bins for GCC-PHAT"));
    }
    cross[0].im = 0.0;
    let last = cross.len() - 1;
    cross[last].im = 0.0;
    let mut corr = inv.make_output_vec();
    inv.process(&mut cross, &mut corr)
        .expect("sized by planner");

    let at = |lag: i64| {
        if lag >= 0 {
            corr[lag as usize]
        } else {
            corr[(nfft as i64 + lag) as usize]
        }
    };
    let mut best = (0i64, at(0));
    for k in 1..=max_lag as i64 {
        for lag in [k, -k] {
            let v = at(lag);
            if v > best.1 {
                best = (lag, v);
            }
        }
    }
    Ok(best.0)
}

/// All metrics for one estimate.
pub fn evaluate(est: &[f64], reference: &[f64]) -> Result<MetricsReport> {
    let max_lag = DEFAULT_MAX_LAG.min(est.len() / 2);
    Ok(MetricsReport {
        si_sdr: si_sdr(est, reference)?,
        sdr_512: sdr_512(est, reference)?,
        gcc_phat_delay: if est.iter().all(|&v| v == 0.0) {
            0
        } else {
            gcc_phat_delay(est, reference, max_lag)?
        },
        per_source: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::white_noise;

    #[test]
    fn sentinels() {
        let s = white_noise(1000, 1);
        let scaled: Vec<f64> = s.iter().map(|v| 2.5 * v).collect();
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        assert_eq!(si_sdr(&scaled, &s).unwrap(), SENTINEL_DB);
        assert_eq!(si_sdr(&neg, &s).unwrap(), SENTINEL_DB);
        assert_eq!(si_sdr(&vec![0.0; 1000], &s).unwrap(), -SENTINEL_DB);
        assert!(si_sdr(&s, &vec![0.0; 1000]).is_err());
        assert!(si_sdr(&s[..1], &s[..1]).is_err());
        assert!(si_sdr(&s, &s[..999]).is_err());
    }

    #[test]
    fn orthogonal_noise_gives_ten_db() {
        let s = white_noise(4096, 2);
        let mut n = white_noise(4096, 3);
        let k = dot(&n, &s) / energy(&s);
        n.iter_mut().zip(&s).for_each(|(a, b)| *a -= k * b);
        let g = (energy(&s) / (10.0 * energy(&n))).sqrt();
        let est: Vec<f64> = s.iter().zip(&n).map(|(a, b)| a + g * b).collect();
        assert!((si_sdr(&est, &s).unwrap() - 10.0).abs() < 1e-10);
    }

    #[test]
    fn sdr_in_span_and_orthogonal() {
        let r = white_noise(2048, 4);
        let fir = white_noise(SDR_TAPS, 5);
        let est = fft_convolve(&r, &fir, r.len());
        assert_eq!(sdr_512(&est, &r).unwrap(), SENTINEL_DB);
        assert_eq!(sdr_512(&vec![0.0; 2048], &r).unwrap(), -SENTINEL_DB);
        assert!(sdr_512(&r[..100], &r[..100]).is_err());
    }

    #[test]
    fn sdr_orthogonal_to_all_shifts() {
        // A reference living in the first half and an estimate in the second
        // half, past every shift of the reference.
        let mut r = white_noise(2048, 6);
        r[512..].iter_mut().for_each(|v| *v = 0.0);
        let mut est = vec![0.0; 2048];
        est[1100..].copy_from_slice(&white_noise(948, 7));
        assert_eq!(sdr_512(&est, &r).unwrap(), -SENTINEL_DB);
    }

    #[test]
    fn sdr_at_least_si_sdr() {
        let r = white_noise(1500, 8);
        let n = white_noise(1500, 9);
        let est: Vec<f64> = r.iter().zip(&n).map(|(a, b)| a + 0.7 * b).collect();
        assert!(sdr_512(&est, &r).unwrap() >= si_sdr(&est, &r).unwrap());
    }

    #[test]
    fn gcc_phat_shifts() {
        let r = white_noise(4000, 10);
        for shift in [-64i64, -7, 0, 7, 63] {
            let est: Vec<f64> = (0..r.len() as i64)
                .map(|n| {
                    let i = n - shift;
                    if (0..r.len() as i64).contains(&i) {
                        r[i as usize]
                    } else {
                        0.0
                    }
                })
                .collect();
            assert_eq!(gcc_phat_delay(&est, &r, 64).unwrap(), shift);
        }
        assert!(gcc_phat_delay(&vec![0.0; 4000], &r, 64).is_err());
        assert!(gcc_phat_delay(&r[..100], &r[..100], 64).is_err());
    }

    #[test]
    fn report_roundtrip() {
        let r = white_noise(1024, 11);
        let rep = evaluate(&r, &r).unwrap();
        assert_eq!(rep.si_sdr, SENTINEL_DB);
        assert_eq!(rep.gcc_phat_delay, 0);
        let json = serde_json::to_string(&rep).unwrap();
        assert_eq!(serde_json::from_str::<MetricsReport>(&json).unwrap(), rep);
    }
}
