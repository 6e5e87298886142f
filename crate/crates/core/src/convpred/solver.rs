//! Per-frequency weighted complex least squares over delayed frame stacks.
//!
//! For every bin `f` the solver minimises
//!
//! ```text
//! sum_t |d(t) - g^H z~(t - Δ)|^2 / λ̂(t)
//! z~(t) = [z(t), z(t-1), ..., z(t-K+1)]^T
//! ```
//!
//! with `z(t) = 0` for `t < 0`. The minimiser solves `R g = p` where
//! `R = sum_t w(t) z~ z~^H` and `p = sum_t w(t) z~ d^*`, `w = 1 / λ̂`.
//! `R` is loaded with `δ · trace(R) / K` on its diagonal before the
//! Cholesky solve. Bins are independent and solved in parallel.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::cholesky_solve;
use super::WeightMap;
use crate::error::{Error, Result};
use crate::stft::ComplexSpectrogram;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The signal a filter bank's stacks are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackSource {
    Mixture,
    Estimate,
}

/// One `K`-tap complex filter per frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    taps: usize,
    delay: usize,
    source: StackSource,
    filters: Vec<Vec<Complex64>>,
}

impl FilterBank {
    pub fn new(delay: usize, source: StackSource, filters: Vec<Vec<Complex64>>) -> Result<Self> {
        let taps = filters.first().map_or(0, Vec::len);
        if taps == 0 || filters.iter().any(|g| g.len() != taps) {
            return Err(Error::shape(
                "filters must be non-empty and of equal length",
            ));
        }
        if filters
            .iter()
            .flatten()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::numerical("filter bank contains non-finite taps"));
        }
        Ok(FilterBank {
            taps,
            delay,
            source,
            filters,
        })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn source(&self) -> StackSource {
        self.source
    }

    pub fn bins(&self) -> usize {
        self.filters.len()
    }

    pub fn filter(&self, f: usize) -> &[Complex64] {
        &self.filters[f]
    }

    pub fn filters(&self) -> &[Vec<Complex64>] {
        &self.filters
    }

    pub fn with_source(mut self, source: StackSource) -> Self {
        self.source = source;
        self
    }

    /// `g(f)^H z~(t - Δ, f)` for every unit.
    pub fn apply(&self, stack_src: &ComplexSpectrogram) -> Result<ComplexSpectrogram> {
        if stack_src.bins() != self.bins() {
            return Err(Error::shape(format!(
                "filter bank has {} bins, spectrogram {}",
                self.bins(),
                stack_src.bins()
            )));
        }
        let columns: Vec<Vec<Complex64>> = (0..self.bins())
            .into_par_iter()
            .map(|f| predict_bin(&stack_src.bin(f), &self.filters[f], self.delay))
            .collect();
        ComplexSpectrogram::from_bins(*stack_src.config(), &columns)
    }

    /// `||self - other||_F / ||other||_F` over all taps of all bins.
    pub fn relative_distance(&self, other: &FilterBank) -> Result<f64> {
        if self.bins() != other.bins() || self.taps != other.taps {
            return Err(Error::shape("filter banks differ in shape"));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.filters.iter().zip(&other.filters) {
            for (x, y) in a.iter().zip(b) {
                num += (x - y).norm_sqr();
                den += y.norm_sqr();
            }
        }
        Ok(if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        })
    }
}

/// `sum_k conj(g_k) z(t - Δ - k)` for one bin.
pub(crate) fn predict_bin(z: &[Complex64], g: &[Complex64], delay: usize) -> Vec<Complex64> {
    (0..z.len())
        .map(|t| {
            let mut acc = ZERO;
            for (k, gk) in g.iter().enumerate() {
                let lag = delay + k;
                if lag > t {
                    break;
                }
                acc += gk.conj() * z[t - lag];
            }
            acc
        })
        .collect()
}

/// Minimiser of the weighted objective for one bin.
///
/// Returns the zero filter when the stack carries no energy at all.
pub(crate) fn solve_bin(
    z: &[Complex64],
    d: &[Complex64],
    w: &[f64],
    taps: usize,
    delay: usize,
    diag_load: f64,
) -> Result<Vec<Complex64>> {
    let k = taps;
    let mut r = vec![ZERO; k * k];
    let mut p = vec![ZERO; k];
    let mut stack = vec![ZERO; k];
    for t in 0..z.len() {
        let wt = w[t];
        let mut nonzero = false;
        for (j, s) in stack.iter_mut().enumerate() {
            let lag = delay + j;
            *s = if lag <= t { z[t - lag] } else { ZERO };
            nonzero |= *s != ZERO;
        }
        if !nonzero {
            continue;
        }
        let dc = d[t].conj() * wt;
        for i in 0..k {
            let si = stack[i];
            if si == ZERO {
                continue;
            }
            let wsi = si * wt;
            p[i] += si * dc;
            let row = &mut r[i * k..i * k + i + 1];
            for (j, rij) in row.iter_mut().enumerate() {
                *rij += wsi * stack[j].conj();
            }
        }
    }
    let trace: f64 = (0..k).map(|i| r[i * k + i].re).sum();
    if trace <= 0.0 {
        return Ok(vec![ZERO; k]);
    }
    let load = diag_load * trace / k as f64;
    for i in 0..k {
        r[i * k + i] += load;
    }
    cholesky_solve(&r, &p, k)
}

/// Weighted least-squares filter of `target` on delayed stacks of `stack_src`.
///
/// The returned bank is tagged [`StackSource::Mixture`]; callers building
/// stacks from an estimate retag it with [`FilterBank::with_source`].
pub fn solve_wls(
    stack_src: &ComplexSpectrogram,
    target: &ComplexSpectrogram,
    taps: usize,
    delay: usize,
    weights: &WeightMap,
    diag_load: f64,
) -> Result<FilterBank> {
    solve_wls_masked(stack_src, target, taps, delay, weights, diag_load, None)
}

/// [`solve_wls`] with an optional per-bin pass-through mask: masked bins
/// receive the identity filter `[1, 0, ..., 0]` instead of a fit.
pub(crate) fn solve_wls_masked(
    stack_src: &ComplexSpectrogram,
    target: &ComplexSpectrogram,
    taps: usize,
    delay: usize,
    weights: &WeightMap,
    diag_load: f64,
    pass_through: Option<&[bool]>,
) -> Result<FilterBank> {
    if taps == 0 {
        return Err(Error::config("filter taps must be at least 1"));
    }
    if !(diag_load >= 0.0 && diag_load.is_finite()) {
        return Err(Error::config(
            "diagonal loading must be finite and non-negative",
        ));
    }
    stack_src.ensure_same_shape(target, "stack source vs target")?;
    weights.ensure_matches(stack_src)?;
    if stack_src.frames() == 0 {
        return Err(Error::shape("spectrogram has no frames"));
    }
    stack_src.ensure_finite("stack source")?;
    target.ensure_finite("target")?;
    if weights
        .values()
        .iter()
        .any(|&l| !(l > 0.0 && l.is_finite()))
    {
        return Err(Error::numerical(
            "weights must be finite and strictly positive",
        ));
    }

    let filters = (0..stack_src.bins())
        .into_par_iter()
        .map(|f| {
            if pass_through.is_some_and(|m| m[f]) {
                let mut g = vec![ZERO; taps];
                g[0] = Complex64::new(1.0, 0.0);
                return Ok(g);
            }
            solve_bin(
                &stack_src.bin(f),
                &target.bin(f),
                &weights.bin_weights(f),
                taps,
                delay,
                diag_load,
            )
            .map_err(|e| Error::numerical(format!("bin {f}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    FilterBank::new(delay, StackSource::Mixture, filters)
}

/// `sum_{t,f} |target - g^H z~(t - Δ)|^2 / λ̂` for a given filter bank.
pub fn weighted_objective(
    stack_src: &ComplexSpectrogram,
    target: &ComplexSpectrogram,
    filters: &FilterBank,
    weights: &WeightMap,
) -> Result<f64> {
    stack_src.ensure_same_shape(target, "stack source vs target")?;
    weights.ensure_matches(stack_src)?;
    let per_bin: Vec<f64> = (0..stack_src.bins())
        .into_par_iter()
        .map(|f| {
            bin_objective(
                &stack_src.bin(f),
                &target.bin(f),
                filters.filter(f),
                filters.delay(),
                &weights.bin_weights(f),
            )
        })
        .collect();
    Ok(per_bin.iter().sum())
}

pub(crate) fn bin_objective(
    z: &[Complex64],
    d: &[Complex64],
    g: &[Complex64],
    delay: usize,
    w: &[f64],
) -> f64 {
    predict_bin(z, g, delay)
        .iter()
        .zip(d)
        .zip(w)
        .map(|((p, d), w)| (d - p).norm_sqr() * w)
        .sum()
}
