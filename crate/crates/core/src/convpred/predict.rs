//! Inverse and forward convolutive prediction driven by a target estimate.

use super::solver::{solve_wls_masked, FilterBank, StackSource};
use super::{PredConfig, PredictionOutput, WeightMap};
use crate::error::{Error, Result};
use crate::stft::ComplexSpectrogram;

/// Bins whose estimate energy is below this fraction of the strongest bin
/// carry no usable information and are passed through unchanged.
pub const DEGENERATE_BIN_RATIO: f64 = 1e-12;

/// Relative tolerance for the agreement of the two FCP output forms.
const FORM_AGREEMENT: f64 = 1e-12;

/// Output of forward convolutive prediction.
#[derive(Debug, Clone)]
pub struct FcpOutput {
    /// `Y - (X̂ - Ŝ)`.
    pub estimate: ComplexSpectrogram,
    /// `Ŝ + (Y - X̂)`; equal to `estimate` up to round-off.
    pub residual_form: ComplexSpectrogram,
    /// Forward-filtered estimate `X̂ = g^H S~`, the reverberant-target estimate.
    pub reverberant: ComplexSpectrogram,
    pub filters: FilterBank,
}

/// Per-bin flags for estimates too weak to fit against.
pub fn degenerate_bins(est: &ComplexSpectrogram) -> Vec<bool> {
    let energy: Vec<f64> = (0..est.bins())
        .map(|f| (0..est.frames()).map(|t| est.get(t, f).norm_sqr()).sum())
        .collect();
    let peak = energy.iter().copied().fold(0.0, f64::max);
    energy
        .iter()
        .map(|&e| e <= DEGENERATE_BIN_RATIO * peak)
        .collect()
}

fn check_cp_config(cfg: &PredConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.delay != 0 {
        return Err(Error::config(format!(
            "convolutive prediction uses no prediction delay (got {})",
            cfg.delay
        )));
    }
    Ok(())
}

fn check_inputs(y: &ComplexSpectrogram, est: &ComplexSpectrogram) -> Result<()> {
    y.ensure_same_shape(est, "mixture vs estimate")?;
    y.ensure_finite("mixture")?;
    est.ensure_finite("estimate")
}

/// ICP with weights chosen by `cfg.lambda_mode` and `cfg.floor`.
pub fn icp(
    y: &ComplexSpectrogram,
    est: &ComplexSpectrogram,
    cfg: &PredConfig,
) -> Result<PredictionOutput> {
    check_cp_config(cfg)?;
    check_inputs(y, est)?;
    let weights = cfg.lambda_mode.weights_for(y, est, cfg.floor)?;
    icp_weighted(y, est, cfg.taps, &weights, cfg.diag_load)
}

/// Inverse-filter the mixture towards the estimate: `Ŝ = g^H Y~(t)` with
/// `g` fitted so that `g^H Y~(t) ≈ Ŝ_est(t)`.
pub fn icp_weighted(
    y: &ComplexSpectrogram,
    est: &ComplexSpectrogram,
    taps: usize,
    weights: &WeightMap,
    diag_load: f64,
) -> Result<PredictionOutput> {
    check_inputs(y, est)?;
    let mask = degenerate_bins(est);
    let filters = solve_wls_masked(y, est, taps, 0, weights, diag_load, Some(&mask))?;
    let estimate = filters.apply(y)?;
    Ok(PredictionOutput { estimate, filters })
}

/// FCP with weights chosen by `cfg.lambda_mode` and `cfg.floor`.
pub fn fcp(
    y: &ComplexSpectrogram,
    est: &ComplexSpectrogram,
    cfg: &PredConfig,
) -> Result<FcpOutput> {
    check_cp_config(cfg)?;
    check_inputs(y, est)?;
    let weights = cfg.lambda_mode.weights_for(y, est, cfg.floor)?;
    fcp_weighted(y, est, cfg.taps, &weights, cfg.diag_load)
}

/// Forward-filter the estimate towards the mixture and keep what the filter
/// cannot explain: `Ŝ = Y - (g^H S~ - S)`.
///
/// Bins flagged by [`degenerate_bins`] get the identity filter, which makes
/// the output equal to the mixture there.
pub fn fcp_weighted(
    y: &ComplexSpectrogram,
    est: &ComplexSpectrogram,
    taps: usize,
    weights: &WeightMap,
    diag_load: f64,
) -> Result<FcpOutput> {
    check_inputs(y, est)?;
    let mask = degenerate_bins(est);
    let filters = solve_wls_masked(est, y, taps, 0, weights, diag_load, Some(&mask))?
        .with_source(StackSource::Estimate);
    let reverberant = filters.apply(est)?;

    let reverb_only = reverberant.sub(est)?;
    let estimate = y.sub(&reverb_only)?;
    let residual_form = est.add(&y.sub(&reverberant)?)?;

    let scale = y
        .max_power()
        .max(est.max_power())
        .max(reverberant.max_power())
        .sqrt();
    let worst = estimate
        .data()
        .iter()
        .zip(residual_form.data())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if worst > FORM_AGREEMENT * scale.max(f64::MIN_POSITIVE) * 8.0 {
        return Err(Error::numerical(format!(
            "FCP output forms disagree by {worst:e} (scale {scale:e})"
        )));
    }
    Ok(FcpOutput {
        estimate,
        residual_form,
        reverberant,
        filters,
    })
}

/// One FCP per source; every other source is treated as interference.
pub fn fcp_per_source(
    y: &ComplexSpectrogram,
    ests: &[ComplexSpectrogram],
    cfg: &PredConfig,
) -> Result<Vec<FcpOutput>> {
    if ests.is_empty() {
        return Err(Error::config("at least one source estimate is required"));
    }
    ests.iter().map(|est| fcp(y, est, cfg)).collect()
}
