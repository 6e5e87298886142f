//! `convpred evaluate`: score estimate files against reference files.

use std::path::PathBuf;

use convpred::metrics::{gcc_phat_delay, sdr_512, si_sdr, DEFAULT_MAX_LAG};
use convpred::wav::read_wav;
use convpred::{Error, MetricsReport};

/// Pairs `estimates[i]` with `references[i]`. With several pairs the first
/// report carries all of them in `per_source`.
pub fn cmd_evaluate(
    estimates: &[PathBuf],
    references: &[PathBuf],
    max_lag: Option<usize>,
) -> anyhow::Result<MetricsReport> {
    if estimates.is_empty() || estimates.len() != references.len() {
        return Err(Error::Config(format!(
            "need matching estimate and reference lists, got {} and {}",
            estimates.len(),
            references.len()
        ))
        .into());
    }
    let mut reports = Vec::with_capacity(estimates.len());
    for (e, r) in estimates.iter().zip(references) {
        let (est, er) = read_wav(e)?;
        let (reference, rr) = read_wav(r)?;
        if er != rr {
            return Err(Error::Config(format!(
                "{} is at {er} Hz but {} at {rr} Hz",
                e.display(),
                r.display()
            ))
            .into());
        }
        let lag = max_lag.unwrap_or(DEFAULT_MAX_LAG).min(est.len() / 2);
        reports.push(MetricsReport {
            si_sdr: si_sdr(&est, &reference)?,
            sdr_512: sdr_512(&est, &reference)?,
            gcc_phat_delay: if est.iter().all(|&v| v == 0.0) {
                0
            } else {
                gcc_phat_delay(&est, &reference, lag)?
            },
            per_source: Vec::new(),
        });
    }
    let mut first = reports[0].clone();
    if reports.len() > 1 {
        first.per_source = reports;
    }
    Ok(first)
}
