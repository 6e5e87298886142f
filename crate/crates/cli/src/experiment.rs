//! `convpred experiment`: run a sweep and export it.

use std::path::Path;

use anyhow::Context;
use convpred::experiment::{run_sweep, ExperimentResult, SweepConfig};
use serde::Serialize;

#[derive(Serialize)]
struct CsvRow<'a> {
    scene: usize,
    seed: u64,
    t60: f64,
    snr_db: Option<f64>,
    estimate_error_snr_db: Option<f64>,
    method: &'a str,
    floor: Option<f64>,
    si_sdr: Option<f64>,
    sdr_512: Option<f64>,
    gcc_phat_delay: Option<i64>,
    error: Option<&'a str>,
}

pub fn cmd_experiment(cfg: &SweepConfig) -> anyhow::Result<ExperimentResult> {
    Ok(run_sweep(cfg)?)
}

/// One line per row; empty cells where a value is absent.
pub fn write_csv(result: &ExperimentResult, path: &Path) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in &result.rows {
        w.serialize(CsvRow {
            scene: r.scene,
            seed: r.seed,
            t60: r.t60,
            snr_db: r.snr_db,
            estimate_error_snr_db: r.estimate_error_snr_db,
            method: &r.method,
            floor: r.floor,
            si_sdr: r.metrics.as_ref().map(|m| m.si_sdr),
            sdr_512: r.metrics.as_ref().map(|m| m.sdr_512),
            gcc_phat_delay: r.metrics.as_ref().map(|m| m.gcc_phat_delay),
            error: r.error.as_deref(),
        })?;
    }
    if result.rows.is_empty() {
        w.write_record([
            "scene",
            "seed",
            "t60",
            "snr_db",
            "estimate_error_snr_db",
            "method",
            "floor",
            "si_sdr",
            "sdr_512",
            "gcc_phat_delay",
            "error",
        ])?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
