//! Parameter sweeps over simulated scenes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convpred::{iterate, Algorithm, LambdaMode, PredConfig};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport};
use crate::scene::{make_estimate, simulate, EstimateMode, Scene, SceneConfig};
use crate::stft::{analyze, synthesize, ComplexSpectrogram, StftConfig};

/// Bumped whenever the layout of [`ExperimentResult`] changes.
pub const SCHEMA_VERSION: u32 = 1;

/// One algorithm entry of a sweep; unset fields take the algorithm defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_mode: Option<LambdaMode>,
}

impl AlgorithmSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        AlgorithmSpec {
            algorithm,
            label: None,
            taps: None,
            delay: None,
            floor: None,
            lambda_mode: None,
        }
    }

    pub fn with_taps_delay(mut self, taps: usize, delay: usize) -> Self {
        self.taps = Some(taps);
        self.delay = Some(delay);
        self
    }

    pub fn config(&self) -> PredConfig {
        let mut cfg = self.algorithm.default_config();
        if let Some(k) = self.taps {
            cfg.taps = k;
        }
        if let Some(d) = self.delay {
            cfg.delay = d;
        }
        if let Some(e) = self.floor {
            cfg.floor = e;
        }
        if let Some(m) = self.lambda_mode {
            cfg.lambda_mode = m;
        }
        cfg
    }

    /// Row label, e.g. `fcp_k40_d0`.
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            let cfg = self.config();
            format!("{}_k{}_d{}", self.algorithm.name(), cfg.taps, cfg.delay)
        })
    }
}

/// Which acoustic condition the scenes model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Full RIR and optional noise.
    #[default]
    Reverberant,
    /// Late tail and noise removed; only direct path and early reflections.
    EarlyReflectionsOnly,
}

/// A sweep over seeds, T60s, SNRs, algorithms, floors and estimate quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub sample_rate: u32,
    /// Scene length in seconds.
    pub duration: f64,
    pub seeds: Vec<u64>,
    pub t60s: Vec<f64>,
    /// `null` means no noise.
    pub snrs_db: Vec<Option<f64>>,
    pub interferers: usize,
    pub sir_db: f64,
    pub scenario: Scenario,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Weight floors to sweep; empty keeps each algorithm's own floor.
    pub floors: Vec<f64>,
    /// Estimate error SNRs; `null` is the oracle estimate.
    pub estimate_error_snrs_db: Vec<Option<f64>>,
    pub passes: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sample_rate: 16_000,
            duration: 4.0,
            seeds: Vec::new(),
            t60s: vec![0.4],
            snrs_db: vec![None],
            interferers: 0,
            sir_db: 0.0,
            scenario: Scenario::Reverberant,
            algorithms: vec![AlgorithmSpec::new(Algorithm::Fcp)],
            floors: Vec::new(),
            estimate_error_snrs_db: vec![None],
            passes: 1,
        }
    }
}

impl SweepConfig {
    /// Early reflections only: FCP without delay against estimate-weighted
    /// WPE at delays 1 to 4 with `K + Δ = 40`.
    pub fn early_reflections(seeds: Vec<u64>) -> Self {
        let mut algorithms = vec![AlgorithmSpec::new(Algorithm::Fcp).with_taps_delay(40, 0)];
        for d in 1..=4 {
            algorithms.push(AlgorithmSpec::new(Algorithm::WpeSupplied).with_taps_delay(40 - d, d));
        }
        SweepConfig {
            seeds,
            scenario: Scenario::EarlyReflectionsOnly,
            algorithms,
            ..SweepConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        StftConfig::for_rate(self.sample_rate)?;
        if self.passes == 0 {
            return Err(Error::config("at least one pass is required"));
        }
        for (i, spec) in self.algorithms.iter().enumerate() {
            let mut cfg = spec.config();
            let floors = if self.floors.is_empty() {
                vec![cfg.floor]
            } else {
                self.floors.clone()
            };
            for f in floors {
                cfg.floor = f;
                spec.algorithm.validate(&cfg).map_err(|e| {
                    Error::config(format!("algorithm entry {i} ({}): {e}", spec.label()))
                })?;
            }
            if self.passes > 1 && !spec.algorithm.is_refinable() {
                return Err(Error::config(format!(
                    "algorithm entry {i} ({}) cannot run more than one pass",
                    spec.label()
                )));
            }
        }
        for &t in &self.t60s {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::config(format!("T60 must be non-negative, got {t}")));
            }
        }
        Ok(())
    }

    fn scene_configs(&self) -> Vec<SceneConfig> {
        let early = self.scenario == Scenario::EarlyReflectionsOnly;
        let snrs = if early {
            vec![None]
        } else {
            self.snrs_db.clone()
        };
        let mut out = Vec::new();
        for &seed in &self.seeds {
            for &t60 in &self.t60s {
                for &snr_db in &snrs {
                    out.push(SceneConfig {
                        sample_rate: self.sample_rate,
                        duration: self.duration,
                        t60,
                        interferers: self.interferers,
                        sir_db: self.sir_db,
                        snr_db,
                        early_only: early,
                        normalize: true,
                        seed,
                    });
                }
            }
        }
        out
    }
}

/// One evaluated output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scene: usize,
    pub seed: u64,
    pub t60: f64,
    pub snr_db: Option<f64>,
    pub estimate_error_snr_db: Option<f64>,
    /// `unprocessed` or the algorithm label.
    pub method: String,
    pub floor: Option<f64>,
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

/// Means over the successful rows of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub method: String,
    pub floor: Option<f64>,
    pub estimate_error_snr_db: Option<f64>,
    pub count: usize,
    pub failures: usize,
    pub mean_si_sdr: Option<f64>,
    pub mean_sdr_512: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub config: SweepConfig,
    pub scene_count: usize,
    pub rows: Vec<Row>,
    pub aggregates: Vec<Aggregate>,
}

impl ExperimentResult {
    /// Aggregate for `method` at the given estimate quality.
    pub fn aggregate(
        &self,
        method: &str,
        estimate_error_snr_db: Option<f64>,
    ) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.method == method && a.estimate_error_snr_db == estimate_error_snr_db)
    }
}

/// Run every scene of the sweep. Scene-level failures are recorded in the
/// affected rows and the sweep carries on.
pub fn run_sweep(cfg: &SweepConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let stft = StftConfig::for_rate(cfg.sample_rate)?;
    let scenes = cfg.scene_configs();
    let rows: Vec<Vec<Row>> = scenes
        .par_iter()
        .enumerate()
        .map(|(i, sc)| scene_rows(cfg, &stft, i, sc))
        .collect();
    let rows: Vec<Row> = rows.into_iter().flatten().collect();
    let aggregates = aggregate(&rows);
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        scene_count: scenes.len(),
        rows,
        aggregates,
    })
}

fn scene_rows(cfg: &SweepConfig, stft: &StftConfig, index: usize, sc: &SceneConfig) -> Vec<Row> {
    let row = |method: &str, floor, err_snr, res: Result<MetricsReport>| {
        let (metrics, error) = match res {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Row {
            scene: index,
            seed: sc.seed,
            t60: sc.t60,
            snr_db: sc.snr_db,
            estimate_error_snr_db: err_snr,
            method: method.to_string(),
            floor,
            metrics,
            error,
        }
    };

    let scene = match simulate(sc) {
        Ok(s) => s,
        Err(e) => return vec![row("unprocessed", None, None, Err(e))],
    };
    let mut rows = vec![row("unprocessed", None, None, evaluate(&scene.y, &scene.s))];
    let y = match analyze(&scene.y, stft) {
        Ok(y) => y,
        Err(e) => return vec![row("unprocessed", None, None, Err(e))],
    };

    for &err_snr in &cfg.estimate_error_snrs_db {
        let ests = estimates(&scene, stft, err_snr, sc.seed);
        for spec in &cfg.algorithms {
            let base = spec.config();
            let floors = if cfg.floors.is_empty() {
                vec![None]
            } else {
                cfg.floors.iter().map(|&f| Some(f)).collect()
            };
            for floor in floors {
                let mut pc = base;
                if let Some(f) = floor {
                    pc.floor = f;
                }
                let res = ests
                    .as_ref()
                    .map_err(|e| Error::config(e.to_string()))
                    .and_then(|ests| run_one(&scene, &y, ests, spec.algorithm, &pc, cfg.passes));
                rows.push(row(&spec.label(), Some(pc.floor), err_snr, res));
            }
        }
    }
    rows
}

fn estimates(
    scene: &Scene,
    stft: &StftConfig,
    err_snr: Option<f64>,
    seed: u64,
) -> Result<Vec<ComplexSpectrogram>> {
    (0..scene.num_sources())
        .map(|c| {
            let mode = match err_snr {
                None => EstimateMode::Oracle,
                Some(snr) => EstimateMode::Degraded {
                    error_snr_db: snr,
                    seed: crate::scene::mix_seed(seed, 500 + c as u64),
                },
            };
            make_estimate(scene, c, &mode, stft).map(|e| e.spec)
        })
        .collect()
}

/// Run one algorithm and score its outputs against the direct-path images.
pub fn run_one(
    scene: &Scene,
    y: &ComplexSpectrogram,
    ests: &[ComplexSpectrogram],
    algorithm: Algorithm,
    cfg: &PredConfig,
    passes: usize,
) -> Result<MetricsReport> {
    let history = iterate(y, ests, algorithm, cfg, passes)?;
    let outputs = history.last().expect("at least one pass");
    let mut reports = Vec::with_capacity(outputs.len());
    for (c, out) in outputs.iter().enumerate() {
        let x = synthesize(out, scene.len())?;
        reports.push(evaluate(&x, &scene.sources[c].s)?);
    }
    let mut first = reports[0].clone();
    if reports.len() > 1 {
        first.per_source = reports;
    }
    Ok(first)
}

fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut out: Vec<Aggregate> = Vec::new();
    let mut sums: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        let i = match out.iter().position(|a| {
            a.method == r.method
                && a.floor == r.floor
                && a.estimate_error_snr_db == r.estimate_error_snr_db
        }) {
            Some(i) => i,
            None => {
                out.push(Aggregate {
                    method: r.method.clone(),
                    floor: r.floor,
                    estimate_error_snr_db: r.estimate_error_snr_db,
                    count: 0,
                    failures: 0,
                    mean_si_sdr: None,
                    mean_sdr_512: None,
                });
                sums.push((0.0, 0.0));
                out.len() - 1
            }
        };
        match &r.metrics {
            Some(m) => {
                out[i].count += 1;
                sums[i].0 += m.si_sdr;
                sums[i].1 += m.sdr_512;
            }
            None => out[i].failures += 1,
        }
    }
    for (a, (si, sdr)) in out.iter_mut().zip(sums) {
        if a.count > 0 {
            a.mean_si_sdr = Some(si / a.count as f64);
            a.mean_sdr_512 = Some(sdr / a.count as f64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seeds: Vec<u64>) -> SweepConfig {
        SweepConfig {
            sample_rate: 8_000,
            duration: 1.0,
            seeds,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn empty_sweep() {
        let r = run_sweep(&small(vec![])).unwrap();
        assert_eq!(r.schema_version, SCHEMA_VERSION);
        assert!(r.rows.is_empty() && r.aggregates.is_empty());
        let json = serde_json::to_string(&r).unwrap();
        let back: ExperimentResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn identical_seeds_identical_rows() {
        let r = run_sweep(&small(vec![4, 4])).unwrap();
        let a: Vec<_> = r.rows.iter().filter(|x| x.scene == 0).collect();
        let b: Vec<_> = r.rows.iter().filter(|x| x.scene == 1).collect();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!((&x.method, &x.metrics), (&y.method, &y.metrics));
        }
        assert_eq!(r.aggregate("fcp_k40_d0", None).unwrap().count, 2);
    }

    #[test]
    fn failures_are_recorded() {
        // Invalid hyperparameters are rejected before any scene runs.
        let mut cfg = small(vec![1]);
        cfg.floors = vec![0.0];
        assert!(run_sweep(&cfg).is_err());

        // Signals too short to score fail per row.
        let mut cfg = small(vec![1]);
        cfg.duration = 0.001;
        let r = run_sweep(&cfg).unwrap();
        assert!(r.rows.iter().any(|row| row.error.is_some()));
    }

    #[test]
    fn early_preset_labels() {
        let cfg = SweepConfig::early_reflections(vec![]);
        let labels: Vec<_> = cfg.algorithms.iter().map(AlgorithmSpec::label).collect();
        assert_eq!(
            labels,
            [
                "fcp_k40_d0",
                "wpe_supplied_k39_d1",
                "wpe_supplied_k38_d2",
                "wpe_supplied_k37_d3",
                "wpe_supplied_k36_d4"
            ]
        );
        cfg.validate().unwrap();
    }
}
