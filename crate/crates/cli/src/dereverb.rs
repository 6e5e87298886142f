//! `convpred dereverb`: run one algorithm on a mixture.

use std::path::{Path, PathBuf};

use convpred::scene::degrade;
use convpred::wav::{read_wav, write_wav};
use convpred::{
    analyze, evaluate, synthesize, Algorithm, Error, MetricsReport, PredConfig, StftConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{EstimateSpec, RunConfig};
use crate::simulate::Manifest;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DereverbReport {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub pred: PredConfig,
    pub stft: StftConfig,
    pub passes: usize,
    pub estimate_mode: EstimateSpec,
    pub outputs: Vec<PathBuf>,
    /// The mixture scored against the first reference.
    pub unprocessed: Option<MetricsReport>,
    /// Each output scored against its reference.
    pub metrics: Vec<MetricsReport>,
}

struct Inputs {
    y: Vec<f64>,
    rate: u32,
    references: Vec<Vec<f64>>,
}

fn read_matching(path: &Path, rate: u32, len: usize) -> anyhow::Result<Vec<f64>> {
    let (x, r) = read_wav(path)?;
    if r != rate {
        return Err(Error::Config(format!(
            "{} is at {r} Hz, the mixture at {rate} Hz",
            path.display()
        ))
        .into());
    }
    if x.len() != len {
        return Err(Error::Shape(format!(
            "{} has {} samples, the mixture {len}",
            path.display(),
            x.len()
        ))
        .into());
    }
    Ok(x)
}

fn load_inputs(cfg: &RunConfig) -> anyhow::Result<Inputs> {
    let (y_path, ref_paths) = match (&cfg.paths.scene, &cfg.paths.input) {
        (Some(dir), _) => {
            let m = Manifest::load(dir)?;
            let refs = if cfg.paths.references.is_empty() {
                m.files.sources.iter().map(|s| dir.join(&s.s)).collect()
            } else {
                cfg.paths.references.clone()
            };
            (dir.join(&m.files.y), refs)
        }
        (None, Some(input)) => (input.clone(), cfg.paths.references.clone()),
        (None, None) => unreachable!("validated"),
    };
    let (y, rate) = read_wav(&y_path)?;
    let references = ref_paths
        .iter()
        .map(|p| read_matching(p, rate, y.len()))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(Inputs {
        y,
        rate,
        references,
    })
}

fn estimates(cfg: &RunConfig, inputs: &Inputs, count: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    let from_refs = |what: &str| -> anyhow::Result<&[Vec<f64>]> {
        if inputs.references.len() < count {
            return Err(Error::Config(format!(
                "{what} estimates need {count} reference signal(s), found {}",
                inputs.references.len()
            ))
            .into());
        }
        Ok(&inputs.references[..count])
    };
    match &cfg.estimate_mode {
        EstimateSpec::Oracle => Ok(from_refs("oracle")?.to_vec()),
        EstimateSpec::Degraded { error_snr_db } => from_refs("degraded")?
            .iter()
            .enumerate()
            .map(|(c, r)| Ok(degrade(r, *error_snr_db, cfg.seed.wrapping_add(c as u64))?))
            .collect(),
        EstimateSpec::External { paths } => {
            if paths.len() < count {
                return Err(Error::Config(format!(
                    "{} needs {count} estimate file(s), got {}",
                    cfg.algorithm,
                    paths.len()
                ))
                .into());
            }
            paths[..count]
                .iter()
                .map(|p| read_matching(p, inputs.rate, inputs.y.len()))
                .collect()
        }
    }
}

/// Output paths: the configured one for a single output, `stem_c.ext` otherwise.
pub fn output_paths(base: &Path, count: usize) -> Vec<PathBuf> {
    if count == 1 {
        return vec![base.to_path_buf()];
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("wav");
    (0..count)
        .map(|c| base.with_file_name(format!("{stem}_{c}.{ext}")))
        .collect()
}

fn uses_all_sources(algorithm: Algorithm) -> bool {
    matches!(
        algorithm,
        Algorithm::FcpPerSource | Algorithm::WpeSf | Algorithm::WpeMf
    )
}

pub fn cmd_dereverb(cfg: &RunConfig) -> anyhow::Result<DereverbReport> {
    cfg.validate()?;
    let pred = cfg.pred_config();
    let inputs = load_inputs(cfg)?;
    let stft = match cfg.stft {
        Some(s) if s.sample_rate != inputs.rate => {
            return Err(Error::Config(format!(
                "STFT configured for {} Hz but the mixture is at {} Hz",
                s.sample_rate, inputs.rate
            ))
            .into())
        }
        Some(s) => s,
        None => StftConfig::for_rate(inputs.rate)?,
    };

    let count = if !cfg.algorithm.needs_estimate() {
        0
    } else if uses_all_sources(cfg.algorithm) {
        match &cfg.estimate_mode {
            EstimateSpec::External { paths } => paths.len(),
            _ => inputs.references.len(),
        }
        .max(1)
    } else {
        1
    };
    let mut ests = estimates(cfg, &inputs, count)?
        .iter()
        .map(|x| analyze(x, &stft))
        .collect::<convpred::Result<Vec<_>>>()?;

    // Passes are chained through the time domain, exactly as if the tool were
    // run again with the previous output as an external estimate.
    let y = analyze(&inputs.y, &stft)?;
    let mut signals = Vec::new();
    for pass in 0..cfg.passes {
        let outputs = cfg.algorithm.run(&y, &ests, &pred)?;
        signals = outputs
            .iter()
            .map(|o| synthesize(o, inputs.y.len()))
            .collect::<convpred::Result<Vec<_>>>()?;
        if pass + 1 < cfg.passes {
            ests = signals
                .iter()
                .map(|x| analyze(x, &stft))
                .collect::<convpred::Result<Vec<_>>>()?;
        }
    }

    let output = cfg.paths.output.as_deref().expect("validated");
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let paths = output_paths(output, signals.len());
    let mut metrics = Vec::new();
    for (c, (x, path)) in signals.iter().zip(&paths).enumerate() {
        write_wav(path, x, inputs.rate, cfg.format)?;
        if let Some(r) = inputs.references.get(c) {
            metrics.push(evaluate(x, r)?);
        }
    }
    let unprocessed = inputs
        .references
        .first()
        .map(|r| evaluate(&inputs.y, r))
        .transpose()?;

    Ok(DereverbReport {
        schema_version: REPORT_VERSION,
        algorithm: cfg.algorithm,
        pred,
        stft,
        passes: cfg.passes,
        estimate_mode: cfg.estimate_mode.clone(),
        outputs: paths,
        unprocessed,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_naming() {
        assert_eq!(
            output_paths(Path::new("a/out.wav"), 1),
            vec![PathBuf::from("a/out.wav")]
        );
        assert_eq!(
            output_paths(Path::new("a/out.wav"), 2),
            vec![PathBuf::from("a/out_0.wav"), PathBuf::from("a/out_1.wav")]
        );
    }
}
