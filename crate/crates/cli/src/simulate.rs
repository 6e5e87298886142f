//! `convpred simulate`: render a scene and write every component to disk.

use std::path::{Path, PathBuf};

use anyhow::Context;
use convpred::dsp::energy;
use convpred::scene::{simulate, SceneConfig};
use convpred::wav::{read_wav, write_wav, WavFormat};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    #[serde(flatten)]
    pub scene: SceneConfig,
    pub format: WavFormat,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFiles {
    pub dry: PathBuf,
    pub rir: PathBuf,
    pub s: PathBuf,
    pub early: PathBuf,
    pub late: PathBuf,
    pub h: PathBuf,
}

/// File names are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFiles {
    pub y: PathBuf,
    pub s: PathBuf,
    pub h: PathBuf,
    pub v: PathBuf,
    pub noise: PathBuf,
    pub sources: Vec<SourceFiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: SceneConfig,
    pub sample_rate: u32,
    pub samples: usize,
    pub format: WavFormat,
    /// Gain applied to every file on top of the scene's own normalization,
    /// so that 16-bit files do not clip. Always 1 for float files.
    pub file_gain: f64,
    /// Requested target-over-noise SNR.
    pub snr_db: Option<f64>,
    /// The same SNR measured on the written `s` and `noise` files.
    pub measured_snr_db: Option<f64>,
    pub files: SceneFiles,
}

impl Manifest {
    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| convpred::Error::Config(format!("{}: {e}", path.display())).into())
    }
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> anyhow::Result<Manifest> {
    let scene = simulate(&cfg.scene)?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut signals: Vec<&[f64]> = vec![&scene.y, &scene.s, &scene.h, &scene.v, &scene.noise];
    for src in &scene.sources {
        signals.extend([
            &src.s[..],
            &src.early[..],
            &src.late[..],
            &src.h[..],
            &src.dry[..],
            &src.rir.taps[..],
        ]);
    }
    let file_gain = match cfg.format {
        WavFormat::Float32 => 1.0,
        WavFormat::Pcm16 => {
            let p = signals.iter().map(|x| peak(x)).fold(0.0, f64::max);
            if p > 0.99 {
                0.99 / p
            } else {
                1.0
            }
        }
    };

    let write = |name: String, x: &[f64]| -> anyhow::Result<PathBuf> {
        let scaled: Vec<f64> = x.iter().map(|v| v * file_gain).collect();
        write_wav(dir.join(&name), &scaled, scene.sample_rate, cfg.format)?;
        Ok(PathBuf::from(name))
    };

    let mut sources = Vec::with_capacity(scene.num_sources());
    for (c, src) in scene.sources.iter().enumerate() {
        sources.push(SourceFiles {
            dry: write(format!("source{c}_dry.wav"), &src.dry)?,
            rir: write(format!("source{c}_rir.wav"), &src.rir.taps)?,
            s: write(format!("source{c}_s.wav"), &src.s)?,
            early: write(format!("source{c}_early.wav"), &src.early)?,
            late: write(format!("source{c}_late.wav"), &src.late)?,
            h: write(format!("source{c}_h.wav"), &src.h)?,
        });
    }
    let files = SceneFiles {
        y: write("y.wav".into(), &scene.y)?,
        s: write("s.wav".into(), &scene.s)?,
        h: write("h.wav".into(), &scene.h)?,
        v: write("v.wav".into(), &scene.v)?,
        noise: write("noise.wav".into(), &scene.noise)?,
        sources,
    };

    let measured_snr_db = match scene.snr_db {
        Some(_) => {
            let (s, _) = read_wav(dir.join(&files.s))?;
            let (n, _) = read_wav(dir.join(&files.noise))?;
            let en = energy(&n);
            (en > 0.0).then(|| 10.0 * (energy(&s) / en).log10())
        }
        None => None,
    };

    let manifest = Manifest {
        schema_version: MANIFEST_VERSION,
        config: cfg.scene.clone(),
        sample_rate: scene.sample_rate,
        samples: scene.len(),
        format: cfg.format,
        file_gain,
        snr_db: scene.snr_db,
        measured_snr_db,
        files,
    };
    let path = dir.join(MANIFEST);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
