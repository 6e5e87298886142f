//! Shared fixtures for the benchmarks in `benches/`.

use convpred::scene::{make_estimate, simulate, EstimateMode, Scene, SceneConfig};
use convpred::{analyze, ComplexSpectrogram, StftConfig};

/// A reverberant single-speaker scene with its mixture and oracle estimate
/// already in the STFT domain.
pub struct Fixture {
    pub scene: Scene,
    pub stft: StftConfig,
    pub y: ComplexSpectrogram,
    pub est: ComplexSpectrogram,
}

pub fn fixture(sample_rate: u32, duration: f64) -> Fixture {
    let scene = simulate(&SceneConfig {
        sample_rate,
        duration,
        t60: 0.5,
        seed: 1,
        ..SceneConfig::default()
    })
    .expect("valid scene");
    let stft = StftConfig::for_rate(sample_rate).expect("supported rate");
    let y = analyze(&scene.y, &stft).expect("analysis");
    let est = make_estimate(&scene, 0, &EstimateMode::Oracle, &stft)
        .expect("estimate")
        .spec;
    Fixture {
        scene,
        stft,
        y,
        est,
    }
}
