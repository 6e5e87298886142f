//! Monaural speech dereverberation by convolutive prediction.
//!
//! The crate provides an STFT front end, a weighted least-squares
//! prediction kernel with the WPE, ICP and FCP algorithms on top of it, a
//! synthetic reverberant-scene generator with ground truth, and evaluation
//! metrics.
//!
//! ```
//! use convpred::{analyze, fcp, synthesize, PredConfig, StftConfig};
//! use convpred::scene::{simulate, SceneConfig};
//!
//! let scene = simulate(&SceneConfig { duration: 0.5, ..SceneConfig::default() }).unwrap();
//! let cfg = StftConfig::wideband();
//! let y = analyze(&scene.y, &cfg).unwrap();
//! let est = analyze(&scene.s, &cfg).unwrap();
//! let out = fcp(&y, &est, &PredConfig::fcp()).unwrap();
//! let enhanced = synthesize(&out.estimate, scene.len()).unwrap();
//! assert_eq!(enhanced.len(), scene.len());
//! ```

mod convpred;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod scene;
pub mod stft;
pub mod wav;

pub use crate::convpred::*;
pub use error::{Error, Result};
pub use metrics::{evaluate, gcc_phat_delay, sdr_512, si_sdr, MetricsReport};
pub use stft::{analyze, synthesize, ComplexSpectrogram, Stft, StftConfig};
