//! Convolutive prediction: the per-frequency weighted least-squares kernel and
//! the WPE, DNN-WPE, ICP and FCP algorithms built on it.

mod config;
mod iterate;
mod linalg;
mod multi;
mod predict;
mod solver;
mod weights;
mod wpe;

pub use config::{LambdaMode, PredConfig};
pub use iterate::{iterate, iterate_single, Algorithm};
pub use multi::{wpe_multi, WpeVariant};
pub use predict::{
    degenerate_bins, fcp, fcp_per_source, fcp_weighted, icp, icp_weighted, FcpOutput,
    DEGENERATE_BIN_RATIO,
};
pub use solver::{solve_wls, weighted_objective, FilterBank, StackSource};
pub use weights::{lambda_weights, WeightMap};
pub use wpe::{subtract_prediction, wpe_supplied, wpe_vanilla, WpeOutput};

pub(crate) use linalg::RealCholesky;

use crate::stft::ComplexSpectrogram;

/// A dereverberated spectrogram with the filters that produced it.
#[derive(Debug, Clone)]
pub struct PredictionOutput {
    pub estimate: ComplexSpectrogram,
    pub filters: FilterBank,
}
