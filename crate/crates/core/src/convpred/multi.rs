//! Multi-source WPE: one shared filter or one filter per source.

use serde::{Deserialize, Serialize};

use super::wpe::wpe_supplied;
use super::{PredictionOutput, WeightMap};
use crate::error::{Error, Result};
use crate::stft::ComplexSpectrogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WpeVariant {
    /// Summed source powers, one filter, one output.
    SingleFilter,
    /// Per-source powers and filters, one output per source.
    MultiFilter,
}

/// DNN-WPE over several source estimates.
///
/// Every filter is fitted and applied on the mixture stack; only the weights
/// differ between sources. The single-filter variant returns one output, the
/// multi-filter variant one per estimate.
pub fn wpe_multi(
    y: &ComplexSpectrogram,
    ests: &[ComplexSpectrogram],
    taps: usize,
    delay: usize,
    floor: f64,
    variant: WpeVariant,
    diag_load: f64,
) -> Result<Vec<PredictionOutput>> {
    if ests.is_empty() {
        return Err(Error::config("at least one source estimate is required"));
    }
    for est in ests {
        y.ensure_same_shape(est, "mixture vs estimate")?;
    }
    let (frames, bins) = (y.frames(), y.bins());
    match variant {
        WpeVariant::SingleFilter => {
            let mut power = vec![0.0; frames * bins];
            for est in ests {
                for (p, c) in power.iter_mut().zip(est.data()) {
                    *p += c.norm_sqr();
                }
            }
            let lambda = WeightMap::floored(frames, bins, &power, floor)?;
            Ok(vec![wpe_supplied(y, &lambda, taps, delay, diag_load)?])
        }
        WpeVariant::MultiFilter => ests
            .iter()
            .map(|est| {
                let lambda = WeightMap::floored(frames, bins, &est.power(), floor)?;
                wpe_supplied(y, &lambda, taps, delay, diag_load)
            })
            .collect(),
    }
}
