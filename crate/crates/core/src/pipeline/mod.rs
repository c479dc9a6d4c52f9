//! Image recognition flow: preprocessing, mean-inhibition encoding, class
//! templates, Hamming matching and the hardware cost model.

mod cost;
mod encoder;
mod preprocess;
mod template;

pub use cost::{estimate_cost, BlockCost, CostCounts, CostEstimate, CostTable};
pub use encoder::{encode_block_values, SpEncoder};
pub use preprocess::{preprocess, std_filter, GrayImage, RawImage};
pub use template::{classify, match_score, train_template, ClassTemplate, TemplateStorage};

use crate::error::{HtmError, Result};

/// Encoder geometry: `block_size x block_size` pixel blocks grouped into
/// `region_blocks x region_blocks` inhibition regions, with `iterations`
/// random weight draws per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub iterations: usize,
    pub block_size: usize,
    pub region_blocks: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            iterations: 4,
            block_size: 3,
            region_blocks: 2,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("iterations", self.iterations),
            ("block_size", self.block_size),
            ("region_blocks", self.region_blocks),
        ] {
            if v == 0 {
                return Err(HtmError::InvalidConfig {
                    key: key.into(),
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    /// Pixels along one side of an inhibition region.
    pub fn region_size(&self) -> usize {
        self.block_size * self.region_blocks
    }

    /// Checks that a `width x height` image tiles into whole regions.
    pub fn check_image(&self, width: usize, height: usize) -> Result<()> {
        let r = self.region_size();
        for (dimension, value) in [("width", width), ("height", height)] {
            if value == 0 || value % r != 0 {
                return Err(HtmError::GridNotDivisible {
                    dimension,
                    value,
                    divisor: r,
                });
            }
        }
        Ok(())
    }
}
