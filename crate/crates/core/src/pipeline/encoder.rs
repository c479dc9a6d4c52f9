use rayon::prelude::*;

use super::{GrayImage, PipelineConfig};
use crate::crossbar::{map_weights, AccessMode, CrossbarArray};
use crate::error::{check_len, Result};
use crate::rng::{Domain, RngStream};
use crate::sdr::Sdr;
use crate::synapse::Backend;

/// Slack on the region threshold so that equal block values, which may
/// differ in the last ulp after averaging, compare as ties.
const TIE_EPS: f64 = 1e-12;

/// Mean-inhibition spatial encoder for images.
///
/// Every block owns `iterations` binary weight masks drawn once from the
/// seed. A block's value is the mean over masks of `mean(W * block)`; a block
/// fires when its value exceeds the mean value of its inhibition region. The
/// block bit is copied to all of its pixels.
#[derive(Debug, Clone)]
pub struct SpEncoder {
    width: usize,
    height: usize,
    config: PipelineConfig,
    /// Per block: `block_size^2 x iterations`, row-major.
    masks: Vec<Vec<f64>>,
    crossbars: Option<Vec<CrossbarArray>>,
    seed: u64,
}

impl SpEncoder {
    pub fn new(
        width: usize,
        height: usize,
        config: PipelineConfig,
        connected_threshold: f64,
        backend: Backend,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        config.check_image(width, height)?;
        let b = config.block_size;
        let blocks = (width / b) * (height / b);
        let masks: Vec<Vec<f64>> = (0..blocks)
            .map(|k| {
                let mut m = vec![0.0; b * b * config.iterations];
                for t in 0..config.iterations {
                    let mut rng =
                        RngStream::keyed(seed, Domain::EncoderWeights, &[k as u64, t as u64]);
                    for p in 0..b * b {
                        if rng.uniform() >= connected_threshold {
                            m[p * config.iterations + t] = 1.0;
                        }
                    }
                }
                m
            })
            .collect();
        let crossbars = match backend {
            Backend::Ideal => None,
            Backend::Memristive(preset) => Some(
                masks
                    .par_iter()
                    .enumerate()
                    .map(|(k, m)| {
                        map_weights(
                            m,
                            b * b,
                            config.iterations,
                            preset,
                            AccessMode::SingleColumn,
                            seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(Self {
            width,
            height,
            config,
            masks,
            crossbars,
            seed,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn blocks_x(&self) -> usize {
        self.width / self.config.block_size
    }

    pub fn blocks_y(&self) -> usize {
        self.height / self.config.block_size
    }

    pub fn block_count(&self) -> usize {
        self.masks.len()
    }

    /// Binary mask of block `k`, `block_size^2 x iterations`.
    pub fn mask(&self, k: usize) -> &[f64] {
        &self.masks[k]
    }

    fn block_pixels(&self, img: &GrayImage, k: usize) -> Vec<f64> {
        let b = self.config.block_size;
        let (bx, by) = (k % self.blocks_x(), k / self.blocks_x());
        let mut out = Vec::with_capacity(b * b);
        for y in 0..b {
            for x in 0..b {
                out.push(img.at(bx * b + x, by * b + y));
            }
        }
        out
    }

    /// Value of block `k`. `image_key` selects the read-noise stream on the
    /// memristive backend.
    pub fn block_value(&self, img: &GrayImage, k: usize, image_key: u64) -> Result<f64> {
        let pixels = self.block_pixels(img, k);
        let n = pixels.len() as f64;
        let iters = self.config.iterations;
        let dots = match &self.crossbars {
            None => (0..iters)
                .map(|t| {
                    pixels
                        .iter()
                        .enumerate()
                        .map(|(p, x)| x * self.masks[k][p * iters + t])
                        .sum()
                })
                .collect(),
            Some(xbars) => {
                let mut rng =
                    RngStream::keyed(self.seed, Domain::EncoderNoise, &[image_key, k as u64]);
                xbars[k].dot(&pixels, &mut rng)?
            }
        };
        Ok(dots.iter().map(|d| d / n).sum::<f64>() / iters as f64)
    }

    /// Values of every block, row-major over the block grid.
    pub fn block_values(&self, img: &GrayImage, image_key: u64) -> Result<Vec<f64>> {
        check_len("image width", self.width, img.width)?;
        check_len("image height", self.height, img.height)?;
        (0..self.block_count())
            .into_par_iter()
            .map(|k| self.block_value(img, k, image_key))
            .collect()
    }

    /// Block bits, row-major over the block grid.
    pub fn block_bits(&self, img: &GrayImage, image_key: u64) -> Result<Vec<bool>> {
        let values = self.block_values(img, image_key)?;
        Ok(encode_block_values(
            &values,
            self.blocks_x(),
            self.blocks_y(),
            self.config.region_blocks,
        ))
    }

    /// Per-pixel binary image.
    pub fn encode(&self, img: &GrayImage, image_key: u64) -> Result<Sdr> {
        let bits = self.block_bits(img, image_key)?;
        let b = self.config.block_size;
        let bx = self.blocks_x();
        Ok(Sdr::from_bits(
            (0..self.width * self.height)
                .map(|p| bits[(p / self.width / b) * bx + (p % self.width) / b])
                .collect(),
        ))
    }
}

/// Thresholds a grid of block values region by region: a block fires iff
/// its value is strictly above its region's mean.
pub fn encode_block_values(
    values: &[f64],
    blocks_x: usize,
    blocks_y: usize,
    region_blocks: usize,
) -> Vec<bool> {
    let r = region_blocks;
    let mut out = vec![false; values.len()];
    for ry in 0..blocks_y / r {
        for rx in 0..blocks_x / r {
            let members: Vec<usize> = (0..r * r)
                .map(|m| (ry * r + m / r) * blocks_x + rx * r + m % r)
                .collect();
            let threshold = members.iter().map(|&k| values[k]).sum::<f64>() / members.len() as f64;
            for k in members {
                out[k] = values[k] > threshold + TIE_EPS;
            }
        }
    }
    out
}
