use rayon::prelude::*;

use crate::config::HtmConfig;
use crate::device::{DevicePreset, MemoryCell};
use crate::error::{check_len, HtmError, Result};
use crate::rng::{Domain, RngStream};
use crate::sdr::Sdr;
use crate::synapse::Backend;

/// Where template accumulators live between updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemplateStorage {
    Ideal,
    /// One multilevel cell per pixel; every update is a recall, an add and
    /// a store.
    Cells {
        preset: DevicePreset,
        branches: usize,
    },
}

impl TemplateStorage {
    /// Exact storage for ideal or continuous backends, 4-branch cells with
    /// the preset's level count otherwise.
    pub fn for_backend(backend: &Backend) -> Self {
        match backend {
            Backend::Memristive(p) if p.level_count().is_some() => Self::Cells {
                preset: *p,
                branches: 4,
            },
            _ => Self::Ideal,
        }
    }
}

/// Accumulated class template and its binarization.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTemplate {
    pub class_id: usize,
    pub accumulator: Vec<f64>,
    pub bits: Sdr,
}

/// Builds a template from time-ordered training patterns: the accumulator
/// starts at the first pattern, then each pattern adds `permanence_inc` on
/// its 1-bits and subtracts `permanence_dec` on its 0-bits, clamped to
/// `[0, 1]`. A pixel is set iff its final value exceeds `template_threshold`.
pub fn train_template(
    class_id: usize,
    patterns: &[Sdr],
    config: &HtmConfig,
    storage: TemplateStorage,
    seed: u64,
) -> Result<ClassTemplate> {
    let first = patterns
        .first()
        .ok_or(HtmError::Empty("training patterns"))?;
    let n = first.len();
    for p in patterns {
        check_len("training pattern", n, p.len())?;
    }
    let step = |acc: f64, bit: bool| {
        let delta = if bit {
            config.permanence_inc
        } else {
            -config.permanence_dec
        };
        (acc + delta).clamp(0.0, 1.0)
    };
    let accumulator: Vec<f64> = match storage {
        TemplateStorage::Ideal => (0..n)
            .map(|j| {
                let init = if first.get(j) { 1.0 } else { 0.0 };
                patterns[1..]
                    .iter()
                    .fold(init, |acc, p| step(acc, p.get(j)))
            })
            .collect(),
        TemplateStorage::Cells { preset, branches } => {
            let levels = preset
                .level_count()
                .ok_or_else(|| HtmError::InvalidConfig {
                    key: "levels".into(),
                    reason: "template cells need a finite level count".into(),
                })?;
            (0..n)
                .into_par_iter()
                .map(|j| -> Result<f64> {
                    let mut rng =
                        RngStream::keyed(seed, Domain::Template, &[class_id as u64, j as u64]);
                    let mut cell = MemoryCell::new(preset, levels, branches)?;
                    cell.store(if first.get(j) { 1.0 } else { 0.0 }, &mut rng)?;
                    for p in &patterns[1..] {
                        let acc = cell.recall(&mut rng);
                        cell.store(step(acc, p.get(j)), &mut rng)?;
                    }
                    Ok(cell.recall(&mut rng))
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    let bits = Sdr::from_bits(
        accumulator
            .iter()
            .map(|&a| a > config.template_threshold)
            .collect(),
    );
    Ok(ClassTemplate {
        class_id,
        accumulator,
        bits,
    })
}

/// Hamming distance between a template and an encoded input.
pub fn match_score(template: &Sdr, x: &Sdr) -> Result<usize> {
    template.hamming(x)
}

/// Class of the closest template; ties go to the lowest class id.
pub fn classify(templates: &[ClassTemplate], x: &Sdr) -> Result<usize> {
    let mut best: Option<(usize, usize)> = None;
    for t in templates {
        let score = match_score(&t.bits, x)?;
        let better = match best {
            None => true,
            Some((s, id)) => score < s || (score == s && t.class_id < id),
        };
        if better {
            best = Some((score, t.class_id));
        }
    }
    best.map(|(_, id)| id).ok_or(HtmError::Empty("templates"))
}
