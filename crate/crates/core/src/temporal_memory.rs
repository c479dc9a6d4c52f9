//! Temporal memory: cells within columns, lateral dendrite segments,
//! prediction, bursting, reinforcement and long-term decay.
//!
//! Cell `k` of column `j` has flat index `j * cells_per_column + k`. Every
//! segment is one row of a shared [`SynapseStore`] whose columns are cells.

use rayon::prelude::*;

use crate::config::HtmConfig;
use crate::error::{check_index, check_len, HtmError, Result};
use crate::rng::{Domain, RngStream};
use crate::sdr::Sdr;
use crate::synapse::{Backend, SynapseStore};

/// Activation and prediction of every cell, current and previous step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmState {
    columns: usize,
    cells_per_column: usize,
    active: Vec<bool>,
    predictive: Vec<bool>,
    active_prev: Vec<bool>,
    predictive_prev: Vec<bool>,
}

impl TmState {
    pub fn new(columns: usize, cells_per_column: usize) -> Self {
        let n = columns * cells_per_column;
        Self {
            columns,
            cells_per_column,
            active: vec![false; n],
            predictive: vec![false; n],
            active_prev: vec![false; n],
            predictive_prev: vec![false; n],
        }
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn cells_per_column(&self) -> usize {
        self.cells_per_column
    }

    pub fn cell_count(&self) -> usize {
        self.active.len()
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn predictive(&self) -> &[bool] {
        &self.predictive
    }

    pub fn active_prev(&self) -> &[bool] {
        &self.active_prev
    }

    pub fn predictive_prev(&self) -> &[bool] {
        &self.predictive_prev
    }

    /// Columns holding at least one predictive cell.
    pub fn predicted_columns(&self) -> Sdr {
        columns_of(&self.predictive, self.cells_per_column)
    }

    pub fn active_columns(&self) -> Sdr {
        columns_of(&self.active, self.cells_per_column)
    }
}

fn columns_of(cells: &[bool], per: usize) -> Sdr {
    Sdr::from_bits(
        cells
            .chunks(per.max(1))
            .map(|c| c.iter().any(|&b| b))
            .collect(),
    )
}

/// Lateral segments of all cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSet {
    columns: usize,
    cells_per_column: usize,
    connected_threshold: f64,
    store: SynapseStore,
    owner: Vec<usize>,
    by_cell: Vec<Vec<usize>>,
}

impl SegmentSet {
    /// Builds segments from explicit `(owner cell, permanence row)` pairs.
    pub fn from_rows(
        columns: usize,
        cells_per_column: usize,
        connected_threshold: f64,
        backend: Backend,
        rows: &[(usize, Vec<f64>)],
        seed: u64,
    ) -> Result<Self> {
        let cells = columns * cells_per_column;
        let mut store = SynapseStore::new(rows.len(), cells, backend);
        let mut owner = Vec::with_capacity(rows.len());
        let mut by_cell = vec![Vec::new(); cells];
        for (s, (cell, row)) in rows.iter().enumerate() {
            check_index("segment owner", *cell, cells)?;
            check_len("segment row", cells, row.len())?;
            let mut rng = RngStream::keyed(seed, Domain::TmSegments, &[s as u64, 1]);
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    store.program(s, c, v, &mut rng)?;
                }
            }
            owner.push(*cell);
            by_cell[*cell].push(s);
        }
        Ok(Self {
            columns,
            cells_per_column,
            connected_threshold,
            store,
            owner,
            by_cell,
        })
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn cells_per_column(&self) -> usize {
        self.cells_per_column
    }

    pub fn cell_count(&self) -> usize {
        self.columns * self.cells_per_column
    }

    pub fn segment_count(&self) -> usize {
        self.owner.len()
    }

    pub fn connected_threshold(&self) -> f64 {
        self.connected_threshold
    }

    pub fn owner(&self, segment: usize) -> usize {
        self.owner[segment]
    }

    pub fn segments_of(&self, cell: usize) -> &[usize] {
        &self.by_cell[cell]
    }

    pub fn permanence(&self, segment: usize, cell: usize) -> f64 {
        self.store.get(segment, cell)
    }

    pub fn row(&self, segment: usize) -> Vec<f64> {
        self.store.row(segment)
    }

    pub fn pulses(&self) -> u64 {
        self.store.pulses()
    }

    /// Connected synapses of `segment` that land on active cells.
    pub fn overlap(&self, segment: usize, active: &[bool]) -> usize {
        active
            .iter()
            .enumerate()
            .filter(|&(c, &a)| a && self.store.get(segment, c) >= self.connected_threshold)
            .count()
    }

    fn is_segment_active(&self, segment: usize, active: &[bool], threshold: u32) -> bool {
        self.overlap(segment, active) > threshold as usize
    }

    /// Adds `delta_on` to positive synapses onto cells set in `pattern` and
    /// `delta_off` to the remaining positive synapses.
    fn shift(
        &mut self,
        segment: usize,
        pattern: &[bool],
        delta_on: f64,
        delta_off: f64,
        rng: &mut RngStream,
    ) {
        for (c, &on) in pattern.iter().enumerate() {
            if self.store.get(segment, c) > 0.0 {
                let delta = if on { delta_on } else { delta_off };
                if delta != 0.0 {
                    self.store.adjust(segment, c, delta, rng);
                }
            }
        }
    }
}

/// Segment layout for a fresh temporal memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentInit {
    pub cells_per_column: usize,
    pub segments_per_cell: usize,
    /// Fraction of all cells each segment samples as presynaptic targets.
    pub synapse_fraction: f64,
}

impl Default for SegmentInit {
    fn default() -> Self {
        Self {
            cells_per_column: 4,
            segments_per_cell: 1,
            synapse_fraction: 0.5,
        }
    }
}

impl SegmentInit {
    pub fn validate(&self) -> Result<()> {
        if self.cells_per_column == 0 {
            return Err(HtmError::InvalidConfig {
                key: "cells_per_column".into(),
                reason: "must be at least 1".into(),
            });
        }
        if !(self.synapse_fraction > 0.0 && self.synapse_fraction <= 1.0) {
            return Err(HtmError::InvalidConfig {
                key: "synapse_fraction".into(),
                reason: "must lie in (0, 1]".into(),
            });
        }
        Ok(())
    }
}

/// Random segments: each sampled target gets a `U(0,1)` permanence.
pub fn init_segments(
    columns: usize,
    init: SegmentInit,
    connected_threshold: f64,
    backend: Backend,
    seed: u64,
) -> Result<SegmentSet> {
    init.validate()?;
    let cells = columns * init.cells_per_column;
    let mut rows = Vec::with_capacity(cells * init.segments_per_cell);
    for cell in 0..cells {
        for d in 0..init.segments_per_cell {
            let mut rng = RngStream::keyed(seed, Domain::TmSegments, &[cell as u64, d as u64]);
            let row = (0..cells)
                .map(|_| {
                    let keep = rng.uniform() < init.synapse_fraction;
                    let v = rng.uniform();
                    if keep {
                        v
                    } else {
                        0.0
                    }
                })
                .collect();
            rows.push((cell, row));
        }
    }
    SegmentSet::from_rows(
        columns,
        init.cells_per_column,
        connected_threshold,
        backend,
        &rows,
        seed,
    )
}

/// `pi = 1` iff some segment of the cell has more than `threshold`
/// connected synapses onto active cells.
pub fn predictive_state(segs: &SegmentSet, active: &[bool], threshold: u32) -> Result<Vec<bool>> {
    check_len("activation", segs.cell_count(), active.len())?;
    Ok((0..segs.cell_count())
        .into_par_iter()
        .map(|cell| {
            segs.segments_of(cell)
                .iter()
                .any(|&s| segs.is_segment_active(s, active, threshold))
        })
        .collect())
}

/// Column indices active in the SP output.
pub fn winners_from_sp(sp_active: &Sdr) -> Vec<usize> {
    sp_active.active_indices()
}

/// Winning columns activate their previously predictive cells, or burst
/// when none was predictive. Losing columns are silent.
pub fn active_state(
    winners: &[usize],
    predictive_prev: &[bool],
    cells_per_column: usize,
) -> Result<Vec<bool>> {
    let columns = predictive_prev.len() / cells_per_column.max(1);
    let mut out = vec![false; predictive_prev.len()];
    for &j in winners {
        check_index("winner column", j, columns)?;
        let range = j * cells_per_column..(j + 1) * cells_per_column;
        let burst = !predictive_prev[range.clone()].iter().any(|&p| p);
        for c in range {
            out[c] = burst || predictive_prev[c];
        }
    }
    Ok(out)
}

/// Columns among `winners` with no previously predictive cell.
pub fn bursting_columns(
    winners: &[usize],
    predictive_prev: &[bool],
    cells_per_column: usize,
) -> usize {
    winners
        .iter()
        .filter(|&&j| {
            !predictive_prev[j * cells_per_column..(j + 1) * cells_per_column]
                .iter()
                .any(|&p| p)
        })
        .count()
}

/// Segments of correctly predicted cells that were active on `active_prev`.
pub fn reinforce_targets(
    segs: &SegmentSet,
    active: &[bool],
    active_prev: &[bool],
    predictive_prev: &[bool],
    threshold: u32,
) -> Vec<usize> {
    (0..segs.segment_count())
        .filter(|&s| {
            let cell = segs.owner(s);
            active[cell]
                && predictive_prev[cell]
                && segs.is_segment_active(s, active_prev, threshold)
        })
        .collect()
}

/// Segments of inactive cells that were active on `active_prev`.
pub fn decay_targets(
    segs: &SegmentSet,
    active: &[bool],
    active_prev: &[bool],
    threshold: u32,
) -> Vec<usize> {
    (0..segs.segment_count())
        .filter(|&s| !active[segs.owner(s)] && segs.is_segment_active(s, active_prev, threshold))
        .collect()
}

/// `D += inc * (Ddot & A_prev) - dec * (Ddot & !A_prev)` on each target.
pub fn reinforce(
    segs: &mut SegmentSet,
    targets: &[usize],
    active_prev: &[bool],
    inc: f64,
    dec: f64,
    rng_for_segment: impl Fn(usize) -> RngStream,
) -> Result<()> {
    check_len("previous activation", segs.cell_count(), active_prev.len())?;
    for &s in targets {
        check_index("segment", s, segs.segment_count())?;
        let mut rng = rng_for_segment(s);
        segs.shift(s, active_prev, inc, -dec, &mut rng);
    }
    Ok(())
}

/// `D -= rate * Ddot` on each target, clamped at 0.
pub fn decay(
    segs: &mut SegmentSet,
    targets: &[usize],
    rate: f64,
    rng_for_segment: impl Fn(usize) -> RngStream,
) -> Result<()> {
    let all = vec![true; segs.cell_count()];
    for &s in targets {
        check_index("segment", s, segs.segment_count())?;
        let mut rng = rng_for_segment(s);
        segs.shift(s, &all, -rate, 0.0, &mut rng);
    }
    Ok(())
}

/// Per-step summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmStep {
    pub bursting: usize,
    pub winners: usize,
}

/// A complete temporal memory bound to SP output.
#[derive(Debug, Clone)]
pub struct TemporalMemory {
    config: HtmConfig,
    state: TmState,
    segments: SegmentSet,
    seed: u64,
    step: u64,
}

impl TemporalMemory {
    pub fn new(
        columns: usize,
        init: SegmentInit,
        config: HtmConfig,
        backend: Backend,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let segments = init_segments(columns, init, config.connected_threshold, backend, seed)?;
        Ok(Self::from_segments(segments, config, seed))
    }

    pub fn from_segments(segments: SegmentSet, config: HtmConfig, seed: u64) -> Self {
        Self {
            state: TmState::new(segments.columns(), segments.cells_per_column()),
            config,
            segments,
            seed,
            step: 0,
        }
    }

    pub fn state(&self) -> &TmState {
        &self.state
    }

    pub fn segments(&self) -> &SegmentSet {
        &self.segments
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// winners, activation, reinforcement, decay, then prediction.
    pub fn step(&mut self, sp_active: &Sdr, learn_enabled: bool) -> Result<TmStep> {
        check_len("sp output", self.state.columns, sp_active.len())?;
        let per = self.state.cells_per_column;
        let threshold = self.config.segment_threshold;

        let winners = winners_from_sp(sp_active);
        let a_prev = std::mem::take(&mut self.state.active);
        let p_prev = std::mem::take(&mut self.state.predictive);
        let bursting = bursting_columns(&winners, &p_prev, per);
        let active = active_state(&winners, &p_prev, per)?;

        if learn_enabled {
            let (seed, step) = (self.seed, self.step);
            let rng = |s: usize| RngStream::keyed(seed, Domain::TmLearning, &[step, s as u64]);
            let grow = reinforce_targets(&self.segments, &active, &a_prev, &p_prev, threshold);
            let fade = decay_targets(&self.segments, &active, &a_prev, threshold);
            reinforce(
                &mut self.segments,
                &grow,
                &a_prev,
                self.config.permanence_inc,
                self.config.permanence_dec,
                rng,
            )?;
            decay(&mut self.segments, &fade, self.config.segment_decay, rng)?;
        }

        let predictive = predictive_state(&self.segments, &active, threshold)?;
        self.state.active_prev = a_prev;
        self.state.predictive_prev = p_prev;
        self.state.active = active;
        self.state.predictive = predictive;
        self.step += 1;
        Ok(TmStep {
            bursting,
            winners: winners.len(),
        })
    }
}
