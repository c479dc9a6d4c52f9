//! Hierarchical temporal memory on ideal and memristive substrates.
//!
//! The spatial pooler turns binary inputs into sparse column activity, the
//! temporal memory learns transitions between those activations, and the
//! pipeline runs an image recognition flow built on a mean-inhibition
//! encoder and class templates. Synaptic state can live in exact reals or in
//! simulated memristors with finite levels, stochastic switching and read
//! noise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod crossbar;
pub mod device;
pub mod error;
pub mod pipeline;
pub mod rng;
pub mod sdr;
pub mod spatial_pooler;
pub mod synapse;
pub mod temporal_memory;
pub mod topology;

pub use config::{HtmConfig, SimConfig};
pub use crossbar::{AccessMode, CrossbarArray};
pub use device::{DevicePreset, Levels, MemoryCell, MemristorDevice};
pub use error::{HtmError, Result};
pub use rng::{Domain, RngStream};
pub use sdr::Sdr;
pub use spatial_pooler::SpatialPooler;
pub use synapse::Backend;
pub use temporal_memory::{SegmentInit, TemporalMemory, TmStep};
pub use topology::{Neighborhoods, Topology};

/// Result of one combined step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HtmStep {
    pub active_columns: Sdr,
    pub bursting: usize,
}

/// Spatial pooler feeding a temporal memory over the same columns.
#[derive(Debug, Clone)]
pub struct Htm {
    sp: SpatialPooler,
    tm: TemporalMemory,
}

impl Htm {
    pub fn new(
        topology: Topology,
        config: HtmConfig,
        segments: SegmentInit,
        backend: Backend,
        seed: u64,
    ) -> Result<Self> {
        let columns = topology.column_count();
        let sp = SpatialPooler::new(topology, config, backend, seed)?;
        let tm = TemporalMemory::new(columns, segments, config, backend, seed)?;
        Ok(Self { sp, tm })
    }

    pub fn spatial_pooler(&self) -> &SpatialPooler {
        &self.sp
    }

    pub fn temporal_memory(&self) -> &TemporalMemory {
        &self.tm
    }

    pub fn step(&mut self, input: &Sdr, learn: bool) -> Result<HtmStep> {
        let active_columns = self.sp.compute(input, learn)?;
        let tm = self.tm.step(&active_columns, learn)?;
        Ok(HtmStep {
            active_columns,
            bursting: tm.bursting,
        })
    }
}
