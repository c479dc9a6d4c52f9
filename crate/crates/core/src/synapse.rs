//! Permanence storage shared by the SP and TM.
//!
//! The ideal backend keeps exact reals. The memristive backend keeps one
//! device per synapse: initial values are written with verify-after-write,
//! learning updates are open-loop pulse trains that may partially fail.

use crate::device::{DevicePreset, MemristorDevice};
use crate::error::Result;
use crate::rng::RngStream;

/// Which substrate holds synaptic weights and computes dot products.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Backend {
    #[default]
    Ideal,
    Memristive(DevicePreset),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Ideal => "ideal",
            Backend::Memristive(_) => "memristive",
        }
    }

    pub fn preset(&self) -> Option<&DevicePreset> {
        match self {
            Backend::Ideal => None,
            Backend::Memristive(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Cells {
    Ideal(Vec<f64>),
    Devices(Vec<MemristorDevice>),
}

/// Dense `rows x cols` matrix of permanences in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseStore {
    rows: usize,
    cols: usize,
    cells: Cells,
    pulses: u64,
}

impl SynapseStore {
    pub fn new(rows: usize, cols: usize, backend: Backend) -> Self {
        let cells = match backend {
            Backend::Ideal => Cells::Ideal(vec![0.0; rows * cols]),
            Backend::Memristive(p) => Cells::Devices(vec![MemristorDevice::new(p); rows * cols]),
        };
        Self {
            rows,
            cols,
            cells,
            pulses: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Write pulses issued so far (always 0 on the ideal backend).
    pub fn pulses(&self) -> u64 {
        self.pulses
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let k = r * self.cols + c;
        match &self.cells {
            Cells::Ideal(v) => v[k],
            Cells::Devices(d) => d[k].weight(),
        }
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        (0..self.cols).map(|c| self.get(r, c)).collect()
    }

    /// Initial write of `value` (clamped to `[0, 1]`).
    pub fn program(&mut self, r: usize, c: usize, value: f64, rng: &mut RngStream) -> Result<()> {
        let k = r * self.cols + c;
        let value = value.clamp(0.0, 1.0);
        match &mut self.cells {
            Cells::Ideal(v) => v[k] = value,
            Cells::Devices(d) => self.pulses += d[k].program_to_value(value, rng)? as u64,
        }
        Ok(())
    }

    /// Learning update `value += delta`, clamped to `[0, 1]`.
    pub fn adjust(&mut self, r: usize, c: usize, delta: f64, rng: &mut RngStream) {
        let k = r * self.cols + c;
        match &mut self.cells {
            Cells::Ideal(v) => v[k] = (v[k] + delta).clamp(0.0, 1.0),
            Cells::Devices(d) => self.pulses += d[k].nudge(delta, rng) as u64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::Levels;
    use crate::rng::Domain;

    #[test]
    fn ideal_clamps() {
        let mut s = SynapseStore::new(1, 2, Backend::Ideal);
        let mut r = RngStream::keyed(1, Domain::Test, &[]);
        s.program(0, 0, 0.99, &mut r).unwrap();
        s.adjust(0, 0, 0.05, &mut r);
        assert_eq!(s.get(0, 0), 1.0);
        s.adjust(0, 1, -0.3, &mut r);
        assert_eq!(s.get(0, 1), 0.0);
    }

    #[test]
    fn quantized_backend_snaps_to_levels() {
        let preset = DevicePreset {
            levels: Levels::Finite(11),
            ..DevicePreset::default()
        };
        let mut s = SynapseStore::new(1, 1, Backend::Memristive(preset));
        let mut r = RngStream::keyed(1, Domain::Test, &[]);
        s.program(0, 0, 0.52, &mut r).unwrap();
        assert!((s.get(0, 0) - 0.5).abs() < 1e-15);
        s.adjust(0, 0, 0.2, &mut r);
        assert!((s.get(0, 0) - 0.7).abs() < 1e-15);
        assert_eq!(s.pulses(), 7);
    }

    #[test]
    fn continuous_backend_matches_ideal() {
        let mut a = SynapseStore::new(1, 1, Backend::Ideal);
        let mut b = SynapseStore::new(1, 1, Backend::Memristive(DevicePreset::ideal()));
        let mut r = RngStream::keyed(1, Domain::Test, &[]);
        a.program(0, 0, 0.37, &mut r).unwrap();
        b.program(0, 0, 0.37, &mut r).unwrap();
        for d in [0.1, -0.05, 0.7, -2.0, 0.3] {
            a.adjust(0, 0, d, &mut r);
            b.adjust(0, 0, d, &mut r);
            assert!((a.get(0, 0) - b.get(0, 0)).abs() < 1e-12);
        }
    }
}
