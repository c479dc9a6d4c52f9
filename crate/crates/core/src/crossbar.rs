//! Memristive crossbar: weight mapping, column current reads and a
//! worst-case sneak-path estimate.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::device::{DevicePreset, MemristorDevice};
use crate::error::{check_index, check_len, HtmError, Result};
use crate::rng::{Domain, RngStream};

/// How word/bit lines are biased during a read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AccessMode {
    /// One column selected at a time, the others grounded.
    #[default]
    SingleColumn,
    /// All columns biased together; sneak paths are possible.
    AllColumns,
}

/// `rows x cols` grid of devices sharing one preset.
#[derive(Debug)]
pub struct CrossbarArray {
    rows: usize,
    cols: usize,
    mode: AccessMode,
    preset: DevicePreset,
    devices: Vec<MemristorDevice>,
    read_slots: AtomicU64,
    pulses: u64,
}

impl Clone for CrossbarArray {
    fn clone(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            mode: self.mode,
            preset: self.preset,
            devices: self.devices.clone(),
            read_slots: AtomicU64::new(self.read_slots()),
            pulses: self.pulses,
        }
    }
}

/// Programs a row-major weight matrix in `[0, 1]` onto a fresh array.
pub fn map_weights(
    weights: &[f64],
    rows: usize,
    cols: usize,
    preset: DevicePreset,
    mode: AccessMode,
    seed: u64,
) -> Result<CrossbarArray> {
    check_len("weight matrix", rows * cols, weights.len())?;
    preset.validate()?;
    let mut devices = vec![MemristorDevice::new(preset); rows * cols];
    let mut pulses = 0u64;
    for r in 0..rows {
        for c in 0..cols {
            let w = weights[r * cols + c];
            if !(0.0..=1.0).contains(&w) {
                return Err(HtmError::InvalidConfig {
                    key: "weight".into(),
                    reason: format!("entry ({r}, {c}) = {w} lies outside [0, 1]"),
                });
            }
            let mut rng = RngStream::keyed(seed, Domain::DeviceProgram, &[r as u64, c as u64]);
            pulses += devices[r * cols + c]
                .program_to_value(w, &mut rng)
                .map_err(|e| HtmError::CrossbarProgramming {
                    row: r,
                    col: c,
                    source: Box::new(e),
                })? as u64;
        }
    }
    Ok(CrossbarArray {
        rows,
        cols,
        mode,
        preset,
        devices,
        read_slots: AtomicU64::new(0),
        pulses,
    })
}

impl CrossbarArray {
    /// Array whose devices hold the given conductances (siemens).
    pub fn from_conductances(
        conductances: &[f64],
        rows: usize,
        cols: usize,
        preset: DevicePreset,
        mode: AccessMode,
    ) -> Result<Self> {
        let weights: Vec<f64> = conductances
            .iter()
            .map(|&g| preset.weight_of(g).clamp(0.0, 1.0))
            .collect();
        map_weights(&weights, rows, cols, preset, mode, 0)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mode(&self) -> AccessMode {
        self.mode
    }

    pub fn preset(&self) -> &DevicePreset {
        &self.preset
    }

    pub fn device(&self, r: usize, c: usize) -> &MemristorDevice {
        &self.devices[r * self.cols + c]
    }

    /// Programming pulses spent by `map_weights`.
    pub fn pulses(&self) -> u64 {
        self.pulses
    }

    /// Sequential read slots consumed so far.
    pub fn read_slots(&self) -> u64 {
        self.read_slots.load(Ordering::Relaxed)
    }

    /// Noise-free stored weights, row-major.
    pub fn weights(&self) -> Vec<f64> {
        self.devices.iter().map(MemristorDevice::weight).collect()
    }

    fn check_inputs(&self, v_in: &[f64]) -> Result<()> {
        check_len("input voltages", self.rows, v_in.len())?;
        match v_in.iter().find(|v| v.abs() >= self.preset.v_th) {
            Some(&v) => Err(HtmError::ReadDisturb {
                volts: v,
                threshold: self.preset.v_th,
            }),
            None => Ok(()),
        }
    }

    fn column_current(&self, j: usize, v_in: &[f64], rng: &mut RngStream) -> Result<f64> {
        let mut total = 0.0;
        for (k, &v) in v_in.iter().enumerate() {
            total += self.devices[k * self.cols + j].read_current(v, rng)?;
        }
        Ok(total)
    }

    /// `I_j = sum_k v_k * G_kj` with per-device read noise.
    pub fn read_column(&self, j: usize, v_in: &[f64], rng: &mut RngStream) -> Result<f64> {
        check_index("column", j, self.cols)?;
        self.check_inputs(v_in)?;
        self.read_slots.fetch_add(1, Ordering::Relaxed);
        self.column_current(j, v_in, rng)
    }

    /// Every column current. Single-column mode reads the columns one after
    /// another and spends one slot each; all-columns mode spends one slot.
    pub fn matvec(&self, v_in: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        self.check_inputs(v_in)?;
        let slots = match self.mode {
            AccessMode::SingleColumn => self.cols as u64,
            AccessMode::AllColumns => 1,
        };
        self.read_slots.fetch_add(slots, Ordering::Relaxed);
        (0..self.cols)
            .map(|j| self.column_current(j, v_in, rng))
            .collect()
    }

    /// Column dot products `sum_k x_k * w_kj` for inputs `x` in `[0, 1]`,
    /// decoded from currents read at the preset read voltage.
    pub fn dot(&self, x: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        let v = self.preset.read_voltage();
        let volts: Vec<f64> = x.iter().map(|&xi| xi * v).collect();
        let offset = self.preset.g_min() * x.iter().sum::<f64>();
        let span = self.preset.g_span();
        Ok(self
            .matvec(&volts, rng)?
            .into_iter()
            .map(|i| (i / v - offset) / span)
            .collect())
    }

    /// Worst sneak current relative to the selected device's current: the
    /// lowest-resistance three-device path `(r,c') -> (r',c') -> (r',c)`
    /// against `R(r,c)`. Zero in single-column mode or on a single line.
    pub fn sneak_ratio(&self, row: usize, col: usize) -> Result<f64> {
        check_index("row", row, self.rows)?;
        check_index("column", col, self.cols)?;
        if self.mode == AccessMode::SingleColumn || self.rows < 2 || self.cols < 2 {
            return Ok(0.0);
        }
        let r = |a: usize, b: usize| self.device(a, b).resistance();
        let mut best = f64::INFINITY;
        for r2 in (0..self.rows).filter(|&x| x != row) {
            for c2 in (0..self.cols).filter(|&x| x != col) {
                best = best.min(r(row, c2) + r(r2, c2) + r(r2, col));
            }
        }
        Ok(r(row, col) / best)
    }
}
