//! Spatial pooler: potential pools, permanences, overlap, local k-WTA
//! inhibition, Hebbian learning and activity-driven boosting.

use rayon::prelude::*;

use crate::config::HtmConfig;
use crate::error::{check_len, Result};
use crate::rng::{Domain, RngStream};
use crate::sdr::Sdr;
use crate::synapse::{Backend, SynapseStore};
use crate::topology::{Neighborhoods, Topology};

/// Potential input pool `PI(i)` of every column, fixed after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialMap {
    input_count: usize,
    pools: Vec<Vec<usize>>,
}

impl PotentialMap {
    pub fn from_pools(input_count: usize, pools: Vec<Vec<usize>>) -> Self {
        Self { input_count, pools }
    }

    pub fn column_count(&self) -> usize {
        self.pools.len()
    }

    pub fn input_count(&self) -> usize {
        self.input_count
    }

    pub fn pool(&self, i: usize) -> &[usize] {
        &self.pools[i]
    }
}

/// Samples each column's pool from its hypercube: input `j` is kept when a
/// fresh uniform draw falls below the potential fraction.
pub fn init_potential(topo: &Topology, seed: u64) -> PotentialMap {
    let fraction = topo.potential_fraction();
    let pools = (0..topo.column_count())
        .map(|i| {
            let mut rng = RngStream::keyed(seed, Domain::Potential, &[i as u64]);
            topo.hypercube(i)
                .into_iter()
                .filter(|_| rng.uniform() < fraction)
                .collect()
        })
        .collect();
    PotentialMap {
        input_count: topo.input_count(),
        pools,
    }
}

/// Proximal permanences `S` with potential and connected masks.
#[derive(Debug, Clone, PartialEq)]
pub struct PermanenceMatrix {
    columns: usize,
    inputs: usize,
    store: SynapseStore,
    potential: Vec<bool>,
    connected: Vec<bool>,
    connected_threshold: f64,
}

/// Draws `U(0,1)` permanences on potential synapses; everything else is 0.
pub fn init_permanence(
    potential: &PotentialMap,
    connected_threshold: f64,
    backend: Backend,
    seed: u64,
) -> Result<PermanenceMatrix> {
    let (columns, inputs) = (potential.column_count(), potential.input_count());
    let mut store = SynapseStore::new(columns, inputs, backend);
    let mut mask = vec![false; columns * inputs];
    for i in 0..columns {
        let mut rng = RngStream::keyed(seed, Domain::Permanence, &[i as u64]);
        for &j in potential.pool(i) {
            let value = rng.uniform();
            store.program(i, j, value, &mut rng)?;
            mask[i * inputs + j] = true;
        }
    }
    let mut pm = PermanenceMatrix {
        columns,
        inputs,
        store,
        potential: mask,
        connected: vec![false; columns * inputs],
        connected_threshold,
    };
    pm.refresh_connected();
    Ok(pm)
}

impl PermanenceMatrix {
    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn connected_threshold(&self) -> f64 {
        self.connected_threshold
    }

    pub fn permanence(&self, i: usize, j: usize) -> f64 {
        self.store.get(i, j)
    }

    pub fn is_potential(&self, i: usize, j: usize) -> bool {
        self.potential[i * self.inputs + j]
    }

    pub fn is_connected(&self, i: usize, j: usize) -> bool {
        self.connected[i * self.inputs + j]
    }

    pub fn pulses(&self) -> u64 {
        self.store.pulses()
    }

    /// Recomputes `B_ij = [S_ij >= theta_c]`.
    pub fn refresh_connected(&mut self) {
        for i in 0..self.columns {
            for j in 0..self.inputs {
                self.connected[i * self.inputs + j] =
                    self.store.get(i, j) >= self.connected_threshold;
            }
        }
    }

    /// All permanences, row-major.
    pub fn values(&self) -> Vec<f64> {
        (0..self.columns).flat_map(|i| self.store.row(i)).collect()
    }
}

/// Per-column activity averages and boost factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityStats {
    average: Vec<f64>,
    boost: Vec<f64>,
    window: u32,
    strength: f64,
}

impl ActivityStats {
    /// Zero average activity and unit boost.
    pub fn new(columns: usize, window: u32, strength: f64) -> Self {
        Self {
            average: vec![0.0; columns],
            boost: vec![1.0; columns],
            window: window.max(1),
            strength,
        }
    }

    pub fn with_average(mut self, average: Vec<f64>) -> Self {
        self.average = average;
        self
    }

    pub fn average(&self) -> &[f64] {
        &self.average
    }

    pub fn boost(&self) -> &[f64] {
        &self.boost
    }

    pub fn set_boost(&mut self, boost: Vec<f64>) {
        self.boost = boost;
    }

    pub fn window(&self) -> u32 {
        self.window
    }
}

/// Boosted overlap `o_i = beta_i * sum_j B_ij Z_j`.
pub fn overlap(pm: &PermanenceMatrix, input: &Sdr, stats: &ActivityStats) -> Result<Vec<f64>> {
    check_len("input", pm.inputs, input.len())?;
    check_len("boost", pm.columns, stats.boost.len())?;
    let active = input.active_indices();
    Ok((0..pm.columns)
        .into_par_iter()
        .map(|i| {
            let count = active.iter().filter(|&&j| pm.is_connected(i, j)).count();
            stats.boost[i] * count as f64
        })
        .collect())
}

/// Number of winners allowed in a pool of `pool_size` columns.
pub fn winners_allowed(density: f64, pool_size: usize) -> usize {
    // guard against 0.02 * 100 landing a hair above 2
    ((density * pool_size as f64) - 1e-9).ceil().max(0.0) as usize
}

/// `true` when column `j` outranks column `i`: larger overlap, ties to the
/// lower index.
#[inline]
fn outranks(o: &[f64], j: usize, i: usize) -> bool {
    o[j] > o[i] || (o[j] == o[i] && j < i)
}

/// Whether column `i` lies in the top `density` of its pool `N(i) ∪ {i}`:
/// strictly fewer than `ceil(density * |pool|)` members outrank it.
pub fn in_top_percentile(o: &[f64], neighborhoods: &Neighborhoods, density: f64, i: usize) -> bool {
    let pool = neighborhoods.of(i);
    let ahead = pool.iter().filter(|&&j| outranks(o, j, i)).count();
    ahead < winners_allowed(density, pool.len() + 1)
}

/// Local k-winners-take-all.
///
/// A column can win only if its overlap reaches `stimulus_threshold` and it
/// sits in the top `density` of its own pool. Candidates are admitted in rank
/// order while every pool containing them still has room, so no pool ever
/// holds more than `ceil(density * |pool|)` winners. Under global inhibition
/// this is exactly the top `ceil(density * n)` columns.
pub fn inhibit(
    o: &[f64],
    neighborhoods: &Neighborhoods,
    density: f64,
    stimulus_threshold: f64,
) -> Result<Sdr> {
    let n = o.len();
    check_len("neighborhoods", n, neighborhoods.len())?;
    let caps: Vec<usize> = (0..n)
        .map(|i| winners_allowed(density, neighborhoods.of(i).len() + 1))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| o[b].total_cmp(&o[a]).then(a.cmp(&b)));

    let mut filled = vec![0usize; n];
    let mut out = Sdr::zeros(n);
    for i in order {
        if o[i] < stimulus_threshold || !in_top_percentile(o, neighborhoods, density, i) {
            continue;
        }
        let room = filled[i] < caps[i] && neighborhoods.of(i).iter().all(|&c| filled[c] < caps[c]);
        if room {
            out.set(i, true);
            filled[i] += 1;
            for &c in neighborhoods.of(i) {
                filled[c] += 1;
            }
        }
    }
    Ok(out)
}

/// Hebbian update on active columns: potential synapses from active inputs
/// gain `inc`, the rest lose `dec`; inactive columns are untouched.
pub fn learn(
    pm: &mut PermanenceMatrix,
    potential: &PotentialMap,
    input: &Sdr,
    active: &Sdr,
    inc: f64,
    dec: f64,
    rng_for_column: impl Fn(usize) -> RngStream,
) -> Result<()> {
    check_len("input", pm.inputs, input.len())?;
    check_len("active columns", pm.columns, active.len())?;
    for i in active.active_indices() {
        let mut rng = rng_for_column(i);
        for &j in potential.pool(i) {
            let delta = if input.get(j) { inc } else { -dec };
            pm.store.adjust(i, j, delta, &mut rng);
        }
    }
    pm.refresh_connected();
    Ok(())
}

/// `avg_i <- ((T - 1) * avg_i + alpha_i) / T`.
pub fn update_activity(stats: &mut ActivityStats, active: &Sdr) -> Result<()> {
    check_len("active columns", stats.average.len(), active.len())?;
    let t = stats.window as f64;
    for (avg, &a) in stats.average.iter_mut().zip(active.bits()) {
        *avg = ((t - 1.0) * *avg + if a { 1.0 } else { 0.0 }) / t;
    }
    Ok(())
}

/// `beta_i = exp(-eta * (avg_i - mean_{j in N(i)} avg_j))`; a column with no
/// neighbors keeps `beta_i = 1`.
pub fn update_boost(stats: &mut ActivityStats, neighborhoods: &Neighborhoods) -> Result<()> {
    check_len("neighborhoods", stats.average.len(), neighborhoods.len())?;
    for i in 0..stats.average.len() {
        let nbrs = neighborhoods.of(i);
        stats.boost[i] = if nbrs.is_empty() {
            1.0
        } else {
            let a = stats.average[i];
            let mean = nbrs.iter().map(|&j| stats.average[j]).sum::<f64>() / nbrs.len() as f64;
            // deviations sum to exactly zero when all activities agree
            let gap = nbrs.iter().map(|&j| stats.average[j] - a).sum::<f64>() / nbrs.len() as f64;
            if a == mean || gap == 0.0 {
                1.0
            } else {
                (stats.strength * gap).exp()
            }
        };
    }
    Ok(())
}

/// A complete spatial pooler.
#[derive(Debug, Clone)]
pub struct SpatialPooler {
    topology: Topology,
    config: HtmConfig,
    neighborhoods: Neighborhoods,
    potential: PotentialMap,
    permanences: PermanenceMatrix,
    stats: ActivityStats,
    seed: u64,
    step: u64,
}

impl SpatialPooler {
    pub fn new(topology: Topology, config: HtmConfig, backend: Backend, seed: u64) -> Result<Self> {
        config.validate()?;
        let potential = init_potential(&topology, seed);
        let permanences = init_permanence(&potential, config.connected_threshold, backend, seed)?;
        let n = topology.column_count();
        Ok(Self {
            neighborhoods: topology.neighborhoods(),
            stats: ActivityStats::new(n, config.activity_window, config.boost_strength),
            topology,
            config,
            potential,
            permanences,
            seed,
            step: 0,
        })
    }

    /// Replaces the topology-derived neighborhoods (e.g. global inhibition).
    pub fn with_neighborhoods(mut self, neighborhoods: Neighborhoods) -> Result<Self> {
        check_len(
            "neighborhoods",
            self.topology.column_count(),
            neighborhoods.len(),
        )?;
        self.neighborhoods = neighborhoods;
        Ok(self)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn permanences(&self) -> &PermanenceMatrix {
        &self.permanences
    }

    pub fn potential(&self) -> &PotentialMap {
        &self.potential
    }

    pub fn stats(&self) -> &ActivityStats {
        &self.stats
    }

    pub fn neighborhoods(&self) -> &Neighborhoods {
        &self.neighborhoods
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// One SP step: overlap, inhibition, and when `learn` is set, Hebbian
    /// learning followed by the activity and boost updates.
    pub fn compute(&mut self, input: &Sdr, learn_enabled: bool) -> Result<Sdr> {
        let o = overlap(&self.permanences, input, &self.stats)?;
        let active = inhibit(
            &o,
            &self.neighborhoods,
            self.config.density,
            self.config.stimulus_threshold,
        )?;
        if learn_enabled {
            let (seed, step) = (self.seed, self.step);
            learn(
                &mut self.permanences,
                &self.potential,
                input,
                &active,
                self.config.permanence_inc,
                self.config.permanence_dec,
                |i| RngStream::keyed(seed, Domain::SpLearning, &[step, i as u64]),
            )?;
            update_activity(&mut self.stats, &active)?;
            update_boost(&mut self.stats, &self.neighborhoods)?;
        }
        self.step += 1;
        Ok(active)
    }
}
