//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! fails.

use std::process::ExitCode;
use std::time::Instant;

use memhtm::config::HtmConfig;
use memhtm::crossbar::{map_weights, AccessMode};
use memhtm::device::{mean_recall_error, CALIBRATED_SIGMA_R};
use memhtm::pipeline::{estimate_cost, CostCounts, CostTable};
use memhtm::spatial_pooler::{
    inhibit, init_permanence, init_potential, learn, update_boost, ActivityStats,
};
use memhtm::temporal_memory::{active_state, predictive_state, SegmentSet};
use memhtm::{
    Backend, DevicePreset, Domain, Levels, Neighborhoods, RngStream, Sdr, SegmentInit,
    TemporalMemory, Topology,
};
use memhtm_cli::dataset::{generate_synthetic, SyntheticSpec, SYNTHETIC_CONFIG};
use memhtm_cli::experiment::{report_json, run_experiment, BackendKind, ExperimentSpec};

const BOOST_TOL: f64 = 1e-12;
const PERMANENCE_STEPS: usize = 10_000;
const ORACLE_INSTANCES: usize = 1000;
const SEQUENCE_EPOCHS: usize = 50;
const CROSSBAR_REL_TOL: f64 = 1e-9;
const RECALL_ERROR_MAX: f64 = 0.10;
const RECALL_SAMPLES: usize = 10_000;
const IDEAL_ACCURACY_MIN: f64 = 0.90;
const MEMRISTIVE_GAP_MAX: f64 = 0.05;
const SNEAK_TOL: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn boost_identities() -> Outcome {
    let g = Neighborhoods::global(4);
    let mut rng = RngStream::keyed(1, Domain::Test, &[]);
    let mut worst = 0.0f64;
    let mut exact = true;
    for _ in 0..200 {
        let avg: Vec<f64> = (0..4).map(|_| rng.uniform()).collect();
        let mut s = ActivityStats::new(4, 100, 0.0).with_average(avg);
        update_boost(&mut s, &g).unwrap();
        exact &= s.boost().iter().all(|&b| b == 1.0);

        let a = rng.uniform();
        let mut s = ActivityStats::new(4, 100, 1.0 + 9.0 * rng.uniform()).with_average(vec![a; 4]);
        update_boost(&mut s, &g).unwrap();
        exact &= s.boost().iter().all(|&b| b == 1.0);

        let eta = 1.0 + 9.0 * rng.uniform();
        let mean = 0.5 * rng.uniform();
        let others = vec![mean; 3];
        let mut avg = vec![mean + 1.0 / eta];
        avg.extend(others);
        let mut s = ActivityStats::new(4, 100, eta).with_average(avg);
        update_boost(&mut s, &g).unwrap();
        worst = worst.max((s.boost()[0] - (-1.0f64).exp()).abs());
    }
    check(
        exact && worst <= BOOST_TOL,
        format!("unit boosts exact={exact}, max |b - e^-1| = {worst:.2e}"),
    )
}

fn cap(density: f64, pool: usize) -> usize {
    ((density * pool as f64) - 1e-9).ceil() as usize
}

fn sp_sparsity() -> Outcome {
    let mut rng = RngStream::keyed(2, Domain::Test, &[]);
    for n in [4usize, 16, 100] {
        for s in [0.02, 0.25] {
            let mut o: Vec<f64> = (0..n).map(|k| k as f64).collect();
            for k in (1..n).rev() {
                o.swap(k, rng.below(k + 1));
            }
            let got = inhibit(&o, &Neighborhoods::global(n), s, 0.0)
                .unwrap()
                .count_active();
            let want = (s * n as f64).ceil() as usize;
            if got != want {
                return Err(format!("n={n} s={s}: {got} active, want {want}"));
            }
        }
    }
    let mut violations = 0;
    for _ in 0..ORACLE_INSTANCES {
        let n = 2 + rng.below(40);
        let mut lists = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if rng.bernoulli(0.3) {
                    lists[i].push(j);
                    lists[j].push(i);
                }
            }
        }
        let g = Neighborhoods::from_lists(lists).unwrap();
        let o: Vec<f64> = (0..n).map(|_| rng.below(10) as f64).collect();
        let s = 0.02 + 0.5 * rng.uniform();
        let a = inhibit(&o, &g, s, 0.0).unwrap();
        for c in 0..n {
            let inside = a.get(c) as usize + g.of(c).iter().filter(|&&j| a.get(j)).count();
            if inside > cap(s, g.of(c).len() + 1) {
                violations += 1;
            }
        }
    }
    check(
        violations == 0,
        format!("exact ceil(s*n) on 6 global cases, {violations} cap violations on {ORACLE_INSTANCES} graphs"),
    )
}

fn permanence_bounds() -> Outcome {
    let mut violations = 0usize;
    for backend in [
        Backend::Ideal,
        Backend::Memristive(DevicePreset::named("reram-256").unwrap()),
    ] {
        let t = Topology::new((8, 8), (4, 4), 3.0, 0.7).unwrap();
        let potential = init_potential(&t, 3);
        let mut pm = init_permanence(&potential, 0.5, backend, 3).unwrap();
        let init = SegmentInit {
            cells_per_column: 3,
            segments_per_cell: 2,
            synapse_fraction: 0.7,
        };
        let cfg = HtmConfig {
            permanence_inc: 0.3,
            permanence_dec: 0.2,
            segment_decay: 0.05,
            segment_threshold: 0,
            ..HtmConfig::default()
        };
        let mut tm = TemporalMemory::new(16, init, cfg, backend, 3).unwrap();
        let mut rng = RngStream::keyed(3, Domain::Test, &[]);
        for step in 0..PERMANENCE_STEPS as u64 {
            let input = Sdr::from_bits((0..64).map(|_| rng.bernoulli(0.4)).collect());
            let active = Sdr::from_bits((0..16).map(|_| rng.bernoulli(0.3)).collect());
            let (inc, dec) = (0.3 * rng.uniform(), 0.3 * rng.uniform());
            learn(&mut pm, &potential, &input, &active, inc, dec, |i| {
                RngStream::keyed(3, Domain::SpLearning, &[step, i as u64])
            })
            .unwrap();
            tm.step(&active, true).unwrap();
        }
        violations += pm
            .values()
            .iter()
            .filter(|v| !(0.0..=1.0).contains(*v))
            .count();
        let segs = tm.segments();
        for s in 0..segs.segment_count() {
            violations += segs
                .row(s)
                .iter()
                .filter(|v| !(0.0..=1.0).contains(*v))
                .count();
        }
    }
    check(
        violations == 0,
        format!(
            "{violations} S/D entries outside [0,1] after {PERMANENCE_STEPS} steps per backend"
        ),
    )
}

fn tm_oracle() -> Outcome {
    let mut rng = RngStream::keyed(4, Domain::Test, &[]);
    let mut mismatches = 0;
    for _ in 0..ORACLE_INSTANCES {
        let columns = 1 + rng.below(6);
        let per = 1 + rng.below(4);
        let cells = columns * per;
        let rows: Vec<(usize, Vec<f64>)> = (0..cells)
            .flat_map(|cell| {
                let k = rng.below(4);
                (0..k)
                    .map(|_| {
                        let row = (0..cells)
                            .map(|_| {
                                if rng.bernoulli(0.3) {
                                    0.0
                                } else {
                                    rng.uniform()
                                }
                            })
                            .collect();
                        (cell, row)
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let theta_c = rng.uniform();
        let theta = rng.below(4) as u32;
        let segs = SegmentSet::from_rows(columns, per, theta_c, Backend::Ideal, &rows, 0).unwrap();
        let a: Vec<bool> = (0..cells).map(|_| rng.bernoulli(0.5)).collect();
        let want: Vec<bool> = (0..cells)
            .map(|c| {
                rows.iter()
                    .filter(|(owner, _)| *owner == c)
                    .any(|(_, row)| {
                        let s: u32 = row
                            .iter()
                            .zip(&a)
                            .map(|(&p, &on)| (p >= theta_c && on) as u32)
                            .sum();
                        s > theta
                    })
            })
            .collect();
        if predictive_state(&segs, &a, theta).unwrap() != want {
            mismatches += 1;
        }
        let w: Vec<bool> = (0..columns).map(|_| rng.bernoulli(0.5)).collect();
        let winners: Vec<usize> = (0..columns).filter(|&j| w[j]).collect();
        let p_prev: Vec<bool> = (0..cells).map(|_| rng.bernoulli(0.3)).collect();
        let want: Vec<bool> = (0..cells)
            .map(|c| {
                let j = c / per;
                w[j] && (p_prev[c] || (0..per).all(|i| !p_prev[j * per + i]))
            })
            .collect();
        if active_state(&winners, &p_prev, per).unwrap() != want {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} mismatches on {ORACLE_INSTANCES} instances"),
    )
}

fn sequence_learning() -> Outcome {
    let cfg = HtmConfig {
        segment_threshold: 1,
        ..HtmConfig::default()
    };
    let init = SegmentInit {
        cells_per_column: 2,
        segments_per_cell: 1,
        synapse_fraction: 1.0,
    };
    let a = Sdr::from_indices(8, &[0, 1, 2, 3]);
    let b = Sdr::from_indices(8, &[4, 5, 6, 7]);
    let quantized = DevicePreset {
        p_switch: 1.0,
        sigma_r: 0.0,
        ..DevicePreset::default()
    };
    for (name, backend) in [
        ("ideal", Backend::Ideal),
        ("memristive", Backend::Memristive(quantized)),
    ] {
        for seed in 0..5 {
            let mut tm = TemporalMemory::new(8, init, cfg, backend, seed).unwrap();
            let bursts: Vec<usize> = (0..SEQUENCE_EPOCHS)
                .map(|_| tm.step(&a, true).unwrap().bursting + tm.step(&b, true).unwrap().bursting)
                .collect();
            if !bursts.windows(2).all(|w| w[1] <= w[0]) || bursts.last() != Some(&0) {
                return Err(format!("{name} seed {seed}: bursting per epoch {bursts:?}"));
            }
        }
    }
    Ok(format!(
        "bursting non-increasing and 0 within {SEQUENCE_EPOCHS} epochs, 2 backends x 5 seeds"
    ))
}

fn crossbar_exactness() -> Outcome {
    let preset = DevicePreset::ideal();
    let mut rng = RngStream::keyed(6, Domain::Test, &[]);
    let mut worst = 0.0f64;
    for _ in 0..ORACLE_INSTANCES {
        let (rows, cols) = (32, 32);
        let w: Vec<f64> = (0..rows * cols).map(|_| rng.uniform()).collect();
        let v: Vec<f64> = (0..rows).map(|_| 0.19 * rng.uniform() + 0.001).collect();
        let x = map_weights(&w, rows, cols, preset, AccessMode::SingleColumn, 1).unwrap();
        let got = x.matvec(&v, &mut rng).unwrap();
        let span = 1.0 / preset.r_on - 1.0 / preset.r_off;
        for (j, g) in got.iter().enumerate() {
            let want: f64 = (0..rows)
                .map(|k| v[k] * (1.0 / preset.r_off + w[k * cols + j] * span))
                .sum();
            worst = worst.max(((g - want) / want).abs());
        }
    }
    check(
        worst <= CROSSBAR_REL_TOL,
        format!("max relative error {worst:.2e} on {ORACLE_INSTANCES} 32x32 instances"),
    )
}

fn quantized_storage() -> Outcome {
    let noisy = DevicePreset {
        sigma_r: CALIBRATED_SIGMA_R,
        ..DevicePreset::default()
    };
    let e256 = mean_recall_error(noisy, 256, 4, RECALL_SAMPLES, 42).unwrap();
    let e1024 = mean_recall_error(noisy, 1024, 4, RECALL_SAMPLES, 42).unwrap();
    check(
        e256 <= RECALL_ERROR_MAX && e1024 > e256,
        format!("sigma_r={CALIBRATED_SIGMA_R}: L=256 error {e256:.4}, L=1024 error {e1024:.4}"),
    )
}

fn synthetic_suite() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_synthetic(dir.path(), SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let accuracy = |backend| -> Result<f64, String> {
        let spec =
            ExperimentSpec::new(dir.path(), backend, "reram-256", Some(SYNTHETIC_CONFIG), 42)
                .map_err(|e| e.to_string())?;
        Ok(run_experiment(&spec)
            .map_err(|e| e.to_string())?
            .report
            .accuracy)
    };
    let ideal = accuracy(BackendKind::Ideal)?;
    let memristive = accuracy(BackendKind::Memristive)?;
    check(
        ideal >= IDEAL_ACCURACY_MIN && ideal - memristive <= MEMRISTIVE_GAP_MAX,
        format!("ideal {ideal:.3}, memristive reram-256 {memristive:.3}"),
    )
}

fn cost_exactness() -> Outcome {
    let table = CostTable::default();
    let unit = |sp, tm, m| {
        estimate_cost(
            CostCounts {
                sp_blocks_1x4: sp,
                tm_cells_1x1: tm,
                matcher_cells_1x1: m,
            },
            &table,
        )
    };
    let cases: [(_, f64, f64); 3] = [
        (unit(1, 0, 0), 19.96, 365.88),
        (unit(0, 1, 0), 23.85, 442.26),
        (unit(0, 0, 1), 1.18, 69.44),
    ];
    let ok = cases.iter().all(|(e, a, p)| {
        e.area_um2.to_bits() == a.to_bits() && e.power_uw.to_bits() == p.to_bits()
    });
    check(
        ok,
        "SP 19.96/365.88, TM 23.85/442.26, matcher 1.18/69.44".into(),
    )
}

fn sneak_mitigation() -> Outcome {
    let mut rng = RngStream::keyed(10, Domain::Test, &[]);
    let mut nonzero = 0;
    for rows in [1usize, 2, 3, 8, 17, 32, 64] {
        for cols in [1usize, 2, 5, 16, 33, 64] {
            let w: Vec<f64> = (0..rows * cols).map(|_| rng.uniform()).collect();
            let x = map_weights(
                &w,
                rows,
                cols,
                DevicePreset::ideal(),
                AccessMode::SingleColumn,
                0,
            )
            .unwrap();
            for r in 0..rows {
                for c in 0..cols {
                    nonzero += (x.sneak_ratio(r, c).unwrap() != 0.0) as usize;
                }
            }
        }
    }
    let uniform = DevicePreset {
        levels: Levels::Continuous,
        ..DevicePreset::default()
    };
    let x = map_weights(&[1.0; 4], 2, 2, uniform, AccessMode::AllColumns, 0).unwrap();
    let ratio = x.sneak_ratio(0, 0).unwrap();
    check(
        nonzero == 0 && (ratio - 1.0 / 3.0).abs() <= SNEAK_TOL,
        format!(
            "{nonzero} nonzero single-column ratios up to 64x64, 2x2 all-columns ratio {ratio:.15}"
        ),
    )
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_synthetic(dir.path(), SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let spec = ExperimentSpec::new(
        dir.path(),
        BackendKind::Memristive,
        "reram-256",
        Some("block_size = 1\nregion_blocks = 2\niterations = 16\n"),
        7,
    )
    .map_err(|e| e.to_string())?;
    let report = |threads: usize| -> Result<String, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let run = pool
            .install(|| run_experiment(&spec))
            .map_err(|e| e.to_string())?;
        report_json(&run.report).map_err(|e| e.to_string())
    };
    let first = report(2)?;
    let second = report(2)?;
    let single = report(1)?;
    let wide = report(4)?;
    check(
        first == second && first == single && first == wide,
        format!(
            "{} byte report identical across repeats and 1/2/4 threads",
            first.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("boost identities", boost_identities),
        ("spatial pooler sparsity", sp_sparsity),
        ("permanence bounds", permanence_bounds),
        ("temporal memory oracle", tm_oracle),
        ("sequence learning", sequence_learning),
        ("crossbar exactness", crossbar_exactness),
        ("quantized storage", quantized_storage),
        ("synthetic suite", synthetic_suite),
        ("cost model", cost_exactness),
        ("sneak mitigation", sneak_mitigation),
        ("reproducibility", reproducibility),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "[{tag}] {:>2} {name}: {detail} ({:.1}s)",
            k + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
