//! End-to-end recognition experiments, parameter sweeps and their reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use memhtm::pipeline::{
    classify, estimate_cost, preprocess, train_template, CostCounts, CostTable, GrayImage,
    SpEncoder, TemplateStorage,
};
use memhtm::{Backend, DevicePreset, Sdr, SimConfig};

use crate::dataset::{load_dataset, Dataset};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Ideal,
    Memristive,
}

/// Everything that determines a run's report.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    pub backend: BackendKind,
    pub preset: String,
    pub seed: u64,
    /// Share of each class used for training; the rest is tested.
    pub train_fraction: f64,
    pub config: SimConfig,
}

pub const DEFAULT_PRESET: &str = "reram-256";

impl ExperimentSpec {
    /// Starts from the named device preset and applies `config_text` on top.
    pub fn new(
        dataset: impl Into<PathBuf>,
        backend: BackendKind,
        preset: &str,
        config_text: Option<&str>,
        seed: u64,
    ) -> Result<Self> {
        let device =
            DevicePreset::named(preset).ok_or_else(|| CliError::UnknownPreset(preset.into()))?;
        let base = SimConfig {
            device,
            ..SimConfig::default()
        };
        let config = SimConfig::parse_with_base(config_text.unwrap_or(""), base)
            .map_err(CliError::in_phase("config"))?;
        Ok(Self {
            dataset: dataset.into(),
            backend,
            preset: preset.into(),
            seed,
            train_fraction: 0.5,
            config,
        })
    }

    pub fn with_train_fraction(mut self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(CliError::Argument(format!(
                "train fraction {fraction} must lie in (0, 1]"
            )));
        }
        self.train_fraction = fraction;
        Ok(self)
    }

    pub fn backend(&self) -> Backend {
        match self.backend {
            BackendKind::Ideal => Backend::Ideal,
            BackendKind::Memristive => Backend::Memristive(self.config.device),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub classes: usize,
    pub labels: Vec<String>,
    pub width: usize,
    pub height: usize,
    pub train_images: usize,
    pub test_images: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackendSummary {
    pub kind: BackendKind,
    pub preset: String,
    pub r_on: f64,
    pub r_off: f64,
    /// `null` for a continuous ladder.
    pub levels: Option<u32>,
    pub v_th: f64,
    pub t_set: f64,
    pub p_switch: f64,
    pub sigma_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub theta_c: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub gamma_tm: f64,
    pub iterations: usize,
    pub block_size: usize,
    pub region_blocks: usize,
    pub train_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub test_images: usize,
    pub correct: usize,
    /// `null` when the class has no test images.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSummary {
    pub sp_blocks_1x4: u64,
    pub tm_cells_1x1: u64,
    pub matcher_cells_1x1: u64,
    pub area_um2: f64,
    pub power_uw: f64,
}

/// Deterministic outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub backend: BackendSummary,
    pub parameters: ParameterSummary,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    pub sdr_density: DensityStats,
    pub cost: CostSummary,
}

/// Wall-clock seconds per phase, kept apart from the report.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub phases: Vec<(String, f64)>,
}

impl Timings {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.phases
            .push((phase.into(), start.elapsed().as_secs_f64()));
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub timings: Timings,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutput> {
    let mut timings = Timings::default();
    let dataset = timings.time("load", || load_dataset(&spec.dataset))?;
    let mut out = run_on_dataset(spec, &dataset)?;
    timings.phases.append(&mut out.timings.phases);
    out.timings = timings;
    Ok(out)
}

/// Per-class split: the first `round(n * train_fraction)` files (at least
/// one) train, the rest test.
fn split(dataset: &Dataset, fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for label in 0..dataset.class_count() {
        let members: Vec<usize> = (0..dataset.samples.len())
            .filter(|&i| dataset.samples[i].label == label)
            .collect();
        let n_train = ((members.len() as f64 * fraction).round() as usize).clamp(1, members.len());
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    (train, test)
}

pub fn run_on_dataset(spec: &ExperimentSpec, dataset: &Dataset) -> Result<RunOutput> {
    spec.config
        .validate()
        .map_err(CliError::in_phase("config"))?;
    let mut timings = Timings::default();
    let backend = spec.backend();

    let images: Vec<GrayImage> = timings.time("preprocess", || {
        dataset
            .samples
            .par_iter()
            .map(|s| preprocess(&s.image).map_err(CliError::in_phase("preprocess")))
            .collect()
    })?;
    let (width, height) = (images[0].width, images[0].height);
    if let Some(s) = images
        .iter()
        .zip(&dataset.samples)
        .find(|(img, _)| (img.width, img.height) != (width, height))
        .map(|(_, s)| s)
    {
        return Err(CliError::Dataset(format!(
            "{} is not {width}x{height} like the first image",
            s.path.display()
        )));
    }

    let encoded: Vec<Sdr> = timings.time("encode", || {
        let encoder = SpEncoder::new(
            width,
            height,
            spec.config.pipeline,
            spec.config.htm.connected_threshold,
            backend,
            spec.seed,
        )
        .map_err(CliError::in_phase("encode"))?;
        images
            .par_iter()
            .enumerate()
            .map(|(k, img)| {
                encoder
                    .encode(img, k as u64)
                    .map_err(CliError::in_phase("encode"))
            })
            .collect()
    })?;

    let (train, test) = split(dataset, spec.train_fraction);
    let classes = dataset.class_count();
    let templates = timings.time("train", || {
        let storage = TemplateStorage::for_backend(&backend);
        (0..classes)
            .into_par_iter()
            .map(|label| {
                let patterns: Vec<Sdr> = train
                    .iter()
                    .filter(|&&i| dataset.samples[i].label == label)
                    .map(|&i| encoded[i].clone())
                    .collect();
                train_template(label, &patterns, &spec.config.htm, storage, spec.seed)
                    .map_err(CliError::in_phase("train"))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let predictions: Vec<usize> = timings.time("classify", || {
        test.par_iter()
            .map(|&i| classify(&templates, &encoded[i]).map_err(CliError::in_phase("classify")))
            .collect()
    })?;

    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&i, &p) in test.iter().zip(&predictions) {
        confusion[dataset.samples[i].label][p] += 1;
    }
    let per_class = (0..classes)
        .map(|c| {
            let total: usize = confusion[c].iter().sum();
            ClassMetrics {
                label: dataset.labels[c].clone(),
                test_images: total,
                correct: confusion[c][c],
                accuracy: (total > 0).then(|| confusion[c][c] as f64 / total as f64),
            }
        })
        .collect();
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    let accuracy = if test.is_empty() {
        0.0
    } else {
        correct as f64 / test.len() as f64
    };

    let densities: Vec<f64> = encoded.iter().map(Sdr::density).collect();
    let sdr_density = DensityStats {
        mean: densities.iter().sum::<f64>() / densities.len() as f64,
        min: densities.iter().copied().fold(f64::INFINITY, f64::min),
        max: densities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };

    let pixels = (width * height) as u64;
    let b = spec.config.pipeline.block_size;
    let blocks = ((width / b) * (height / b)) as u64;
    let counts = CostCounts {
        sp_blocks_1x4: blocks.div_ceil(4),
        tm_cells_1x1: pixels,
        matcher_cells_1x1: pixels * classes as u64,
    };
    let est = estimate_cost(counts, &CostTable::default());

    let d = &spec.config.device;
    let report = MetricsReport {
        seed: spec.seed,
        dataset: DatasetSummary {
            classes,
            labels: dataset.labels.clone(),
            width,
            height,
            train_images: train.len(),
            test_images: test.len(),
        },
        backend: BackendSummary {
            kind: spec.backend,
            preset: spec.preset.clone(),
            r_on: d.r_on,
            r_off: d.r_off,
            levels: d.level_count(),
            v_th: d.v_th,
            t_set: d.t_set,
            p_switch: d.p_switch,
            sigma_r: d.sigma_r,
        },
        parameters: ParameterSummary {
            theta_c: spec.config.htm.connected_threshold,
            rho_plus: spec.config.htm.permanence_inc,
            rho_minus: spec.config.htm.permanence_dec,
            gamma_tm: spec.config.htm.template_threshold,
            iterations: spec.config.pipeline.iterations,
            block_size: b,
            region_blocks: spec.config.pipeline.region_blocks,
            train_fraction: spec.train_fraction,
        },
        accuracy,
        per_class,
        confusion,
        sdr_density,
        cost: CostSummary {
            sp_blocks_1x4: counts.sp_blocks_1x4,
            tm_cells_1x1: counts.tm_cells_1x1,
            matcher_cells_1x1: counts.matcher_cells_1x1,
            area_um2: est.area_um2,
            power_uw: est.power_uw,
        },
    };
    Ok(RunOutput { report, timings })
}

pub fn report_json(report: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// Confusion matrix as CSV with a header row of predicted labels.
pub fn confusion_csv(report: &MetricsReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["true\\predicted".to_string()];
    header.extend(report.dataset.labels.iter().cloned());
    let err = |e: csv::Error| CliError::Argument(e.to_string());
    w.write_record(&header).map_err(err)?;
    for (label, row) in report.dataset.labels.iter().zip(&report.confusion) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(usize::to_string));
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Argument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `<out>` gets the report, `<stem>.confusion.csv` and `<stem>.timing.json`
/// sit beside it.
pub fn write_run(out: &Path, run: &RunOutput) -> Result<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let write =
        |path: PathBuf, text: String| fs::write(&path, text).map_err(|e| CliError::io(&path, e));
    write(out.to_path_buf(), report_json(&run.report)?)?;
    write(
        out.with_extension("confusion.csv"),
        confusion_csv(&run.report)?,
    )?;
    write(
        out.with_extension("timing.json"),
        report_json(&run.timings)?,
    )
}

/// One parameter varied over a list of values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for SweepSpec {
    type Err = CliError;

    /// Parses `KEY=v1,v2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| CliError::Sweep(format!("`{s}` is not KEY=v1,v2,...")))?;
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
        if key.trim().is_empty() || values.iter().any(String::is_empty) {
            return Err(CliError::Sweep(format!("`{s}` has an empty key or value")));
        }
        Ok(Self {
            key: key.trim().to_string(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: String,
    pub accuracy: f64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub key: String,
    pub points: Vec<SweepPoint>,
}

/// Runs `spec` once per sweep value, each with `key = value` applied on
/// top of the spec's config. Points run in parallel and keep input order.
pub fn run_sweep(spec: &ExperimentSpec, sweep: &SweepSpec) -> Result<SweepReport> {
    let dataset = load_dataset(&spec.dataset)?;
    let specs: Vec<ExperimentSpec> = sweep
        .values
        .iter()
        .map(|v| {
            let config = SimConfig::parse_with_base(&format!("{} = {v}", sweep.key), spec.config)
                .map_err(|e| CliError::Sweep(e.to_string()))?;
            Ok(ExperimentSpec {
                config,
                ..spec.clone()
            })
        })
        .collect::<Result<_>>()?;
    let points = specs
        .par_iter()
        .zip(&sweep.values)
        .map(|(s, v)| {
            let report = run_on_dataset(s, &dataset)?.report;
            Ok(SweepPoint {
                value: v.clone(),
                accuracy: report.accuracy,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        key: sweep.key.clone(),
        points,
    })
}
