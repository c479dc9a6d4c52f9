//! Image folders: one subfolder per class holding PGM or CSV images.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};
use memhtm::pipeline::RawImage;
use memhtm::rng::{Domain, RngStream};

use crate::error::{CliError, Result};

/// One labeled image.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub label: usize,
    pub path: PathBuf,
    pub image: RawImage,
}

/// Images grouped by class; labels are the sorted folder names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub labels: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    /// Samples of class `label`, in file-name order.
    pub fn class_samples(&self, label: usize) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.label == label)
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        out.push(entry.map_err(|e| CliError::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Loads every class folder under `root`. Files at the top level and files
/// with other extensions are ignored.
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut samples = Vec::new();
    for class_dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let label = labels.len();
        let before = samples.len();
        for path in sorted_entries(&class_dir)? {
            let image = match extension(&path).as_deref() {
                Some("pgm") | Some("pnm") | Some("ppm") => load_pnm(&path)?,
                Some("csv") => load_csv(&path)?,
                _ => continue,
            };
            samples.push(Sample { label, path, image });
        }
        if samples.len() == before {
            return Err(CliError::EmptyClass { path: class_dir });
        }
        let name = class_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        labels.push(name);
    }
    if labels.is_empty() {
        return Err(CliError::Dataset(format!(
            "{} contains no class folders",
            root.display()
        )));
    }
    Ok(Dataset { labels, samples })
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// Decodes a PNM file (P2/P5 gray, P3/P6 color) to samples in `[0, 1]`.
pub fn load_pnm(path: &Path) -> Result<RawImage> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |message: String| CliError::Image {
        path: path.to_path_buf(),
        message,
    };
    let img = ImageReader::with_format(Cursor::new(bytes), ImageFormat::Pnm)
        .decode()
        .map_err(|e| bad(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data): (usize, Vec<f64>) = match img {
        DynamicImage::ImageLuma8(b) => (
            1,
            b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageLuma16(b) => (
            1,
            b.into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
        ),
        DynamicImage::ImageRgb8(b) => (
            3,
            b.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageRgb16(b) => (
            3,
            b.into_raw()
                .into_iter()
                .map(|v| v as f64 / 65535.0)
                .collect(),
        ),
        other => {
            return Err(bad(format!("unsupported pixel layout {:?}", other.color())));
        }
    };
    RawImage::new(w, h, channels, data).map_err(|e| bad(e.to_string()))
}

/// Reads a headerless CSV matrix of gray values in `[0, 1]`.
pub fn load_csv(path: &Path) -> Result<RawImage> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
    let mut width = None;
    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| CliError::Csv {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(bad(format!("expected {w} values, found {}", record.len())));
            }
            _ => {}
        }
        for field in &record {
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("`{field}` is not a number")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(format!("{v} lies outside [0, 1]")));
            }
            data.push(v);
        }
        rows += 1;
    }
    let width = width.ok_or_else(|| CliError::Csv {
        path: path.to_path_buf(),
        line: 0,
        message: "no rows".into(),
    })?;
    RawImage::gray(width, rows, data).map_err(|e| CliError::Csv {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Writes an ASCII (P2) graymap with maxval 255.
pub fn write_pgm(path: &Path, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let mut bytes = Vec::new();
    PnmEncoder::new(&mut bytes)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Ascii))
        .write_image(pixels, width as u32, height as u32, ExtendedColorType::L8)
        .map_err(|e| CliError::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Shape of the synthetic recognition suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub images_per_class: usize,
    pub width: usize,
    pub height: usize,
    pub flip_probability: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 10,
            images_per_class: 40,
            width: 16,
            height: 16,
            flip_probability: 0.05,
            seed: 42,
        }
    }
}

/// Encoder geometry for the synthetic suite, written next to the classes.
/// Many mask draws per pixel average out device read noise.
pub const SYNTHETIC_CONFIG: &str = "\
block_size = 1
region_blocks = 2
iterations = 256
";

/// Writes `classes` folders of noisy copies of random binary base patterns,
/// plus `suite.conf` with a matching encoder geometry.
pub fn generate_synthetic(root: &Path, spec: SyntheticSpec) -> Result<()> {
    let n = spec.width * spec.height;
    for class in 0..spec.classes {
        let dir = root.join(format!("class_{class:02}"));
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let mut base_rng = RngStream::keyed(spec.seed, Domain::Dataset, &[class as u64, 0]);
        let base: Vec<bool> = (0..n).map(|_| base_rng.bernoulli(0.5)).collect();
        for k in 0..spec.images_per_class {
            let mut rng =
                RngStream::keyed(spec.seed, Domain::Dataset, &[class as u64, 1, k as u64]);
            let pixels: Vec<u8> = base
                .iter()
                .map(|&b| {
                    if b ^ rng.bernoulli(spec.flip_probability) {
                        255
                    } else {
                        0
                    }
                })
                .collect();
            write_pgm(
                &dir.join(format!("img_{k:03}.pgm")),
                spec.width,
                spec.height,
                &pixels,
            )?;
        }
    }
    let conf = root.join("suite.conf");
    fs::write(&conf, SYNTHETIC_CONFIG).map_err(|e| CliError::io(&conf, e))
}
