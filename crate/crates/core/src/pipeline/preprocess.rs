use crate::error::{check_len, HtmError, Result};

/// Interleaved multichannel image with arbitrary real samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_len("image samples", width * height * channels, data.len())?;
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }
}

/// Single-channel image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len("image pixels", width * height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

fn grayscale(img: &RawImage) -> Vec<f64> {
    if img.channels == 1 {
        return img.data.clone();
    }
    img.data
        .chunks(img.channels)
        .map(|px| px.iter().sum::<f64>() / img.channels as f64)
        .collect()
}

fn normalize(values: &mut [f64]) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in values.iter_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

/// Population standard deviation over each 3x3 window, borders replicated.
pub fn std_filter(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width as isize, img.height as isize);
    let px = |x: isize, y: isize| img.at(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize);
    let mut out = Vec::with_capacity(img.data.len());
    for y in 0..h {
        for x in 0..w {
            let mut window = [0.0; 9];
            let mut k = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    window[k] = px(x + dx, y + dy);
                    k += 1;
                }
            }
            let mean = window.iter().sum::<f64>() / 9.0;
            let var = window.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0;
            out.push(var.sqrt());
        }
    }
    GrayImage {
        width: img.width,
        height: img.height,
        data: out,
    }
}

/// Grayscale by channel mean, min-max normalization, then the 3x3
/// standard-deviation filter.
pub fn preprocess(img: &RawImage) -> Result<GrayImage> {
    if img.width == 0 || img.height == 0 || img.channels == 0 {
        return Err(HtmError::EmptyImage);
    }
    check_len(
        "image samples",
        img.width * img.height * img.channels,
        img.data.len(),
    )?;
    let mut gray = grayscale(img);
    normalize(&mut gray);
    Ok(std_filter(&GrayImage {
        width: img.width,
        height: img.height,
        data: gray,
    }))
}
