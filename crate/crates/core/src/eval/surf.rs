use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::ImageGrid;

pub const DESCRIPTOR_LEN: usize = 64;
pub const EMBEDDING_LEN: usize = 2 * DESCRIPTOR_LEN;

/// Summed-area table: `S[r][c]` is the sum of pixels in `[0, r] x [0, c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    rows: usize,
    cols: usize,
    sums: Vec<f64>,
}

pub fn integral_image(img: &ImageGrid) -> IntegralImage {
    let (rows, cols) = (img.rows(), img.cols());
    let mut sums = vec![0.0; rows * cols];
    for r in 0..rows {
        let mut row_sum = 0.0;
        for c in 0..cols {
            row_sum += img.get(r, c) as f64;
            sums[r * cols + c] = row_sum + if r > 0 { sums[(r - 1) * cols + c] } else { 0.0 };
        }
    }
    IntegralImage { rows, cols, sums }
}

impl IntegralImage {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.sums[r * self.cols + c]
    }

    /// Sum over rows `[r, r + h)` and cols `[c, c + w)`, clipped to the image.
    pub fn box_sum(&self, r: i64, c: i64, h: i64, w: i64) -> f64 {
        let r0 = r.max(0);
        let c0 = c.max(0);
        let r1 = (r + h).min(self.rows as i64) - 1;
        let c1 = (c + w).min(self.cols as i64) - 1;
        if r1 < r0 || c1 < c0 {
            return 0.0;
        }
        let at = |r: i64, c: i64| if r < 0 || c < 0 { 0.0 } else { self.get(r as usize, c as usize) };
        at(r1, c1) - at(r0 - 1, c1) - at(r1, c0 - 1) + at(r0 - 1, c0 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub row: f64,
    pub col: f64,
    pub scale: f64,
    /// Determinant-of-Hessian score.
    pub response: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub octaves: usize,
    pub threshold: f64,
    /// Keep at most this many strongest keypoints.
    pub max_keypoints: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { octaves: 3, threshold: 2e-3, max_keypoints: 400 }
    }
}

/// Box-filter side length for `octave` (0-based) and `interval` (0..4).
fn filter_size(octave: usize, interval: usize) -> usize {
    3 * ((1 << (octave + 1)) * (interval + 1) + 1)
}

/// Approximated determinant of the Hessian at one position and filter size.
fn hessian_response(ii: &IntegralImage, r: i64, c: i64, size: usize) -> f64 {
    let l = (size / 3) as i64;
    let w = size as i64;
    let b = (w - 1) / 2;
    let dxx = ii.box_sum(r - l + 1, c - b, 2 * l - 1, w) - 3.0 * ii.box_sum(r - l + 1, c - l / 2, 2 * l - 1, l);
    let dyy = ii.box_sum(r - b, c - l + 1, w, 2 * l - 1) - 3.0 * ii.box_sum(r - l / 2, c - l + 1, l, 2 * l - 1);
    let dxy = ii.box_sum(r - l, c + 1, l, l) + ii.box_sum(r + 1, c - l, l, l)
        - ii.box_sum(r - l, c - l, l, l)
        - ii.box_sum(r + 1, c + 1, l, l);
    let norm = 1.0 / (w * w) as f64;
    let (dxx, dyy, dxy) = (dxx * norm, dyy * norm, dxy * norm);
    dxx * dyy - 0.81 * dxy * dxy
}

/// Dense response map for one filter size; NaN where the filter does not fit.
fn response_map(ii: &IntegralImage, size: usize) -> Vec<f64> {
    let (rows, cols) = (ii.rows, ii.cols);
    let b = (size - 1) / 2;
    let mut out = vec![f64::NAN; rows * cols];
    if 2 * b >= rows || 2 * b >= cols {
        return out;
    }
    for r in b..rows - b {
        for c in b..cols - b {
            out[r * cols + c] = hessian_response(ii, r as i64, c as i64, size);
        }
    }
    out
}

/// Fast-Hessian detection with 3x3x3 non-maximum suppression over
/// (interval, row, col) within each octave. Sampling step is one pixel at
/// every octave so detection commutes with mirroring.
pub fn detect_keypoints(img: &ImageGrid, cfg: &DetectorConfig) -> Vec<Keypoint> {
    let ii = integral_image(img);
    let (rows, cols) = (img.rows(), img.cols());
    let mut found = Vec::new();
    for octave in 0..cfg.octaves {
        let maps: Vec<Vec<f64>> = (0..4).map(|i| response_map(&ii, filter_size(octave, i))).collect();
        for i in 1..3 {
            let size = filter_size(octave, i);
            for r in 1..rows.saturating_sub(1) {
                'pos: for c in 1..cols.saturating_sub(1) {
                    let v = maps[i][r * cols + c];
                    if !(v > cfg.threshold) {
                        continue;
                    }
                    for m in &maps[i - 1..=i + 1] {
                        for rr in r - 1..=r + 1 {
                            for cc in c - 1..=c + 1 {
                                let n = m[rr * cols + cc];
                                if std::ptr::eq(m, &maps[i]) && rr == r && cc == c {
                                    continue;
                                }
                                // a neighbour outside the filter's support cannot vouch for a maximum
                                if n.is_nan() || n >= v {
                                    continue 'pos;
                                }
                            }
                        }
                    }
                    found.push(Keypoint { row: r as f64, col: c as f64, scale: 1.2 * size as f64 / 9.0, response: v });
                }
            }
        }
    }
    found.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.scale.total_cmp(&b.scale))
            .then(a.row.total_cmp(&b.row))
            .then(a.col.total_cmp(&b.col))
    });
    found.truncate(cfg.max_keypoints);
    found
}

/// Upright descriptor window half-extent in pixels, including the wavelet.
fn half_extent(scale: f64) -> f64 {
    10.0 * scale + wavelet_half(scale) as f64
}

fn wavelet_half(scale: f64) -> i64 {
    (scale.round() as i64).max(1)
}

pub fn has_margin(img: &ImageGrid, kp: &Keypoint) -> bool {
    let e = half_extent(kp.scale);
    kp.row - e >= 0.0 && kp.col - e >= 0.0 && kp.row + e <= (img.rows() - 1) as f64 && kp.col + e <= (img.cols() - 1) as f64
}

/// Sum of pixels in rows `[r, r + h)` and cols `[c, c + w)`, all in bounds.
fn direct_sum(img: &ImageGrid, r: i64, c: i64, h: i64, w: i64) -> f64 {
    let mut s = 0.0;
    for rr in r..r + h {
        for cc in c..c + w {
            s += img.get(rr as usize, cc as usize) as f64;
        }
    }
    s
}

/// Upright SURF descriptor: a 4x4 grid of subregions, each summarised by
/// `(Σdx, Σ|dx|, Σdy, Σ|dy|)` of Gaussian-weighted Haar responses on a
/// 20s x 20s window, L2-normalised. A window with no gradient yields the
/// all-zero sentinel.
pub fn describe(img: &ImageGrid, kp: &Keypoint) -> Result<Vec<f64>> {
    if !has_margin(img, kp) {
        return Err(Error::InsufficientMargin { row: kp.row, col: kp.col, scale: kp.scale });
    }
    let s = kp.scale;
    let h = wavelet_half(s);
    let sigma = 3.3 * s;
    let mut d = vec![0.0; DESCRIPTOR_LEN];
    for i in 0..20 {
        let dy_off = (i as f64 - 9.5) * s;
        let r = (kp.row + dy_off).round() as i64;
        for j in 0..20 {
            let dx_off = (j as f64 - 9.5) * s;
            let c = (kp.col + dx_off).round() as i64;
            let g = (-(dx_off * dx_off + dy_off * dy_off) / (2.0 * sigma * sigma)).exp();
            let dx = g * (direct_sum(img, r - h, c, 2 * h, h) - direct_sum(img, r - h, c - h, 2 * h, h));
            let dy = g * (direct_sum(img, r, c - h, h, 2 * h) - direct_sum(img, r - h, c - h, h, 2 * h));
            let k = 4 * ((i / 5) * 4 + j / 5);
            d[k] += dx;
            d[k + 1] += dx.abs();
            d[k + 2] += dy;
            d[k + 3] += dy.abs();
        }
    }
    let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(d);
    }
    d.iter_mut().for_each(|v| *v /= norm);
    Ok(d)
}

/// Mean followed by population standard deviation of each descriptor
/// dimension; zero when `descriptors` is empty.
pub fn pool_descriptors(descriptors: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; EMBEDDING_LEN];
    if descriptors.is_empty() {
        return out;
    }
    let n = descriptors.len() as f64;
    for k in 0..DESCRIPTOR_LEN {
        let mean = descriptors.iter().map(|d| d[k]).sum::<f64>() / n;
        let var = descriptors.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / n;
        out[k] = mean;
        out[DESCRIPTOR_LEN + k] = var.sqrt();
    }
    out
}

/// 128-d per-image embedding from every keypoint whose window fits.
pub fn image_embedding(img: &ImageGrid, cfg: &DetectorConfig) -> Vec<f64> {
    let descriptors: Vec<Vec<f64>> = detect_keypoints(img, cfg)
        .iter()
        .filter(|kp| has_margin(img, kp))
        .map(|kp| describe(img, kp).expect("margin checked"))
        .collect();
    pool_descriptors(&descriptors)
}
