use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::Spectrogram;

/// Single-channel image with pixels in `[0, 1]`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    rows: usize,
    cols: usize,
    pixels: Vec<f32>,
}

impl ImageGrid {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("image dimensions {rows}x{cols} must be >= 1")));
        }
        if pixels.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} image needs {} pixels, got {}",
                rows * cols,
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(format!("pixel {i} = {} outside [0, 1]", pixels[i])));
        }
        Ok(Self { rows, cols, pixels })
    }

    /// Build from f64 values, clamping into `[0, 1]`. NaN maps to 0.
    pub fn from_f64_clamped(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) as f32 })
            .collect();
        Self::new(rows, cols, pixels)
    }

    pub fn filled(rows: usize, cols: usize, value: f32) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * self.cols + col]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }

    pub fn mean_square(&self) -> f64 {
        self.pixels.iter().map(|&p| (p as f64).powi(2)).sum::<f64>() / self.pixels.len() as f64
    }

    /// Mean pixel value of each column.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (c, s) in sums.iter_mut().enumerate() {
                *s += self.get(r, c) as f64;
            }
        }
        sums.iter().map(|s| s / self.rows as f64).collect()
    }

    /// Copy out a `rows x cols` window whose top-left corner is `(r0, c0)`.
    pub fn crop(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Result<ImageGrid> {
        if r0 + rows > self.rows || c0 + cols > self.cols {
            return Err(Error::invalid("crop window exceeds image"));
        }
        let mut px = Vec::with_capacity(rows * cols);
        for r in r0..r0 + rows {
            px.extend_from_slice(&self.pixels[r * self.cols + c0..r * self.cols + c0 + cols]);
        }
        ImageGrid::new(rows, cols, px)
    }

    pub fn flip_horizontal(&self) -> ImageGrid {
        let mut px = Vec::with_capacity(self.pixels.len());
        for r in 0..self.rows {
            px.extend(self.pixels[r * self.cols..(r + 1) * self.cols].iter().rev());
        }
        ImageGrid { rows: self.rows, cols: self.cols, pixels: px }
    }
}

/// Linear dB-to-intensity map clamped into `[0, 1]`.
pub fn to_image(spec: &Spectrogram, db_min: f64, db_max: f64) -> Result<ImageGrid> {
    if !(db_max > db_min) {
        return Err(Error::invalid(format!("db_max {db_max} must exceed db_min {db_min}")));
    }
    let span = db_max - db_min;
    let pixels = spec
        .values()
        .iter()
        .map(|v| ((v - db_min) / span).clamp(0.0, 1.0) as f32)
        .collect();
    ImageGrid::new(spec.rows(), spec.cols(), pixels)
}

/// Source coordinate and blend weight for half-pixel-centre sampling.
fn sample_axis(out_len: usize, in_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(in_len - 1);
            (lo, hi, x - lo as f64)
        })
        .collect()
}

/// Bilinear resize using half-pixel sample centres.
pub fn resize_bilinear(img: &ImageGrid, out_rows: usize, out_cols: usize) -> Result<ImageGrid> {
    if out_rows == 0 || out_cols == 0 {
        return Err(Error::invalid(format!("target size {out_rows}x{out_cols} must be >= 1")));
    }
    if out_rows == img.rows && out_cols == img.cols {
        return Ok(img.clone());
    }
    let ys = sample_axis(out_rows, img.rows);
    let xs = sample_axis(out_cols, img.cols);
    let mut out = Vec::with_capacity(out_rows * out_cols);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p = |r: usize, c: usize| img.get(r, c) as f64;
            let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
            let bottom = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
            out.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0) as f32);
        }
    }
    ImageGrid::new(out_rows, out_cols, out)
}

/// Binary portable graymap (P5), 8-bit, `round(255 * value)`.
pub fn write_pgm(img: &ImageGrid, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = format!("P5\n{} {}\n255\n", img.cols, img.rows).into_bytes();
    buf.extend(img.pixels.iter().map(|&p| (255.0 * p as f64).round() as u8));
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec_const(v: f64, rows: usize, cols: usize) -> Spectrogram {
        Spectrogram::from_values(vec![v; rows * cols], rows, cols, 0.1, 1.0, 0.0).unwrap()
    }

    #[test]
    fn to_image_clamps_and_maps_linearly() {
        let lo = to_image(&spec_const(-80.0, 2, 3), -80.0, -20.0).unwrap();
        assert!(lo.pixels().iter().all(|&p| p == 0.0));
        let hi = to_image(&spec_const(-20.0, 2, 3), -80.0, -20.0).unwrap();
        assert!(hi.pixels().iter().all(|&p| p == 1.0));
        let mid = to_image(&spec_const(-50.0, 2, 3), -80.0, -20.0).unwrap();
        assert!(mid.pixels().iter().all(|&p| p == 0.5));
        assert_eq!((mid.rows(), mid.cols()), (2, 3));
        assert!(to_image(&spec_const(-50.0, 1, 1), -20.0, -20.0).is_err());
    }

    #[test]
    fn resize_constant_and_identity() {
        let img = ImageGrid::filled(7, 5, 0.7).unwrap();
        let out = resize_bilinear(&img, 13, 3).unwrap();
        assert!(out.pixels().iter().all(|&p| (p - 0.7).abs() < 1e-7));

        let px: Vec<f32> = (0..35).map(|i| (i as f32) / 34.0).collect();
        let img = ImageGrid::new(7, 5, px).unwrap();
        assert_eq!(resize_bilinear(&img, 7, 5).unwrap(), img);
        assert!(resize_bilinear(&img, 0, 5).is_err());
    }

    #[test]
    fn resize_two_by_two_to_two_by_four() {
        let img = ImageGrid::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let out = resize_bilinear(&img, 2, 4).unwrap();
        // hand evaluation: source x = (j + 0.5) / 2 - 0.5 -> -0.25, 0.25, 0.75, 1.25
        // clamped to 0, 0.25, 0.75, 1
        let want = [0.0, 0.25, 0.75, 1.0];
        for r in 0..2 {
            for c in 0..4 {
                assert!((out.get(r, c) - want[c]).abs() < 1e-7);
            }
            for c in 1..4 {
                assert!(out.get(r, c) >= out.get(r, c - 1));
            }
        }
    }

    #[test]
    fn pgm_header_and_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = ImageGrid::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        write_pgm(&img, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 1\n255\n");
        assert_eq!(&bytes[11..], &[0, 128, 255]);
    }

    #[test]
    fn image_rejects_out_of_range() {
        assert!(ImageGrid::new(1, 2, vec![0.2, 1.5]).is_err());
        assert!(ImageGrid::new(1, 2, vec![0.2, f32::NAN]).is_err());
        assert!(ImageGrid::new(0, 2, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn to_image_is_monotone(a in -150.0f64..50.0, b in -150.0f64..50.0) {
            let s = Spectrogram::from_values(vec![a.max(-120.0), b.max(-120.0)], 1, 2, 1.0, 1.0, 0.0).unwrap();
            let img = to_image(&s, -90.0, -10.0).unwrap();
            if a <= b { prop_assert!(img.get(0, 0) <= img.get(0, 1)); }
            else { prop_assert!(img.get(0, 0) >= img.get(0, 1)); }
        }
    }
}
