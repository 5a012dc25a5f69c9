use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;
use crate::spectra::ImageGrid;

/// Pre-clamp noise field added by [`add_awgn_image`]: zero-mean Gaussian with
/// variance `mean(img²) / 10^(snr/10)`.
pub fn awgn_noise(img: &ImageGrid, snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid("snr_db must be finite or +inf"));
    }
    if snr_db == f64::INFINITY {
        return Ok(vec![0.0; img.pixels().len()]);
    }
    let sd = (img.mean_square() / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut r = rng::stream(seed, &[rng::tag::AWGN]);
    Ok((0..img.pixels().len())
        .map(|_| {
            let n: f64 = r.sample(StandardNormal);
            sd * n
        })
        .collect())
}

/// Image plus [`awgn_noise`], clamped back into `[0, 1]`. `f64::INFINITY`
/// returns the input.
pub fn add_awgn_image(img: &ImageGrid, snr_db: f64, seed: u64) -> Result<ImageGrid> {
    let noise = awgn_noise(img, snr_db, seed)?;
    if snr_db == f64::INFINITY {
        return Ok(img.clone());
    }
    let noisy: Vec<f64> = img.pixels().iter().zip(&noise).map(|(&p, n)| p as f64 + n).collect();
    ImageGrid::from_f64_clamped(img.rows(), img.cols(), &noisy)
}

/// Bootstrap noise source: tiles cut from low-energy (non-activity) columns
/// of measured images.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchNoiseModel {
    patches: Vec<ImageGrid>,
    tile_rows: usize,
    tile_cols: usize,
}

impl PatchNoiseModel {
    pub fn new(patches: Vec<ImageGrid>, tile_rows: usize, tile_cols: usize) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::invalid("patch noise model needs at least one patch"));
        }
        if patches.iter().any(|p| p.rows() != tile_rows || p.cols() != tile_cols) {
            return Err(Error::shape(format!("every patch must be {tile_rows}x{tile_cols}")));
        }
        Ok(Self { patches, tile_rows, tile_cols })
    }

    pub fn patches(&self) -> &[ImageGrid] {
        &self.patches
    }

    pub fn tile(&self) -> (usize, usize) {
        (self.tile_rows, self.tile_cols)
    }
}

/// Linear-interpolated quantile of `values` (need not be sorted).
fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Harvest tiles on a non-overlapping grid whose mean column energy does not
/// exceed the `energy_quantile` of that image's column energies.
pub fn fit_patch_noise(
    measured: &[ImageGrid],
    energy_quantile: f64,
    tile: (usize, usize),
) -> Result<PatchNoiseModel> {
    let (tr, tc) = tile;
    if measured.is_empty() {
        return Err(Error::invalid("patch noise needs at least one measured image"));
    }
    if !(energy_quantile > 0.0 && energy_quantile < 1.0) {
        return Err(Error::invalid(format!("energy quantile {energy_quantile} outside (0, 1)")));
    }
    if tr == 0 || tc == 0 {
        return Err(Error::invalid("tile dimensions must be positive"));
    }
    let mut patches = Vec::new();
    for img in measured {
        if tr > img.rows() || tc > img.cols() {
            return Err(Error::invalid(format!(
                "tile {tr}x{tc} does not fit a {}x{} image",
                img.rows(),
                img.cols()
            )));
        }
        let energy = img.column_means();
        let threshold = quantile(&energy, energy_quantile);
        for c0 in (0..=img.cols() - tc).step_by(tc) {
            let tile_energy = energy[c0..c0 + tc].iter().sum::<f64>() / tc as f64;
            if tile_energy > threshold {
                continue;
            }
            for r0 in (0..=img.rows() - tr).step_by(tr) {
                patches.push(img.crop(r0, c0, tr, tc)?);
            }
        }
    }
    if patches.is_empty() {
        return Err(Error::NoNonActivityZone);
    }
    PatchNoiseModel::new(patches, tr, tc)
}

/// `clamp(img + gain * Q)` where `Q` tiles randomly drawn patches.
pub fn apply_patch_noise(img: &ImageGrid, model: &PatchNoiseModel, gain: f64, seed: u64) -> Result<ImageGrid> {
    if !(0.0..=1.0).contains(&gain) {
        return Err(Error::invalid(format!("patch gain {gain} outside [0, 1]")));
    }
    if model.patches.is_empty() {
        return Err(Error::invalid("empty patch noise model"));
    }
    let (rows, cols) = (img.rows(), img.cols());
    let mut field = vec![0.0f64; rows * cols];
    let mut r = rng::stream(seed, &[rng::tag::PATCH]);
    for r0 in (0..rows).step_by(model.tile_rows) {
        for c0 in (0..cols).step_by(model.tile_cols) {
            let patch = &model.patches[r.random_range(0..model.patches.len())];
            for dr in 0..model.tile_rows.min(rows - r0) {
                for dc in 0..model.tile_cols.min(cols - c0) {
                    field[(r0 + dr) * cols + c0 + dc] = patch.get(dr, dc) as f64;
                }
            }
        }
    }
    let out: Vec<f64> = img.pixels().iter().zip(&field).map(|(&p, q)| p as f64 + gain * q).collect();
    ImageGrid::from_f64_clamped(rows, cols, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_images(n: usize, seed: u64) -> Vec<ImageGrid> {
        let mut r = rng::stream(seed, &[5]);
        (0..n)
            .map(|_| ImageGrid::new(100, 100, (0..10_000).map(|_| r.random::<f32>()).collect()).unwrap())
            .collect()
    }

    #[test]
    fn awgn_matches_requested_snr() {
        let ones = ImageGrid::filled(100, 100, 1.0).unwrap();
        let noise = awgn_noise(&ones, 10.0, 4).unwrap();
        let mean = noise.iter().sum::<f64>() / noise.len() as f64;
        let var = noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (noise.len() - 1) as f64;
        assert!((var - 0.1).abs() <= 0.005, "variance {var}");
        assert_eq!(add_awgn_image(&ones, f64::INFINITY, 4).unwrap(), ones);
        let img = &noise_images(1, 2)[0];
        assert_eq!(add_awgn_image(img, 3.0, 9).unwrap(), add_awgn_image(img, 3.0, 9).unwrap());
        assert_ne!(add_awgn_image(img, 3.0, 9).unwrap(), add_awgn_image(img, 3.0, 10).unwrap());
        assert!(add_awgn_image(img, f64::NAN, 9).is_err());
    }

    #[test]
    fn pure_noise_yields_many_patches() {
        let set = noise_images(4, 1);
        let model = fit_patch_noise(&set, 0.9, (10, 10)).unwrap();
        let available = set.len() * 10 * 10;
        assert!(model.patches().len() * 2 >= available, "{} of {available}", model.patches().len());
        assert!(matches!(fit_patch_noise(&set, 1e-9, (10, 10)), Err(Error::NoNonActivityZone)));
        assert!(fit_patch_noise(&set, 1.0, (10, 10)).is_err());
    }

    #[test]
    fn all_zero_images_give_zero_patches() {
        let zeros = vec![ImageGrid::filled(100, 100, 0.0).unwrap(); 2];
        let model = fit_patch_noise(&zeros, 0.5, (20, 25)).unwrap();
        assert_eq!(model.patches().len(), 2 * 5 * 4);
        assert!(model.patches().iter().all(|p| p.pixels().iter().all(|&v| v == 0.0)));
        let img = &noise_images(1, 3)[0];
        assert_eq!(&apply_patch_noise(img, &model, 0.7, 1).unwrap(), img);
    }

    #[test]
    fn patch_noise_identities() {
        let set = noise_images(2, 7);
        let model = fit_patch_noise(&set, 0.8, (10, 20)).unwrap();
        let img = ImageGrid::filled(100, 100, 0.2).unwrap();
        assert_eq!(apply_patch_noise(&img, &model, 0.0, 3).unwrap(), img);
        let a = apply_patch_noise(&img, &model, 0.5, 3).unwrap();
        assert_eq!(a, apply_patch_noise(&img, &model, 0.5, 3).unwrap());
        assert!(a.mean() > img.mean());
        assert!(apply_patch_noise(&img, &model, 1.5, 3).is_err());
    }
}
