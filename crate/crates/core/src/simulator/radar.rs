use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::spectra::{resize_bilinear, stft, to_image, ImageGrid, IqSignal, Spectrogram, StftConfig};

use super::kinematics::{activity_profile, ActivityId, ActivityProfile, MAX_RANGE_M, MIN_RANGE_M};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    pub carrier_hz: f64,
    pub sample_rate_hz: f64,
    /// Longest profile duration the radar will record.
    pub duration_s: f64,
    pub c_mps: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self { carrier_hz: 2.472e9, sample_rate_hz: 2000.0, duration_s: 10.0, c_mps: 2.9979e8 }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_hz > 0.0 && self.sample_rate_hz > 0.0 && self.duration_s > 0.0 && self.c_mps > 0.0) {
            return Err(Error::invalid("radar carrier, sample rate, duration and c must be > 0"));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        self.c_mps / self.carrier_hz
    }

    /// Doppler shift of a scatterer closing at `speed_mps`.
    pub fn doppler_hz(&self, speed_mps: f64) -> f64 {
        2.0 * speed_mps * self.carrier_hz / self.c_mps
    }
}

/// Spectrogram-to-image rendering parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    /// Doppler band kept for the image: `[-band_hz, band_hz]`.
    pub band_hz: f64,
    /// Intensity range below the spectrogram peak mapped onto `[0, 1]`.
    pub dynamic_range_db: f64,
    pub out_rows: usize,
    pub out_cols: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { band_hz: 120.0, dynamic_range_db: 45.0, out_rows: 100, out_cols: 100 }
    }
}

/// Everything needed to turn a profile into an image.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimConfig {
    pub radar: RadarConfig,
    pub stft: StftConfig,
    pub render: RenderConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathEcho {
    pub delay_s: f64,
    pub doppler_offset_hz: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub attenuation: f64,
}

/// Propagation environment applied on top of a clean return.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub multipath_echoes: Vec<MultipathEcho>,
    pub occlusion_windows: Vec<OcclusionWindow>,
    /// Amplitude of the static zero-Doppler return.
    pub clutter_gain: f64,
    /// Target-return to noise power ratio; `f64::INFINITY` disables noise.
    pub snr_db: f64,
}

impl EnvConfig {
    /// No echoes, no occlusion, no clutter, no noise.
    pub fn identity() -> Self {
        Self { multipath_echoes: vec![], occlusion_windows: vec![], clutter_gain: 0.0, snr_db: f64::INFINITY }
    }

    pub fn validate(&self, duration_s: f64) -> Result<()> {
        for e in &self.multipath_echoes {
            if !(0.0..=1.0).contains(&e.gain) || e.delay_s < 0.0 || !e.doppler_offset_hz.is_finite() {
                return Err(Error::invalid(format!("invalid multipath echo {e:?}")));
            }
        }
        for w in &self.occlusion_windows {
            if !(0.0..=1.0).contains(&w.attenuation) || w.t_start < 0.0 || w.t_end > duration_s || w.t_end < w.t_start {
                return Err(Error::invalid(format!("invalid occlusion window {w:?}")));
            }
        }
        if !(self.clutter_gain >= 0.0 && self.clutter_gain.is_finite()) {
            return Err(Error::invalid("clutter gain must be finite and >= 0"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid("snr_db must be finite or +inf"));
        }
        Ok(())
    }
}

/// Draw a pseudo-measurement environment for one recording.
pub fn random_env(duration_s: f64, seed: u64) -> EnvConfig {
    let mut r = rng::stream(seed, &[rng::tag::ENV]);
    let n_echoes = r.random_range(1..=3);
    let multipath_echoes = (0..n_echoes)
        .map(|_| MultipathEcho {
            delay_s: r.random_range(0.03..0.25),
            doppler_offset_hz: r.random_range(6.0..18.0) * if r.random::<bool>() { 1.0 } else { -1.0 },
            gain: r.random_range(0.25..0.55),
        })
        .collect();
    let occlusion_windows = if r.random::<f64>() < 0.6 {
        let len = r.random_range(0.6..1.6);
        let start = r.random_range(0.5..(duration_s - len - 0.5).max(0.6));
        vec![OcclusionWindow { t_start: start, t_end: (start + len).min(duration_s), attenuation: r.random_range(0.6..0.95) }]
    } else {
        vec![]
    };
    EnvConfig {
        multipath_echoes,
        occlusion_windows,
        clutter_gain: r.random_range(0.6..1.6),
        snr_db: r.random_range(-4.0..4.0),
    }
}

/// Sum of point-scatterer returns with the quasi-monostatic phase
/// `exp(-j 4π f_c r(t) / c)`.
pub fn synthesize_return(profile: &ActivityProfile, radar: &RadarConfig) -> Result<IqSignal> {
    radar.validate()?;
    if profile.tracks.is_empty() {
        return Err(Error::invalid("profile has no tracks"));
    }
    if profile.duration_s > radar.duration_s + 1e-9 || profile.duration_s <= 0.0 {
        return Err(Error::invalid(format!(
            "profile duration {} s exceeds radar budget {} s",
            profile.duration_s, radar.duration_s
        )));
    }
    let fs = radar.sample_rate_hz;
    let n = (profile.duration_s * fs).round() as usize;
    let k = 4.0 * PI * radar.carrier_hz / radar.c_mps;
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    for (ti, track) in profile.tracks.iter().enumerate() {
        for (i, s) in samples.iter_mut().enumerate() {
            let t = i as f64 / fs;
            let r = track.range_at(t);
            if !(MIN_RANGE_M..=MAX_RANGE_M).contains(&r) {
                return Err(Error::RangeOutOfBounds { track: ti, t, range_m: r });
            }
            *s += Complex64::from_polar(track.rcs_amp, -k * r);
        }
    }
    IqSignal::new(samples, fs)
}

/// Spectrogram of a signal rendered to a fixed-size image: band crop,
/// peak-referenced dB window, bilinear resize.
pub fn render(signal: &IqSignal, cfg: &SimConfig) -> Result<(Spectrogram, ImageGrid)> {
    let spec = stft(signal, &cfg.stft)?.crop_band(-cfg.render.band_hz, cfg.render.band_hz)?;
    let peak = spec.max();
    let img = to_image(&spec, peak - cfg.render.dynamic_range_db, peak)?;
    let img = resize_bilinear(&img, cfg.render.out_rows, cfg.render.out_cols)?;
    Ok((spec, img))
}

pub fn simulate_clean(activity: ActivityId, subject_scale: f64, cfg: &SimConfig, seed: u64) -> Result<ImageGrid> {
    let profile = activity_profile(activity, subject_scale, seed)?;
    let signal = synthesize_return(&profile, &cfg.radar)?;
    Ok(render(&signal, cfg)?.1)
}

/// Apply an environment to a clean return at IQ level.
pub(crate) fn apply_env(clean: &IqSignal, env: &EnvConfig, seed: u64) -> Result<IqSignal> {
    let fs = clean.sample_rate_hz();
    let base = clean.samples();
    env.validate(clean.duration_s())?;
    let mut x = base.to_vec();
    for e in &env.multipath_echoes {
        let shift = (e.delay_s * fs).round() as usize;
        for i in shift..x.len() {
            let t = i as f64 / fs;
            x[i] += base[i - shift] * Complex64::from_polar(e.gain, 2.0 * PI * e.doppler_offset_hz * t);
        }
    }
    for w in &env.occlusion_windows {
        let lo = (w.t_start * fs).round() as usize;
        let hi = ((w.t_end * fs).round() as usize).min(x.len());
        for s in &mut x[lo.min(hi)..hi] {
            *s *= 1.0 - w.attenuation;
        }
    }
    if env.clutter_gain > 0.0 {
        let c = Complex64::new(env.clutter_gain, 0.0);
        x.iter_mut().for_each(|s| *s += c);
    }
    if env.snr_db.is_finite() {
        let var = clean.mean_power() / 10f64.powf(env.snr_db / 10.0);
        let sd = (var / 2.0).sqrt();
        let mut r = rng::stream(seed, &[rng::tag::NOISE]);
        for s in &mut x {
            let re: f64 = r.sample(StandardNormal);
            let im: f64 = r.sample(StandardNormal);
            *s += Complex64::new(sd * re, sd * im);
        }
    }
    IqSignal::new(x, fs)
}

/// Clean return plus multipath, occlusion, clutter and noise.
pub fn simulate_measured(
    activity: ActivityId,
    subject_scale: f64,
    cfg: &SimConfig,
    env: &EnvConfig,
    seed: u64,
) -> Result<ImageGrid> {
    let profile = activity_profile(activity, subject_scale, seed)?;
    let clean = synthesize_return(&profile, &cfg.radar)?;
    let measured = apply_env(&clean, env, seed)?;
    Ok(render(&measured, cfg)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::kinematics::{RangePath, ScattererTrack};

    fn single(path: RangePath, rcs: f64, duration_s: f64) -> ActivityProfile {
        ActivityProfile {
            activity: ActivityId::SitDown,
            tracks: vec![ScattererTrack { path, offset_m: 0.0, oscillations: vec![], rcs_amp: rcs }],
            duration_s,
        }
    }

    fn linear(r0: f64, v: f64, duration_s: f64) -> RangePath {
        RangePath::new(vec![(0.0, r0), (duration_s, r0 - v * duration_s)], crate::simulator::Ease::Linear).unwrap()
    }

    #[test]
    fn constant_velocity_ridge_sits_at_doppler_shift() {
        let radar = RadarConfig::default();
        let cfg = StftConfig::default();
        assert!((radar.doppler_hz(1.0) - 16.49).abs() < 0.01);
        for v in [0.5, 1.0, 2.0, -1.0] {
            let p = single(linear(4.0, v, 1.5), 1.0, 1.5);
            let spec = stft(&synthesize_return(&p, &radar).unwrap(), &cfg).unwrap();
            let expect = spec.nearest_row(radar.doppler_hz(v));
            for col in 0..spec.cols() {
                let row = spec.column_argmax(col);
                assert!(row.abs_diff(expect) <= 1, "v {v}: col {col} peak row {row}, expected {expect}");
            }
        }
    }

    #[test]
    fn static_tracks_superpose_at_zero_hz() {
        let radar = RadarConfig::default();
        let a = single(RangePath::constant(2.0), 0.7, 2.0);
        let mut ab = a.clone();
        ab.tracks.push(ScattererTrack { rcs_amp: 0.4, ..a.tracks[0].clone() });
        let sa = synthesize_return(&a, &radar).unwrap();
        let sab = synthesize_return(&ab, &radar).unwrap();
        for s in sab.samples() {
            assert!((s.norm() - 1.1).abs() < 1e-12);
        }
        let spec = stft(&sa, &StftConfig::default()).unwrap();
        let zero = spec.nearest_row(0.0);
        assert!((0..spec.cols()).all(|c| spec.column_argmax(c) == zero));
    }

    #[test]
    fn out_of_range_track_is_an_error() {
        let p = single(linear(1.0, 1.0, 1.0), 1.0, 1.0);
        assert!(matches!(synthesize_return(&p, &RadarConfig::default()), Err(Error::RangeOutOfBounds { .. })));
    }

    #[test]
    fn clean_images_are_deterministic_and_sized() {
        let cfg = SimConfig::default();
        for activity in ActivityId::ALL {
            let a = simulate_clean(activity, 1.0, &cfg, 5).unwrap();
            assert_eq!((a.rows(), a.cols()), (100, 100));
            if activity == ActivityId::Punching {
                assert_eq!(a, simulate_clean(activity, 1.0, &cfg, 5).unwrap());
            }
        }
    }

    #[test]
    fn body_rotation_alternates_doppler_sign() {
        let cfg = SimConfig::default();
        let p = activity_profile(ActivityId::BodyRotating, 1.0, 2).unwrap();
        let (spec, _) = render(&synthesize_return(&p, &cfg.radar).unwrap(), &cfg).unwrap();
        let (mut pos, mut neg) = (0, 0);
        for col in 0..spec.cols() {
            let (mut num, mut den) = (0.0, 0.0);
            for row in 0..spec.rows() {
                let f = spec.row_frequency_hz(row);
                if f.abs() < 2.0 * spec.freq_step_hz {
                    continue; // torso body line
                }
                let w = 10f64.powf(spec.get(row, col) / 10.0);
                num += w * f;
                den += w;
            }
            let centroid = num / den;
            if centroid > 3.0 {
                pos += 1;
            } else if centroid < -3.0 {
                neg += 1;
            }
        }
        assert!(pos > 5 && neg > 5, "positive {pos}, negative {neg}");
    }

    #[test]
    fn identity_environment_reproduces_clean() {
        let cfg = SimConfig::default();
        for activity in [ActivityId::WalkToFall, ActivityId::PickUpObject] {
            let clean = simulate_clean(activity, 0.9, &cfg, 11).unwrap();
            let measured = simulate_measured(activity, 0.9, &cfg, &EnvConfig::identity(), 11).unwrap();
            assert_eq!(clean, measured);
        }
    }

    #[test]
    fn injected_noise_power_follows_snr() {
        let clean = IqSignal::new(vec![Complex64::new(1.0, 0.0); 20_000], 2000.0).unwrap();
        let env = EnvConfig { snr_db: 10.0, ..EnvConfig::identity() };
        let noisy = apply_env(&clean, &env, 3).unwrap();
        let var = noisy.samples().iter().zip(clean.samples()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / clean.len() as f64;
        assert!((var - 0.1).abs() <= 0.002, "noise variance {var}");
    }

    #[test]
    fn full_occlusion_leaves_only_noise() {
        let cfg = SimConfig::default();
        let p = activity_profile(ActivityId::Punching, 1.0, 4).unwrap();
        let clean = synthesize_return(&p, &cfg.radar).unwrap();
        let echo = MultipathEcho { delay_s: 0.1, doppler_offset_hz: 10.0, gain: 0.5 };
        let env = EnvConfig {
            multipath_echoes: vec![echo],
            occlusion_windows: vec![OcclusionWindow { t_start: 2.0, t_end: 3.0, attenuation: 1.0 }],
            clutter_gain: 0.0,
            snr_db: 10.0,
        };
        let measured = stft(&apply_env(&clean, &env, 8).unwrap(), &cfg.stft).unwrap();
        let silent = EnvConfig { snr_db: f64::INFINITY, ..env.clone() };
        let noise: Vec<Complex64> = apply_env(&clean, &env, 8)
            .unwrap()
            .samples()
            .iter()
            .zip(apply_env(&clean, &silent, 8).unwrap().samples())
            .map(|(a, b)| a - b)
            .collect();
        let noise = stft(&IqSignal::new(noise, 2000.0).unwrap(), &cfg.stft).unwrap();
        let col_mean = |s: &Spectrogram, c: usize| (0..s.rows()).map(|r| s.get(r, c)).sum::<f64>() / s.rows() as f64;
        let reference = (0..noise.cols()).map(|c| col_mean(&noise, c)).sum::<f64>() / noise.cols() as f64;
        let hop_s = cfg.stft.hop as f64 / 2000.0;
        let win_s = cfg.stft.window_len as f64 / 2000.0;
        let mut inside = 0;
        for c in 0..measured.cols() {
            let t0 = c as f64 * hop_s;
            if t0 >= 2.0 && t0 + win_s <= 3.0 {
                inside += 1;
                assert!((col_mean(&measured, c) - reference).abs() <= 3.0);
            }
        }
        assert!(inside > 5);
        // outside the window the target return stands well above the noise
        let peak = measured.get(measured.column_argmax(0), 0);
        assert!(peak > reference + 20.0, "peak {peak} vs noise {reference}");
    }

    #[test]
    fn random_environments_are_valid_and_seeded() {
        for seed in 0..50 {
            let env = random_env(6.0, seed);
            env.validate(6.0).unwrap();
            assert_eq!(env, random_env(6.0, seed));
            assert!((1..=3).contains(&env.multipath_echoes.len()));
        }
    }
}
