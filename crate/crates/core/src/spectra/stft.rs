use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Floor applied to every spectrogram cell, in dB.
pub const DB_FLOOR: f64 = -120.0;
/// Added to |X|² before taking the logarithm.
pub const POWER_EPS: f64 = 1e-12;

/// Complex baseband time series.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
}

impl IqSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("IQ signal has no samples"));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("sample rate {sample_rate_hz} must be > 0")));
        }
        if let Some(i) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::invalid(format!("non-finite IQ sample at index {i}")));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Mean power `mean |x|²`.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rect,
}

impl Window {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rect => vec![1.0; len],
            // periodic Hann
            Window::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
    pub window: Window,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self { window_len: 256, hop: 64, fft_len: 512, window: Window::Hann }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 || self.fft_len == 0 {
            return Err(Error::invalid("STFT lengths must be positive"));
        }
        if self.hop > self.window_len {
            return Err(Error::invalid(format!(
                "hop {} exceeds window length {}",
                self.hop, self.window_len
            )));
        }
        if !self.fft_len.is_power_of_two() || self.fft_len < self.window_len {
            return Err(Error::invalid(format!(
                "fft_len {} must be a power of two >= window length {}",
                self.fft_len, self.window_len
            )));
        }
        Ok(())
    }

    /// Number of STFT frames for a signal of `len` samples.
    pub fn frames(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            (len - self.window_len) / self.hop + 1
        }
    }
}

/// Power spectrogram in dB. Rows are frequency bins (lowest first, 0 Hz at
/// row `fft_len / 2`), columns are time frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    pub time_step_s: f64,
    pub freq_step_hz: f64,
    pub freq_origin_hz: f64,
}

impl Spectrogram {
    pub fn from_values(
        values: Vec<f64>,
        rows: usize,
        cols: usize,
        time_step_s: f64,
        freq_step_hz: f64,
        freq_origin_hz: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::shape(format!(
                "spectrogram {rows}x{cols} with {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < DB_FLOOR) {
            return Err(Error::invalid("spectrogram values must be finite and >= floor"));
        }
        Ok(Self { values, rows, cols, time_step_s, freq_step_hz, freq_origin_hz })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row_frequency_hz(&self, row: usize) -> f64 {
        self.freq_origin_hz + row as f64 * self.freq_step_hz
    }

    /// Row whose centre frequency is nearest to `hz`.
    pub fn nearest_row(&self, hz: f64) -> usize {
        let r = ((hz - self.freq_origin_hz) / self.freq_step_hz).round();
        r.clamp(0.0, (self.rows - 1) as f64) as usize
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Row index of the per-column maximum.
    pub fn column_argmax(&self, col: usize) -> usize {
        (0..self.rows)
            .max_by(|&a, &b| self.get(a, col).total_cmp(&self.get(b, col)))
            .unwrap_or(0)
    }

    /// Keep only the rows whose centre frequency lies in `[lo_hz, hi_hz]`.
    pub fn crop_band(&self, lo_hz: f64, hi_hz: f64) -> Result<Spectrogram> {
        let keep: Vec<usize> = (0..self.rows)
            .filter(|&r| {
                let f = self.row_frequency_hz(r);
                f >= lo_hz - 1e-9 && f <= hi_hz + 1e-9
            })
            .collect();
        let (Some(&first), Some(&last)) = (keep.first(), keep.last()) else {
            return Err(Error::invalid(format!("band [{lo_hz}, {hi_hz}] Hz selects no rows")));
        };
        let values = self.values[first * self.cols..(last + 1) * self.cols].to_vec();
        Ok(Spectrogram {
            values,
            rows: last - first + 1,
            cols: self.cols,
            time_step_s: self.time_step_s,
            freq_step_hz: self.freq_step_hz,
            freq_origin_hz: self.row_frequency_hz(first),
        })
    }
}

/// Short-time Fourier transform with an fft-shifted frequency axis.
pub fn stft(signal: &IqSignal, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let n = signal.len();
    if n < cfg.window_len {
        return Err(Error::InsufficientSamples { needed: cfg.window_len, got: n });
    }
    let frames = cfg.frames(n);
    let window = cfg.window.coefficients(cfg.window_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.fft_len);
    let half = cfg.fft_len / 2;
    let mut values = vec![0.0; cfg.fft_len * frames];
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_len];
    let samples = signal.samples();
    for col in 0..frames {
        let start = col * cfg.hop;
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (k, w) in window.iter().enumerate() {
            buf[k] = samples[start + k] * *w;
        }
        fft.process(&mut buf);
        for (bin, x) in buf.iter().enumerate() {
            // shift so that bin `half` (0 Hz) sits in the middle row
            let row = (bin + half) % cfg.fft_len;
            values[row * frames + col] = (10.0 * (x.norm_sqr() + POWER_EPS).log10()).max(DB_FLOOR);
        }
    }
    let fs = signal.sample_rate_hz();
    Ok(Spectrogram {
        values,
        rows: cfg.fft_len,
        cols: frames,
        time_step_s: cfg.hop as f64 / fs,
        freq_step_hz: fs / cfg.fft_len as f64,
        freq_origin_hz: -(half as f64) * fs / cfg.fft_len as f64,
    })
}
