//! Fixed random-weight feature extractor with five named taps.
//!
//! Five blocks of one 3x3 convolution + ReLU each, widths
//! [`FEATURE_WIDTHS`], separated by 2x2 average pooling. The tap of block
//! `b` is the post-ReLU output of its convolution. Weights are drawn once
//! from N(0, 2 / fan_in) and never updated; biases are zero.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::spectra::ImageGrid;

use super::layers::{avg_pool2_backward, avg_pool2_forward, conv_backward, conv_forward_cols, relu_backward, relu_forward};
use super::tensor::Tensor;

pub const FEATURE_WIDTHS: [usize; 5] = [8, 16, 32, 64, 64];
/// Smallest input side that survives four 2x2 pools.
const MIN_SIDE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Tap {
    #[serde(rename = "conv1_1")]
    Conv1_1,
    #[serde(rename = "conv2_1")]
    Conv2_1,
    #[serde(rename = "conv3_1")]
    Conv3_1,
    #[serde(rename = "conv4_1")]
    Conv4_1,
    #[serde(rename = "conv5_1")]
    Conv5_1,
}

impl Tap {
    pub const ALL: [Tap; 5] = [Tap::Conv1_1, Tap::Conv2_1, Tap::Conv3_1, Tap::Conv4_1, Tap::Conv5_1];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["conv1_1", "conv2_1", "conv3_1", "conv4_1", "conv5_1"][self.index()]
    }

    /// Accepts `conv2_1` as well as the undelimited `conv21`.
    pub fn parse(s: &str) -> Result<Tap> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "");
        Tap::ALL
            .into_iter()
            .find(|t| t.name().replace('_', "") == norm)
            .ok_or_else(|| Error::invalid(format!("unknown tap {s:?}")))
    }

    /// Filter count `N^l` at this tap.
    pub fn width(self) -> usize {
        FEATURE_WIDTHS[self.index()]
    }
}

impl std::fmt::Display for Tap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-tap feature stacks of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    taps: Vec<Tensor<f64>>,
}

impl Activations {
    pub fn get(&self, tap: Tap) -> &Tensor<f64> {
        &self.taps[tap.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Tap, &Tensor<f64>)> {
        Tap::ALL.into_iter().zip(&self.taps)
    }

    /// Build from tensors, one per tap in [`Tap::ALL`] order.
    pub fn from_tensors(taps: Vec<Tensor<f64>>) -> Result<Self> {
        if taps.len() != Tap::ALL.len() {
            return Err(Error::shape(format!("expected 5 tap tensors, got {}", taps.len())));
        }
        Ok(Self { taps })
    }
}

/// Upstream gradients per tap; taps without an entry contribute nothing.
#[derive(Debug, Clone, Default)]
pub struct TapGrads {
    grads: Vec<Option<Tensor<f64>>>,
}

impl TapGrads {
    pub fn new() -> Self {
        Self { grads: vec![None; Tap::ALL.len()] }
    }

    pub fn get(&self, tap: Tap) -> Option<&Tensor<f64>> {
        self.grads.get(tap.index()).and_then(|g| g.as_ref())
    }

    /// Add `g` to the gradient at `tap`.
    pub fn accumulate(&mut self, tap: Tap, g: Tensor<f64>) -> Result<()> {
        if self.grads.is_empty() {
            self.grads = vec![None; Tap::ALL.len()];
        }
        match &mut self.grads[tap.index()] {
            Some(existing) => {
                if !existing.same_shape(&g) {
                    return Err(Error::shape(format!("gradient shapes differ at {tap}")));
                }
                for (a, b) in existing.data_mut().iter_mut().zip(g.data()) {
                    *a += b;
                }
            }
            slot @ None => *slot = Some(g),
        }
        Ok(())
    }

    /// Taps that carry a gradient, in network order.
    pub fn into_taps(self) -> impl Iterator<Item = (Tap, Tensor<f64>)> {
        Tap::ALL.into_iter().zip(self.grads).filter_map(|(t, g)| g.map(|g| (t, g)))
    }

    pub fn scaled(&self, k: f64) -> TapGrads {
        TapGrads { grads: self.grads.iter().map(|g| g.as_ref().map(|t| t.map(|v| v * k))).collect() }
    }
}

/// Intermediate values kept by the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct FeatureCache {
    rows: usize,
    cols: usize,
    blocks: Vec<BlockCache>,
}

#[derive(Debug, Clone)]
struct BlockCache {
    in_channels: usize,
    patches: Vec<f64>,
    out: Tensor<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNetwork {
    seed: u64,
    input_scale: f64,
    kernels: Vec<Vec<f64>>,
    zero_bias: Vec<Vec<f64>>,
}

/// Default multiplier applied to pixels before the first convolution.
pub const DEFAULT_INPUT_SCALE: f64 = 0.003;

impl FeatureNetwork {
    pub fn new(seed: u64) -> Self {
        Self::with_input_scale(seed, DEFAULT_INPUT_SCALE)
    }

    pub fn with_input_scale(seed: u64, input_scale: f64) -> Self {
        let mut kernels = Vec::with_capacity(FEATURE_WIDTHS.len());
        let mut c_in = 1;
        for (b, &c_out) in FEATURE_WIDTHS.iter().enumerate() {
            let fan_in = c_in * 9;
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            let mut r = rng::stream(seed, &[b as u64]);
            kernels.push((0..c_out * fan_in).map(|_| normal.sample(&mut r)).collect());
            c_in = c_out;
        }
        let zero_bias = FEATURE_WIDTHS.iter().map(|&w| vec![0.0; w]).collect();
        Self { seed, input_scale, kernels, zero_bias }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    pub fn kernel(&self, tap: Tap) -> &[f64] {
        &self.kernels[tap.index()]
    }

    /// FNV-1a over the weight bit patterns.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for w in self.kernels.iter().flatten() {
            for byte in w.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// Forward pass over a `rows x cols` pixel buffer.
    pub fn forward(&self, pixels: &[f64], rows: usize, cols: usize) -> Result<(Activations, FeatureCache)> {
        if rows < MIN_SIDE || cols < MIN_SIDE {
            return Err(Error::invalid(format!(
                "feature network needs at least {MIN_SIDE}x{MIN_SIDE} input, got {rows}x{cols}"
            )));
        }
        if pixels.len() != rows * cols {
            return Err(Error::shape("pixel buffer does not match image size"));
        }
        let mut x = Tensor::from_vec(rows, cols, 1, pixels.iter().map(|p| p * self.input_scale).collect())?;
        let mut blocks = Vec::with_capacity(FEATURE_WIDTHS.len());
        let mut taps = Vec::with_capacity(FEATURE_WIDTHS.len());
        for (b, kernel) in self.kernels.iter().enumerate() {
            if b > 0 {
                x = avg_pool2_forward(&x)?;
            }
            let in_channels = x.channels();
            let (mut y, patches) = conv_forward_cols(&x, kernel, &self.zero_bias[b])?;
            relu_forward(&mut y);
            taps.push(y.clone());
            blocks.push(BlockCache { in_channels, patches, out: y.clone() });
            x = y;
        }
        Ok((Activations { taps }, FeatureCache { rows, cols, blocks }))
    }

    /// Gradient of `Σ_taps <grad_tap, activation_tap>` with respect to the
    /// input pixels.
    pub fn backward(&self, cache: &FeatureCache, grads: &TapGrads) -> Result<Vec<f64>> {
        let top = Tap::ALL.iter().rposition(|&t| grads.get(t).is_some());
        let Some(top) = top else {
            return Ok(vec![0.0; cache.rows * cache.cols]);
        };
        let mut upstream: Option<Tensor<f64>> = None;
        for b in (0..=top).rev() {
            let block = &cache.blocks[b];
            let mut g = match (upstream.take(), grads.get(Tap::ALL[b])) {
                (Some(mut u), Some(t)) => {
                    if !t.same_shape(&u) {
                        return Err(Error::shape(format!("tap gradient shape mismatch at {}", Tap::ALL[b])));
                    }
                    u.data_mut().iter_mut().zip(t.data()).for_each(|(a, v)| *a += v);
                    u
                }
                (Some(u), None) => u,
                (None, Some(t)) => {
                    if !t.same_shape(&block.out) {
                        return Err(Error::shape(format!(
                            "tap gradient at {} is {:?}, activation is {:?}",
                            Tap::ALL[b],
                            t.shape(),
                            block.out.shape()
                        )));
                    }
                    t.clone()
                }
                (None, None) => Tensor::zeros(block.out.height(), block.out.width(), block.out.channels()),
            };
            relu_backward(&mut g, &block.out);
            let d_in = conv_backward(&block.patches, &g, &self.kernels[b], block.in_channels, None, None, true)
                .expect("input gradient requested");
            upstream = Some(if b > 0 {
                let prev = &cache.blocks[b - 1].out;
                avg_pool2_backward(&d_in, prev.height(), prev.width())
            } else {
                d_in
            });
        }
        let g = upstream.expect("at least one block");
        Ok(g.data().iter().map(|v| v * self.input_scale).collect())
    }
}

pub fn feature_forward(net: &FeatureNetwork, img: &ImageGrid) -> Result<Activations> {
    Ok(net.forward(&img.to_f64(), img.rows(), img.cols())?.0)
}

/// Pixel gradient, row-major `rows x cols`.
pub fn feature_backward(net: &FeatureNetwork, img: &ImageGrid, tap_grads: &TapGrads) -> Result<Vec<f64>> {
    let (_, cache) = net.forward(&img.to_f64(), img.rows(), img.cols())?;
    net.backward(&cache, tap_grads)
}
