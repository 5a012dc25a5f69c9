//! Activity classifier: conv16-pool, conv32-pool, conv64-pool, dense128,
//! dense10 + softmax; eight weight-bearing/activation stages on a 100x100x1
//! input, trained with Adam on categorical cross-entropy.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::spectra::ImageGrid;

use super::adam::{AdamConfig, AdamState};
use super::layers::{
    conv_backward, conv_forward_cols, dense_backward, dense_forward, max_pool_backward, max_pool_forward, relu_backward,
    relu_forward, softmax, softmax_cross_entropy,
};
use super::tensor::Tensor;

pub const NUM_CLASSES: usize = 10;
pub const INPUT_SIDE: usize = 100;
const CONV_WIDTHS: [usize; 3] = [16, 32, 64];
const HIDDEN: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub image: ImageGrid,
    pub label: usize,
}

/// Named parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Max-pool size after each of the three convolutions.
    pub pools: [usize; 3],
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 0.001, batch_size: 64, epochs: 100, seed: 0, pools: DEFAULT_POOLS }
    }
}

pub const DEFAULT_POOLS: [usize; 3] = [4, 2, 2];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training cross-entropy per epoch.
    pub loss: Vec<f64>,
    /// Training accuracy (fraction) per epoch, measured during the epoch.
    pub accuracy: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pools: [usize; 3],
    params: Vec<Param>,
}

struct ForwardCache {
    conv: Vec<(Vec<f32>, Tensor<f32>, Vec<usize>, usize)>,
    flat: Vec<f32>,
    hidden: Vec<f32>,
    logits: Vec<f32>,
}

impl ClassifierModel {
    pub fn new(seed: u64, pools: [usize; 3]) -> Result<Self> {
        let mut side = INPUT_SIDE;
        for p in pools {
            if p == 0 || side / p == 0 {
                return Err(Error::invalid(format!("pool sizes {pools:?} collapse the input")));
            }
            side /= p;
        }
        let flat = CONV_WIDTHS[2] * side * side;
        let mut params = Vec::new();
        let mut c_in = 1;
        let mut layer = 0u64;
        let mut he = |name: &str, shape: Vec<usize>, fan_in: usize, params: &mut Vec<Param>| {
            let n: usize = shape.iter().product();
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            let mut r = rng::stream(seed, &[rng::tag::TRAIN, layer]);
            layer += 1;
            params.push(Param { name: name.to_string(), shape, values: (0..n).map(|_| normal.sample(&mut r) as f32).collect() });
        };
        for (i, &c_out) in CONV_WIDTHS.iter().enumerate() {
            he(&format!("conv{}.weight", i + 1), vec![c_out, c_in, 3, 3], c_in * 9, &mut params);
            params.push(Param { name: format!("conv{}.bias", i + 1), shape: vec![c_out], values: vec![0.0; c_out] });
            c_in = c_out;
        }
        he("fc1.weight", vec![HIDDEN, flat], flat, &mut params);
        params.push(Param { name: "fc1.bias".into(), shape: vec![HIDDEN], values: vec![0.0; HIDDEN] });
        he("fc2.weight", vec![NUM_CLASSES, HIDDEN], HIDDEN, &mut params);
        params.push(Param { name: "fc2.bias".into(), shape: vec![NUM_CLASSES], values: vec![0.0; NUM_CLASSES] });
        Ok(Self { pools, params })
    }

    /// Rebuild from checkpointed blocks; validates names and shapes against
    /// a freshly initialised model of the same layout.
    pub fn from_params(pools: [usize; 3], params: Vec<Param>) -> Result<Self> {
        let template = Self::new(0, pools)?;
        if template.params.len() != params.len()
            || template.params.iter().zip(&params).any(|(a, b)| a.name != b.name || a.shape != b.shape || b.values.len() != a.values.len())
        {
            return Err(Error::shape("checkpoint parameters do not match the classifier layout"));
        }
        Ok(Self { pools, params })
    }

    pub fn pools(&self) -> [usize; 3] {
        self.pools
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.values.len()).sum()
    }

    fn input(img: &ImageGrid) -> Result<Tensor<f32>> {
        if img.rows() != INPUT_SIDE || img.cols() != INPUT_SIDE {
            return Err(Error::shape(format!("classifier input must be 100x100, got {}x{}", img.rows(), img.cols())));
        }
        Tensor::from_vec(INPUT_SIDE, INPUT_SIDE, 1, img.pixels().to_vec())
    }

    fn forward(&self, img: &ImageGrid) -> Result<ForwardCache> {
        let mut x = Self::input(img)?;
        let mut conv = Vec::with_capacity(3);
        for i in 0..3 {
            let w = &self.params[2 * i].values;
            let b = &self.params[2 * i + 1].values;
            let c_in = x.channels();
            let (mut y, patches) = conv_forward_cols(&x, w, b)?;
            relu_forward(&mut y);
            let (pooled, arg) = max_pool_forward(&y, self.pools[i])?;
            conv.push((patches, y, arg, c_in));
            x = pooled;
        }
        let flat = x.into_data();
        let mut hidden = dense_forward(&flat, &self.params[6].values, &self.params[7].values)?;
        hidden.iter_mut().for_each(|v| *v = v.max(0.0));
        let logits = dense_forward(&hidden, &self.params[8].values, &self.params[9].values)?;
        Ok(ForwardCache { conv, flat, hidden, logits })
    }

    /// Class probabilities; sums to one.
    pub fn predict_proba(&self, img: &ImageGrid) -> Result<Vec<f64>> {
        let logits: Vec<f64> = self.forward(img)?.logits.iter().map(|&v| v as f64).collect();
        Ok(softmax(&logits))
    }

    pub fn predict(&self, img: &ImageGrid) -> Result<usize> {
        let logits = self.forward(img)?.logits;
        Ok((0..NUM_CLASSES).max_by(|&a, &b| logits[a].total_cmp(&logits[b])).unwrap())
    }

    /// Accumulate the gradient of one example's cross-entropy into `grads`.
    /// Returns `(loss, correct)`.
    fn accumulate_gradient(&self, ex: &LabeledImage, grads: &mut [Vec<f32>]) -> Result<(f64, bool)> {
        let cache = self.forward(ex.image())?;
        let predicted = (0..NUM_CLASSES).max_by(|&a, &b| cache.logits[a].total_cmp(&cache.logits[b])).unwrap();
        let (loss, d_logits) = softmax_cross_entropy(&cache.logits, ex.label);
        let (g_lo, g_hi) = grads.split_at_mut(8);
        let (g8, g9) = g_hi.split_at_mut(1);
        let mut d_hidden = dense_backward(&cache.hidden, &d_logits, &self.params[8].values, &mut g8[0], &mut g9[0]);
        for (g, h) in d_hidden.iter_mut().zip(&cache.hidden) {
            if *h <= 0.0 {
                *g = 0.0;
            }
        }
        let (g6, g7) = g_lo[6..8].split_at_mut(1);
        let d_flat = dense_backward(&cache.flat, &d_hidden, &self.params[6].values, &mut g6[0], &mut g7[0]);
        let last = &cache.conv[2].1;
        let (ph, pw) = (last.height() / self.pools[2], last.width() / self.pools[2]);
        let mut d = Tensor::from_vec(ph, pw, last.channels(), d_flat)?;
        for i in (0..3).rev() {
            let (patches, out, arg, c_in) = &cache.conv[i];
            let mut g = max_pool_backward(&d, arg, out.height(), out.width());
            relu_backward(&mut g, out);
            let (gw, gb) = g_lo[2 * i..2 * i + 2].split_at_mut(1);
            let d_in = conv_backward(patches, &g, &self.params[2 * i].values, *c_in, Some(&mut gw[0]), Some(&mut gb[0]), i > 0);
            if let Some(next) = d_in {
                d = next;
            }
        }
        Ok((loss as f64, predicted == ex.label))
    }
}

impl LabeledImage {
    fn image(&self) -> &ImageGrid {
        &self.image
    }
}

/// Mini-batch Adam training; deterministic given `cfg.seed`.
pub fn classifier_train(train: &[LabeledImage], cfg: &TrainConfig) -> Result<(ClassifierModel, TrainHistory)> {
    let mut counts = [0usize; NUM_CLASSES];
    for ex in train {
        if ex.label >= NUM_CLASSES {
            return Err(Error::invalid(format!("label {} outside 0..10", ex.label)));
        }
        counts[ex.label] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass(empty + 1));
    }
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(Error::invalid("batch size and epochs must be positive"));
    }
    let mut model = ClassifierModel::new(cfg.seed, cfg.pools)?;
    let mut adam = AdamState::<f32>::new(AdamConfig::with_lr(cfg.lr), model.params.iter().map(|p| p.values.len()));
    let mut grads: Vec<Vec<f32>> = model.params.iter().map(|p| vec![0.0; p.values.len()]).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    for epoch in 0..cfg.epochs {
        let mut r = rng::stream(cfg.seed, &[rng::tag::TRAIN, 0xe90c, epoch as u64]);
        order.shuffle(&mut r);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            for &i in batch {
                let (loss, ok) = model.accumulate_gradient(&train[i], &mut grads)?;
                loss_sum += loss;
                correct += ok as usize;
            }
            let scale = 1.0 / batch.len() as f32;
            grads.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v *= scale));
            adam.update(model.params.iter_mut().map(|p| p.values.as_mut_slice()), &grads);
        }
        history.loss.push(loss_sum / train.len() as f64);
        history.accuracy.push(correct as f64 / train.len() as f64);
    }
    Ok((model, history))
}

/// Row-normalised confusion matrix; row = true class, column = prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    /// Row percentages; rows without examples are all zero.
    pub fn percent(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                row.iter().map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 }).collect()
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.percent() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    /// Overall accuracy in percent.
    pub accuracy: f64,
    pub predictions: Vec<usize>,
}

pub fn confusion_from_predictions(labels: &[usize], predictions: &[usize]) -> Result<Evaluation> {
    if labels.is_empty() || labels.len() != predictions.len() {
        return Err(Error::invalid("need equal, non-zero numbers of labels and predictions"));
    }
    let mut counts = vec![vec![0usize; NUM_CLASSES]; NUM_CLASSES];
    let mut correct = 0;
    for (&l, &p) in labels.iter().zip(predictions) {
        if l >= NUM_CLASSES || p >= NUM_CLASSES {
            return Err(Error::invalid("class index outside 0..10"));
        }
        counts[l][p] += 1;
        correct += (l == p) as usize;
    }
    Ok(Evaluation {
        confusion: ConfusionMatrix { counts },
        accuracy: 100.0 * correct as f64 / labels.len() as f64,
        predictions: predictions.to_vec(),
    })
}

/// Evaluate on a labelled set; parallel over examples.
pub fn classifier_evaluate(model: &ClassifierModel, test: &[LabeledImage]) -> Result<Evaluation> {
    let predictions = test.par_iter().map(|ex| model.predict(&ex.image)).collect::<Result<Vec<_>>>()?;
    let labels: Vec<usize> = test.iter().map(|ex| ex.label).collect();
    confusion_from_predictions(&labels, &predictions)
}
