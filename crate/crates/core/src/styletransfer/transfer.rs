use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{content_loss, gram, style_loss_from_grams, total_loss, GramMatrix, LossBreakdown};
use crate::error::{Error, Result};
use crate::neuralnet::{AdamConfig, AdamState, FeatureNetwork, Tap, TapGrads};
use crate::rng::{self, tag};
use crate::simulator::ActivityId;
use crate::spectra::ImageGrid;

/// Pixel gradients of the feature losses are tiny in absolute terms; the
/// usual `1e-8` would swamp them.
const PIXEL_ADAM_EPS: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    WhiteNoise,
    ContentCopy,
}

impl std::str::FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white_noise" => Ok(Init::WhiteNoise),
            "content_copy" => Ok(Init::ContentCopy),
            other => Err(Error::invalid(format!("unknown init {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleTransferConfig {
    pub alpha: f64,
    pub beta: f64,
    pub content_layer: Tap,
    /// Style taps with their weights `W^l`.
    pub style_layers: Vec<(Tap, f64)>,
    pub iterations: usize,
    pub optimizer: Optimizer,
    pub step_size: f64,
    pub init: Init,
    pub seed: u64,
}

impl Default for StyleTransferConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta: 1.0,
            content_layer: Tap::Conv2_1,
            style_layers: Tap::ALL.iter().map(|&t| (t, 0.2)).collect(),
            iterations: 2500,
            optimizer: Optimizer::Adam,
            step_size: 0.02,
            init: Init::WhiteNoise,
            seed: 0,
        }
    }
}

impl StyleTransferConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta > 0.0) {
            return Err(Error::invalid(format!("alpha {} and beta {} must be >= 0, not both 0", self.alpha, self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid(format!("step size {} must be > 0", self.step_size)));
        }
        if self.style_layers.iter().any(|&(_, w)| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid("style layer weights must be >= 0"));
        }
        let sum: f64 = self.style_layers.iter().map(|&(_, w)| w).sum();
        if !self.style_layers.is_empty() && (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("style layer weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub output: ImageGrid,
    /// Loss of the iterate entering each step.
    pub trace: Vec<LossBreakdown>,
}

impl TransferResult {
    /// Loss trace as `iter,content,style,total`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,content,style,total\n");
        for (i, l) in self.trace.iter().enumerate() {
            writeln!(out, "{i},{:e},{:e},{:e}", l.content, l.style, l.total).unwrap();
        }
        out
    }
}

/// Content activations and style Grams fixed for one transfer.
#[derive(Debug, Clone)]
pub struct StyleTarget {
    rows: usize,
    cols: usize,
    content: crate::neuralnet::Activations,
    grams: Vec<(Tap, GramMatrix)>,
}

impl StyleTarget {
    pub fn new(net: &FeatureNetwork, content: &ImageGrid, style: &ImageGrid, cfg: &StyleTransferConfig) -> Result<Self> {
        if (content.rows(), content.cols()) != (style.rows(), style.cols()) {
            return Err(Error::shape(format!(
                "content is {}x{} but style is {}x{}",
                content.rows(),
                content.cols(),
                style.rows(),
                style.cols()
            )));
        }
        let (content_acts, _) = net.forward(&content.to_f64(), content.rows(), content.cols())?;
        let (style_acts, _) = net.forward(&style.to_f64(), style.rows(), style.cols())?;
        let grams = cfg.style_layers.iter().map(|&(t, _)| (t, gram(style_acts.get(t)))).collect();
        Ok(Self { rows: content.rows(), cols: content.cols(), content: content_acts, grams })
    }
}

/// Loss breakdown and pixel gradient of `α·content + β·style` at `pixels`.
pub fn loss_and_gradient(
    net: &FeatureNetwork,
    target: &StyleTarget,
    cfg: &StyleTransferConfig,
    pixels: &[f64],
) -> Result<(LossBreakdown, Vec<f64>)> {
    let (acts, cache) = net.forward(pixels, target.rows, target.cols)?;
    let (lc, gc) = content_loss(&acts, &target.content, &[cfg.content_layer])?;
    let (ls, gs) = style_loss_from_grams(&acts, &target.grams, &cfg.style_layers)?;
    let breakdown = total_loss(lc, ls, cfg.alpha, cfg.beta)?;
    let mut grads = TapGrads::new();
    for (tap, g) in gc.scaled(cfg.alpha).into_taps().chain(gs.scaled(cfg.beta).into_taps()) {
        grads.accumulate(tap, g)?;
    }
    Ok((breakdown, net.backward(&cache, &grads)?))
}

pub fn transfer(
    content: &ImageGrid,
    style: &ImageGrid,
    net: &FeatureNetwork,
    cfg: &StyleTransferConfig,
) -> Result<TransferResult> {
    transfer_with(content, style, net, cfg, |_, _| {})
}

/// Like [`transfer`], calling `observe(iteration, loss)` after each step.
pub(crate) fn transfer_with(
    content: &ImageGrid,
    style: &ImageGrid,
    net: &FeatureNetwork,
    cfg: &StyleTransferConfig,
    mut observe: impl FnMut(usize, &LossBreakdown),
) -> Result<TransferResult> {
    cfg.validate()?;
    let target = StyleTarget::new(net, content, style, cfg)?;
    let mut x = match cfg.init {
        Init::ContentCopy => content.to_f64(),
        Init::WhiteNoise => {
            let mut r = rng::stream(cfg.seed, &[tag::STYLE]);
            (0..content.pixels().len()).map(|_| r.random::<f64>()).collect()
        }
    };
    let mut adam = AdamState::<f64>::new(AdamConfig { eps: PIXEL_ADAM_EPS, ..AdamConfig::with_lr(cfg.step_size) }, [x.len()]);
    let mut trace = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let (loss, grad) = loss_and_gradient(net, &target, cfg, &x)?;
        observe(it, &loss);
        trace.push(loss);
        adam.update([x.as_mut_slice()], &[grad]);
        for v in &mut x {
            *v = v.clamp(0.0, 1.0);
        }
    }
    Ok(TransferResult { output: ImageGrid::from_f64_clamped(content.rows(), content.cols(), &x)?, trace })
}

/// Seed for the `index`-th image of a batch.
pub fn image_seed(seed: u64, index: usize) -> u64 {
    rng::derive(seed, &[tag::STYLE, index as u64])
}

/// Stylizes every clean image against its activity's exemplar. Image `i`
/// uses seed [`image_seed`]`(cfg.seed, i)`.
pub fn batch_stylize(
    clean: &[(ActivityId, ImageGrid)],
    exemplars: &BTreeMap<ActivityId, ImageGrid>,
    net: &FeatureNetwork,
    cfg: &StyleTransferConfig,
) -> Result<Vec<(ActivityId, TransferResult)>> {
    for (activity, _) in clean {
        if !exemplars.contains_key(activity) {
            return Err(Error::MissingExemplar(activity.number()));
        }
    }
    clean
        .par_iter()
        .enumerate()
        .map(|(i, (activity, img))| {
            let cfg = StyleTransferConfig { seed: image_seed(cfg.seed, i), ..cfg.clone() };
            Ok((*activity, transfer(img, &exemplars[activity], net, &cfg)?))
        })
        .collect()
}

/// Normalized cross-correlation of two equally sized images.
pub fn ncc(a: &ImageGrid, b: &ImageGrid) -> Result<f64> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(Error::shape("ncc needs equal dimensions"));
    }
    let (ma, mb) = (a.mean(), b.mean());
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(if saa == sbb { 1.0 } else { 0.0 });
    }
    Ok(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::styletransfer::style_loss;
    use crate::neuralnet::gradcheck::check_gradient;
    use crate::neuralnet::{Activations, Tensor};

    fn noise_image(rows: usize, cols: usize, seed: u64) -> ImageGrid {
        let mut r = rng::stream(seed, &[77]);
        let px = (0..rows * cols).map(|_| r.random::<f32>()).collect();
        ImageGrid::new(rows, cols, px).unwrap()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let mag = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max);
        if mag == 0.0 { diff } else { diff / mag }
    }

    #[test]
    fn style_tap_gradient_matches_finite_differences() {
        let mut r = rng::stream(3, &[1]);
        let make = |r: &mut rng::Rng| {
            let mut taps: Vec<Tensor<f64>> = Tap::ALL.iter().map(|t| Tensor::zeros(1, 1, t.width())).collect();
            taps[0] = Tensor::from_vec(8, 8, 2, (0..128).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
            taps
        };
        let x = make(&mut r);
        let s = Activations::from_tensors(make(&mut r)).unwrap();
        let layers = [(Tap::Conv1_1, 1.0)];
        let (_, g) = style_loss(&Activations::from_tensors(x.clone()).unwrap(), &s, &layers).unwrap();
        let h = 1e-4;
        let numeric: Vec<f64> = (0..128)
            .map(|i| {
                let eval = |d: f64| {
                    let mut t = x.clone();
                    t[0].data_mut()[i] += d;
                    style_loss(&Activations::from_tensors(t).unwrap(), &s, &layers).unwrap().0
                };
                (eval(h) - eval(-h)) / (2.0 * h)
            })
            .collect();
        assert!(rel_err(g.get(Tap::Conv1_1).unwrap().data(), &numeric) <= 1e-3);
    }

    #[test]
    fn pixel_gradient_matches_finite_differences() {
        let net = FeatureNetwork::new(11);
        let cfg = StyleTransferConfig::default();
        let (c, s) = (noise_image(16, 16, 1), noise_image(16, 16, 2));
        let target = StyleTarget::new(&net, &c, &s, &cfg).unwrap();
        let x: Vec<f64> = noise_image(16, 16, 3).to_f64();
        let (_, g) = loss_and_gradient(&net, &target, &cfg, &x).unwrap();
        let r = check_gradient(&g, &x, 1e-4, 1e-3, |p| loss_and_gradient(&net, &target, &cfg, p).unwrap().0.total);
        assert!(r.passes(1e-3), "{r:?}");
    }

    #[test]
    fn common_weight_scaling_keeps_gradient_direction() {
        let net = FeatureNetwork::new(4);
        let cfg = StyleTransferConfig::default();
        let scaled = StyleTransferConfig { alpha: cfg.alpha * 7.5, beta: cfg.beta * 7.5, ..cfg.clone() };
        let (c, s) = (noise_image(20, 20, 5), noise_image(20, 20, 6));
        let x = noise_image(20, 20, 7).to_f64();
        let g1 = loss_and_gradient(&net, &StyleTarget::new(&net, &c, &s, &cfg).unwrap(), &cfg, &x).unwrap().1;
        let g2 = loss_and_gradient(&net, &StyleTarget::new(&net, &c, &s, &scaled).unwrap(), &scaled, &x).unwrap().1;
        let dot: f64 = g1.iter().zip(&g2).map(|(a, b)| a * b).sum();
        let n1: f64 = g1.iter().map(|a| a * a).sum::<f64>().sqrt();
        let n2: f64 = g2.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!((dot / (n1 * n2) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn content_copy_of_own_style_stays_put() {
        let net = FeatureNetwork::new(2);
        let img = noise_image(24, 24, 9);
        let cfg = StyleTransferConfig { init: Init::ContentCopy, iterations: 5, ..Default::default() };
        let out = transfer(&img, &img, &net, &cfg).unwrap();
        let max = img.pixels().iter().zip(out.output.pixels()).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        assert!(max <= 1e-3);
        assert_eq!(out.trace.len(), 5);
    }

    #[test]
    fn transfer_reduces_loss_and_is_deterministic() {
        let net = FeatureNetwork::new(8);
        let (c, s) = (noise_image(24, 24, 1), noise_image(24, 24, 2));
        let cfg = StyleTransferConfig { iterations: 40, seed: 3, ..Default::default() };
        let a = transfer(&c, &s, &net, &cfg).unwrap();
        assert_eq!(a.trace.len(), 40);
        assert!(a.trace.last().unwrap().total <= a.trace[0].total);
        assert!(a.output.pixels().iter().all(|&p| (0.0..=1.0).contains(&p)));
        for l in &a.trace {
            assert!((l.total - (cfg.alpha * l.content + cfg.beta * l.style)).abs() <= 1e-9 * l.total.max(1.0));
        }
        assert_eq!(a, transfer(&c, &s, &net, &cfg).unwrap());
        assert!(transfer(&c, &noise_image(24, 20, 2), &net, &cfg).is_err());
    }

    #[test]
    fn batch_matches_individual_runs() {
        let net = FeatureNetwork::new(8);
        let cfg = StyleTransferConfig { iterations: 3, seed: 21, ..Default::default() };
        let clean: Vec<_> = (0..3).map(|i| (ActivityId::Punching, noise_image(16, 16, 30 + i))).collect();
        let exemplars = BTreeMap::from([(ActivityId::Punching, noise_image(16, 16, 99))]);
        let out = batch_stylize(&clean, &exemplars, &net, &cfg).unwrap();
        assert_eq!(out.len(), 3);
        for (i, (activity, result)) in out.iter().enumerate() {
            assert_eq!(*activity, ActivityId::Punching);
            let single = StyleTransferConfig { seed: image_seed(cfg.seed, i), ..cfg.clone() };
            assert_eq!(result, &transfer(&clean[i].1, &exemplars[activity], &net, &single).unwrap());
        }
        assert!(batch_stylize(&[], &exemplars, &net, &cfg).unwrap().is_empty());
        let missing = vec![(ActivityId::SitDown, noise_image(16, 16, 1))];
        assert!(batch_stylize(&missing, &exemplars, &net, &cfg).is_err());
    }

    #[test]
    fn default_config_values() {
        let c = StyleTransferConfig::default();
        assert_eq!(c.iterations, 2500);
        assert!((c.alpha / c.beta - 1e-3).abs() < 1e-15);
        assert_eq!(c.content_layer, Tap::Conv2_1);
        assert!((c.style_layers.iter().map(|l| l.1).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(StyleTransferConfig { iterations: 0, ..c.clone() }.validate().is_err());
    }

    #[test]
    fn ncc_basics() {
        let a = noise_image(10, 10, 1);
        assert!((ncc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = ImageGrid::new(10, 10, a.pixels().iter().map(|p| 1.0 - p).collect()).unwrap();
        assert!((ncc(&a, &inv).unwrap() + 1.0).abs() < 1e-6);
    }
}
