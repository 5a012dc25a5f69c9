use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            learning_rate: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// `KL(P || Q)` of the un-exaggerated affinities, one entry per
    /// iteration, evaluated at the iterate entering the step.
    pub kl: Vec<f64>,
}

fn squared_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Row-conditional Gaussian affinities whose entropy matches
/// `ln(perplexity)` to `1e-5`; each row sums to one.
pub fn conditional_affinities(x: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = x.len();
    let d = squared_distances(x);
    let target = perplexity.ln();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let row = &d[i * n..(i + 1) * n];
        let (mut beta, mut lo, mut hi) = (1.0, f64::NEG_INFINITY, f64::INFINITY);
        // distances relative to the nearest neighbour keep exp() in range
        let dmin = (0..n).filter(|&j| j != i).map(|j| row[j]).fold(f64::INFINITY, f64::min);
        let mut probs = vec![0.0; n];
        for _ in 0..200 {
            let mut sum = 0.0;
            for j in 0..n {
                probs[j] = if j == i { 0.0 } else { (-(row[j] - dmin) * beta).exp() };
                sum += probs[j];
            }
            let mut h = 0.0;
            for (j, pj) in probs.iter_mut().enumerate() {
                *pj /= sum;
                if j != i && *pj > 0.0 {
                    h -= *pj * pj.ln();
                }
            }
            let diff = h - target;
            if diff.abs() < 1e-5 {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = if lo.is_finite() { 0.5 * (beta + lo) } else { beta / 2.0 };
            }
        }
        p[i * n..(i + 1) * n].copy_from_slice(&probs);
    }
    p
}

fn kl_divergence(p: &[f64], q_num: &[f64], z: f64) -> f64 {
    p.iter()
        .zip(q_num)
        .filter(|(&pij, _)| pij > 0.0)
        .map(|(&pij, &num)| {
            let q = (num / z).max(1e-300);
            pij * (pij / q).ln()
        })
        .sum()
}

fn center(y: &mut [[f64; 2]]) {
    let n = y.len() as f64;
    let mut mean = [0.0; 2];
    for yi in y.iter() {
        mean[0] += yi[0] / n;
        mean[1] += yi[1] / n;
    }
    for yi in y.iter_mut() {
        yi[0] -= mean[0];
        yi[1] -= mean[1];
    }
}

/// Student-t numerators into `num`; returns their sum over `i != j`.
fn student_t(y: &[[f64; 2]], num: &mut [f64]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2);
            let v = 1.0 / (1.0 + d);
            num[i * n + j] = v;
            num[j * n + i] = v;
            z += 2.0 * v;
        }
    }
    z
}

/// Exact t-SNE to two dimensions with momentum gradient descent and
/// adaptive per-coordinate gains. After early exaggeration a step that
/// would raise KL is replaced by a shorter plain gradient step.
pub fn tsne(x: &[Vec<f64>], cfg: &TsneConfig) -> Result<TsneResult> {
    let n = x.len();
    if !(5..=5000).contains(&n) {
        return Err(Error::invalid(format!("t-SNE needs between 5 and 5000 points, got {n}")));
    }
    if !(cfg.perplexity > 0.0 && cfg.perplexity < n as f64 / 3.0) {
        return Err(Error::invalid(format!("perplexity {} must be in (0, {}/3)", cfg.perplexity, n)));
    }
    if x.iter().any(|v| v.len() != x[0].len() || v.iter().any(|a| !a.is_finite())) {
        return Err(Error::invalid("t-SNE inputs must be finite and of equal length"));
    }
    let cond = conditional_affinities(x, cfg.perplexity);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
            }
        }
    }
    let psum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= psum);

    let normal = Normal::new(0.0, 1e-2).unwrap();
    let mut r = rng::stream(cfg.seed, &[0x74_736e_65]);
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut r), normal.sample(&mut r)]).collect();
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    let mut z = student_t(&y, &mut num);
    let mut cand = vec![[0.0f64; 2]; n];
    let mut cand_num = vec![0.0; n * n];
    let mut grad = vec![[0.0f64; 2]; n];
    let mut kl = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let current = kl_divergence(&p, &num, z);
        kl.push(current);
        let exaggerated = it < cfg.exaggeration_iters;
        if it == cfg.exaggeration_iters {
            // fresh optimiser state for the un-exaggerated objective
            velocity.iter_mut().for_each(|v| *v = [0.0; 2]);
            gains.iter_mut().for_each(|g| *g = [1.0; 2]);
        }
        let exag = if exaggerated { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.momentum_switch { cfg.initial_momentum } else { cfg.final_momentum };
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let m = (exag * p[i * n + j] - w / z) * w;
                g[0] += m * (y[i][0] - y[j][0]);
                g[1] += m * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        for i in 0..n {
            for k in 0..2 {
                let gk = grad[i][k];
                gains[i][k] = if (gk > 0.0) != (velocity[i][k] > 0.0) { gains[i][k] + 0.2 } else { gains[i][k] * 0.8 };
                gains[i][k] = gains[i][k].max(0.01);
                velocity[i][k] = momentum * velocity[i][k] - cfg.learning_rate * gains[i][k] * gk;
            }
        }
        if exaggerated {
            for (yi, vi) in y.iter_mut().zip(&velocity) {
                yi[0] += vi[0];
                yi[1] += vi[1];
            }
            center(&mut y);
            z = student_t(&y, &mut num);
            continue;
        }
        // after exaggeration the step is kept only if KL does not rise;
        // otherwise momentum is dropped and the gradient step halved
        let mut scale = 1.0;
        let mut use_velocity = true;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                for k in 0..2 {
                    let step = if use_velocity { velocity[i][k] } else { -scale * cfg.learning_rate * grad[i][k] };
                    cand[i][k] = y[i][k] + step;
                }
            }
            center(&mut cand);
            let cz = student_t(&cand, &mut cand_num);
            if kl_divergence(&p, &cand_num, cz) <= current {
                std::mem::swap(&mut y, &mut cand);
                std::mem::swap(&mut num, &mut cand_num);
                z = cz;
                accepted = true;
                break;
            }
            if use_velocity {
                use_velocity = false;
                velocity.iter_mut().for_each(|v| *v = [0.0; 2]);
                gains.iter_mut().for_each(|g| *g = [1.0; 2]);
            } else {
                scale *= 0.5;
            }
        }
        if accepted && !use_velocity {
            for i in 0..n {
                for k in 0..2 {
                    velocity[i][k] = -scale * cfg.learning_rate * grad[i][k];
                }
            }
        }
    }
    Ok(TsneResult { coords: y, kl })
}
