use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{Activations, Scalar, Tap, TapGrads, Tensor};

/// `N x N` feature correlation matrix of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::shape(format!("{n}x{n} Gram matrix needs {} values", n * n)));
        }
        Ok(Self { n, values })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                m = m.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        m
    }
}

/// `G[i][j] = Σ_k F[i][k] F[j][k]` over the `channels x (height * width)`
/// flattening. The result is exactly symmetric.
pub fn gram(t: &Tensor<f64>) -> GramMatrix {
    let (n, d, f) = t.as_matrix();
    let mut g = vec![0.0; n * n];
    f64::gemm(n, d, n, 1.0, f, false, f, true, 0.0, &mut g);
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (g[i * n + j] + g[j * n + i]);
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    GramMatrix { n, values: g }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(g: &GramMatrix) -> Vec<f64> {
    let n = g.n;
    let mut a = g.values.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j].powi(2)).sum();
        if off < 1e-22 * (1.0 + g.trace().powi(2)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

fn mno(t: &Tensor<f64>) -> f64 {
    t.len() as f64
}

/// `Σ_l (1/MNO) Σ (C̃ − C)²` over `layers`, with tap gradients
/// `(2/MNO)(C̃ − C)`.
pub fn content_loss(transfer: &Activations, content: &Activations, layers: &[Tap]) -> Result<(f64, TapGrads)> {
    let mut total = 0.0;
    let mut grads = TapGrads::new();
    for &tap in layers {
        let (x, c) = (transfer.get(tap), content.get(tap));
        if !x.same_shape(c) {
            return Err(Error::shape(format!("content activations differ at {tap}: {:?} vs {:?}", x.shape(), c.shape())));
        }
        let norm = 1.0 / mno(x);
        let mut sum = 0.0;
        let g: Vec<f64> = x
            .data()
            .iter()
            .zip(c.data())
            .map(|(a, b)| {
                let d = a - b;
                sum += d * d;
                2.0 * norm * d
            })
            .collect();
        total += norm * sum;
        grads.accumulate(tap, Tensor::from_vec(x.height(), x.width(), x.channels(), g)?)?;
    }
    Ok((total, grads))
}

/// Style loss against precomputed target Grams. Each entry of `layers`
/// pairs a tap with its weight `W^l`.
pub fn style_loss_from_grams(
    transfer: &Activations,
    targets: &[(Tap, GramMatrix)],
    layers: &[(Tap, f64)],
) -> Result<(f64, TapGrads)> {
    let mut total = 0.0;
    let mut grads = TapGrads::new();
    for &(tap, weight) in layers {
        let target = targets
            .iter()
            .find(|(t, _)| *t == tap)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::invalid(format!("no style target at {tap}")))?;
        let x = transfer.get(tap);
        let g = gram(x);
        if g.n != target.n {
            return Err(Error::shape(format!("style Gram sizes differ at {tap}: {} vs {}", g.n, target.n)));
        }
        let norm = 1.0 / mno(x);
        let diff: Vec<f64> = g.values.iter().zip(&target.values).map(|(a, b)| a - b).collect();
        total += weight * norm * diff.iter().map(|d| d * d).sum::<f64>();
        // dL/dF = (4 W / MNO) (G̃ − G) F
        let (n, d, f) = x.as_matrix();
        let mut gf = vec![0.0; n * d];
        f64::gemm(n, n, d, 4.0 * weight * norm, &diff, false, f, false, 0.0, &mut gf);
        grads.accumulate(tap, Tensor::from_vec(x.height(), x.width(), x.channels(), gf)?)?;
    }
    Ok((total, grads))
}

pub fn style_loss(transfer: &Activations, style: &Activations, layers: &[(Tap, f64)]) -> Result<(f64, TapGrads)> {
    let targets: Vec<(Tap, GramMatrix)> = layers.iter().map(|&(t, _)| (t, gram(style.get(t)))).collect();
    for &(tap, _) in layers {
        if !transfer.get(tap).same_shape(style.get(tap)) {
            return Err(Error::shape(format!("style activations differ at {tap}")));
        }
    }
    style_loss_from_grams(transfer, &targets, layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub content: f64,
    pub style: f64,
    pub total: f64,
}

/// `α · content + β · style`.
pub fn total_loss(content: f64, style: f64, alpha: f64, beta: f64) -> Result<LossBreakdown> {
    if alpha < 0.0 || beta < 0.0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::invalid(format!("loss weights must be >= 0 (alpha {alpha}, beta {beta})")));
    }
    if content < 0.0 || style < 0.0 {
        return Err(Error::invalid("loss parts must be >= 0"));
    }
    Ok(LossBreakdown { content, style, total: alpha * content + beta * style })
}
