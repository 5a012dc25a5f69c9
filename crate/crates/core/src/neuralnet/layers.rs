//! Layer kernels shared by the feature network and the classifier. All
//! functions are generic over [`Scalar`] so gradient checks can run in f64
//! while classifier training runs in f32.

use crate::error::{Error, Result};

use super::tensor::{Scalar, Tensor};

/// `(c_in * 9) x (h * w)` patch matrix for a 3x3, stride-1, zero-pad-1
/// convolution.
pub fn im2col<T: Scalar>(input: &Tensor<T>) -> Vec<T> {
    let (h, w, c) = input.shape();
    let hw = h * w;
    let src = input.data();
    let mut cols = vec![T::zero(); c * 9 * hw];
    for ci in 0..c {
        let plane = &src[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(ci * 9 + ky * 3 + kx) * hw..(ci * 9 + ky * 3 + kx + 1) * hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let srow = &plane[sy as usize * w..(sy as usize + 1) * w];
                    let drow = &mut row[y * w..(y + 1) * w];
                    // x range where x + kx - 1 is inside [0, w)
                    let x0 = if kx == 0 { 1 } else { 0 };
                    let x1 = if kx == 2 { w - 1 } else { w };
                    for x in x0..x1 {
                        drow[x] = srow[x + kx - 1];
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back to the input.
pub fn col2im<T: Scalar>(cols: &[T], h: usize, w: usize, c: usize) -> Tensor<T> {
    let hw = h * w;
    let mut out = vec![T::zero(); c * hw];
    for ci in 0..c {
        let plane = &mut out[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(ci * 9 + ky * 3 + kx) * hw..(ci * 9 + ky * 3 + kx + 1) * hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let srow = &row[y * w..(y + 1) * w];
                    let drow = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    let x0 = if kx == 0 { 1 } else { 0 };
                    let x1 = if kx == 2 { w - 1 } else { w };
                    for x in x0..x1 {
                        drow[x + kx - 1] = drow[x + kx - 1] + srow[x];
                    }
                }
            }
        }
    }
    Tensor::from_vec(h, w, c, out).expect("col2im shape")
}

fn check_conv(input: &Tensor<impl Scalar>, kernel_len: usize, c_out: usize) -> Result<()> {
    let c_in = input.channels();
    if c_out == 0 || kernel_len != c_out * c_in * 9 {
        return Err(Error::shape(format!(
            "kernel has {kernel_len} weights; expected {c_out} x {c_in} x 3 x 3"
        )));
    }
    Ok(())
}

/// 3x3 stride-1 zero-pad-1 cross-correlation. `kernel` is laid out
/// `[c_out][c_in][3][3]`; the output channel count is `bias.len()`.
pub fn conv_forward<T: Scalar>(input: &Tensor<T>, kernel: &[T], bias: &[T]) -> Result<Tensor<T>> {
    Ok(conv_forward_cols(input, kernel, bias)?.0)
}

/// As [`conv_forward`], also returning the patch matrix for the backward pass.
pub fn conv_forward_cols<T: Scalar>(input: &Tensor<T>, kernel: &[T], bias: &[T]) -> Result<(Tensor<T>, Vec<T>)> {
    let c_out = bias.len();
    check_conv(input, kernel.len(), c_out)?;
    let (h, w, c_in) = input.shape();
    let hw = h * w;
    let cols = im2col(input);
    let mut out = vec![T::zero(); c_out * hw];
    for (co, b) in bias.iter().enumerate() {
        out[co * hw..(co + 1) * hw].iter_mut().for_each(|v| *v = *b);
    }
    T::gemm(c_out, c_in * 9, hw, T::one(), kernel, false, &cols, false, T::one(), &mut out);
    Ok((Tensor::from_vec(h, w, c_out, out)?, cols))
}

/// Convolution backward pass. Accumulates into `d_kernel` / `d_bias` when
/// given and returns the input gradient when `input_grad` is set.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward<T: Scalar>(
    cols: &[T],
    d_out: &Tensor<T>,
    kernel: &[T],
    c_in: usize,
    d_kernel: Option<&mut [T]>,
    d_bias: Option<&mut [T]>,
    input_grad: bool,
) -> Option<Tensor<T>> {
    let (h, w, c_out) = d_out.shape();
    let hw = h * w;
    let dy = d_out.data();
    if let Some(dk) = d_kernel {
        T::gemm(c_out, hw, c_in * 9, T::one(), dy, false, cols, true, T::one(), dk);
    }
    if let Some(db) = d_bias {
        for (co, b) in db.iter_mut().enumerate() {
            *b = *b + dy[co * hw..(co + 1) * hw].iter().copied().sum::<T>();
        }
    }
    if !input_grad {
        return None;
    }
    let mut d_cols = vec![T::zero(); c_in * 9 * hw];
    T::gemm(c_in * 9, c_out, hw, T::one(), kernel, true, dy, false, T::zero(), &mut d_cols);
    Some(col2im(&d_cols, h, w, c_in))
}

pub fn relu_forward<T: Scalar>(x: &mut Tensor<T>) {
    x.data_mut().iter_mut().for_each(|v| {
        if *v < T::zero() {
            *v = T::zero()
        }
    });
}

/// Gradient through ReLU given the layer's (post-activation) output.
pub fn relu_backward<T: Scalar>(d: &mut Tensor<T>, out: &Tensor<T>) {
    for (g, o) in d.data_mut().iter_mut().zip(out.data()) {
        if *o <= T::zero() {
            *g = T::zero();
        }
    }
}

/// 2x2 average pool, stride 2; trailing odd rows/columns are dropped.
pub fn avg_pool2_forward<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let (h, w, c) = x.shape();
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(Error::shape(format!("cannot pool a {h}x{w} map")));
    }
    let quarter = T::from_f64(0.25);
    let mut out = vec![T::zero(); oh * ow * c];
    for ci in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                let s = x.get(2 * y, 2 * xx, ci)
                    + x.get(2 * y, 2 * xx + 1, ci)
                    + x.get(2 * y + 1, 2 * xx, ci)
                    + x.get(2 * y + 1, 2 * xx + 1, ci);
                out[(ci * oh + y) * ow + xx] = s * quarter;
            }
        }
    }
    Tensor::from_vec(oh, ow, c, out)
}

pub fn avg_pool2_backward<T: Scalar>(d_out: &Tensor<T>, in_h: usize, in_w: usize) -> Tensor<T> {
    let (oh, ow, c) = d_out.shape();
    let quarter = T::from_f64(0.25);
    let mut d = Tensor::zeros(in_h, in_w, c);
    let data = d.data_mut();
    for ci in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let g = d_out.get(y, x, ci) * quarter;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    data[(ci * in_h + 2 * y + dy) * in_w + 2 * x + dx] = g;
                }
            }
        }
    }
    d
}

/// `k x k` max pool, stride `k`. Returns the pooled map and the flat input
/// index of each maximum.
pub fn max_pool_forward<T: Scalar>(x: &Tensor<T>, k: usize) -> Result<(Tensor<T>, Vec<usize>)> {
    let (h, w, c) = x.shape();
    let (oh, ow) = (h / k, w / k);
    if k == 0 || oh == 0 || ow == 0 {
        return Err(Error::shape(format!("cannot {k}x{k} pool a {h}x{w} map")));
    }
    let src = x.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut idx = Vec::with_capacity(oh * ow * c);
    for ci in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                let mut best = (ci * h + k * y) * w + k * xx;
                for dy in 0..k {
                    for dx in 0..k {
                        let i = (ci * h + k * y + dy) * w + k * xx + dx;
                        if src[i] > src[best] {
                            best = i;
                        }
                    }
                }
                out.push(src[best]);
                idx.push(best);
            }
        }
    }
    Ok((Tensor::from_vec(oh, ow, c, out)?, idx))
}

pub fn max_pool_backward<T: Scalar>(d_out: &Tensor<T>, argmax: &[usize], in_h: usize, in_w: usize) -> Tensor<T> {
    let mut d = Tensor::zeros(in_h, in_w, d_out.channels());
    let data = d.data_mut();
    for (g, &i) in d_out.data().iter().zip(argmax) {
        data[i] = data[i] + *g;
    }
    d
}

/// `y = W x + b` with `W` stored `out x in` row-major.
pub fn dense_forward<T: Scalar>(x: &[T], weights: &[T], bias: &[T]) -> Result<Vec<T>> {
    let (n_out, n_in) = (bias.len(), x.len());
    if weights.len() != n_out * n_in {
        return Err(Error::shape(format!("dense weights {} != {n_out} x {n_in}", weights.len())));
    }
    let mut y = bias.to_vec();
    T::gemm(n_out, n_in, 1, T::one(), weights, false, x, false, T::one(), &mut y);
    Ok(y)
}

/// Accumulates `dW += dy xᵀ`, `db += dy` and returns `dx = Wᵀ dy`.
pub fn dense_backward<T: Scalar>(x: &[T], dy: &[T], weights: &[T], d_weights: &mut [T], d_bias: &mut [T]) -> Vec<T> {
    let (n_out, n_in) = (dy.len(), x.len());
    T::gemm(n_out, 1, n_in, T::one(), dy, false, x, false, T::one(), d_weights);
    for (b, g) in d_bias.iter_mut().zip(dy) {
        *b = *b + *g;
    }
    let mut dx = vec![T::zero(); n_in];
    T::gemm(n_in, n_out, 1, T::one(), weights, true, dy, false, T::zero(), &mut dx);
    dx
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Cross-entropy of `softmax(logits)` against `label`, evaluated in log
/// space. Returns the loss and its gradient with respect to the logits.
pub fn softmax_cross_entropy<T: Scalar>(logits: &[T], label: usize) -> (T, Vec<T>) {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = m + logits.iter().map(|&z| (z - m).exp()).sum::<T>().ln();
    let loss = lse - logits[label];
    let mut grad: Vec<T> = logits.iter().map(|&z| (z - lse).exp()).collect();
    grad[label] = grad[label] - T::one();
    (loss, grad)
}
