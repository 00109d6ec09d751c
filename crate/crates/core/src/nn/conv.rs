use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gemm::gemm;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Weights `[out_ch, in_ch, kh, kw]` (for a transposed convolution this is
/// the layout of the convolution it is the adjoint of, so the transposed
/// layer maps `out_ch` channels to `in_ch`), bias, stride and zero padding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    pub weights: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub grad_x: Tensor,
    pub grad_w: Tensor,
    pub grad_b: Tensor,
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    c: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl Geometry {
    fn rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn cols(&self) -> usize {
        self.ho * self.wo
    }
}

impl ConvParams {
    pub fn new(weights: Tensor, bias: Tensor, stride: usize, padding: usize) -> Result<Self> {
        let [o, i, kh, kw] = weights.dims4()?;
        if o == 0 || i == 0 || kh == 0 || kw == 0 {
            return Err(Error::shape(format!("degenerate kernel {:?}", weights.shape())));
        }
        if stride == 0 {
            return Err(Error::arg("stride must be positive"));
        }
        if bias.shape().len() != 1 {
            return Err(Error::shape("bias must be 1-D"));
        }
        Ok(ConvParams {
            weights,
            bias,
            stride,
            padding,
        })
    }

    fn dims(&self) -> [usize; 4] {
        let s = self.weights.shape();
        [s[0], s[1], s[2], s[3]]
    }
}

fn conv_out_len(len: usize, k: usize, stride: usize, pad: usize) -> Result<usize> {
    let span = (len + 2 * pad)
        .checked_sub(k)
        .ok_or_else(|| Error::shape(format!("kernel {k} larger than padded input {}", len + 2 * pad)))?;
    if span % stride != 0 {
        return Err(Error::shape(format!(
            "input {len}, kernel {k}, stride {stride}, padding {pad} give a non-integral output size"
        )));
    }
    Ok(span / stride + 1)
}

/// Target size in bytes of one patch-matrix block.
const BLOCK_BYTES: usize = 1 << 18;

/// Number of output rows unfolded at a time.
fn block_rows(g: &Geometry) -> usize {
    (BLOCK_BYTES / 8 / (g.rows() * g.wo).max(1)).clamp(1, g.ho.max(1))
}

/// Output columns `lo..hi` whose input column `ox + kx - pad` is in bounds (stride 1).
fn valid_range(g: &Geometry, kx: usize) -> (usize, usize) {
    let lo = g.pad.saturating_sub(kx).min(g.wo);
    let hi = (g.w + g.pad).saturating_sub(kx).min(g.wo).max(lo);
    (lo, hi)
}

/// Unfold output rows `oy0..oy0 + r` of one `[c, h, w]` image into a
/// `[c*kh*kw, r*wo]` patch matrix.
fn im2col(x: &[f64], g: &Geometry, oy0: usize, r: usize, col: &mut [f64]) {
    let p = r * g.wo;
    for c in 0..g.c {
        let plane = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let row = (c * g.kh + ky) * g.kw + kx;
                let dst = &mut col[row * p..(row + 1) * p];
                for dy in 0..r {
                    let iy = ((oy0 + dy) * g.stride + ky) as isize - g.pad as isize;
                    let out = &mut dst[dy * g.wo..(dy + 1) * g.wo];
                    if iy < 0 || iy >= g.h as isize {
                        out.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    if g.stride == 1 {
                        let (lo, hi) = valid_range(g, kx);
                        out[..lo].fill(0.0);
                        out[hi..].fill(0.0);
                        if lo < hi {
                            out[lo..hi].copy_from_slice(&src[lo + kx - g.pad..hi + kx - g.pad]);
                        }
                    } else {
                        for (ox, o) in out.iter_mut().enumerate() {
                            let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                            *o = if ix >= 0 && ix < g.w as isize {
                                src[ix as usize]
                            } else {
                                0.0
                            };
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-add a block patch matrix back into `[c, h, w]`.
fn col2im(col: &[f64], g: &Geometry, oy0: usize, r: usize, x: &mut [f64]) {
    let p = r * g.wo;
    for c in 0..g.c {
        let plane = &mut x[c * g.h * g.w..(c + 1) * g.h * g.w];
        for ky in 0..g.kh {
            for kx in 0..g.kw {
                let row = (c * g.kh + ky) * g.kw + kx;
                let src = &col[row * p..(row + 1) * p];
                for dy in 0..r {
                    let iy = ((oy0 + dy) * g.stride + ky) as isize - g.pad as isize;
                    if iy < 0 || iy >= g.h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * g.w..(iy as usize + 1) * g.w];
                    let vals = &src[dy * g.wo..(dy + 1) * g.wo];
                    if g.stride == 1 {
                        let (lo, hi) = valid_range(g, kx);
                        if lo < hi {
                            let d = &mut dst[lo + kx - g.pad..hi + kx - g.pad];
                            d.iter_mut().zip(&vals[lo..hi]).for_each(|(a, v)| *a += v);
                        }
                        continue;
                    }
                    for (ox, v) in vals.iter().enumerate() {
                        let ix = (ox * g.stride + kx) as isize - g.pad as isize;
                        if ix >= 0 && ix < g.w as isize {
                            dst[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

/// Row blocks `(oy0, r)` covering all output rows.
fn blocks(g: &Geometry) -> impl Iterator<Item = (usize, usize)> {
    let (ho, br) = (g.ho, block_rows(g));
    (0..ho).step_by(br).map(move |oy0| (oy0, br.min(ho - oy0)))
}

fn conv_geometry(x_dims: [usize; 4], p: &ConvParams) -> Result<Geometry> {
    let [_, c, h, w] = x_dims;
    let [_, ci, kh, kw] = p.dims();
    if c != ci {
        return Err(Error::shape(format!("input has {c} channels, kernel expects {ci}")));
    }
    Ok(Geometry {
        c,
        h,
        w,
        kh,
        kw,
        stride: p.stride,
        pad: p.padding,
        ho: conv_out_len(h, kh, p.stride, p.padding)?,
        wo: conv_out_len(w, kw, p.stride, p.padding)?,
    })
}

/// Cross-correlation plus per-channel bias: `[n, cin, h, w] -> [n, cout, h', w']`.
pub fn conv2d_forward(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let dims = x.dims4()?;
    let g = conv_geometry(dims, p)?;
    let [cout, ..] = p.dims();
    if p.bias.len() != cout {
        return Err(Error::shape(format!(
            "bias length {} != {cout} output channels",
            p.bias.len()
        )));
    }
    let n = dims[0];
    let (k, pn) = (g.rows(), g.cols());
    let in_len = g.c * g.h * g.w;
    let mut out = vec![0.0; n * cout * pn];
    out.par_chunks_mut(cout * pn)
        .zip(x.data().par_chunks(in_len))
        .for_each(|(o, xi)| {
            for (c, chunk) in o.chunks_mut(pn).enumerate() {
                chunk.fill(p.bias.data()[c]);
            }
            let mut col = vec![0.0; k * block_rows(&g) * g.wo];
            for (oy0, r) in blocks(&g) {
                let bn = r * g.wo;
                im2col(xi, &g, oy0, r, &mut col);
                let w = (p.weights.data(), k, 1);
                gemm(cout, k, bn, w, (&col, bn, 1), 1.0, (&mut o[oy0 * g.wo..], pn, 1));
            }
        });
    Tensor::new(vec![n, cout, g.ho, g.wo], out)
}

/// Exact gradients of [`conv2d_forward`] with respect to input, weights and bias.
pub fn conv2d_backward(grad_out: &Tensor, x: &Tensor, p: &ConvParams) -> Result<ConvGrads> {
    let dims = x.dims4()?;
    let g = conv_geometry(dims, p)?;
    let [cout, ..] = p.dims();
    let n = dims[0];
    if grad_out.shape() != [n, cout, g.ho, g.wo] {
        return Err(Error::shape(format!(
            "upstream gradient {:?} does not match forward output {:?}",
            grad_out.shape(),
            [n, cout, g.ho, g.wo]
        )));
    }
    let (k, pn) = (g.rows(), g.cols());
    let in_len = g.c * g.h * g.w;

    let mut grad_x = vec![0.0; x.len()];
    let per_sample_w: Vec<Vec<f64>> = grad_x
        .par_chunks_mut(in_len)
        .zip(x.data().par_chunks(in_len))
        .zip(grad_out.data().par_chunks(cout * pn))
        .map(|((gx, xi), go)| {
            let mut col = vec![0.0; k * block_rows(&g) * g.wo];
            let mut gw = vec![0.0; cout * k];
            for (oy0, r) in blocks(&g) {
                let bn = r * g.wo;
                let go_b = (&go[oy0 * g.wo..], pn, 1);
                im2col(xi, &g, oy0, r, &mut col);
                gemm(cout, bn, k, go_b, (&col, 1, bn), 1.0, (&mut gw, k, 1));
                gemm(k, cout, bn, (p.weights.data(), 1, k), go_b, 0.0, (&mut col, bn, 1));
                col2im(&col, &g, oy0, r, gx);
            }
            gw
        })
        .collect();

    let grad_w = sum_in_order(per_sample_w, cout * k);
    let grad_b = channel_sums(grad_out.data(), n, cout, pn);
    Ok(ConvGrads {
        grad_x: Tensor::new(x.shape().to_vec(), grad_x)?,
        grad_w: Tensor::new(p.weights.shape().to_vec(), grad_w)?,
        grad_b: Tensor::new(vec![cout], grad_b)?,
    })
}

fn sum_in_order(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for part in parts {
        acc.iter_mut().zip(part).for_each(|(a, v)| *a += v);
    }
    acc
}

fn channel_sums(data: &[f64], n: usize, c: usize, plane: usize) -> Vec<f64> {
    let mut sums = vec![0.0; c];
    for i in 0..n {
        for (ch, s) in sums.iter_mut().enumerate() {
            let start = (i * c + ch) * plane;
            *s += data[start..start + plane].iter().sum::<f64>();
        }
    }
    sums
}

/// Geometry of the convolution whose adjoint maps `[n, cout, hy, wy]` back up.
fn transposed_geometry(y_dims: [usize; 4], p: &ConvParams) -> Result<Geometry> {
    let [_, c, hy, wy] = y_dims;
    let [co, ci, kh, kw] = p.dims();
    if c != co {
        return Err(Error::shape(format!(
            "input has {c} channels, transposed kernel expects {co}"
        )));
    }
    let out_len = |len: usize, k: usize| -> Result<usize> {
        let full = (len - 1) * p.stride + k;
        match full.checked_sub(2 * p.padding) {
            Some(v) if v > 0 => Ok(v),
            _ => Err(Error::shape(format!(
                "transposed convolution of {len} with kernel {k}, stride {}, padding {} is empty",
                p.stride, p.padding
            ))),
        }
    };
    if hy == 0 || wy == 0 {
        return Err(Error::shape("empty input"));
    }
    Ok(Geometry {
        c: ci,
        h: out_len(hy, kh)?,
        w: out_len(wy, kw)?,
        kh,
        kw,
        stride: p.stride,
        pad: p.padding,
        ho: hy,
        wo: wy,
    })
}

/// Transposed convolution: the adjoint of [`conv2d_forward`] with the same
/// weights, plus a bias over its `in_ch` output channels. Output side length
/// is `(len - 1) * stride - 2 * padding + k`.
pub fn transposed_conv2d_forward(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let dims = x.dims4()?;
    let g = transposed_geometry(dims, p)?;
    let cin = dims[1];
    if p.bias.len() != g.c {
        return Err(Error::shape(format!(
            "bias length {} != {} output channels",
            p.bias.len(),
            g.c
        )));
    }
    let n = dims[0];
    let (k, pn) = (g.rows(), g.cols());
    let out_len = g.c * g.h * g.w;
    let mut out = vec![0.0; n * out_len];
    out.par_chunks_mut(out_len)
        .zip(x.data().par_chunks(cin * pn))
        .for_each(|(o, xi)| {
            let mut col = vec![0.0; k * block_rows(&g) * g.wo];
            for (oy0, r) in blocks(&g) {
                let bn = r * g.wo;
                let x_b = (&xi[oy0 * g.wo..], pn, 1);
                gemm(k, cin, bn, (p.weights.data(), 1, k), x_b, 0.0, (&mut col, bn, 1));
                col2im(&col, &g, oy0, r, o);
            }
            let plane = g.h * g.w;
            for (c, chunk) in o.chunks_mut(plane).enumerate() {
                let b = p.bias.data()[c];
                chunk.iter_mut().for_each(|v| *v += b);
            }
        });
    Tensor::new(vec![n, g.c, g.h, g.w], out)
}

/// Exact gradients of [`transposed_conv2d_forward`].
pub fn transposed_conv2d_backward(grad_out: &Tensor, x: &Tensor, p: &ConvParams) -> Result<ConvGrads> {
    let dims = x.dims4()?;
    let g = transposed_geometry(dims, p)?;
    let (n, cin) = (dims[0], dims[1]);
    if grad_out.shape() != [n, g.c, g.h, g.w] {
        return Err(Error::shape(format!(
            "upstream gradient {:?} does not match forward output {:?}",
            grad_out.shape(),
            [n, g.c, g.h, g.w]
        )));
    }
    let (k, pn) = (g.rows(), g.cols());
    let out_len = g.c * g.h * g.w;
    let mut grad_x = vec![0.0; x.len()];
    let per_sample_w: Vec<Vec<f64>> = grad_x
        .par_chunks_mut(cin * pn)
        .zip(x.data().par_chunks(cin * pn))
        .zip(grad_out.data().par_chunks(out_len))
        .map(|((gx, xi), go)| {
            let mut col = vec![0.0; k * block_rows(&g) * g.wo];
            let mut gw = vec![0.0; cin * k];
            for (oy0, r) in blocks(&g) {
                let bn = r * g.wo;
                im2col(go, &g, oy0, r, &mut col);
                let w = (p.weights.data(), k, 1);
                gemm(cin, k, bn, w, (&col, bn, 1), 0.0, (&mut gx[oy0 * g.wo..], pn, 1));
                gemm(
                    cin,
                    bn,
                    k,
                    (&xi[oy0 * g.wo..], pn, 1),
                    (&col, 1, bn),
                    1.0,
                    (&mut gw, k, 1),
                );
            }
            gw
        })
        .collect();
    let grad_w = sum_in_order(per_sample_w, cin * k);
    let grad_b = channel_sums(grad_out.data(), n, g.c, g.h * g.w);
    Ok(ConvGrads {
        grad_x: Tensor::new(x.shape().to_vec(), grad_x)?,
        grad_w: Tensor::new(p.weights.shape().to_vec(), grad_w)?,
        grad_b: Tensor::new(vec![g.c], grad_b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w: Tensor, b: Tensor, stride: usize, pad: usize) -> ConvParams {
        ConvParams::new(w, b, stride, pad).unwrap()
    }

    fn ramp(shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor::new(
            shape.to_vec(),
            (0..n).map(|i| ((i * 37 % 11) as f64) * 0.1 - 0.4).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_kernel() {
        let x = ramp(&[2, 1, 4, 5]);
        let p = params(Tensor::filled(&[1, 1, 1, 1], 1.0), Tensor::zeros(&[1]), 1, 0);
        assert_eq!(conv2d_forward(&x, &p).unwrap(), x);
        assert_eq!(transposed_conv2d_forward(&x, &p).unwrap(), x);
        let g = conv2d_backward(&x, &x, &p).unwrap();
        assert_eq!(g.grad_x, x);
    }

    #[test]
    fn zero_weights_give_bias() {
        let x = ramp(&[1, 2, 5, 5]);
        let p = params(Tensor::zeros(&[3, 2, 3, 3]), Tensor::filled(&[3], 0.75), 1, 1);
        let y = conv2d_forward(&x, &p).unwrap();
        assert_eq!(y.shape(), &[1, 3, 5, 5]);
        assert!(y.data().iter().all(|&v| v == 0.75));
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let x = ramp(&[1, 2, 5, 5]);
        let p = params(ramp(&[3, 2, 3, 3]), Tensor::zeros(&[3]), 1, 1);
        let g = conv2d_backward(&Tensor::zeros(&[1, 3, 5, 5]), &x, &p).unwrap();
        assert!(g
            .grad_x
            .data()
            .iter()
            .chain(g.grad_w.data())
            .chain(g.grad_b.data())
            .all(|&v| v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let x = ramp(&[1, 2, 5, 5]);
        let p = params(ramp(&[3, 1, 3, 3]), Tensor::zeros(&[3]), 1, 1);
        assert!(matches!(conv2d_forward(&x, &p), Err(Error::Shape(_))));
        let p = params(ramp(&[3, 2, 2, 2]), Tensor::zeros(&[3]), 2, 0);
        // (5 - 2) / 2 is not integral
        assert!(matches!(conv2d_forward(&x, &p), Err(Error::Shape(_))));
        let p = params(ramp(&[2, 2, 1, 1]), Tensor::zeros(&[2]), 1, 1);
        // (1 - 1) * 1 - 2 + 1 <= 0
        let tiny = ramp(&[1, 2, 1, 1]);
        assert!(matches!(transposed_conv2d_forward(&tiny, &p), Err(Error::Shape(_))));
        assert!(ConvParams::new(ramp(&[1, 1, 1, 1]), Tensor::zeros(&[1]), 0, 0).is_err());
    }

    #[test]
    fn transposed_output_size() {
        let p = params(ramp(&[4, 2, 4, 4]), Tensor::zeros(&[2]), 2, 1);
        let y = transposed_conv2d_forward(&ramp(&[1, 4, 8, 8]), &p).unwrap();
        assert_eq!(y.shape(), &[1, 2, 16, 16]);
    }
}
