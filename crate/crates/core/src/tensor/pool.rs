use crate::error::{Error, Result};

use super::graph::{Graph, Op, Var};
use super::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Avg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PoolSpec {
    pub window: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl PoolSpec {
    /// Non-overlapping square window, no padding.
    pub fn square(k: usize) -> Self {
        Self { window: (k, k), stride: (k, k), padding: (0, 0) }
    }
}

fn out_dims(shape: &[usize], spec: &PoolSpec) -> Result<[usize; 6]> {
    let [n, c, h, w] = match shape {
        &[a, b, c, d] => [a, b, c, d],
        _ => return Err(Error::dim("pool2d", format!("input must be rank 4, got {shape:?}"))),
    };
    let (kh, kw) = spec.window;
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    if kh == 0 || kw == 0 {
        return Err(Error::Arg("pool2d: window must be non-empty".into()));
    }
    if sh == 0 || sw == 0 {
        return Err(Error::Arg("pool2d: stride must be positive".into()));
    }
    if kh > h + 2 * ph || kw > w + 2 * pw {
        return Err(Error::dim("pool2d", format!("window {kh}x{kw} exceeds padded input {}x{}", h + 2 * ph, w + 2 * pw)));
    }
    if ph >= kh || pw >= kw {
        return Err(Error::Arg("pool2d: padding must be smaller than the window".into()));
    }
    Ok([n, c, h, w, (h + 2 * ph - kh) / sh + 1, (w + 2 * pw - kw) / sw + 1])
}

/// Max pooling with a -inf padding sentinel. Returns the output and, per
/// output element, the flat input index of the first maximal entry in
/// row-major window order.
pub(crate) fn max_forward<T: Scalar>(x: &Tensor<T>, spec: &PoolSpec) -> Result<(Tensor<T>, Vec<usize>)> {
    let [n, c, h, w, oh, ow] = out_dims(x.shape(), spec)?;
    let (kh, kw) = spec.window;
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let xd = x.data();
    let mut y = Vec::with_capacity(n * c * oh * ow);
    let mut arg = Vec::with_capacity(n * c * oh * ow);
    for nc in 0..n * c {
        let base = nc * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = T::neg_infinity();
                let mut best_i = usize::MAX;
                for ky in 0..kh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    if iy < 0 || iy as usize >= h {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        if ix < 0 || ix as usize >= w {
                            continue;
                        }
                        let i = base + iy as usize * w + ix as usize;
                        if xd[i] > best || best_i == usize::MAX {
                            best = xd[i];
                            best_i = i;
                        }
                    }
                }
                y.push(best);
                arg.push(best_i);
            }
        }
    }
    Ok((Tensor::new(vec![n, c, oh, ow], y)?, arg))
}

pub(crate) fn max_backward<T: Scalar>(in_len: usize, argmax: &[usize], g: &[T]) -> Vec<T> {
    let mut gx = vec![T::zero(); in_len];
    for (&i, &gi) in argmax.iter().zip(g) {
        if i != usize::MAX {
            gx[i] += gi;
        }
    }
    gx
}

/// Average pooling; padded cells count as zeros in the divisor.
pub(crate) fn avg_forward<T: Scalar>(x: &Tensor<T>, spec: &PoolSpec) -> Result<Tensor<T>> {
    let [n, c, h, w, oh, ow] = out_dims(x.shape(), spec)?;
    let (kh, kw) = spec.window;
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let inv = T::one() / T::of((kh * kw) as f64);
    let xd = x.data();
    let mut y = Vec::with_capacity(n * c * oh * ow);
    for nc in 0..n * c {
        let base = nc * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = T::zero();
                for ky in 0..kh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    if iy < 0 || iy as usize >= h {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        if ix >= 0 && (ix as usize) < w {
                            acc += xd[base + iy as usize * w + ix as usize];
                        }
                    }
                }
                y.push(acc * inv);
            }
        }
    }
    Tensor::new(vec![n, c, oh, ow], y)
}

pub(crate) fn avg_backward<T: Scalar>(in_shape: &[usize], out_shape: &[usize], spec: &PoolSpec, g: &[T]) -> Vec<T> {
    let (h, w) = (in_shape[2], in_shape[3]);
    let (oh, ow) = (out_shape[2], out_shape[3]);
    let (kh, kw) = spec.window;
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let inv = T::one() / T::of((kh * kw) as f64);
    let planes = in_shape[0] * in_shape[1];
    let mut gx = vec![T::zero(); planes * h * w];
    for nc in 0..planes {
        let base = nc * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let gi = g[(nc * oh + oy) * ow + ox] * inv;
                for ky in 0..kh {
                    let iy = (oy * sh + ky) as isize - ph as isize;
                    if iy < 0 || iy as usize >= h {
                        continue;
                    }
                    for kx in 0..kw {
                        let ix = (ox * sw + kx) as isize - pw as isize;
                        if ix >= 0 && (ix as usize) < w {
                            gx[base + iy as usize * w + ix as usize] += gi;
                        }
                    }
                }
            }
        }
    }
    gx
}

impl<T: Scalar> Graph<T> {
    pub fn pool2d(&mut self, x: Var, kind: PoolKind, spec: PoolSpec) -> Result<Var> {
        match kind {
            PoolKind::Max => {
                let (y, argmax) = max_forward(self.value(x), &spec)?;
                Ok(self.push(y, Op::MaxPool { x, argmax }, &[x]))
            }
            PoolKind::Avg => {
                let y = avg_forward(self.value(x), &spec)?;
                Ok(self.push(y, Op::AvgPool { x, spec }, &[x]))
            }
        }
    }
}
