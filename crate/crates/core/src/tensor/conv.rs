//! Grouped 2-D cross-correlation over `(N, C, F, T)` maps.
//!
//! One kernel covers the three cases the network uses: dense (`groups = 1`),
//! depthwise (`groups = C`) and pointwise (1x1). Padding is zero.

use crate::error::{Error, Result};

use super::graph::{Graph, Op, Var};
use super::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub groups: usize,
}

impl Default for ConvSpec {
    fn default() -> Self {
        Self { stride: (1, 1), padding: (0, 0), groups: 1 }
    }
}

impl ConvSpec {
    pub fn new(stride: (usize, usize), padding: (usize, usize), groups: usize) -> Self {
        Self { stride, padding, groups }
    }
}

#[derive(Clone, Copy, Debug)]
struct Geom {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    icg: usize,
    ocg: usize,
    oh: usize,
    ow: usize,
    sh: usize,
    sw: usize,
    ph: usize,
    pw: usize,
}

fn geom(xs: &[usize], ws: &[usize], spec: &ConvSpec) -> Result<Geom> {
    let [n, c, h, w] = match xs {
        &[a, b, c, d] => [a, b, c, d],
        _ => return Err(Error::dim("conv2d", format!("input must be rank 4, got {xs:?}"))),
    };
    let [oc, icg, kh, kw] = match ws {
        &[a, b, c, d] => [a, b, c, d],
        _ => return Err(Error::dim("conv2d", format!("weight must be rank 4, got {ws:?}"))),
    };
    let g = spec.groups;
    if g == 0 || spec.stride.0 == 0 || spec.stride.1 == 0 {
        return Err(Error::Arg("conv2d: groups and strides must be positive".into()));
    }
    if c % g != 0 || oc % g != 0 {
        return Err(Error::dim("conv2d", format!("channels in={c} out={oc} not divisible by groups={g}")));
    }
    if icg != c / g {
        return Err(Error::dim("conv2d", format!("weight axis 1 is {icg}, expected in_channels/groups = {}", c / g)));
    }
    let (ph, pw) = spec.padding;
    if kh == 0 || kw == 0 || kh > h + 2 * ph || kw > w + 2 * pw {
        return Err(Error::dim(
            "conv2d",
            format!("kernel {kh}x{kw} does not fit padded input {}x{} (axes 2,3)", h + 2 * ph, w + 2 * pw),
        ));
    }
    let (sh, sw) = spec.stride;
    Ok(Geom {
        n,
        c,
        h,
        w,
        oc,
        kh,
        kw,
        icg,
        ocg: oc / g,
        oh: (h + 2 * ph - kh) / sh + 1,
        ow: (w + 2 * pw - kw) / sw + 1,
        sh,
        sw,
        ph,
        pw,
    })
}

/// Output extent along one axis: `floor((in + 2 pad - k) / stride) + 1`.
pub fn output_len(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// Range `[lo, hi)` of output positions whose tap `k` lands inside the input.
#[inline]
fn valid_range(k: usize, pad: usize, stride: usize, in_len: usize, out_len: usize) -> (usize, usize) {
    let lo = if pad > k { (pad - k).div_ceil(stride) } else { 0 };
    let hi = if in_len + pad > k { ((in_len - 1 + pad - k) / stride + 1).min(out_len) } else { 0 };
    (lo.min(out_len), hi.max(lo.min(out_len)))
}

pub(crate) fn forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, bias: Option<&Tensor<T>>, spec: &ConvSpec) -> Result<Tensor<T>> {
    let gm = geom(x.shape(), w.shape(), spec)?;
    if let Some(b) = bias {
        if b.numel() != gm.oc {
            return Err(Error::dim("conv2d", format!("bias has {} entries for {} output channels", b.numel(), gm.oc)));
        }
    }
    let Geom { n, c, h, w: wd, oc, kh, kw, icg, ocg, oh, ow, sh, sw, ph, pw } = gm;
    let (xd, wdat) = (x.data(), w.data());
    let plane_in = h * wd;
    let plane_out = oh * ow;
    let mut y = vec![T::zero(); n * oc * plane_out];
    for b in 0..n {
        for o in 0..oc {
            let grp = o / ocg;
            let out = &mut y[(b * oc + o) * plane_out..][..plane_out];
            if let Some(bias) = bias {
                out.fill(bias.data()[o]);
            }
            for icl in 0..icg {
                let ic = grp * icg + icl;
                let inp = &xd[(b * c + ic) * plane_in..][..plane_in];
                for ky in 0..kh {
                    let (oy0, oy1) = valid_range(ky, ph, sh, h, oh);
                    for kx in 0..kw {
                        let wv = wdat[((o * icg + icl) * kh + ky) * kw + kx];
                        if wv == T::zero() {
                            continue;
                        }
                        let (ox0, ox1) = valid_range(kx, pw, sw, wd, ow);
                        if ox0 >= ox1 {
                            continue;
                        }
                        let len = ox1 - ox0;
                        for oy in oy0..oy1 {
                            let iy = oy * sh + ky - ph;
                            let ix0 = ox0 * sw + kx - pw;
                            let orow = &mut out[oy * ow + ox0..][..len];
                            let base = iy * wd + ix0;
                            if sw == 1 {
                                let irow = &inp[base..][..len];
                                orow.iter_mut().zip(irow).for_each(|(o, &i)| *o += wv * i);
                            } else {
                                orow.iter_mut().enumerate().for_each(|(j, o)| *o += wv * inp[base + j * sw]);
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![n, oc, oh, ow], y)
}

/// Input, weight and bias gradients, each only when requested.
type ConvGrads<T> = (Option<Vec<T>>, Option<Vec<T>>, Option<Vec<T>>);

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    gout: &[T],
    out_shape: &[usize],
    spec: &ConvSpec,
    want_x: bool,
    want_w: bool,
    want_b: bool,
) -> ConvGrads<T> {
    let gm = geom(x.shape(), w.shape(), spec).expect("geometry validated on forward");
    debug_assert_eq!(out_shape, [gm.n, gm.oc, gm.oh, gm.ow]);
    let Geom { n, c, h, w: wd, oc, kh, kw, icg, ocg, oh, ow, sh, sw, ph, pw } = gm;
    let (xd, wdat) = (x.data(), w.data());
    let plane_in = h * wd;
    let plane_out = oh * ow;
    let mut gx = want_x.then(|| vec![T::zero(); xd.len()]);
    let mut gw = want_w.then(|| vec![T::zero(); wdat.len()]);
    let gb = want_b.then(|| {
        let mut gb = vec![T::zero(); oc];
        for b in 0..n {
            for (o, acc) in gb.iter_mut().enumerate() {
                *acc += gout[(b * oc + o) * plane_out..][..plane_out].iter().copied().sum::<T>();
            }
        }
        gb
    });
    if gx.is_none() && gw.is_none() {
        return (gx, gw, gb);
    }
    for b in 0..n {
        for o in 0..oc {
            let grp = o / ocg;
            let go = &gout[(b * oc + o) * plane_out..][..plane_out];
            for icl in 0..icg {
                let ic = grp * icg + icl;
                let in_off = (b * c + ic) * plane_in;
                for ky in 0..kh {
                    let (oy0, oy1) = valid_range(ky, ph, sh, h, oh);
                    for kx in 0..kw {
                        let (ox0, ox1) = valid_range(kx, pw, sw, wd, ow);
                        if ox0 >= ox1 {
                            continue;
                        }
                        let len = ox1 - ox0;
                        let widx = ((o * icg + icl) * kh + ky) * kw + kx;
                        let wv = wdat[widx];
                        let mut acc = T::zero();
                        for oy in oy0..oy1 {
                            let iy = oy * sh + ky - ph;
                            let base = in_off + iy * wd + ox0 * sw + kx - pw;
                            let grow = &go[oy * ow + ox0..][..len];
                            if sw == 1 {
                                if gw.is_some() {
                                    acc += grow.iter().zip(&xd[base..][..len]).map(|(&g, &xv)| g * xv).sum::<T>();
                                }
                                if let Some(gx) = gx.as_mut() {
                                    if wv != T::zero() {
                                        gx[base..][..len].iter_mut().zip(grow).for_each(|(d, &g)| *d += wv * g);
                                    }
                                }
                            } else {
                                for (j, &g) in grow.iter().enumerate() {
                                    let xi = base + j * sw;
                                    acc += g * xd[xi];
                                    if let Some(gx) = gx.as_mut() {
                                        gx[xi] += wv * g;
                                    }
                                }
                            }
                        }
                        if let Some(gw) = gw.as_mut() {
                            gw[widx] += acc;
                        }
                    }
                }
            }
        }
    }
    (gx, gw, gb)
}

impl<T: Scalar> Graph<T> {
    /// Cross-correlation of `x` (N,C,H,W) with `w` (O, C/groups, kh, kw).
    pub fn conv2d(&mut self, x: Var, w: Var, bias: Option<Var>, spec: ConvSpec) -> Result<Var> {
        let y = forward(self.value(x), self.value(w), bias.map(|b| self.value(b)), &spec)?;
        let mut inputs = vec![x, w];
        inputs.extend(bias);
        Ok(self.push(y, Op::Conv2d { x, w, bias, spec }, &inputs))
    }
}
