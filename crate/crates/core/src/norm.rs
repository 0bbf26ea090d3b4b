//! Frequency-wise instance normalization, residual normalization and
//! (sub-spectral) batch normalization.
//!
//! `freq_in` standardizes every `(example, frequency)` row using the mean
//! and population variance taken over channels and time. `res_norm` adds a
//! `lambda`-weighted identity shortcut on top:
//!
//! ```text
//! res_norm(x) = lambda * x + (x - mu[n,f]) / sqrt(var[n,f] + eps)
//! ```
//!
//! Neither has learnable parameters and neither keeps running statistics, so
//! training and inference behave identically.

use std::io::Write;

use crate::error::{Error, Result};
use crate::tensor::{Graph, Op, Scalar, Tensor, Var};

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_MOMENTUM: f64 = 0.1;

/// Residual normalization settings. `lambda = 0` is plain FreqIN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResNorm {
    pub lambda: f64,
    pub eps: f64,
}

impl Default for ResNorm {
    fn default() -> Self {
        Self { lambda: DEFAULT_LAMBDA, eps: DEFAULT_EPS }
    }
}

impl ResNorm {
    pub fn new(lambda: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Config(format!("ResNorm epsilon must be positive, got {eps}")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("ResNorm lambda must be non-negative, got {lambda}")));
        }
        Ok(Self { lambda, eps })
    }

    pub fn apply<T: Scalar>(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        res_norm(x, self)
    }
}

pub(crate) mod kernel {
    use crate::tensor::Scalar;

    /// Mean and population variance of a strided set, accumulated in f64.
    fn moments<T: Scalar>(mut values: impl Iterator<Item = T> + Clone, count: usize) -> (f64, f64) {
        let mean = values.clone().map(|v| v.as_f64()).sum::<f64>() / count as f64;
        let var = values.by_ref().map(|v| (v.as_f64() - mean).powi(2)).sum::<f64>() / count as f64;
        (mean, var)
    }

    /// Indices of one `(n, f)` row group: all `(c, t)` at that frequency.
    #[inline]
    fn freq_group(shape: [usize; 4], n: usize, f: usize) -> impl Iterator<Item = usize> + Clone {
        let [_, c, fs, t] = shape;
        (0..c).flat_map(move |ci| {
            let base = ((n * c + ci) * fs + f) * t;
            base..base + t
        })
    }

    pub fn freq_norm_forward<T: Scalar>(x: &[T], shape: [usize; 4], lambda: T, eps: f64) -> (Vec<T>, Vec<T>, Vec<T>) {
        let [n, c, f, t] = shape;
        let m = c * t;
        let mut xhat = vec![T::zero(); x.len()];
        let mut inv_std = vec![T::zero(); n * f];
        for ni in 0..n {
            for fi in 0..f {
                let (mean, var) = moments(freq_group(shape, ni, fi).map(|i| x[i]), m);
                let inv = 1.0 / (var + eps).sqrt();
                inv_std[ni * f + fi] = T::of(inv);
                for i in freq_group(shape, ni, fi) {
                    xhat[i] = T::of((x[i].as_f64() - mean) * inv);
                }
            }
        }
        let y = if lambda == T::zero() {
            xhat.clone()
        } else {
            x.iter().zip(&xhat).map(|(&xv, &h)| lambda * xv + h).collect()
        };
        (y, xhat, inv_std)
    }

    pub fn freq_norm_backward<T: Scalar>(shape: [usize; 4], lambda: T, xhat: &[T], inv_std: &[T], g: &[T]) -> Vec<T> {
        let [n, c, f, t] = shape;
        let m = (c * t) as f64;
        let mut gx: Vec<T> = g.iter().map(|&gi| lambda * gi).collect();
        for ni in 0..n {
            for fi in 0..f {
                let idx = freq_group(shape, ni, fi);
                let sg: f64 = idx.clone().map(|i| g[i].as_f64()).sum();
                let sgx: f64 = idx.clone().map(|i| (g[i] * xhat[i]).as_f64()).sum();
                let inv = inv_std[ni * f + fi].as_f64();
                for i in idx {
                    let v = inv / m * (m * g[i].as_f64() - sg - xhat[i].as_f64() * sgx);
                    gx[i] += T::of(v);
                }
            }
        }
        gx
    }

    /// Index groups of a sub-band batch norm: `(channel, band)` pairs, each
    /// spanning every example, the band's rows and all time steps.
    #[inline]
    fn band_group(shape: [usize; 4], bands: usize, ch: usize, band: usize) -> impl Iterator<Item = usize> + Clone {
        let [n, c, f, t] = shape;
        let rows = f / bands;
        (0..n).flat_map(move |ni| {
            let base = ((ni * c + ch) * f + band * rows) * t;
            base..base + rows * t
        })
    }

    pub struct BatchNormSaved<T> {
        pub xhat: Vec<T>,
        pub inv_std: Vec<T>,
        pub training: bool,
    }

    pub enum Stats<'a, T> {
        Batch,
        Running { mean: &'a [T], var: &'a [T] },
    }

    /// Returns output, saved tensors and the batch mean / population
    /// variance per group (empty in running-stat mode).
    pub fn batch_norm_forward<T: Scalar>(
        x: &[T],
        shape: [usize; 4],
        bands: usize,
        gamma: &[T],
        beta: &[T],
        stats: Stats<'_, T>,
        eps: f64,
    ) -> (Vec<T>, BatchNormSaved<T>, Vec<f64>, Vec<f64>) {
        let [n, c, f, t] = shape;
        let m = n * (f / bands) * t;
        let groups = c * bands;
        let mut y = vec![T::zero(); x.len()];
        let mut xhat = vec![T::zero(); x.len()];
        let mut inv_std = vec![T::zero(); groups];
        let training = matches!(stats, Stats::Batch);
        let (mut bm, mut bv) = (Vec::new(), Vec::new());
        for ch in 0..c {
            for b in 0..bands {
                let gi = ch * bands + b;
                let idx = band_group(shape, bands, ch, b);
                let (mean, var) = match &stats {
                    Stats::Batch => {
                        let mv = moments(idx.clone().map(|i| x[i]), m);
                        bm.push(mv.0);
                        bv.push(mv.1);
                        mv
                    }
                    Stats::Running { mean, var } => (mean[gi].as_f64(), var[gi].as_f64()),
                };
                let inv = 1.0 / (var + eps).sqrt();
                inv_std[gi] = T::of(inv);
                for i in idx {
                    let h = T::of((x[i].as_f64() - mean) * inv);
                    xhat[i] = h;
                    y[i] = gamma[gi] * h + beta[gi];
                }
            }
        }
        (y, BatchNormSaved { xhat, inv_std, training }, bm, bv)
    }

    pub fn batch_norm_backward<T: Scalar>(
        shape: [usize; 4],
        bands: usize,
        gamma: &[T],
        saved: &BatchNormSaved<T>,
        g: &[T],
    ) -> (Vec<T>, Vec<T>, Vec<T>) {
        let [n, c, f, t] = shape;
        let m = (n * (f / bands) * t) as f64;
        let groups = c * bands;
        let mut gx = vec![T::zero(); g.len()];
        let mut gg = vec![T::zero(); groups];
        let mut gb = vec![T::zero(); groups];
        for ch in 0..c {
            for b in 0..bands {
                let gi = ch * bands + b;
                let idx = band_group(shape, bands, ch, b);
                let sg: f64 = idx.clone().map(|i| g[i].as_f64()).sum();
                let sgx: f64 = idx.clone().map(|i| (g[i] * saved.xhat[i]).as_f64()).sum();
                gg[gi] = T::of(sgx);
                gb[gi] = T::of(sg);
                let scale = gamma[gi].as_f64() * saved.inv_std[gi].as_f64();
                for i in idx {
                    let v = if saved.training {
                        scale / m * (m * g[i].as_f64() - sg - saved.xhat[i].as_f64() * sgx)
                    } else {
                        scale * g[i].as_f64()
                    };
                    gx[i] = T::of(v);
                }
            }
        }
        (gx, gg, gb)
    }
}

/// FreqIN on a plain tensor.
pub fn freq_in<T: Scalar>(x: &Tensor<T>, eps: f64) -> Result<Tensor<T>> {
    res_norm(x, &ResNorm { lambda: 0.0, eps })
}

/// ResNorm on a plain tensor.
pub fn res_norm<T: Scalar>(x: &Tensor<T>, layer: &ResNorm) -> Result<Tensor<T>> {
    let shape = x.dims4("res_norm")?;
    let (y, _, _) = kernel::freq_norm_forward(x.data(), shape, T::of(layer.lambda), layer.eps);
    Tensor::new(shape.to_vec(), y)
}

/// Batch statistics produced by a training-mode batch norm, per group.
#[derive(Clone, Debug)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Population variance.
    pub var: Vec<f64>,
    /// Elements per group, for the unbiased running-variance update.
    pub count: usize,
}

/// Which statistics a batch norm normalizes with.
pub enum BnMode<'a, T> {
    Train,
    Eval { running_mean: &'a [T], running_var: &'a [T] },
}

impl<T: Scalar> Graph<T> {
    pub fn freq_in(&mut self, x: Var, eps: f64) -> Result<Var> {
        self.res_norm(x, &ResNorm { lambda: 0.0, eps })
    }

    pub fn res_norm(&mut self, x: Var, layer: &ResNorm) -> Result<Var> {
        let xv = self.value(x);
        let shape = xv.dims4("res_norm")?;
        let lambda = T::of(layer.lambda);
        let (y, xhat, inv_std) = kernel::freq_norm_forward(xv.data(), shape, lambda, layer.eps);
        let y = Tensor::new(shape.to_vec(), y)?;
        Ok(self.push(y, Op::FreqNorm { x, lambda, xhat, inv_std }, &[x]))
    }

    /// Batch norm with statistics per `(channel, band)`; `bands = 1` is the
    /// ordinary per-channel batch norm. `gamma` and `beta` hold
    /// `channels * bands` entries, channel-major.
    pub fn batch_norm(&mut self, x: Var, gamma: Var, beta: Var, bands: usize, mode: BnMode<'_, T>, eps: f64) -> Result<(Var, Option<BatchStats>)> {
        let xv = self.value(x);
        let shape = xv.dims4("batch_norm")?;
        let [n, c, f, t] = shape;
        if bands == 0 || f % bands != 0 {
            return Err(Error::Config(format!("frequency extent {f} not divisible into {bands} sub-bands")));
        }
        let groups = c * bands;
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            if self.value(v).numel() != groups {
                return Err(Error::dim("batch_norm", format!("{name} has {} entries, expected {groups}", self.value(v).numel())));
            }
        }
        let stats = match mode {
            BnMode::Train => kernel::Stats::Batch,
            BnMode::Eval { running_mean, running_var } => {
                if running_mean.len() != groups || running_var.len() != groups {
                    return Err(Error::dim("batch_norm", "running statistics do not match channel groups"));
                }
                kernel::Stats::Running { mean: running_mean, var: running_var }
            }
        };
        let training = matches!(stats, kernel::Stats::Batch);
        let (y, saved, mean, var) =
            kernel::batch_norm_forward(xv.data(), shape, bands, self.value(gamma).data(), self.value(beta).data(), stats, eps);
        let y = Tensor::new(shape.to_vec(), y)?;
        let out = self.push(y, Op::BatchNorm { x, gamma, beta, bands, saved }, &[x, gamma, beta]);
        let stats = training.then(|| BatchStats { mean, var, count: n * (f / bands) * t });
        Ok((out, stats))
    }
}

/// Standalone sub-spectral norm layer with its own parameters and running
/// statistics.
#[derive(Clone, Debug)]
pub struct SubSpectralNorm<T = f32> {
    pub channels: usize,
    pub sub_bands: usize,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub momentum: f64,
    pub eps: f64,
}

impl<T: Scalar> SubSpectralNorm<T> {
    pub fn new(channels: usize, sub_bands: usize) -> Result<Self> {
        if sub_bands == 0 {
            return Err(Error::Config("sub_bands must be positive".into()));
        }
        let groups = channels * sub_bands;
        Ok(Self {
            channels,
            sub_bands,
            gamma: vec![T::one(); groups],
            beta: vec![T::zero(); groups],
            running_mean: vec![T::zero(); groups],
            running_var: vec![T::one(); groups],
            momentum: DEFAULT_MOMENTUM,
            eps: DEFAULT_EPS,
        })
    }

    /// Normalizes `x`; in training mode the running statistics are updated.
    pub fn forward(&mut self, x: &Tensor<T>, training: bool) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let groups = [self.channels * self.sub_bands];
        let gamma = g.constant(Tensor::new(groups, self.gamma.clone())?);
        let beta = g.constant(Tensor::new(groups, self.beta.clone())?);
        let mode = if training {
            BnMode::Train
        } else {
            BnMode::Eval { running_mean: &self.running_mean, running_var: &self.running_var }
        };
        let (y, stats) = g.batch_norm(xv, gamma, beta, self.sub_bands, mode, self.eps)?;
        if let Some(stats) = stats {
            update_running(&mut self.running_mean, &mut self.running_var, &stats, self.momentum);
        }
        Ok(g.value(y).clone())
    }
}

/// Exponential moving average of batch statistics; the variance is stored
/// unbiased.
pub fn update_running<T: Scalar>(mean: &mut [T], var: &mut [T], stats: &BatchStats, momentum: f64) {
    let bessel = if stats.count > 1 { stats.count as f64 / (stats.count - 1) as f64 } else { 1.0 };
    for (i, (m, v)) in mean.iter_mut().zip(var.iter_mut()).enumerate() {
        *m = T::of((1.0 - momentum) * m.as_f64() + momentum * stats.mean[i]);
        *v = T::of((1.0 - momentum) * v.as_f64() + momentum * stats.var[i] * bessel);
    }
}

/// Per-example domain statistics: `(N, 2F)` frequency-wise mean and std
/// (pooled over channels and time) and `(N, 2C)` channel-wise mean and std
/// (pooled over frequency and time).
pub fn export_domain_stats<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let [n, c, f, t] = x.dims4("export_domain_stats")?;
    let d = x.data();
    let mut fs = Vec::with_capacity(n * 2 * f);
    let mut cs = Vec::with_capacity(n * 2 * c);
    let stat = |vals: &mut dyn Iterator<Item = f64>, count: usize| {
        let v: Vec<f64> = vals.collect();
        let mean = v.iter().sum::<f64>() / count as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count as f64;
        (mean, var.sqrt())
    };
    for ni in 0..n {
        let per_f: Vec<(f64, f64)> = (0..f)
            .map(|fi| stat(&mut (0..c).flat_map(|ci| (0..t).map(move |ti| ((ni * c + ci) * f + fi) * t + ti)).map(|i| d[i].as_f64()), c * t))
            .collect();
        fs.extend(per_f.iter().map(|p| T::of(p.0)));
        fs.extend(per_f.iter().map(|p| T::of(p.1)));
        let per_c: Vec<(f64, f64)> = (0..c)
            .map(|ci| {
                let base = (ni * c + ci) * f * t;
                stat(&mut d[base..base + f * t].iter().map(|v| v.as_f64()), f * t)
            })
            .collect();
        cs.extend(per_c.iter().map(|p| T::of(p.0)));
        cs.extend(per_c.iter().map(|p| T::of(p.1)));
    }
    Ok((Tensor::new(vec![n, 2 * f], fs)?, Tensor::new(vec![n, 2 * c], cs)?))
}

/// Tab-separated rows: id, then the row's values.
pub fn write_stats_tsv<T: Scalar, W: Write>(out: &mut W, ids: &[String], stats: &Tensor<T>) -> std::io::Result<()> {
    let width = stats.shape().get(1).copied().unwrap_or(0);
    for (id, row) in ids.iter().zip(stats.data().chunks(width.max(1))) {
        write!(out, "{id}")?;
        for v in row {
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
