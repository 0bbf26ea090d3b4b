//! Feature-domain augmentation: circular time roll, mixup and SpecAugment
//! style masking (no time warping).

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentConfig {
    /// Maximum roll in seconds, either direction.
    pub roll_range_s: f64,
    /// Frame shift of the features in seconds.
    pub hop_s: f64,
    pub roll: bool,
    pub mixup: bool,
    pub mixup_alpha: f64,
    pub spec_augment: bool,
    pub freq_masks: usize,
    pub freq_mask_param: usize,
    pub time_masks: usize,
    pub time_mask_param: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            roll_range_s: 1.5,
            hop_s: 0.03,
            roll: true,
            mixup: true,
            mixup_alpha: 0.3,
            spec_augment: false,
            freq_masks: 2,
            freq_mask_param: 40,
            time_masks: 2,
            time_mask_param: 80,
        }
    }
}

impl AugmentConfig {
    /// Everything switched off.
    pub fn none() -> Self {
        Self { roll: false, mixup: false, spec_augment: false, ..Self::default() }
    }

    /// Largest roll in frames: 50 at the default 1.5 s range and 30 ms hop.
    pub fn max_roll_frames(&self) -> usize {
        (self.roll_range_s / self.hop_s).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.mixup && !(self.mixup_alpha > 0.0) {
            return Err(Error::Config(format!("mixup_alpha must be positive, got {}", self.mixup_alpha)));
        }
        if !(self.hop_s > 0.0) || !(self.roll_range_s >= 0.0) {
            return Err(Error::Config("roll range and hop must be non-negative and positive".into()));
        }
        Ok(())
    }

    /// Mask parameters must fit inside the feature map they are applied to.
    pub fn check_extent(&self, freq: usize, time: usize) -> Result<()> {
        if self.freq_mask_param > freq {
            return Err(Error::Config(format!("freq_mask_param {} exceeds {freq} frequency bins", self.freq_mask_param)));
        }
        if self.time_mask_param > time {
            return Err(Error::Config(format!("time_mask_param {} exceeds {time} frames", self.time_mask_param)));
        }
        Ok(())
    }
}

/// Circular shift along time: frame `t` moves to `(t + shift) mod T`.
pub fn time_roll<T: Scalar>(x: &Tensor<T>, shift: isize) -> Result<Tensor<T>> {
    let [_, _, _, t] = x.dims4("time_roll")?;
    let mut out = x.clone();
    if t == 0 {
        return Ok(out);
    }
    let s = shift.rem_euclid(t as isize) as usize;
    for (dst, src) in out.data_mut().chunks_mut(t).zip(x.data().chunks(t)) {
        dst[s..].copy_from_slice(&src[..t - s]);
        dst[..s].copy_from_slice(&src[t - s..]);
    }
    Ok(out)
}

/// Rolls every example of a batch by its own shift.
pub fn time_roll_batch<T: Scalar>(x: &mut Tensor<T>, shifts: &[isize]) -> Result<()> {
    let [n, c, f, t] = x.dims4("time_roll")?;
    if shifts.len() != n {
        return Err(Error::dim("time_roll", format!("{} shifts for batch of {n}", shifts.len())));
    }
    let plane = c * f * t;
    for (i, &s) in shifts.iter().enumerate() {
        let ex = Tensor::new(vec![1, c, f, t], x.data()[i * plane..(i + 1) * plane].to_vec())?;
        x.data_mut()[i * plane..(i + 1) * plane].copy_from_slice(time_roll(&ex, s)?.data());
    }
    Ok(())
}

pub fn sample_roll<R: Rng + ?Sized>(cfg: &AugmentConfig, rng: &mut R) -> isize {
    let m = cfg.max_roll_frames() as i64;
    rng.random_range(-m..=m) as isize
}

/// `lam * a + (1 - lam) * b` for both features and target distributions.
pub fn mixup<T: Scalar>(x1: &Tensor<T>, x2: &Tensor<T>, y1: &Tensor<T>, y2: &Tensor<T>, lam: f64) -> Result<(Tensor<T>, Tensor<T>)> {
    if !(0.0..=1.0).contains(&lam) {
        return Err(Error::Arg(format!("mixup weight {lam} outside [0, 1]")));
    }
    if x1.shape() != x2.shape() || y1.shape() != y2.shape() {
        return Err(Error::dim("mixup", format!("{:?}/{:?} vs {:?}/{:?}", x1.shape(), y1.shape(), x2.shape(), y2.shape())));
    }
    let mix = |a: &Tensor<T>, b: &Tensor<T>| {
        if lam == 1.0 {
            return a.clone();
        }
        let (l, r) = (T::of(lam), T::of(1.0 - lam));
        Tensor::from_fn(a.shape().to_vec(), |i| l * a.data()[i] + r * b.data()[i])
    };
    Ok((mix(x1, x2), mix(y1, y2)))
}

/// Batch-level mixup: each example is paired with `perm[i]`, one weight
/// for the whole batch.
pub fn mixup_batch<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, perm: &[usize], lam: f64) -> Result<(Tensor<T>, Tensor<T>)> {
    let n = x.shape()[0];
    if perm.len() != n || y.shape().first() != Some(&n) {
        return Err(Error::dim("mixup", "permutation, features and targets disagree on batch size"));
    }
    let gather = |t: &Tensor<T>| {
        let row = t.numel() / n.max(1);
        let mut data = Vec::with_capacity(t.numel());
        for &p in perm {
            data.extend_from_slice(&t.data()[p * row..(p + 1) * row]);
        }
        Tensor::new(t.shape().to_vec(), data)
    };
    mixup(x, &gather(x)?, y, &gather(y)?, lam)
}

pub fn sample_mixup_weight<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    let beta = Beta::new(alpha, alpha).map_err(|e| Error::Config(format!("mixup alpha {alpha}: {e}")))?;
    Ok(beta.sample(rng))
}

/// A contiguous band along one axis: `[start, start + width)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Mask {
    pub start: usize,
    pub width: usize,
}

fn sample_masks<R: Rng + ?Sized>(count: usize, param: usize, extent: usize, rng: &mut R) -> Vec<Mask> {
    (0..count)
        .map(|_| {
            let width = rng.random_range(0..=param);
            let start = rng.random_range(0..=extent - width);
            Mask { start, width }
        })
        .collect()
}

/// Multiplicative 0/1 mask of shape `shape`, with fresh frequency and time
/// masks per example, shared across channels.
pub fn spec_augment_mask<T: Scalar, R: Rng + ?Sized>(shape: [usize; 4], cfg: &AugmentConfig, rng: &mut R) -> Result<Vec<T>> {
    let [n, c, f, t] = shape;
    cfg.check_extent(f, t)?;
    let mut mask = vec![T::one(); n * c * f * t];
    for ni in 0..n {
        let fm = sample_masks(cfg.freq_masks, cfg.freq_mask_param, f, rng);
        let tm = sample_masks(cfg.time_masks, cfg.time_mask_param, t, rng);
        for ci in 0..c {
            let plane = &mut mask[(ni * c + ci) * f * t..][..f * t];
            for m in &fm {
                plane[m.start * t..(m.start + m.width) * t].fill(T::zero());
            }
            for m in &tm {
                for row in plane.chunks_mut(t) {
                    row[m.start..m.start + m.width].fill(T::zero());
                }
            }
        }
    }
    Ok(mask)
}

/// Zero-fills sampled frequency and time bands.
pub fn spec_augment<T: Scalar, R: Rng + ?Sized>(x: &Tensor<T>, cfg: &AugmentConfig, rng: &mut R) -> Result<Tensor<T>> {
    let mask = spec_augment_mask::<T, R>(x.dims4("spec_augment")?, cfg, rng)?;
    Tensor::new(x.shape().to_vec(), x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect())
}
