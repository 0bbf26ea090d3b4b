//! Synthetic device-shift benchmark rendered directly in log-mel space.
//!
//! A class is a set of frequency bands, each amplitude-modulated at a whole
//! number of cycles per clip, on top of a static spectral shape. The last
//! few classes reuse the modulation pattern of earlier ones and differ only
//! in static shape, so that information is lost to per-frequency
//! standardization. A device maps a clean map `x` to `a_f * x + b_f` plus
//! noise, with smooth per-frequency gain and offset curves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::{Dataset, Device, Example, Split};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub num_classes: usize,
    pub freq: usize,
    pub time: usize,
    /// Training examples per device, in [`Device::ALL`] order.
    pub train_sizes: [usize; 9],
    pub test_per_device: usize,
    /// Classes that copy an earlier class's modulation and differ only in
    /// static spectral shape.
    pub shape_only_classes: usize,
    pub band_amplitude: f64,
    pub shape_amplitude: f64,
    pub content_noise: f64,
    pub device_noise: f64,
    /// Amplitude of the smooth per-device offset curve.
    pub offset_scale: f64,
    pub gain_range: (f64, f64),
    /// Fixed across dataset seeds so every seed sees the same task.
    pub template_seed: u64,
    pub profile_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_classes: 10,
            freq: 64,
            time: 64,
            train_sizes: [600, 50, 50, 50, 50, 50, 0, 0, 0],
            test_per_device: 40,
            shape_only_classes: 3,
            band_amplitude: 2.0,
            shape_amplitude: 1.5,
            content_noise: 0.5,
            device_noise: 0.2,
            offset_scale: 4.0,
            gain_range: (0.5, 2.0),
            template_seed: 0x5CE4E,
            profile_seed: 0xDE71CE,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.freq == 0 || self.time == 0 {
            return Err(Error::Config("synthetic classes, freq and time must be positive".into()));
        }
        if self.shape_only_classes >= self.num_classes {
            return Err(Error::Config("shape_only_classes must leave at least one modulation class".into()));
        }
        if let Some(d) = Device::unseen().into_iter().find(|d| self.train_sizes[d.index()] > 0) {
            return Err(Error::Config(format!("device {d} must stay unseen (zero training examples)")));
        }
        let (lo, hi) = self.gain_range;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(Error::Config(format!("gain range ({lo}, {hi}) must be positive and contain 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Band {
    center: f64,
    width: f64,
    cycles: f64,
    phase: f64,
}

#[derive(Clone, Debug)]
struct Template {
    bands: Vec<Band>,
    shape: Vec<f64>,
}

/// Per-frequency affine response of a device in the log-mel domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviceProfile {
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
    pub noise: f64,
}

impl DeviceProfile {
    pub fn identity(freq: usize, noise: f64) -> Self {
        Self { gain: vec![1.0; freq], offset: vec![0.0; freq], noise }
    }

    /// `gain[f] * x + offset[f] + noise`, row-major `(F, T)`.
    pub fn apply<R: Rng + ?Sized>(&self, clean: &[f32], time: usize, rng: &mut R) -> Vec<f32> {
        clean
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = i / time;
                let n: f64 = StandardNormal.sample(rng);
                (self.gain[f] * v as f64 + self.offset[f] + self.noise * n) as f32
            })
            .collect()
    }

    pub fn invert(&self, x: &[f32], time: usize) -> Vec<f32> {
        x.iter().enumerate().map(|(i, &v)| ((v as f64 - self.offset[i / time]) / self.gain[i / time]) as f32).collect()
    }
}

/// Deterministic 64-bit mix of several keys.
fn mix(keys: &[u64]) -> u64 {
    keys.iter().fold(0x9E37_79B9_7F4A_7C15u64, |h, &k| {
        let mut z = h ^ k.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(h << 6).wrapping_add(h >> 2);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    })
}

/// Smooth curve over `n` bins from a few random cosines, in `[-1, 1]`-ish.
fn smooth_curve<R: Rng + ?Sized>(n: usize, terms: usize, rng: &mut R) -> Vec<f64> {
    let coeffs: Vec<(f64, f64)> = (1..=terms).map(|m| (rng.random_range(-1.0..1.0) / m as f64, rng.random_range(0.0..std::f64::consts::TAU))).collect();
    let norm: f64 = coeffs.iter().map(|c| c.0.abs()).sum::<f64>().max(1e-9);
    (0..n)
        .map(|f| {
            let x = f as f64 / n as f64;
            coeffs.iter().enumerate().map(|(m, &(a, p))| a * (std::f64::consts::PI * (m + 1) as f64 * x + p).cos()).sum::<f64>() / norm
        })
        .collect()
}

pub struct SyntheticGenerator {
    cfg: SyntheticConfig,
    templates: Vec<Template>,
    profiles: Vec<DeviceProfile>,
}

impl SyntheticGenerator {
    pub fn new(cfg: SyntheticConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.template_seed);
        let f = cfg.freq as f64;
        let distinct = cfg.num_classes - cfg.shape_only_classes;
        let mut templates: Vec<Template> = Vec::with_capacity(cfg.num_classes);
        for k in 0..cfg.num_classes {
            let bands = if k < distinct {
                (0..2)
                    .map(|_| Band {
                        center: rng.random_range(0.08 * f..0.92 * f),
                        width: rng.random_range(0.03 * f..0.07 * f),
                        cycles: rng.random_range(1..=6) as f64,
                        phase: rng.random_range(0.0..std::f64::consts::TAU),
                    })
                    .collect()
            } else {
                templates[k - distinct].bands.clone()
            };
            let shape = smooth_curve(cfg.freq, 3, &mut rng).into_iter().map(|v| v * cfg.shape_amplitude).collect();
            templates.push(Template { bands, shape });
        }
        let profiles = Device::ALL
            .iter()
            .map(|&d| {
                if d == Device::A {
                    return DeviceProfile::identity(cfg.freq, cfg.device_noise);
                }
                let mut r = ChaCha8Rng::seed_from_u64(mix(&[cfg.profile_seed, d.index() as u64]));
                let (lo, hi) = (cfg.gain_range.0.ln(), cfg.gain_range.1.ln());
                let gain = smooth_curve(cfg.freq, 3, &mut r).into_iter().map(|v| (v * hi.max(-lo)).clamp(lo, hi).exp()).collect();
                let offset = smooth_curve(cfg.freq, 4, &mut r).into_iter().map(|v| v * cfg.offset_scale).collect();
                DeviceProfile { gain, offset, noise: cfg.device_noise }
            })
            .collect();
        Ok(Self { cfg, templates, profiles })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.cfg
    }

    pub fn profile(&self, d: Device) -> &DeviceProfile {
        &self.profiles[d.index()]
    }

    /// Device-independent rendering of one example of `class`.
    pub fn render_clean(&self, class: usize, content_seed: u64) -> Vec<f32> {
        let cfg = &self.cfg;
        let (nf, nt) = (cfg.freq, cfg.time);
        let tpl = &self.templates[class];
        let mut rng = ChaCha8Rng::seed_from_u64(content_seed);
        let shift = rng.random_range(0..nt) as f64;
        let level: f64 = rng.random_range(-0.3..0.3);
        let mut x = vec![0.0f64; nf * nt];
        for (fi, row) in x.chunks_mut(nt).enumerate() {
            row.fill(tpl.shape[fi] + level);
        }
        for b in &tpl.bands {
            let amp = cfg.band_amplitude * rng.random_range(0.7..1.3);
            let center = b.center + rng.random_range(-1.5..1.5);
            for (fi, row) in x.chunks_mut(nt).enumerate() {
                let w = (-0.5 * ((fi as f64 - center) / b.width).powi(2)).exp();
                if w < 1e-4 {
                    continue;
                }
                for (ti, v) in row.iter_mut().enumerate() {
                    let phase = std::f64::consts::TAU * b.cycles * (ti as f64 + shift) / nt as f64 + b.phase;
                    *v += amp * w * 0.5 * (1.0 + phase.sin());
                }
            }
        }
        for v in &mut x {
            let n: f64 = StandardNormal.sample(&mut rng);
            *v += cfg.content_noise * n;
        }
        x.into_iter().map(|v| v as f32).collect()
    }

    /// Clean rendering passed through a device.
    pub fn render(&self, class: usize, content_seed: u64, device: Device, noise_seed: u64) -> Vec<f32> {
        let clean = self.render_clean(class, content_seed);
        self.profile(device).apply(&clean, self.cfg.time, &mut ChaCha8Rng::seed_from_u64(noise_seed))
    }

    pub fn generate(&self) -> Dataset {
        let cfg = &self.cfg;
        let mut ds = Dataset::new(cfg.freq, cfg.time, cfg.num_classes);
        for (split, tag) in [(Split::Train, 0u64), (Split::Test, 1)] {
            for d in Device::ALL {
                let n = if split == Split::Train { cfg.train_sizes[d.index()] } else { cfg.test_per_device };
                for i in 0..n {
                    let class = i % cfg.num_classes;
                    let key = [cfg.seed, tag, d.index() as u64, i as u64];
                    let features = self.render(class, mix(&key), d, mix(&[mix(&key), 1]));
                    let id = format!("{}-{}-{i:04}", split.as_str(), d.token());
                    ds.push(Example { id, class, device: d, split, features }).expect("generator respects its own shape");
                }
            }
        }
        ds
    }
}
