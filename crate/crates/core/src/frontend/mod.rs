//! Waveform to log-mel features: decimation to 16 kHz, 130 ms Hann frames
//! every 30 ms, 4096-point power spectrum, 256 Slaney mel bands and a
//! floored natural log.

mod cache;
mod mel;
mod resample;

use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use cache::{read_feature_cache, write_feature_cache, CachedFeature};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz};
pub use resample::{lowpass_fir, resample};

#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads a 16-bit PCM mono RIFF/WAVE file.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::Parse(format!(
            "{}: expected 16-bit PCM mono, got {} channel(s) of {}-bit {:?}",
            path.display(),
            spec.channels,
            spec.bits_per_sample,
            spec.sample_format
        )));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f32 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(Waveform { samples, sample_rate: spec.sample_rate })
}

pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec { channels: 1, sample_rate: w.sample_rate, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    for &s in &w.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        writer.write_sample(v).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    writer.finalize().map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MelConfig {
    pub target_rate: u32,
    pub n_mels: usize,
    pub win_ms: u32,
    pub hop_ms: u32,
    pub fft_size: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub log_floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self { target_rate: 16_000, n_mels: 256, win_ms: 130, hop_ms: 30, fft_size: 4096, f_min: 0.0, f_max: 8000.0, log_floor: 1e-10 }
    }
}

impl MelConfig {
    pub fn win_samples(&self) -> usize {
        (self.win_ms as usize * self.target_rate as usize) / 1000
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop_ms as usize * self.target_rate as usize) / 1000
    }

    /// `floor((len - win) / hop) + 1`, or zero when shorter than a window.
    pub fn frames(&self, len: usize) -> usize {
        if len < self.win_samples() {
            0
        } else {
            (len - self.win_samples()) / self.hop_samples() + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size < self.win_samples() || self.hop_samples() == 0 || self.n_mels == 0 {
            return Err(Error::Config(format!("fft_size {} must cover the {}-sample window", self.fft_size, self.win_samples())));
        }
        if !(self.log_floor > 0.0) || !(self.f_max > self.f_min) || self.f_max > self.target_rate as f64 / 2.0 {
            return Err(Error::Config("mel band edges must satisfy 0 <= f_min < f_max <= Nyquist, floor > 0".into()));
        }
        Ok(())
    }
}

/// Reusable log-mel extractor.
pub struct LogMel {
    cfg: MelConfig,
    window: Vec<f32>,
    filters: Vec<Vec<(usize, f32)>>,
    fft: Arc<dyn Fft<f32>>,
}

impl LogMel {
    pub fn new(cfg: MelConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.win_samples();
        // periodic Hann
        let window = (0..n).map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()) as f32).collect();
        let dense = mel_filterbank(cfg.n_mels, cfg.fft_size, cfg.target_rate as f64, cfg.f_min, cfg.f_max);
        let filters = dense
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, &w)| (i, w as f32)).collect())
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Ok(Self { cfg, window, filters, fft })
    }

    pub fn config(&self) -> &MelConfig {
        &self.cfg
    }

    /// `(1, 1, n_mels, T)` log-mel map of a waveform at the target rate.
    pub fn compute(&self, w: &Waveform) -> Result<Tensor<f32>> {
        let cfg = &self.cfg;
        if w.sample_rate != cfg.target_rate {
            return Err(Error::Arg(format!("waveform at {} Hz, extractor expects {} Hz", w.sample_rate, cfg.target_rate)));
        }
        let (win, hop) = (cfg.win_samples(), cfg.hop_samples());
        if w.samples.len() < win {
            return Err(Error::TooShort { len: w.samples.len(), min: win });
        }
        let t = cfg.frames(w.samples.len());
        let bins = cfg.fft_size / 2 + 1;
        let mut out = vec![0.0f32; cfg.n_mels * t];
        let mut buf = vec![Complex::new(0.0f32, 0.0); cfg.fft_size];
        let mut power = vec![0.0f32; bins];
        for frame in 0..t {
            let start = frame * hop;
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (i, (&s, &wv)) in w.samples[start..start + win].iter().zip(&self.window).enumerate() {
                buf[i].re = s * wv;
            }
            self.fft.process(&mut buf);
            for (p, c) in power.iter_mut().zip(&buf) {
                *p = c.norm_sqr();
            }
            for (m, filt) in self.filters.iter().enumerate() {
                let e: f64 = filt.iter().map(|&(i, wt)| (power[i] * wt) as f64).sum();
                out[m * t + frame] = (e + cfg.log_floor).ln() as f32;
            }
        }
        Tensor::new(vec![1, 1, cfg.n_mels, t], out)
    }
}

pub fn logmel(w: &Waveform, cfg: &MelConfig) -> Result<Tensor<f32>> {
    LogMel::new(cfg.clone())?.compute(w)
}

/// Resample (when needed) and extract.
pub fn waveform_features(w: &Waveform, extractor: &LogMel) -> Result<Tensor<f32>> {
    let w = resample(w, extractor.config().target_rate)?;
    extractor.compute(&w)
}

/// Per-frequency mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqStats {
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
}

pub const STD_FLOOR: f64 = 1e-5;

/// Pools every batch element, channel and frame of every map.
pub fn global_freq_stats<'a>(maps: impl IntoIterator<Item = &'a Tensor<f32>>) -> Result<FreqStats> {
    let mut sums: Vec<(f64, f64)> = Vec::new();
    let mut count = 0usize;
    let mut freq = None;
    for m in maps {
        let [n, c, f, t] = m.dims4("global_freq_stats")?;
        if *freq.get_or_insert(f) != f {
            return Err(Error::dim("global_freq_stats", "maps disagree on frequency extent"));
        }
        sums.resize(f, (0.0, 0.0));
        for (i, &v) in m.data().iter().enumerate() {
            let fi = (i / t) % f;
            sums[fi].0 += v as f64;
            sums[fi].1 += (v as f64) * (v as f64);
        }
        count += n * c * t;
    }
    if count == 0 {
        return Err(Error::Arg("global_freq_stats needs a non-empty dataset".into()));
    }
    let n = count as f64;
    let mean = sums.iter().map(|s| (s.0 / n) as f32).collect();
    let std = sums.iter().map(|s| ((s.1 / n - (s.0 / n).powi(2)).max(0.0).sqrt().max(STD_FLOOR)) as f32).collect();
    Ok(FreqStats { mean, std })
}

impl FreqStats {
    /// `(x - mean[f]) / std[f]` in place.
    pub fn apply(&self, x: &mut Tensor<f32>) -> Result<()> {
        let [_, _, f, t] = x.dims4("freq_stats")?;
        if f != self.mean.len() {
            return Err(Error::dim("freq_stats", format!("{} bins vs {f}", self.mean.len())));
        }
        for (i, v) in x.data_mut().iter_mut().enumerate() {
            let fi = (i / t) % f;
            *v = (*v - self.mean[fi]) / self.std[fi];
        }
        Ok(())
    }
}
