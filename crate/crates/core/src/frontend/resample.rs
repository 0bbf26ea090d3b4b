use crate::error::{Error, Result};

use super::Waveform;

pub const DECIMATION_TAPS: usize = 193;
pub const DECIMATION_CUTOFF_HZ: f64 = 7000.0;

/// Blackman-windowed sinc low-pass with unit DC gain. `cutoff` is a
/// fraction of the sample rate.
pub fn lowpass_fir(taps: usize, cutoff: f64) -> Vec<f64> {
    let mid = (taps - 1) as f64 / 2.0;
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let x = n as f64 - mid;
            let sinc = if x == 0.0 { 2.0 * cutoff } else { (2.0 * std::f64::consts::PI * cutoff * x).sin() / (std::f64::consts::PI * x) };
            let r = n as f64 / (taps - 1) as f64;
            let w = 0.42 - 0.5 * (2.0 * std::f64::consts::PI * r).cos() + 0.08 * (4.0 * std::f64::consts::PI * r).cos();
            sinc * w
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    h
}

/// Integer-factor decimation with a zero-phase FIR prefilter. Only
/// identity and the 48 kHz to 16 kHz path are supported.
pub fn resample(w: &Waveform, target: u32) -> Result<Waveform> {
    if target == 0 || w.sample_rate == 0 {
        return Err(Error::Arg("sample rates must be positive".into()));
    }
    if target == w.sample_rate {
        return Ok(w.clone());
    }
    if !(w.sample_rate == 48_000 && target == 16_000) {
        return Err(Error::Arg(format!("unsupported resampling {} Hz -> {target} Hz (only 48000 -> 16000)", w.sample_rate)));
    }
    let factor = (w.sample_rate / target) as usize;
    let h = lowpass_fir(DECIMATION_TAPS, DECIMATION_CUTOFF_HZ / w.sample_rate as f64);
    let delay = (DECIMATION_TAPS - 1) / 2;
    let x = &w.samples;
    let out_len = x.len().div_ceil(factor);
    let samples = (0..out_len)
        .map(|m| {
            let center = m * factor;
            let mut acc = 0.0f64;
            for (k, &hk) in h.iter().enumerate() {
                // x[center + delay - k]
                if let Some(idx) = (center + delay).checked_sub(k) {
                    if idx < x.len() {
                        acc += hk * x[idx] as f64;
                    }
                }
            }
            acc as f32
        })
        .collect();
    Ok(Waveform { samples, sample_rate: target })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_divides_by_three() {
        let w = Waveform { samples: vec![0.0; 480_000], sample_rate: 48_000 };
        assert_eq!(resample(&w, 16_000).unwrap().samples.len(), 160_000);
    }

    #[test]
    fn identity_and_unsupported() {
        let w = Waveform { samples: vec![0.5; 10], sample_rate: 16_000 };
        assert_eq!(resample(&w, 16_000).unwrap(), w);
        assert!(matches!(resample(&Waveform { samples: vec![], sample_rate: 44_100 }, 16_000), Err(Error::Arg(_))));
    }

    #[test]
    fn sine_passes_through() {
        let tone = |rate: f64, n: usize| (0..n).map(|i| (2.0 * std::f64::consts::PI * 1000.0 * i as f64 / rate).sin() as f32).collect::<Vec<_>>();
        let w = Waveform { samples: tone(48_000.0, 48_000), sample_rate: 48_000 };
        let y = resample(&w, 16_000).unwrap();
        let expect = tone(16_000.0, 16_000);
        let settle = DECIMATION_TAPS;
        let worst = y.samples[settle..16_000 - settle].iter().zip(&expect[settle..]).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
        assert!(worst < 1e-3, "{worst}");
    }
}
