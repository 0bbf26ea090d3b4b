//! Renders a two-tone chirp at 48 kHz, writes it as a WAV, reads it back,
//! resamples to 16 kHz and prints the log-mel map and its loudest bands.
//!
//! cargo run --release --example logmel

use std::f32::consts::TAU;

use bcresnet_asc::frontend::{read_wav, waveform_features, write_wav, LogMel, MelConfig, Waveform};

fn main() -> bcresnet_asc::Result<()> {
    let rate = 48_000;
    let samples: Vec<f32> = (0..rate * 2)
        .map(|i| {
            let t = i as f32 / rate as f32;
            0.4 * (TAU * 440.0 * t).sin() + 0.2 * (TAU * (1000.0 + 500.0 * t) * t).sin()
        })
        .collect();
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("chirp.wav");
    write_wav(&path, &Waveform { samples, sample_rate: rate as u32 })?;

    let wave = read_wav(&path)?;
    let extractor = LogMel::new(MelConfig::default())?;
    let mel = waveform_features(&wave, &extractor)?;
    let [_, _, bands, frames] = mel.dims4("logmel")?;
    println!("{:.2} s at {} Hz -> {bands} mel bands x {frames} frames", wave.duration(), wave.sample_rate);

    let mut energy: Vec<(usize, f32)> = (0..bands).map(|b| (b, mel.data()[b * frames..(b + 1) * frames].iter().sum::<f32>() / frames as f32)).collect();
    energy.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (band, e) in energy.iter().take(5) {
        println!("band {band:>3}: mean log power {e:.2}");
    }
    Ok(())
}
