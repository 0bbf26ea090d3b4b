//! Writes a few synthetic WAV clips and a manifest, then loads it twice: the
//! first load extracts log-mel features, the second reads them from cache.

use std::fmt::Write as _;
use std::f32::consts::TAU;

use bcresnet_asc::data::{load_manifest, Split};
use bcresnet_asc::frontend::{write_wav, MelConfig, Waveform};

fn main() -> bcresnet_asc::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut manifest = String::from("path\tscene\tdevice\tsplit\n");
    for (i, (scene, device, split)) in [("airport", "A", "train"), ("park", "B", "train"), ("metro", "S4", "test")].into_iter().enumerate() {
        let tone = 300.0 * (i + 1) as f32;
        let samples = (0..16_000).map(|n| 0.3 * (TAU * tone * n as f32 / 16_000.0).sin()).collect();
        let name = format!("clip{i}.wav");
        write_wav(&dir.path().join(&name), &Waveform { samples, sample_rate: 16_000 })?;
        writeln!(manifest, "{name}\t{scene}\t{device}\t{split}").unwrap();
    }
    let path = dir.path().join("manifest.tsv");
    std::fs::write(&path, manifest).expect("write manifest");

    let cache = dir.path().join("cache");
    for pass in 1..=2 {
        let (ds, stats) = load_manifest(&path, Some(&cache), &MelConfig::default())?;
        println!(
            "pass {pass}: {} clips ({} train, {} test) of {}x{}, computed {}, cached {}",
            ds.len(),
            ds.indices(Split::Train).len(),
            ds.indices(Split::Test).len(),
            ds.freq,
            ds.time,
            stats.computed,
            stats.cached
        );
    }
    Ok(())
}
