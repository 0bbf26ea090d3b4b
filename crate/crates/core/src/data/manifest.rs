use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{Dataset, Device, Example, Split};
use crate::error::{Error, Result};
use crate::frontend::{read_feature_cache, read_wav, waveform_features, write_feature_cache, CachedFeature, LogMel, MelConfig};

pub const SCENES: [&str; 10] = [
    "airport",
    "bus",
    "metro",
    "metro_station",
    "park",
    "public_square",
    "shopping_mall",
    "street_pedestrian",
    "street_traffic",
    "tram",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRow {
    pub path: PathBuf,
    pub class: usize,
    pub device: Device,
    pub split: Split,
}

/// Scene column accepts a class index or a scene name.
fn parse_scene(s: &str) -> Result<usize> {
    if let Ok(i) = s.parse::<usize>() {
        if i < SCENES.len() {
            return Ok(i);
        }
    }
    SCENES.iter().position(|&n| n == s).ok_or_else(|| Error::Parse(format!("unknown scene label {s:?}")))
}

/// Parses a tab-separated manifest with header `path scene device split`.
/// Relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else { return Ok(Vec::new()) };
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    let find = |name: &str| cols.iter().position(|&c| c == name).ok_or_else(|| Error::Parse(format!("manifest header lacks column {name:?}")));
    let (pc, sc, dc, tc) = (find("path")?, find("scene")?, find("device")?, find("split")?);
    lines
        .map(|(no, line)| {
            let f: Vec<&str> = line.split('\t').map(str::trim).collect();
            let field = |i: usize| f.get(i).copied().ok_or_else(|| Error::Parse(format!("manifest line {}: expected {} columns", no + 1, cols.len())));
            let ctx = |e: Error| match e {
                Error::Parse(m) => Error::Parse(format!("manifest line {}: {m}", no + 1)),
                other => other,
            };
            let p = PathBuf::from(field(pc)?);
            Ok(ManifestRow {
                path: if p.is_absolute() { p } else { base.join(p) },
                class: parse_scene(field(sc)?).map_err(ctx)?,
                device: Device::parse(field(dc)?).map_err(ctx)?,
                split: Split::parse(field(tc)?).map_err(ctx)?,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub computed: usize,
    pub cached: usize,
}

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Cache file keyed by manifest location, content and frontend settings.
pub fn cache_path(manifest: &Path, text: &str, mel: &MelConfig, dir: &Path) -> PathBuf {
    let mut h = fnv1a(manifest.to_string_lossy().as_bytes(), 0xcbf2_9ce4_8422_2325);
    h = fnv1a(text.as_bytes(), h);
    h = fnv1a(format!("{mel:?}").as_bytes(), h);
    let stem = manifest.file_stem().and_then(|s| s.to_str()).unwrap_or("manifest");
    dir.join(format!("{stem}-{h:016x}.bcaf"))
}

/// Loads every row through the frontend. With a cache directory, features
/// are read from and written to a `BCAF` file there.
pub fn load_manifest(path: &Path, cache_dir: Option<&Path>, mel: &MelConfig) -> Result<(Dataset, LoadStats)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_manifest(&text, path.parent().unwrap_or(Path::new(".")))?;
    let extractor = LogMel::new(mel.clone())?;
    let cache_file = cache_dir.map(|d| cache_path(path, &text, mel, d));
    let mut cached: HashMap<String, CachedFeature> = match &cache_file {
        Some(f) if f.exists() => read_feature_cache(f)?.into_iter().map(|c| (c.id.clone(), c)).collect(),
        _ => HashMap::new(),
    };
    let mut stats = LoadStats::default();
    let mut records = Vec::with_capacity(rows.len());
    for row in &rows {
        let id = row.path.to_string_lossy().into_owned();
        let rec = match cached.remove(&id) {
            Some(c) => {
                stats.cached += 1;
                c
            }
            None => {
                stats.computed += 1;
                let x = waveform_features(&read_wav(&row.path)?, &extractor)?;
                let (freq, time) = (x.shape()[2], x.shape()[3]);
                CachedFeature { id, freq, time, data: x.into_data() }
            }
        };
        records.push(rec);
    }
    let time = records.first().map_or(0, |r| r.time);
    let mut ds = Dataset::new(mel.n_mels, time, SCENES.len());
    for (row, rec) in rows.iter().zip(&records) {
        if rec.freq != mel.n_mels || rec.time != time {
            return Err(Error::dim("load_manifest", format!("{} has {}x{} features, expected {}x{time}", rec.id, rec.freq, rec.time, mel.n_mels)));
        }
        ds.push(Example { id: rec.id.clone(), class: row.class, device: row.device, split: row.split, features: rec.data.clone() })?;
    }
    if let Some(f) = cache_file {
        if stats.computed > 0 {
            if let Some(dir) = f.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            write_feature_cache(&f, &records)?;
        }
    }
    Ok((ds, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{write_wav, Waveform};

    #[test]
    fn parses_names_and_indices() {
        let rows = parse_manifest("path\tscene\tdevice\tsplit\na.wav\tpark\tS4\ttest\n/x/b.wav\t3\tA\ttrain\n", Path::new("/data")).unwrap();
        assert_eq!(rows[0].path, PathBuf::from("/data/a.wav"));
        assert_eq!((rows[0].class, rows[0].device, rows[0].split), (4, Device::S4, Split::Test));
        assert_eq!((rows[1].path.clone(), rows[1].class), (PathBuf::from("/x/b.wav"), 3));
    }

    #[test]
    fn rejects_bad_rows() {
        let bad_dev = parse_manifest("path\tscene\tdevice\tsplit\na.wav\tpark\tZ9\ttest\n", Path::new("."));
        assert!(matches!(bad_dev, Err(Error::Parse(m)) if m.contains("line 2")));
        assert!(parse_manifest("path\tscene\n", Path::new(".")).is_err());
        assert!(parse_manifest("path\tscene\tdevice\tsplit\na.wav\tbeach\tA\ttest\n", Path::new(".")).is_err());
    }

    #[test]
    fn empty_manifest_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.tsv");
        std::fs::write(&m, "path\tscene\tdevice\tsplit\n").unwrap();
        let (ds, stats) = load_manifest(&m, None, &MelConfig::default()).unwrap();
        assert!(ds.is_empty());
        assert_eq!(stats, LoadStats::default());
    }

    #[test]
    fn missing_wav_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let m = dir.path().join("m.tsv");
        std::fs::write(&m, "path\tscene\tdevice\tsplit\nnope.wav\t0\tA\ttrain\n").unwrap();
        match load_manifest(&m, None, &MelConfig::default()) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("nope.wav")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn second_load_uses_cache() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("path\tscene\tdevice\tsplit\n");
        for i in 0..3 {
            let samples = (0..48_000 / 4).map(|n| ((n * (i + 1)) as f32 * 0.01).sin() * 0.3).collect();
            write_wav(&dir.path().join(format!("{i}.wav")), &Waveform { samples, sample_rate: 48_000 }).unwrap();
            text.push_str(&format!("{i}.wav\t{i}\tB\ttrain\n"));
        }
        let m = dir.path().join("m.tsv");
        std::fs::write(&m, text).unwrap();
        let cache = dir.path().join("cache");
        let (a, s1) = load_manifest(&m, Some(&cache), &MelConfig::default()).unwrap();
        let (b, s2) = load_manifest(&m, Some(&cache), &MelConfig::default()).unwrap();
        assert_eq!((s1.computed, s1.cached, s2.computed, s2.cached), (3, 0, 0, 3));
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a.time, MelConfig::default().frames(4000));
    }
}
