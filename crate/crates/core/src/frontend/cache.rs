//! `BCAF` feature cache: `"BCAF" | version u16 | records...`, each record
//! `id (u32 len + utf-8) | F u32 | T u32 | F*T f32`, little-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{put_string, write_atomic, ByteReader};

const MAGIC: &[u8; 4] = b"BCAF";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CachedFeature {
    pub id: String,
    pub freq: usize,
    pub time: usize,
    pub data: Vec<f32>,
}

pub fn encode(records: &[CachedFeature]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for r in records {
        put_string(&mut out, &r.id);
        out.extend_from_slice(&(r.freq as u32).to_le_bytes());
        out.extend_from_slice(&(r.time as u32).to_le_bytes());
        r.data.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
    out
}

pub fn decode(buf: &[u8]) -> Result<Vec<CachedFeature>> {
    let mut r = ByteReader::new(buf);
    if &r.array::<4>()? != MAGIC {
        return Err(Error::Format { offset: 0, msg: "not a BCAF feature cache".into() });
    }
    let v = r.u16()?;
    if v != VERSION {
        return r.fail(format!("unsupported cache version {v}"));
    }
    let mut out = Vec::new();
    while !r.is_empty() {
        let id = r.string()?;
        let freq = r.u32()? as usize;
        let time = r.u32()? as usize;
        let data = r.f32_vec(freq * time)?;
        out.push(CachedFeature { id, freq, time, data });
    }
    Ok(out)
}

pub fn write_feature_cache(path: &Path, records: &[CachedFeature]) -> Result<()> {
    let bytes = encode(records);
    write_atomic(path, |w| std::io::Write::write_all(w, &bytes).map_err(|e| Error::io(path, e)))
}

pub fn read_feature_cache(path: &Path) -> Result<Vec<CachedFeature>> {
    decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let recs = vec![
            CachedFeature { id: "a.wav".into(), freq: 2, time: 3, data: vec![1.0, -2.0, 3.5, 0.0, 1e-10, -23.0] },
            CachedFeature { id: "ü".into(), freq: 1, time: 1, data: vec![7.0] },
        ];
        assert_eq!(decode(&encode(&recs)).unwrap(), recs);
    }

    #[test]
    fn truncated_record() {
        let mut bytes = encode(&[CachedFeature { id: "x".into(), freq: 2, time: 2, data: vec![0.0; 4] }]);
        bytes.pop();
        assert!(matches!(decode(&bytes), Err(Error::Format { .. })));
    }
}
