//! `BCRA` checkpoint files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "BCRA" | version u16 | config record | entry count u32 | entries...
//! entry: name (u32 len + utf-8) | kind u8 | dtype u8 | rank u8 | dims u32...
//!        | payload | f32 scale (int8 entries only)
//! ```

use std::io::Write;
use std::path::Path;

use half::f16;

use crate::compress::quant::{dequantize, quantize, Quantized};
use crate::error::{Error, Result};
use crate::io::{put_string, write_atomic, ByteReader};
use crate::tensor::Tensor;

use super::{Model, ModelConfig, NormPlacement, ParamKind};

const MAGIC: &[u8; 4] = b"BCRA";
const VERSION: u16 = 1;

/// On-disk representation of one tensor.
#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    F32(Vec<f32>),
    F16(Vec<f16>),
    I8(Quantized),
}

impl Storage {
    fn tag(&self) -> u8 {
        match self {
            Self::F32(_) => 0,
            Self::F16(_) => 1,
            Self::I8(_) => 2,
        }
    }

    pub fn dtype(&self) -> &'static str {
        ["f32", "f16", "i8"][self.tag() as usize]
    }

    pub fn len(&self) -> usize {
        match self {
            Self::F32(v) => v.len(),
            Self::F16(v) => v.len(),
            Self::I8(q) => q.codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries that are not exactly zero.
    pub fn nonzero(&self) -> usize {
        match self {
            Self::F32(v) => v.iter().filter(|x| **x != 0.0).count(),
            Self::F16(v) => v.iter().filter(|x| x.to_f32() != 0.0).count(),
            Self::I8(q) => q.codes.iter().filter(|&&c| c != 0).count(),
        }
    }

    pub fn to_f32(&self) -> Vec<f32> {
        match self {
            Self::F32(v) => v.clone(),
            Self::F16(v) => v.iter().map(|x| x.to_f32()).collect(),
            Self::I8(q) => dequantize(q),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StoredTensor {
    pub name: String,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub storage: Storage,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub entries: Vec<StoredTensor>,
}

impl Checkpoint {
    /// Everything in f32.
    pub fn full_precision(model: &Model) -> Self {
        Self::with(model, |_, v| Storage::F32(v.to_vec()))
    }

    /// Conv weights as int8 with a per-tensor scale, other learnable
    /// tensors as binary16, running statistics as f32.
    pub fn compressed(model: &Model) -> Self {
        Self::with(model, |kind, v| match kind {
            ParamKind::ConvWeight => Storage::I8(quantize(v)),
            k if k.is_buffer() => Storage::F32(v.to_vec()),
            _ => Storage::F16(v.iter().map(|&x| f16::from_f32(x)).collect()),
        })
    }

    fn with(model: &Model, store: impl Fn(ParamKind, &[f32]) -> Storage) -> Self {
        let entries = model
            .params()
            .iter()
            .map(|p| StoredTensor { name: p.name.clone(), kind: p.kind, shape: p.value.shape().to_vec(), storage: store(p.kind, p.value.data()) })
            .collect();
        Self { config: model.config().clone(), entries }
    }

    /// Rebuilds the model, matching entries by name.
    pub fn to_model(&self) -> Result<Model> {
        let mut model = Model::new(self.config.clone(), 0)?;
        if model.params().len() != self.entries.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} tensors, model config expects {}",
                self.entries.len(),
                model.params().len()
            )));
        }
        for e in &self.entries {
            let id = model.params().id(&e.name).ok_or_else(|| Error::Config(format!("unexpected tensor {} in checkpoint", e.name)))?;
            let p = model.params().get(id);
            if p.value.shape() != e.shape.as_slice() || p.kind != e.kind {
                return Err(Error::Config(format!("tensor {} has shape {:?}, expected {:?}", e.name, e.shape, p.value.shape())));
            }
            *model.params_mut().value_mut(id) = Tensor::new(e.shape.clone(), e.storage.to_f32())?;
        }
        Ok(model)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let c = &self.config;
        for v in [c.base_channels, c.num_classes, c.ssn_sub_bands] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.push(c.placement.tag());
        for v in [c.dropout, c.resnorm_lambda, c.resnorm_eps, c.bn_eps, c.bn_momentum] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            put_string(&mut out, &e.name);
            out.push(e.kind.tag());
            out.push(e.storage.tag());
            out.push(e.shape.len() as u8);
            for &d in &e.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            match &e.storage {
                Storage::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                Storage::F16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                Storage::I8(q) => {
                    out.extend(q.codes.iter().map(|&c| c as u8));
                    out.extend_from_slice(&q.scale.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(buf);
        if &r.array::<4>()? != MAGIC {
            return Err(Error::Format { offset: 0, msg: "not a BCRA checkpoint".into() });
        }
        let version = r.u16()?;
        if version != VERSION {
            return r.fail(format!("unsupported checkpoint version {version}"));
        }
        let base_channels = r.u32()? as usize;
        let num_classes = r.u32()? as usize;
        let ssn_sub_bands = r.u32()? as usize;
        let placement = NormPlacement::from_tag(r.u8()?).map_or_else(|| r.fail("unknown norm placement tag"), Ok)?;
        let config = ModelConfig {
            base_channels,
            num_classes,
            ssn_sub_bands,
            placement,
            dropout: r.f64()?,
            resnorm_lambda: r.f64()?,
            resnorm_eps: r.f64()?,
            bn_eps: r.f64()?,
            bn_momentum: r.f64()?,
        };
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let name = r.string()?;
            let kind = ParamKind::from_tag(r.u8()?).map_or_else(|| r.fail("unknown tensor kind"), Ok)?;
            let dtype = r.u8()?;
            let rank = r.u8()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let storage = match dtype {
                0 => Storage::F32(r.f32_vec(n)?),
                1 => Storage::F16(r.bytes(n * 2)?.chunks_exact(2).map(|c| f16::from_le_bytes([c[0], c[1]])).collect()),
                2 => {
                    let codes = r.bytes(n)?.iter().map(|&b| b as i8).collect();
                    let scale = r.f32()?;
                    if !(scale > 0.0) || !scale.is_finite() {
                        return r.fail(format!("invalid quantization scale {scale} for {name}"));
                    }
                    Storage::I8(Quantized { codes, scale })
                }
                t => return r.fail(format!("unknown dtype tag {t}")),
            };
            entries.push(StoredTensor { name, kind, shape, storage });
        }
        if !r.is_empty() {
            return r.fail("trailing bytes after last entry");
        }
        Ok(Self { config, entries })
    }
}

pub fn write_checkpoint<W: Write>(w: &mut W, ckpt: &Checkpoint) -> std::io::Result<()> {
    w.write_all(&ckpt.encode())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::decode(&buf)
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    write_atomic(path, |w| write_checkpoint(w, ckpt).map_err(|e| Error::io(path, e)))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    read_checkpoint(path)?.to_model()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let model = Model::new(ModelConfig::asc1(), 7).unwrap();
        let ckpt = Checkpoint::full_precision(&model);
        let back = Checkpoint::decode(&ckpt.encode()).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.to_model().unwrap().params(), model.params());
    }

    #[test]
    fn compressed_storage_kinds() {
        let model = Model::new(ModelConfig::asc1(), 7).unwrap();
        let ckpt = Checkpoint::decode(&Checkpoint::compressed(&model).encode()).unwrap();
        for e in &ckpt.entries {
            let expect = match e.kind {
                ParamKind::ConvWeight => "i8",
                ParamKind::RunningMean | ParamKind::RunningVar => "f32",
                _ => "f16",
            };
            assert_eq!(e.storage.dtype(), expect, "{}", e.name);
        }
    }

    #[test]
    fn corrupt_files_report_offsets() {
        let mut bytes = Checkpoint::full_precision(&Model::new(ModelConfig::asc1(), 0).unwrap()).encode();
        assert!(matches!(Checkpoint::decode(b"XXXX"), Err(Error::Format { offset: 0, .. })));
        bytes.truncate(bytes.len() - 3);
        match Checkpoint::decode(&bytes) {
            Err(Error::Format { offset, .. }) => assert!(offset > 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_config_rejected() {
        let mut ckpt = Checkpoint::full_precision(&Model::new(ModelConfig::asc1(), 0).unwrap());
        ckpt.config.base_channels = 12;
        assert!(matches!(ckpt.to_model(), Err(Error::Config(_))));
    }
}
