//! Global magnitude pruning, int8/binary16 weight storage and size
//! accounting.

pub mod quant;

mod pipeline;

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Checkpoint, Model, ParamKind, Storage};

pub use pipeline::{compress_pipeline, CompressConfig, CompressOutcome};

/// Frozen pruning masks for every conv weight tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressionState {
    pub ratio: f64,
    /// `(param id, 0/1 mask)` per conv weight.
    pub masks: Vec<(usize, Vec<f32>)>,
    pub conv_bits: u32,
    pub other_bits: u32,
}

impl CompressionState {
    /// No pruning, every weight kept.
    pub fn dense(model: &Model) -> Self {
        let masks = model.params().conv_weights().map(|id| (id, vec![1.0; model.params().value(id).numel()])).collect();
        Self { ratio: 0.0, masks, conv_bits: 8, other_bits: 16 }
    }

    pub fn kept(&self) -> usize {
        self.masks.iter().map(|(_, m)| m.iter().filter(|&&v| v != 0.0).count()).sum()
    }

    pub fn total(&self) -> usize {
        self.masks.iter().map(|(_, m)| m.len()).sum()
    }

    pub fn mask_of(&self, id: usize) -> Option<&[f32]> {
        self.masks.iter().find(|(i, _)| *i == id).map(|(_, m)| m.as_slice())
    }

    /// Re-zeroes pruned weights.
    pub fn apply(&self, model: &mut Model) {
        for (id, mask) in &self.masks {
            for (w, m) in model.params_mut().value_mut(*id).data_mut().iter_mut().zip(mask) {
                *w *= m;
            }
        }
    }

    /// Zeroes the gradient of pruned weights so they receive no update.
    pub fn mask_grad(&self, id: usize, grad: &mut [f32]) {
        if let Some(mask) = self.mask_of(id) {
            grad.iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
        }
    }
}

/// One-shot global magnitude pruning over all conv weights: the
/// `round(ratio * total)` smallest magnitudes are zeroed. Ties break by
/// registry order.
pub fn prune(model: &mut Model, ratio: f64) -> Result<CompressionState> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::Arg(format!("pruning ratio {ratio} outside [0, 1)")));
    }
    let mut state = CompressionState::dense(model);
    state.ratio = ratio;
    let mut all: Vec<(f32, usize, usize)> = Vec::with_capacity(state.total());
    for (slot, (id, _)) in state.masks.iter().enumerate() {
        all.extend(model.params().value(*id).data().iter().enumerate().map(|(i, w)| (w.abs(), slot, i)));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cut = (ratio * all.len() as f64).round() as usize;
    for &(_, slot, i) in &all[..cut] {
        state.masks[slot].1[i] = 0.0;
    }
    state.apply(model);
    Ok(state)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeRow {
    pub name: String,
    pub dtype: &'static str,
    pub count: usize,
    /// Entries that cost storage (nonzero codes for int8).
    pub stored: usize,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SizeReport {
    pub rows: Vec<SizeRow>,
    pub conv_nonzero: usize,
    pub other: usize,
    pub bytes: usize,
}

impl SizeReport {
    /// Learnable tensors only; running statistics are not counted.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Self {
        let mut rows = Vec::new();
        let (mut conv_nonzero, mut other, mut bytes) = (0, 0, 0);
        for e in ckpt.entries.iter().filter(|e| !e.kind.is_buffer()) {
            let (stored, width) = match &e.storage {
                Storage::I8(_) => (e.storage.nonzero(), 1),
                Storage::F16(_) => (e.storage.len(), 2),
                Storage::F32(_) => (e.storage.len(), 4),
            };
            if e.kind == ParamKind::ConvWeight {
                conv_nonzero += e.storage.nonzero();
            } else {
                other += e.storage.len();
            }
            bytes += stored * width;
            rows.push(SizeRow { name: e.name.clone(), dtype: e.storage.dtype(), count: e.storage.len(), stored, bytes: stored * width });
        }
        Self { rows, conv_nonzero, other, bytes }
    }

    /// Int8 conv weights (zeros free) plus binary16 for everything else.
    pub fn compressed(model: &Model) -> Self {
        Self::from_checkpoint(&Checkpoint::compressed(model))
    }

    /// Every learnable tensor at four bytes per value.
    pub fn float32(model: &Model) -> Self {
        Self::from_checkpoint(&Checkpoint::full_precision(model))
    }

    pub fn kib(&self) -> f64 {
        self.bytes as f64 / 1024.0
    }
}

impl fmt::Display for SizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<40} {:>5} {:>8} {:>8} {:>9}", "tensor", "dtype", "count", "stored", "bytes")?;
        for r in &self.rows {
            writeln!(f, "{:<40} {:>5} {:>8} {:>8} {:>9}", r.name, r.dtype, r.count, r.stored, r.bytes)?;
        }
        write!(
            f,
            "size {:.2} KiB ({} B): {} nonzero conv weights, {} other parameters",
            self.kib(),
            self.bytes,
            self.conv_nonzero,
            self.other
        )
    }
}
