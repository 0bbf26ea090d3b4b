use super::{prune, CompressionState, SizeReport};
use crate::augment::AugmentConfig;
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, Model, Precision, Storage};
use crate::train::{evaluate, train, EvalReport, TrainConfig, TrainOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct CompressConfig {
    pub ratio: f64,
    /// Quantization-aware fine-tuning; `kd` here requests distillation.
    pub finetune: TrainConfig,
}

impl Default for CompressConfig {
    fn default() -> Self {
        let finetune = TrainConfig { epochs: 50, warmup_epochs: 0, peak_lr: 0.05, eval_every: 50, ..TrainConfig::default() };
        Self { ratio: 0.89, finetune }
    }
}

pub struct CompressOutcome {
    /// Float weights after fine-tuning, pruned positions zero.
    pub model: Model,
    pub state: CompressionState,
    pub checkpoint: Checkpoint,
    pub size: SizeReport,
    /// Accuracy of the model decoded from `checkpoint`.
    pub report: EvalReport,
}

/// Prune, fine-tune through fake quantization with frozen masks (plus
/// distillation when a teacher is given), then store int8/binary16.
pub fn compress_pipeline(
    model: &Model,
    ds: &Dataset,
    cfg: &CompressConfig,
    aug: &AugmentConfig,
    teacher: Option<&Model>,
    seed: u64,
) -> Result<CompressOutcome> {
    if cfg.finetune.kd.is_some() && teacher.is_none() {
        return Err(Error::Config("distillation requested but no teacher checkpoint given".into()));
    }
    let teacher = if cfg.finetune.kd.is_some() { teacher } else { None };
    let mut pruned = model.clone();
    let state = prune(&mut pruned, cfg.ratio)?;
    let tuned = if cfg.finetune.epochs == 0 {
        pruned
    } else {
        let opts = TrainOptions { teacher, masks: Some(&state), precision: Precision::FakeQuant };
        train(pruned, ds, &cfg.finetune, aug, opts, seed)?.best
    };
    let checkpoint = Checkpoint::compressed(&tuned);
    check_masks(&checkpoint, &tuned, &state)?;
    let size = SizeReport::from_checkpoint(&checkpoint);
    let report = evaluate(&checkpoint.to_model()?, ds, Split::Test)?;
    Ok(CompressOutcome { model: tuned, state, checkpoint, size, report })
}

/// Every pruned position must be stored as an exact zero.
fn check_masks(ckpt: &Checkpoint, model: &Model, state: &CompressionState) -> Result<()> {
    for (id, mask) in &state.masks {
        let name = &model.params().get(*id).name;
        let entry = ckpt.entries.iter().find(|e| &e.name == name).ok_or_else(|| Error::Config(format!("{name} missing from checkpoint")))?;
        let values = match &entry.storage {
            Storage::I8(q) => q.codes.iter().map(|&c| c as f32).collect(),
            s => s.to_f32(),
        };
        if mask.iter().zip(&values).any(|(&m, &v)| m == 0.0 && v != 0.0) {
            return Err(Error::Config(format!("pruned weight of {name} became nonzero")));
        }
    }
    Ok(())
}
