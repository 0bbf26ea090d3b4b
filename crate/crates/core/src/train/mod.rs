//! SGD with momentum under a warmup + cosine schedule, mixup/roll
//! augmentation, optional logit distillation and per-device evaluation.

mod eval;
mod schedule;
mod sgd;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::augment::{mixup_batch, sample_mixup_weight, sample_roll, time_roll_batch, AugmentConfig};
use crate::compress::CompressionState;
use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::model::{ForwardOptions, Model, Precision};
use crate::tensor::{Graph, Tensor};

pub use eval::{argmax, evaluate, evaluate_with, header_row, EvalReport, EVAL_BATCH};
pub use schedule::lr_at;
pub use sgd::{sgd_step, SgdState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KdConfig {
    pub temperature: f64,
    pub weight: f64,
}

impl Default for KdConfig {
    fn default() -> Self {
        Self { temperature: 4.0, weight: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub peak_lr: f64,
    pub warmup_epochs: usize,
    /// Test-set evaluation period in epochs; the last epoch is always
    /// evaluated.
    pub eval_every: usize,
    pub kd: Option<KdConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 100, batch_size: 64, momentum: 0.9, weight_decay: 1e-3, peak_lr: 0.06, warmup_epochs: 5, eval_every: 1, kd: None }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr > 0.0) {
            return Err(Error::Config(format!("peak_lr must be positive, got {}", self.peak_lr)));
        }
        if self.epochs > 0 && self.warmup_epochs >= self.epochs {
            return Err(Error::Config(format!("warmup_epochs {} must be below epochs {}", self.warmup_epochs, self.epochs)));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2 for batch statistics".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) || self.eval_every == 0 {
            return Err(Error::Config("momentum in [0, 1), weight_decay >= 0 and eval_every >= 1 required".into()));
        }
        if let Some(kd) = self.kd {
            if !(kd.temperature > 0.0) || !(0.0..=1.0).contains(&kd.weight) {
                return Err(Error::Config(format!("kd temperature must be positive and weight in [0, 1], got {} / {}", kd.temperature, kd.weight)));
            }
        }
        Ok(())
    }
}

/// Extras for fine-tuning runs.
#[derive(Clone, Copy, Default)]
pub struct TrainOptions<'a> {
    pub teacher: Option<&'a Model>,
    /// Frozen pruning masks: pruned weights get no gradient and stay zero.
    pub masks: Option<&'a CompressionState>,
    pub precision: Precision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub test: Option<EvalReport>,
}

impl EpochMetrics {
    pub fn to_json(&self) -> serde_json::Value {
        let acc = self.test.as_ref().map(EvalReport::to_json);
        let overall = self.test.as_ref().map(EvalReport::overall);
        json!({ "epoch": self.epoch, "lr": self.lr, "train_loss": self.train_loss, "accuracy": acc, "overall": overall })
    }
}

/// One JSON object per line.
pub fn metrics_jsonl(metrics: &[EpochMetrics]) -> String {
    metrics.iter().map(|m| m.to_json().to_string() + "\n").collect()
}

pub struct TrainOutcome {
    pub model: Model,
    /// Highest overall test accuracy among evaluated epochs.
    pub best: Model,
    pub best_epoch: Option<usize>,
    pub metrics: Vec<EpochMetrics>,
}

impl TrainOutcome {
    pub fn final_report(&self) -> Option<&EvalReport> {
        self.metrics.last().and_then(|m| m.test.as_ref())
    }

    pub fn best_report(&self) -> Option<&EvalReport> {
        let e = self.best_epoch?;
        self.metrics.iter().find(|m| m.epoch == e).and_then(|m| m.test.as_ref())
    }
}

/// Scalar value of the distillation objective.
pub fn kd_loss(student: &Tensor<f64>, teacher: &Tensor<f64>, targets: &Tensor<f64>, temperature: f64, weight: f64) -> Result<f64> {
    let mut g = Graph::new();
    let s = g.constant(student.clone());
    let l = g.distillation_loss(s, teacher, targets, temperature, weight)?;
    Ok(g.value(l).data()[0])
}

pub fn train(model: Model, ds: &Dataset, cfg: &TrainConfig, aug: &AugmentConfig, opts: TrainOptions<'_>, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    aug.validate()?;
    if aug.spec_augment {
        aug.check_extent(ds.freq, ds.time)?;
    }
    if cfg.kd.is_some() != opts.teacher.is_some() {
        return Err(Error::Config("distillation needs both a kd setting and a teacher model".into()));
    }
    if let Some(t) = opts.teacher {
        if t.config().num_classes != model.config().num_classes {
            return Err(Error::Config("teacher and student disagree on the number of classes".into()));
        }
    }
    if model.config().num_classes != ds.num_classes {
        return Err(Error::Config(format!("model has {} classes, dataset {}", model.config().num_classes, ds.num_classes)));
    }
    let train_idx = ds.indices(Split::Train);
    let test_idx = ds.indices(Split::Test);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::Arg(format!("train and test splits must be non-empty ({} / {})", train_idx.len(), test_idx.len())));
    }
    let steps_per_epoch = (train_idx.len() / cfg.batch_size + usize::from(train_idx.len() % cfg.batch_size >= 2)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = model;
    let mut state = SgdState::new();
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut best = model.clone();
    let mut best_epoch = None;
    let mut best_acc = f64::NEG_INFINITY;
    let mut step = 0;
    let mut order = train_idx;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut batches, mut lr) = (0.0, 0usize, 0.0);
        for batch in order.chunks(cfg.batch_size).filter(|b| b.len() >= 2) {
            lr = lr_at(step, steps_per_epoch, cfg);
            loss_sum += train_step(&mut model, ds, batch, cfg, aug, &opts, &mut state, lr, &mut rng)?;
            batches += 1;
            step += 1;
        }
        let test = if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let r = evaluate_with(&model, ds, Split::Test, opts.precision)?;
            if r.overall() > best_acc {
                best_acc = r.overall();
                best = model.clone();
                best_epoch = Some(epoch);
            }
            Some(r)
        } else {
            None
        };
        metrics.push(EpochMetrics { epoch, lr, train_loss: loss_sum / batches.max(1) as f64, test });
    }
    Ok(TrainOutcome { model, best, best_epoch, metrics })
}

#[allow(clippy::too_many_arguments)]
fn train_step(
    model: &mut Model,
    ds: &Dataset,
    batch: &[usize],
    cfg: &TrainConfig,
    aug: &AugmentConfig,
    opts: &TrainOptions<'_>,
    state: &mut SgdState<f32>,
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut x = ds.batch(batch);
    let mut y = ds.targets(batch);
    if aug.roll {
        let shifts: Vec<isize> = batch.iter().map(|_| sample_roll(aug, rng)).collect();
        time_roll_batch(&mut x, &shifts)?;
    }
    if aug.mixup {
        let lam = sample_mixup_weight(aug.mixup_alpha, rng)?;
        let mut perm: Vec<usize> = (0..batch.len()).collect();
        perm.shuffle(rng);
        (x, y) = mixup_batch(&x, &y, &perm, lam)?;
    }
    let teacher_logits = opts.teacher.map(|t| t.predict(&x)).transpose()?;
    let fo = ForwardOptions {
        training: true,
        precision: opts.precision,
        spec_augment: aug.spec_augment.then_some(aug),
        param_grads: true,
        skip_broadcast: false,
    };
    let mut f = model.forward(&x, &fo, rng)?;
    let loss = match (&teacher_logits, cfg.kd) {
        (Some(t), Some(kd)) => f.graph.distillation_loss(f.logits, t, &y, kd.temperature as f32, kd.weight as f32)?,
        _ => f.graph.soft_cross_entropy(f.logits, &y)?,
    };
    let value = f.graph.value(loss).data()[0] as f64;
    if !value.is_finite() {
        return Err(Error::NonFinite { op: "train_loss", node: loss.0 });
    }
    let mut grads = f.graph.backward(loss)?;
    let mut updates = Vec::new();
    for id in model.params().learnable().collect::<Vec<_>>() {
        let Some(leaf) = f.leaves[id] else { continue };
        let Some(mut g) = grads.take(leaf) else { continue };
        if let Some(m) = opts.masks {
            m.mask_grad(id, &mut g);
        }
        updates.push((id, g));
    }
    sgd_step(model.params_mut(), &updates, state, lr, cfg.momentum, cfg.weight_decay)?;
    if let Some(m) = opts.masks {
        m.apply(model);
    }
    model.apply_updates(&f.updates);
    Ok(value)
}
