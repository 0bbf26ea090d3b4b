//! Flat `key = value` experiment configuration. `#` starts a comment.
//! Unknown or repeated keys are errors.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::augment::AugmentConfig;
use crate::compress::CompressConfig;
use crate::data::SyntheticConfig;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, NormPlacement};
use crate::train::{KdConfig, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
    pub synthetic: SyntheticConfig,
    /// Real-data manifest; synthetic data is used when absent.
    pub manifest: Option<PathBuf>,
    pub compress: CompressConfig,
    /// Distillation settings, used when a teacher is supplied.
    pub kd: KdConfig,
    pub compress_kd: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::asc1(),
            train: TrainConfig::default(),
            augment: AugmentConfig::default(),
            synthetic: SyntheticConfig::default(),
            manifest: None,
            compress: CompressConfig::default(),
            kd: KdConfig::default(),
            compress_kd: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("invalid value {v:?} for key {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid value {v:?} for key {key} (expected true or false)"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Config(format!("duplicate key {k}")));
            }
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let m = &mut self.model;
        let t = &mut self.train;
        let a = &mut self.augment;
        let s = &mut self.synthetic;
        match key {
            "model.variant" => {
                m.base_channels = match v {
                    "asc1" => 10,
                    "asc8" => 80,
                    _ => return Err(Error::Config(format!("invalid value {v:?} for key {key} (expected asc1 or asc8)"))),
                }
            }
            "model.base_channels" => m.base_channels = parse(key, v)?,
            "model.num_classes" => m.num_classes = parse(key, v)?,
            "model.dropout" => m.dropout = parse(key, v)?,
            "model.ssn_sub_bands" => m.ssn_sub_bands = parse(key, v)?,
            "model.resnorm_lambda" => m.resnorm_lambda = parse(key, v)?,
            "model.resnorm_eps" => m.resnorm_eps = parse(key, v)?,
            "model.placement" => m.placement = NormPlacement::parse(v)?,
            "model.bn_eps" => m.bn_eps = parse(key, v)?,
            "model.bn_momentum" => m.bn_momentum = parse(key, v)?,
            "train.epochs" => t.epochs = parse(key, v)?,
            "train.batch_size" => t.batch_size = parse(key, v)?,
            "train.momentum" => t.momentum = parse(key, v)?,
            "train.weight_decay" => t.weight_decay = parse(key, v)?,
            "train.peak_lr" => t.peak_lr = parse(key, v)?,
            "train.warmup_epochs" => t.warmup_epochs = parse(key, v)?,
            "train.eval_every" => t.eval_every = parse(key, v)?,
            "kd.temperature" => self.kd.temperature = parse(key, v)?,
            "kd.weight" => self.kd.weight = parse(key, v)?,
            "augment.roll" => a.roll = parse_bool(key, v)?,
            "augment.roll_range_s" => a.roll_range_s = parse(key, v)?,
            "augment.hop_s" => a.hop_s = parse(key, v)?,
            "augment.mixup" => a.mixup = parse_bool(key, v)?,
            "augment.mixup_alpha" => a.mixup_alpha = parse(key, v)?,
            "augment.spec_augment" => a.spec_augment = parse_bool(key, v)?,
            "augment.freq_masks" => a.freq_masks = parse(key, v)?,
            "augment.freq_mask_param" => a.freq_mask_param = parse(key, v)?,
            "augment.time_masks" => a.time_masks = parse(key, v)?,
            "augment.time_mask_param" => a.time_mask_param = parse(key, v)?,
            "data.manifest" => self.manifest = Some(PathBuf::from(v)),
            "synthetic.freq" => s.freq = parse(key, v)?,
            "synthetic.time" => s.time = parse(key, v)?,
            "synthetic.train_sizes" => {
                let sizes: Vec<usize> = v.split(',').map(|x| parse(key, x.trim())).collect::<Result<_>>()?;
                s.train_sizes = sizes.try_into().map_err(|_| Error::Config(format!("{key} needs 9 comma-separated counts (A,B,C,S1..S6)")))?;
            }
            "synthetic.test_per_device" => s.test_per_device = parse(key, v)?,
            "synthetic.shape_only_classes" => s.shape_only_classes = parse(key, v)?,
            "synthetic.band_amplitude" => s.band_amplitude = parse(key, v)?,
            "synthetic.shape_amplitude" => s.shape_amplitude = parse(key, v)?,
            "synthetic.content_noise" => s.content_noise = parse(key, v)?,
            "synthetic.device_noise" => s.device_noise = parse(key, v)?,
            "synthetic.offset_scale" => s.offset_scale = parse(key, v)?,
            "synthetic.gain_min" => s.gain_range.0 = parse(key, v)?,
            "synthetic.gain_max" => s.gain_range.1 = parse(key, v)?,
            "compress.ratio" => self.compress.ratio = parse(key, v)?,
            "compress.epochs" => self.compress.finetune.epochs = parse(key, v)?,
            "compress.peak_lr" => self.compress.finetune.peak_lr = parse(key, v)?,
            "compress.warmup_epochs" => self.compress.finetune.warmup_epochs = parse(key, v)?,
            "compress.kd" => self.compress_kd = parse_bool(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.augment.validate()?;
        self.synthetic.validate()?;
        if self.manifest.is_none() && self.synthetic.num_classes != self.model.num_classes {
            return Err(Error::Config(format!("model.num_classes {} differs from the synthetic data's {}", self.model.num_classes, self.synthetic.num_classes)));
        }
        if !(0.0..1.0).contains(&self.compress.ratio) {
            return Err(Error::Config(format!("compress.ratio {} outside [0, 1)", self.compress.ratio)));
        }
        TrainConfig { kd: Some(self.kd), ..self.train.clone() }.validate()
    }

    /// Fine-tuning settings: training defaults with the compress overrides.
    pub fn compress_config(&self) -> CompressConfig {
        let ft = &self.compress.finetune;
        let finetune = TrainConfig {
            epochs: ft.epochs,
            peak_lr: ft.peak_lr,
            warmup_epochs: ft.warmup_epochs,
            kd: self.compress_kd.then_some(self.kd),
            ..self.train.clone()
        };
        CompressConfig { ratio: self.compress.ratio, finetune }
    }

    /// Every key with its effective value; parses back to the same config.
    pub fn to_text(&self) -> String {
        let (m, t, a, s) = (&self.model, &self.train, &self.augment, &self.synthetic);
        let ft = &self.compress.finetune;
        let mut o = String::new();
        let mut kv = |k: &str, v: String| writeln!(o, "{k} = {v}").expect("string write");
        kv("model.base_channels", m.base_channels.to_string());
        kv("model.num_classes", m.num_classes.to_string());
        kv("model.dropout", m.dropout.to_string());
        kv("model.ssn_sub_bands", m.ssn_sub_bands.to_string());
        kv("model.resnorm_lambda", m.resnorm_lambda.to_string());
        kv("model.resnorm_eps", m.resnorm_eps.to_string());
        kv("model.placement", m.placement.as_str().to_string());
        kv("model.bn_eps", m.bn_eps.to_string());
        kv("model.bn_momentum", m.bn_momentum.to_string());
        kv("train.epochs", t.epochs.to_string());
        kv("train.batch_size", t.batch_size.to_string());
        kv("train.momentum", t.momentum.to_string());
        kv("train.weight_decay", t.weight_decay.to_string());
        kv("train.peak_lr", t.peak_lr.to_string());
        kv("train.warmup_epochs", t.warmup_epochs.to_string());
        kv("train.eval_every", t.eval_every.to_string());
        kv("kd.temperature", self.kd.temperature.to_string());
        kv("kd.weight", self.kd.weight.to_string());
        kv("augment.roll", a.roll.to_string());
        kv("augment.roll_range_s", a.roll_range_s.to_string());
        kv("augment.hop_s", a.hop_s.to_string());
        kv("augment.mixup", a.mixup.to_string());
        kv("augment.mixup_alpha", a.mixup_alpha.to_string());
        kv("augment.spec_augment", a.spec_augment.to_string());
        kv("augment.freq_masks", a.freq_masks.to_string());
        kv("augment.freq_mask_param", a.freq_mask_param.to_string());
        kv("augment.time_masks", a.time_masks.to_string());
        kv("augment.time_mask_param", a.time_mask_param.to_string());
        if let Some(p) = &self.manifest {
            kv("data.manifest", p.display().to_string());
        }
        kv("synthetic.freq", s.freq.to_string());
        kv("synthetic.time", s.time.to_string());
        kv("synthetic.train_sizes", s.train_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
        kv("synthetic.test_per_device", s.test_per_device.to_string());
        kv("synthetic.shape_only_classes", s.shape_only_classes.to_string());
        kv("synthetic.band_amplitude", s.band_amplitude.to_string());
        kv("synthetic.shape_amplitude", s.shape_amplitude.to_string());
        kv("synthetic.content_noise", s.content_noise.to_string());
        kv("synthetic.device_noise", s.device_noise.to_string());
        kv("synthetic.offset_scale", s.offset_scale.to_string());
        kv("synthetic.gain_min", s.gain_range.0.to_string());
        kv("synthetic.gain_max", s.gain_range.1.to_string());
        kv("compress.ratio", self.compress.ratio.to_string());
        kv("compress.epochs", ft.epochs.to_string());
        kv("compress.peak_lr", ft.peak_lr.to_string());
        kv("compress.warmup_epochs", ft.warmup_epochs.to_string());
        kv("compress.kd", self.compress_kd.to_string());
        o
    }
}
