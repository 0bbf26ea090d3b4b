//! The BC-ResNet-ASC network.
//!
//! ```text
//! input -> ResNorm -> conv 5x5/2 -> BN -> ReLU
//!       -> stage1 (2 x c)    -> maxpool 2x2 -> ResNorm
//!       -> stage2 (2 x 1.5c) -> maxpool 2x2 -> ResNorm
//!       -> stage3 (2 x 2c)   -> ResNorm
//!       -> stage4 (3 x 2.5c) -> ResNorm
//!       -> conv 1x1 to classes -> global mean
//! ```
//!
//! Each stage opens with a transition block that adapts the channel count.
//! A block computes `f2 = SSN(freq_dw(x))` and
//! `f1 = dropout(pointwise(swish(BN(time_dw(mean_f(f2))))))`, then returns
//! `relu(x + f2 + broadcast_f(f1))`; transition blocks drop the `x` term.

mod checkpoint;
mod config;
mod params;
mod rf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::augment::{spec_augment_mask, AugmentConfig};
use crate::error::{Error, Result};
use crate::norm::{update_running, BatchStats, BnMode, ResNorm};
use crate::tensor::{ConvSpec, Graph, PoolKind, PoolSpec, Scalar, Tensor, Var};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, Storage, StoredTensor};
pub use config::{ModelConfig, NormPlacement, STAGE_REPEATS};
pub use params::{Param, ParamKind, Params};
pub use rf::{receptive_field, PoolExtent, RfLayer};

/// Numeric treatment of parameters during a forward pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Float,
    /// Conv weights through int8 fake quantization, other learnable
    /// parameters rounded to binary16.
    FakeQuant,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ForwardOptions<'a> {
    pub training: bool,
    pub precision: Precision,
    /// Applied right after the input normalization, training only.
    pub spec_augment: Option<&'a AugmentConfig>,
    /// Make parameter leaves differentiable.
    pub param_grads: bool,
    /// Drop the broadcast (temporal) branch of every block.
    pub skip_broadcast: bool,
}

impl ForwardOptions<'_> {
    pub fn eval() -> Self {
        Self::default()
    }

    pub fn train() -> Self {
        Self { training: true, param_grads: true, ..Self::default() }
    }
}

/// A batch-norm layer's running-stat slots plus the stats of this batch.
#[derive(Clone, Debug)]
pub struct RunningUpdate {
    pub mean: usize,
    pub var: usize,
    pub stats: BatchStats,
}

pub struct Forward<T: Scalar> {
    pub graph: Graph<T>,
    pub input: Var,
    /// Per-position class scores before global pooling, `(N, K, F', T')`.
    pub class_map: Var,
    pub logits: Var,
    /// Leaf of each parameter id, when created.
    pub leaves: Vec<Option<Var>>,
    pub updates: Vec<RunningUpdate>,
    pub shapes: Vec<(String, Vec<usize>)>,
    /// Node of each recorded intermediate, same order as `shapes`.
    pub taps: Vec<(String, Var)>,
}

impl<T: Scalar> Forward<T> {
    pub fn tap(&self, name: &str) -> Option<&Tensor<T>> {
        self.taps.iter().find(|(n, _)| n == name).map(|&(_, v)| self.graph.value(v))
    }
}

#[derive(Clone, Copy, Debug)]
struct NormIds {
    gamma: usize,
    beta: usize,
    mean: usize,
    var: usize,
    bands: usize,
}

#[derive(Clone, Copy, Debug)]
struct ConvNorm {
    conv: usize,
    norm: NormIds,
}

#[derive(Clone, Debug)]
struct Block {
    channels: usize,
    adapter: Option<ConvNorm>,
    freq_dw: usize,
    ssn: NormIds,
    time_dw: usize,
    time_bn: NormIds,
    pointwise: usize,
}

#[derive(Clone, Debug)]
struct Stage {
    blocks: Vec<Block>,
    pool: bool,
}

#[derive(Clone, Debug)]
pub struct Model<T: Scalar = f32> {
    cfg: ModelConfig,
    params: Params<T>,
    stem: ConvNorm,
    stages: Vec<Stage>,
    head_weight: usize,
    head_bias: usize,
}

struct Builder<'r, T: Scalar> {
    params: Params<T>,
    rng: &'r mut ChaCha8Rng,
}

impl<T: Scalar> Builder<'_, T> {
    /// He-normal initialization over the fan-in.
    fn conv(&mut self, name: String, shape: [usize; 4]) -> Result<usize> {
        let fan_in = shape[1] * shape[2] * shape[3];
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).map_err(|e| Error::Config(e.to_string()))?;
        let t = Tensor::from_fn(shape.to_vec(), |_| T::of(normal.sample(self.rng)));
        self.params.register(format!("{name}.weight"), ParamKind::ConvWeight, t)
    }

    fn norm(&mut self, name: &str, channels: usize, bands: usize) -> Result<NormIds> {
        let n = channels * bands;
        let mut reg = |suffix: &str, kind, v: f64| self.params.register(format!("{name}.{suffix}"), kind, Tensor::full(vec![n], T::of(v)));
        Ok(NormIds {
            gamma: reg("weight", ParamKind::NormScale, 1.0)?,
            beta: reg("bias", ParamKind::NormShift, 0.0)?,
            mean: reg("running_mean", ParamKind::RunningMean, 0.0)?,
            var: reg("running_var", ParamKind::RunningVar, 1.0)?,
            bands,
        })
    }

    fn block(&mut self, name: &str, in_ch: usize, out: usize, bands: usize) -> Result<Block> {
        let adapter = if in_ch != out {
            Some(ConvNorm {
                conv: self.conv(format!("{name}.adapter.conv"), [out, in_ch, 1, 1])?,
                norm: self.norm(&format!("{name}.adapter.bn"), out, 1)?,
            })
        } else {
            None
        };
        Ok(Block {
            channels: out,
            adapter,
            freq_dw: self.conv(format!("{name}.f2.conv"), [out, 1, 3, 1])?,
            ssn: self.norm(&format!("{name}.f2.ssn"), out, bands)?,
            time_dw: self.conv(format!("{name}.f1.conv"), [out, 1, 1, 3])?,
            time_bn: self.norm(&format!("{name}.f1.bn"), out, 1)?,
            pointwise: self.conv(format!("{name}.f1.pointwise"), [out, out, 1, 1])?,
        })
    }
}

impl Model<f32> {
    /// Builds and initializes from a seed.
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self> {
        Self::build(cfg, &mut ChaCha8Rng::seed_from_u64(seed))
    }
}

impl<T: Scalar> Model<T> {
    pub fn build(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let mut b = Builder { params: Params::new(), rng };
        let stem_ch = cfg.stem_channels();
        let stem = ConvNorm { conv: b.conv("stem.conv".into(), [stem_ch, 1, 5, 5])?, norm: b.norm("stem.bn", stem_ch, 1)? };
        let mut stages = Vec::new();
        let mut in_ch = stem_ch;
        for (s, (&width, &reps)) in cfg.stage_widths().iter().zip(&STAGE_REPEATS).enumerate() {
            let mut blocks = Vec::new();
            for r in 0..reps {
                blocks.push(b.block(&format!("stage{}.block{r}", s + 1), in_ch, width, cfg.ssn_sub_bands)?);
                in_ch = width;
            }
            stages.push(Stage { blocks, pool: s < 2 });
        }
        let head_weight = b.conv("classifier.conv".into(), [cfg.num_classes, in_ch, 1, 1])?;
        let head_bias = b.params.register("classifier.conv.bias".into(), ParamKind::Bias, Tensor::zeros(vec![cfg.num_classes]))?;
        Ok(Self { cfg, params: b.params, stem, stages, head_weight, head_bias })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<T> {
        &mut self.params
    }

    /// Same topology in another precision.
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            cfg: self.cfg.clone(),
            params: self.params.cast(),
            stem: self.stem,
            stages: self.stages.clone(),
            head_weight: self.head_weight,
            head_bias: self.head_bias,
        }
    }

    /// Number of ResNorm layers the forward pass applies.
    pub fn resnorm_count(&self) -> usize {
        match self.cfg.placement {
            NormPlacement::All => 5,
            NormPlacement::InputOnly => 1,
            NormPlacement::None => 0,
        }
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn blocks_in_stage(&self, stage: usize) -> usize {
        self.stages[stage].blocks.len()
    }

    /// Conv and pool geometry along the main path, in order.
    pub fn rf_layers(&self) -> Vec<RfLayer> {
        let mut layers = vec![RfLayer::conv((5, 5), (2, 2))];
        for stage in &self.stages {
            for b in &stage.blocks {
                if b.adapter.is_some() {
                    layers.push(RfLayer::conv((1, 1), (1, 1)));
                }
                layers.push(RfLayer::conv((3, 1), (1, 1)));
                layers.push(RfLayer::conv((1, 3), (1, 1)));
            }
            if stage.pool {
                layers.push(RfLayer::pool((2, 2), (2, 2)));
            }
        }
        layers.push(RfLayer::conv((1, 1), (1, 1)));
        layers
    }

    /// Replaces running statistics with the exponential moving average
    /// after a training step.
    pub fn apply_updates(&mut self, updates: &[RunningUpdate]) {
        for u in updates {
            let mut mean = self.params.value(u.mean).data().to_vec();
            let mut var = self.params.value(u.var).data().to_vec();
            update_running(&mut mean, &mut var, &u.stats, self.cfg.bn_momentum);
            self.params.value_mut(u.mean).data_mut().copy_from_slice(&mean);
            self.params.value_mut(u.var).data_mut().copy_from_slice(&var);
        }
    }

    /// Eval-mode logits without building gradients.
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.predict_with(x, Precision::Float)
    }

    pub fn predict_with(&self, x: &Tensor<T>, precision: Precision) -> Result<Tensor<T>> {
        let opts = ForwardOptions { precision, ..ForwardOptions::eval() };
        let f = self.forward(x, &opts, &mut ChaCha8Rng::seed_from_u64(0))?;
        Ok(f.graph.value(f.logits).clone())
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor<T>, opts: &ForwardOptions<'_>, rng: &mut R) -> Result<Forward<T>> {
        let mut graph = Graph::new();
        let input = graph.leaf(x.clone(), false);
        let mut pass = Pass::new(self, opts);
        let (class_map, logits) = pass.network(&mut graph, input, rng)?;
        Ok(Forward { graph, input, class_map, logits, leaves: pass.leaves, updates: pass.updates, shapes: pass.shapes, taps: pass.taps })
    }

    /// Runs the network inside an existing graph. `bound` may supply
    /// ready-made leaves per parameter id.
    pub fn forward_in<R: Rng + ?Sized>(
        &self,
        graph: &mut Graph<T>,
        input: Var,
        opts: &ForwardOptions<'_>,
        bound: &[Option<Var>],
        rng: &mut R,
    ) -> Result<(Var, Var)> {
        let mut pass = Pass::new(self, opts);
        for (i, v) in bound.iter().enumerate().take(pass.leaves.len()) {
            pass.leaves[i] = *v;
        }
        pass.network(graph, input, rng)
    }

    /// One block on its own, for testing and gradient checks.
    pub fn block_forward<R: Rng + ?Sized>(
        &self,
        graph: &mut Graph<T>,
        x: Var,
        stage: usize,
        block: usize,
        opts: &ForwardOptions<'_>,
        rng: &mut R,
    ) -> Result<Var> {
        let b = self
            .stages
            .get(stage)
            .and_then(|s| s.blocks.get(block))
            .ok_or_else(|| Error::Arg(format!("no block {block} in stage {stage}")))?;
        Pass::new(self, opts).block(graph, x, b, rng)
    }

    /// Pre-trained weights are compatible when the topology matches.
    pub fn check_compatible<U: Scalar>(&self, other: &Model<U>) -> Result<()> {
        let (a, b) = (&self.cfg, &other.cfg);
        if a.base_channels != b.base_channels || a.num_classes != b.num_classes || a.ssn_sub_bands != b.ssn_sub_bands {
            return Err(Error::Config(format!(
                "model configs differ: c={} classes={} bands={} vs c={} classes={} bands={}",
                a.base_channels, a.num_classes, a.ssn_sub_bands, b.base_channels, b.num_classes, b.ssn_sub_bands
            )));
        }
        Ok(())
    }
}

struct Pass<'m, 'o, T: Scalar> {
    model: &'m Model<T>,
    opts: &'o ForwardOptions<'o>,
    leaves: Vec<Option<Var>>,
    updates: Vec<RunningUpdate>,
    shapes: Vec<(String, Vec<usize>)>,
    taps: Vec<(String, Var)>,
}

impl<'m, 'o, T: Scalar> Pass<'m, 'o, T> {
    fn new(model: &'m Model<T>, opts: &'o ForwardOptions<'o>) -> Self {
        Self { model, opts, leaves: vec![None; model.params.len()], updates: Vec::new(), shapes: Vec::new(), taps: Vec::new() }
    }

    fn leaf(&mut self, g: &mut Graph<T>, id: usize) -> Var {
        *self.leaves[id].get_or_insert_with(|| g.leaf(self.model.params.value(id).clone(), self.opts.param_grads))
    }

    /// Parameter as seen by the computation, after any fake rounding.
    fn param(&mut self, g: &mut Graph<T>, id: usize) -> Result<Var> {
        let v = self.leaf(g, id);
        Ok(match (self.opts.precision, self.model.params.get(id).kind) {
            (Precision::Float, _) => v,
            (Precision::FakeQuant, ParamKind::ConvWeight) => g.fake_quant(v)?,
            (Precision::FakeQuant, _) => g.fake_half(v),
        })
    }

    fn conv(&mut self, g: &mut Graph<T>, x: Var, id: usize, spec: ConvSpec) -> Result<Var> {
        let w = self.param(g, id)?;
        g.conv2d(x, w, None, spec)
    }

    fn norm(&mut self, g: &mut Graph<T>, x: Var, n: NormIds) -> Result<Var> {
        let gamma = self.param(g, n.gamma)?;
        let beta = self.param(g, n.beta)?;
        let eps = self.model.cfg.bn_eps;
        if self.opts.training {
            let (y, stats) = g.batch_norm(x, gamma, beta, n.bands, BnMode::Train, eps)?;
            if let Some(stats) = stats {
                self.updates.push(RunningUpdate { mean: n.mean, var: n.var, stats });
            }
            Ok(y)
        } else {
            let p = &self.model.params;
            let mode = BnMode::Eval { running_mean: p.value(n.mean).data(), running_var: p.value(n.var).data() };
            Ok(g.batch_norm(x, gamma, beta, n.bands, mode, eps)?.0)
        }
    }

    fn resnorm(&self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let cfg = &self.model.cfg;
        g.res_norm(x, &ResNorm::new(cfg.resnorm_lambda, cfg.resnorm_eps)?)
    }

    fn record(&mut self, g: &Graph<T>, name: impl Into<String>, v: Var) {
        let name = name.into();
        self.shapes.push((name.clone(), g.shape(v).to_vec()));
        self.taps.push((name, v));
    }

    fn network<R: Rng + ?Sized>(&mut self, g: &mut Graph<T>, input: Var, rng: &mut R) -> Result<(Var, Var)> {
        let model = self.model;
        let cfg = &model.cfg;
        let [_, c, f, t] = g.value(input).dims4("model")?;
        if c != 1 {
            return Err(Error::dim("model", format!("expected a single input channel, got {c}")));
        }
        cfg.check_input(f, t)?;
        self.record(g, "input", input);
        let mut x = input;
        if cfg.placement != NormPlacement::None {
            x = self.resnorm(g, x)?;
        }
        if let (true, Some(aug)) = (self.opts.training, self.opts.spec_augment) {
            if aug.spec_augment {
                let shape = g.value(x).dims4("spec_augment")?;
                let mask = spec_augment_mask::<T, R>(shape, aug, rng)?;
                x = g.mask_mul(x, mask)?;
            }
        }
        x = self.conv(g, x, model.stem.conv, ConvSpec::new((2, 2), (2, 2), 1))?;
        x = self.norm(g, x, model.stem.norm)?;
        x = g.relu(x);
        self.record(g, "stem", x);
        for (s, stage) in model.stages.iter().enumerate() {
            for b in &stage.blocks {
                x = self.block(g, x, b, rng)?;
            }
            self.record(g, format!("stage{}", s + 1), x);
            if stage.pool {
                x = g.pool2d(x, PoolKind::Max, PoolSpec::square(2))?;
                self.record(g, format!("pool{}", s + 1), x);
            }
            if cfg.placement == NormPlacement::All {
                x = self.resnorm(g, x)?;
            }
        }
        let w = self.param(g, model.head_weight)?;
        let bias = self.param(g, model.head_bias)?;
        let class_map = g.conv2d(x, w, Some(bias), ConvSpec::default())?;
        self.record(g, "classifier", class_map);
        let logits = g.mean_spatial(class_map)?;
        self.record(g, "logits", logits);
        Ok((class_map, logits))
    }

    fn block<R: Rng + ?Sized>(&mut self, g: &mut Graph<T>, x: Var, b: &Block, rng: &mut R) -> Result<Var> {
        let ch = b.channels;
        let (x, identity) = match b.adapter {
            Some(a) => {
                let y = self.conv(g, x, a.conv, ConvSpec::default())?;
                let y = self.norm(g, y, a.norm)?;
                (g.relu(y), false)
            }
            None => (x, true),
        };
        let f2 = self.conv(g, x, b.freq_dw, ConvSpec::new((1, 1), (1, 0), ch))?;
        let f2 = self.norm(g, f2, b.ssn)?;
        let mut out = if identity { g.add(x, f2)? } else { f2 };
        if !self.opts.skip_broadcast {
            let m = g.mean_freq(f2)?;
            let f1 = self.conv(g, m, b.time_dw, ConvSpec::new((1, 1), (0, 1), ch))?;
            let f1 = self.norm(g, f1, b.time_bn)?;
            let f1 = g.swish(f1);
            let f1 = self.conv(g, f1, b.pointwise, ConvSpec::default())?;
            let f1 = g.dropout(f1, self.model.cfg.dropout, self.opts.training, rng)?;
            out = g.add_freq_broadcast(out, f1)?;
        }
        Ok(g.relu(out))
    }
}

/// Parameter counts per entry and the conv / other split.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCount {
    pub rows: Vec<(String, ParamKind, usize)>,
    pub conv: usize,
    pub other: usize,
}

impl ParamCount {
    pub fn total(&self) -> usize {
        self.conv + self.other
    }
}

/// Learnable parameters only; running statistics are excluded.
pub fn count_params<T: Scalar>(model: &Model<T>) -> ParamCount {
    let mut rows = Vec::new();
    let (mut conv, mut other) = (0, 0);
    for p in model.params().iter().filter(|p| !p.kind.is_buffer()) {
        let n = p.value.numel();
        if p.kind.is_conv() {
            conv += n;
        } else {
            other += n;
        }
        rows.push((p.name.clone(), p.kind, n));
    }
    ParamCount { rows, conv, other }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_input(seed: u64, n: usize) -> Tensor<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor::from_fn(vec![n, 1, 64, 40], |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn counts_close_to_reported_sizes() {
        let asc8 = count_params(&Model::new(ModelConfig::asc8(), 0).unwrap());
        assert_eq!(asc8.total(), 314_970);
        assert_eq!(asc8.other, 14_650);
        let asc1 = count_params(&Model::new(ModelConfig::asc1(), 0).unwrap());
        assert_eq!(asc1.total(), 8_055);
        assert_eq!(asc8.rows[0], ("stem.conv.weight".to_string(), ParamKind::ConvWeight, 4000));
    }

    #[test]
    fn names_stable_across_rebuilds() {
        let a = Model::new(ModelConfig::asc1(), 1).unwrap();
        let b = Model::new(ModelConfig::asc1(), 2).unwrap();
        let names = |m: &Model| m.params().iter().map(|p| p.name.clone()).collect::<Vec<_>>();
        assert_eq!(names(&a), names(&b));
    }

    #[test]
    fn forward_shapes_and_placements() {
        let model = Model::new(ModelConfig::asc1(), 0).unwrap();
        assert_eq!(model.resnorm_count(), 5);
        let f = model.forward(&small_input(0, 2), &ForwardOptions::eval(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(f.graph.shape(f.logits), &[2, 10]);
        let shapes: Vec<_> = f.shapes.iter().map(|(n, s)| format!("{n}:{s:?}")).collect();
        assert_eq!(
            shapes,
            [
                "input:[2, 1, 64, 40]",
                "stem:[2, 20, 32, 20]",
                "stage1:[2, 10, 32, 20]",
                "pool1:[2, 10, 16, 10]",
                "stage2:[2, 15, 16, 10]",
                "pool2:[2, 15, 8, 5]",
                "stage3:[2, 20, 8, 5]",
                "stage4:[2, 25, 8, 5]",
                "classifier:[2, 10, 8, 5]",
                "logits:[2, 10]",
            ]
        );
        let norms = (0..f.graph.len()).filter(|&i| f.graph.op_kind(Var(i)) == crate::tensor::OpKind::FreqNorm).count();
        assert_eq!(norms, 5);
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let model = Model::new(ModelConfig::asc1(), 3).unwrap();
        let x = small_input(1, 3);
        assert_eq!(model.predict(&x).unwrap(), model.predict(&x).unwrap());
    }

    #[test]
    fn zeroed_block_passes_relu_of_input() {
        let mut model = Model::new(ModelConfig::asc1(), 0).unwrap().cast::<f64>();
        for name in ["stage1.block1.f2.conv.weight", "stage1.block1.f1.conv.weight", "stage1.block1.f1.pointwise.weight"] {
            let id = model.params().id(name).unwrap();
            model.params_mut().value_mut(id).data_mut().fill(0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Tensor::from_fn(vec![2, 10, 8, 6], |_| rng.random_range(-1.0..1.0));
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let y = model.block_forward(&mut g, xv, 0, 1, &ForwardOptions::train(), &mut rng).unwrap();
        assert_eq!(g.value(y), &x.map(|v| v.max(0.0)));
    }

    #[test]
    fn training_updates_running_stats() {
        let mut model = Model::new(ModelConfig::asc1(), 0).unwrap();
        let f = model.forward(&small_input(2, 4), &ForwardOptions::train(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(f.updates.len(), 1 + 4 + 9 * 2);
        model.apply_updates(&f.updates);
        let id = model.params().id("stem.bn.running_var").unwrap();
        assert!(model.params().value(id).data().iter().any(|&v| v != 1.0));
    }

    #[test]
    fn no_norm_variant_has_no_freq_norm() {
        let cfg = ModelConfig { placement: NormPlacement::None, ..ModelConfig::asc1() };
        let model = Model::new(cfg, 0).unwrap();
        let f = model.forward(&small_input(0, 1), &ForwardOptions::eval(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((0..f.graph.len()).all(|i| f.graph.op_kind(Var(i)) != crate::tensor::OpKind::FreqNorm));
    }

    #[test]
    fn multi_channel_input_rejected() {
        let model = Model::new(ModelConfig::asc1(), 0).unwrap();
        let x = Tensor::<f32>::zeros(vec![1, 2, 64, 40]);
        assert!(matches!(model.predict(&x), Err(Error::Dim { .. })));
    }
}
