use std::hash::{DefaultHasher, Hash, Hasher};

use crate::error::{Error, Result};
use crate::norm::kernel as norm_kernel;

use super::conv::{self, ConvSpec};
use super::pool::{self, PoolSpec};
use super::{activation, loss, Scalar, Tensor};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Op identity, used for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Leaf,
    Conv2d,
    MaxPool,
    AvgPool,
    Relu,
    Swish,
    MaskMul,
    Add,
    AddFreqBroadcast,
    MeanFreq,
    MeanSpatial,
    Scale,
    Mul,
    Sum,
    FreqNorm,
    BatchNorm,
    FakeQuant,
    FakeHalf,
    SoftCrossEntropy,
    Distillation,
}

impl OpKind {
    pub fn name(self) -> &'static str {
        match self {
            OpKind::Leaf => "leaf",
            OpKind::Conv2d => "conv2d",
            OpKind::MaxPool => "max_pool2d",
            OpKind::AvgPool => "avg_pool2d",
            OpKind::Relu => "relu",
            OpKind::Swish => "swish",
            OpKind::MaskMul => "mask_mul",
            OpKind::Add => "add",
            OpKind::AddFreqBroadcast => "add_freq_broadcast",
            OpKind::MeanFreq => "mean_freq",
            OpKind::MeanSpatial => "mean_spatial",
            OpKind::Scale => "scale",
            OpKind::Mul => "mul",
            OpKind::Sum => "sum",
            OpKind::FreqNorm => "freq_norm",
            OpKind::BatchNorm => "batch_norm",
            OpKind::FakeQuant => "fake_quant",
            OpKind::FakeHalf => "fake_half",
            OpKind::SoftCrossEntropy => "soft_cross_entropy",
            OpKind::Distillation => "distillation_loss",
        }
    }
}

pub(crate) enum Op<T> {
    Leaf,
    Conv2d { x: Var, w: Var, bias: Option<Var>, spec: ConvSpec },
    MaxPool { x: Var, argmax: Vec<usize> },
    AvgPool { x: Var, spec: PoolSpec },
    Relu { x: Var },
    Swish { x: Var },
    /// Elementwise product with a constant (dropout masks, SpecAugment masks).
    MaskMul { x: Var, mask: Vec<T> },
    Add { a: Var, b: Var },
    AddFreqBroadcast { full: Var, narrow: Var },
    MeanFreq { x: Var },
    MeanSpatial { x: Var },
    Scale { x: Var, factor: T },
    Mul { a: Var, b: Var },
    Sum { x: Var },
    FreqNorm { x: Var, lambda: T, xhat: Vec<T>, inv_std: Vec<T> },
    BatchNorm { x: Var, gamma: Var, beta: Var, bands: usize, saved: norm_kernel::BatchNormSaved<T> },
    /// Straight-through: gradient passes where `|w| <= limit`.
    FakeQuant { w: Var, limit: T },
    FakeHalf { x: Var },
    SoftCrossEntropy { logits: Var, targets: Vec<T>, probs: Vec<T> },
    Distillation { logits: Var, targets: Vec<T>, probs: Vec<T>, soft_student: Vec<T>, soft_teacher: Vec<T>, temperature: T, weight: T },
}

impl<T> Op<T> {
    fn kind(&self) -> OpKind {
        match self {
            Op::Leaf => OpKind::Leaf,
            Op::Conv2d { .. } => OpKind::Conv2d,
            Op::MaxPool { .. } => OpKind::MaxPool,
            Op::AvgPool { .. } => OpKind::AvgPool,
            Op::Relu { .. } => OpKind::Relu,
            Op::Swish { .. } => OpKind::Swish,
            Op::MaskMul { .. } => OpKind::MaskMul,
            Op::Add { .. } => OpKind::Add,
            Op::AddFreqBroadcast { .. } => OpKind::AddFreqBroadcast,
            Op::MeanFreq { .. } => OpKind::MeanFreq,
            Op::MeanSpatial { .. } => OpKind::MeanSpatial,
            Op::Scale { .. } => OpKind::Scale,
            Op::Mul { .. } => OpKind::Mul,
            Op::Sum { .. } => OpKind::Sum,
            Op::FreqNorm { .. } => OpKind::FreqNorm,
            Op::BatchNorm { .. } => OpKind::BatchNorm,
            Op::FakeQuant { .. } => OpKind::FakeQuant,
            Op::FakeHalf { .. } => OpKind::FakeHalf,
            Op::SoftCrossEntropy { .. } => OpKind::SoftCrossEntropy,
            Op::Distillation { .. } => OpKind::Distillation,
        }
    }
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Recording tape for one forward/backward pass.
pub struct Graph<T: Scalar = f32> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of leaf nodes after [`Graph::backward`].
pub struct Grads<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> Grads<T> {
    /// Gradient of a leaf, `None` when it does not require grad or the loss
    /// does not depend on it.
    pub fn get(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op: Op::Leaf, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that does not receive a gradient.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn op_kind(&self, v: Var) -> OpKind {
        self.nodes[v.0].op.kind()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub(crate) fn push(&mut self, value: Tensor<T>, op: Op<T>, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    /// First node holding a non-finite value, reported with its op name.
    pub fn check_finite(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.value.is_finite() {
                return Err(Error::NonFinite { op: node.op.kind().name(), node: i });
            }
        }
        Ok(())
    }

    /// Hash of every piecewise branch taken: ReLU signs, max-pool winners and
    /// fake-quant clamp sides. Two passes with equal signatures lie on the
    /// same smooth piece.
    pub fn branch_signature(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for node in &self.nodes {
            match &node.op {
                Op::Relu { .. } => node.value.data().iter().for_each(|&y| (y > T::zero()).hash(&mut h)),
                Op::MaxPool { argmax, .. } => argmax.hash(&mut h),
                Op::FakeQuant { w, limit } => self.nodes[w.0].value.data().iter().for_each(|&v| (v.abs() <= *limit).hash(&mut h)),
                _ => {}
            }
        }
        h.finish()
    }

    /// Reverse-mode sweep from a scalar output. Each node is visited once,
    /// in reverse creation order; contributions from fan-out are summed.
    pub fn backward(&self, output: Var) -> Result<Grads<T>> {
        let out = &self.nodes[output.0].value;
        if out.numel() != 1 {
            return Err(Error::dim("backward", format!("output must be scalar, got shape {:?}", out.shape())));
        }
        let mut grads: Vec<Option<Vec<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output.0] = Some(vec![T::one()]);
        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                grads[i] = None;
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            for (v, gi) in self.op_backward(i, &g) {
                if !self.nodes[v.0].requires_grad {
                    continue;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.iter_mut().zip(&gi).for_each(|(a, b)| *a += *b),
                    slot @ None => *slot = Some(gi),
                }
            }
        }
        Ok(Grads { grads })
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn op_backward(&self, i: usize, g: &[T]) -> Vec<(Var, Vec<T>)> {
        let node = &self.nodes[i];
        let val = |v: Var| &self.nodes[v.0].value;
        let mut out = Vec::with_capacity(3);
        match &node.op {
            Op::Leaf => {}
            Op::Conv2d { x, w, bias, spec } => {
                let (gx, gw, gb) = conv::backward(
                    val(*x),
                    val(*w),
                    g,
                    node.value.shape(),
                    spec,
                    self.wants(*x),
                    self.wants(*w),
                    bias.is_some_and(|b| self.wants(b)),
                );
                if let Some(gx) = gx {
                    out.push((*x, gx));
                }
                if let Some(gw) = gw {
                    out.push((*w, gw));
                }
                if let (Some(b), Some(gb)) = (bias, gb) {
                    out.push((*b, gb));
                }
            }
            Op::MaxPool { x, argmax, .. } => {
                out.push((*x, pool::max_backward(val(*x).numel(), argmax, g)));
            }
            Op::AvgPool { x, spec } => {
                out.push((*x, pool::avg_backward(val(*x).shape(), node.value.shape(), spec, g)));
            }
            Op::Relu { x } => {
                let gx = node.value.data().iter().zip(g).map(|(&y, &gi)| if y > T::zero() { gi } else { T::zero() }).collect();
                out.push((*x, gx));
            }
            Op::Swish { x } => out.push((*x, activation::swish_backward(val(*x).data(), g))),
            Op::MaskMul { x, mask } => out.push((*x, g.iter().zip(mask).map(|(&a, &m)| a * m).collect())),
            Op::Add { a, b } => {
                out.push((*a, g.to_vec()));
                out.push((*b, g.to_vec()));
            }
            Op::AddFreqBroadcast { full, narrow } => {
                let [n, c, f, t] = dims(node.value.shape());
                let mut gn = vec![T::zero(); n * c * t];
                for nc in 0..n * c {
                    let dst = &mut gn[nc * t..(nc + 1) * t];
                    for fi in 0..f {
                        let src = &g[(nc * f + fi) * t..][..t];
                        dst.iter_mut().zip(src).for_each(|(d, s)| *d += *s);
                    }
                }
                out.push((*full, g.to_vec()));
                out.push((*narrow, gn));
            }
            Op::MeanFreq { x } => {
                let [n, c, f, t] = dims(val(*x).shape());
                let inv = T::one() / T::of(f as f64);
                let mut gx = vec![T::zero(); n * c * f * t];
                for nc in 0..n * c {
                    let src = &g[nc * t..(nc + 1) * t];
                    for fi in 0..f {
                        let dst = &mut gx[(nc * f + fi) * t..][..t];
                        dst.iter_mut().zip(src).for_each(|(d, s)| *d = *s * inv);
                    }
                }
                out.push((*x, gx));
            }
            Op::MeanSpatial { x } => {
                let [n, c, f, t] = dims(val(*x).shape());
                let plane = f * t;
                let inv = T::one() / T::of(plane as f64);
                let mut gx = vec![T::zero(); n * c * plane];
                for (nc, chunk) in gx.chunks_mut(plane).enumerate() {
                    chunk.fill(g[nc] * inv);
                }
                out.push((*x, gx));
            }
            Op::Scale { x, factor } => out.push((*x, g.iter().map(|&v| v * *factor).collect())),
            Op::Mul { a, b } => {
                let (va, vb) = (val(*a).data(), val(*b).data());
                if self.wants(*a) {
                    out.push((*a, g.iter().zip(vb).map(|(&gi, &y)| gi * y).collect()));
                }
                if self.wants(*b) {
                    out.push((*b, g.iter().zip(va).map(|(&gi, &y)| gi * y).collect()));
                }
            }
            Op::Sum { x } => out.push((*x, vec![g[0]; val(*x).numel()])),
            Op::FreqNorm { x, lambda, xhat, inv_std } => {
                let shape = dims(val(*x).shape());
                out.push((*x, norm_kernel::freq_norm_backward(shape, *lambda, xhat, inv_std, g)));
            }
            Op::BatchNorm { x, gamma, beta, bands, saved } => {
                let shape = dims(val(*x).shape());
                let (gx, gg, gb) = norm_kernel::batch_norm_backward(shape, *bands, val(*gamma).data(), saved, g);
                out.push((*x, gx));
                out.push((*gamma, gg));
                out.push((*beta, gb));
            }
            Op::FakeQuant { w, limit } => {
                let gw = val(*w).data().iter().zip(g).map(|(&wv, &gi)| if wv.abs() <= *limit { gi } else { T::zero() }).collect();
                out.push((*w, gw));
            }
            Op::FakeHalf { x } => out.push((*x, g.to_vec())),
            Op::SoftCrossEntropy { logits, targets, probs } => {
                let k = *val(*logits).shape().last().unwrap_or(&1);
                out.push((*logits, loss::soft_ce_backward(probs, targets, k, g[0])));
            }
            Op::Distillation { logits, targets, probs, soft_student, soft_teacher, temperature, weight } => {
                let k = *val(*logits).shape().last().unwrap_or(&1);
                let gl = loss::distillation_backward(probs, targets, soft_student, soft_teacher, k, *temperature, *weight, g[0]);
                out.push((*logits, gl));
            }
        }
        out
    }
}

pub(crate) fn dims(shape: &[usize]) -> [usize; 4] {
    [shape[0], shape[1], shape[2], shape[3]]
}
