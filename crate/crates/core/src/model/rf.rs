//! Analytic receptive field along frequency and time.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RfKind {
    Conv,
    Pool,
}

/// One layer of `(freq, time)` kernel and stride.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RfLayer {
    pub kind: RfKind,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
}

impl RfLayer {
    pub fn conv(kernel: (usize, usize), stride: (usize, usize)) -> Self {
        Self { kind: RfKind::Conv, kernel, stride }
    }

    pub fn pool(kernel: (usize, usize), stride: (usize, usize)) -> Self {
        Self { kind: RfKind::Pool, kernel, stride }
    }
}

/// How pooling windows enter the recursion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PoolExtent {
    /// Pools only subsample (multiply the jump); the convention that gives
    /// 109 x 109 for the full network.
    #[default]
    Ignore,
    /// Pools widen the field like any other window.
    Include,
}

/// `rf += (k - 1) * jump; jump *= stride`, per axis.
pub fn receptive_field(layers: &[RfLayer], pools: PoolExtent) -> (usize, usize) {
    let (mut rf, mut jump) = ((1, 1), (1, 1));
    for l in layers {
        if l.kind == RfKind::Conv || pools == PoolExtent::Include {
            rf.0 += (l.kernel.0 - 1) * jump.0;
            rf.1 += (l.kernel.1 - 1) * jump.1;
        }
        jump.0 *= l.stride.0;
        jump.1 *= l.stride.1;
    }
    rf
}
