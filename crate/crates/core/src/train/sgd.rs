use crate::error::{Error, Result};
use crate::model::Params;
use crate::tensor::Scalar;

/// Momentum buffers, one per parameter id, created on first use.
#[derive(Clone, Debug, Default)]
pub struct SgdState<T> {
    velocity: Vec<Option<Vec<T>>>,
}

impl<T: Scalar> SgdState<T> {
    pub fn new() -> Self {
        Self { velocity: Vec::new() }
    }

    pub fn velocity(&self, id: usize) -> Option<&[T]> {
        self.velocity.get(id).and_then(|v| v.as_deref())
    }
}

/// `v = momentum * v + g + wd * p; p -= lr * v`. Weight decay reaches conv
/// weights only. Non-finite gradients abort before anything is touched.
pub fn sgd_step<T: Scalar>(
    params: &mut Params<T>,
    grads: &[(usize, Vec<T>)],
    state: &mut SgdState<T>,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    for (id, g) in grads {
        if params.get(*id).kind.is_buffer() {
            return Err(Error::Arg(format!("{} is a buffer, not a learnable parameter", params.get(*id).name)));
        }
        if g.len() != params.value(*id).numel() {
            return Err(Error::dim("sgd_step", format!("gradient of {} has {} values, parameter {}", params.get(*id).name, g.len(), params.value(*id).numel())));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "sgd_step", node: *id });
        }
    }
    if state.velocity.len() < params.len() {
        state.velocity.resize(params.len(), None);
    }
    let (lr, mu) = (T::of(lr), T::of(momentum));
    for (id, g) in grads {
        let wd = if params.get(*id).kind.is_conv() { T::of(weight_decay) } else { T::zero() };
        let p = params.value_mut(*id).data_mut();
        let v = state.velocity[*id].get_or_insert_with(|| vec![T::zero(); p.len()]);
        for ((pi, vi), &gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
            *vi = mu * *vi + gi + wd * *pi;
            *pi -= lr * *vi;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamKind;
    use crate::tensor::Tensor;

    fn params() -> Params<f64> {
        let mut p = Params::new();
        p.register("w".into(), ParamKind::ConvWeight, Tensor::new(vec![2], vec![1.0, -2.0]).unwrap()).unwrap();
        p.register("g".into(), ParamKind::NormScale, Tensor::new(vec![1], vec![3.0]).unwrap()).unwrap();
        p
    }

    #[test]
    fn one_step_expansion() {
        let mut p = params();
        let mut s = SgdState::new();
        sgd_step(&mut p, &[(0, vec![0.5, 0.5]), (1, vec![1.0])], &mut s, 0.1, 0.9, 0.01).unwrap();
        assert!((p.value(0).data()[0] - (1.0 - 0.1 * (0.5 + 0.01))).abs() < 1e-15);
        assert!((p.value(0).data()[1] - (-2.0 - 0.1 * (0.5 - 0.02))).abs() < 1e-15);
        // no decay on norm scales
        assert!((p.value(1).data()[0] - 2.9).abs() < 1e-15);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = params();
        let before = p.clone();
        sgd_step(&mut p, &[(0, vec![5.0, 5.0])], &mut SgdState::new(), 0.0, 0.9, 0.1).unwrap();
        assert_eq!(p.value(0), before.value(0));
    }

    #[test]
    fn momentum_accumulates() {
        let mut p = params();
        let mut s = SgdState::new();
        for _ in 0..2 {
            sgd_step(&mut p, &[(1, vec![1.0])], &mut s, 1.0, 0.5, 0.0).unwrap();
        }
        assert_eq!(s.velocity(1).unwrap(), &[1.5]);
        assert_eq!(p.value(1).data()[0], 3.0 - 1.0 - 1.5);
    }

    #[test]
    fn non_finite_aborts_untouched() {
        let mut p = params();
        let before = p.clone();
        let r = sgd_step(&mut p, &[(1, vec![1.0]), (0, vec![f64::NAN, 0.0])], &mut SgdState::new(), 0.1, 0.9, 0.0);
        assert!(matches!(r, Err(Error::NonFinite { op: "sgd_step", node: 0 })));
        assert_eq!(p.value(1), before.value(1));
    }
}
