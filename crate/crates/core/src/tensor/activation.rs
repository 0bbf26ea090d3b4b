use rand::Rng;

use crate::error::{Error, Result};

use super::graph::{Graph, Op, Var};
use super::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Swish,
}

#[inline]
fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

pub(crate) fn swish_backward<T: Scalar>(x: &[T], g: &[T]) -> Vec<T> {
    x.iter()
        .zip(g)
        .map(|(&v, &gi)| {
            let s = sigmoid(v);
            gi * (s + v * s * (T::one() - s))
        })
        .collect()
}

impl<T: Scalar> Graph<T> {
    pub fn activation(&mut self, x: Var, act: Activation) -> Var {
        match act {
            Activation::Identity => x,
            Activation::Relu => self.relu(x),
            Activation::Swish => self.swish(x),
        }
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let y = self.value(x).map(|v| if v > T::zero() { v } else { T::zero() });
        self.push(y, Op::Relu { x }, &[x])
    }

    /// `v * sigmoid(v)`
    pub fn swish(&mut self, x: Var) -> Var {
        let y = self.value(x).map(|v| v * sigmoid(v));
        self.push(y, Op::Swish { x }, &[x])
    }

    /// Inverted dropout: survivors are scaled by `1 / (1 - p)`. Outside
    /// training, or with `p == 0`, this is the identity and records nothing.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, training: bool, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Arg(format!("dropout rate {p} outside [0, 1)")));
        }
        if !training || p == 0.0 {
            return Ok(x);
        }
        let keep = T::of(1.0 / (1.0 - p));
        let mask: Vec<T> = (0..self.value(x).numel())
            .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
            .collect();
        self.mask_mul(x, mask)
    }

    /// Elementwise product with a constant mask of the same size.
    pub fn mask_mul(&mut self, x: Var, mask: Vec<T>) -> Result<Var> {
        let xv = self.value(x);
        if mask.len() != xv.numel() {
            return Err(Error::dim("mask_mul", format!("mask has {} entries, input {}", mask.len(), xv.numel())));
        }
        let y = Tensor::new(xv.shape().to_vec(), xv.data().iter().zip(&mask).map(|(&a, &m)| a * m).collect())?;
        Ok(self.push(y, Op::MaskMul { x, mask }, &[x]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relu_and_swish_values() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::new(vec![3], vec![-3.0, 0.0, 3.0]).unwrap());
        let r = g.relu(x);
        assert_eq!(g.value(r).data(), &[0.0, 0.0, 3.0]);
        let s = g.swish(x);
        assert_eq!(g.value(s).data()[1], 0.0);
    }

    #[test]
    fn dropout_degenerate_and_invalid_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::full(vec![100], 1.0));
        assert_eq!(g.dropout(x, 0.0, true, &mut rng).unwrap(), x);
        assert_eq!(g.dropout(x, 0.5, false, &mut rng).unwrap(), x);
        assert!(g.dropout(x, 1.0, true, &mut rng).is_err());
        assert!(g.dropout(x, -0.1, true, &mut rng).is_err());
        let y = g.dropout(x, 0.5, true, &mut rng).unwrap();
        assert!(g.value(y).data().iter().all(|&v| v == 0.0 || v == 2.0));
    }
}
