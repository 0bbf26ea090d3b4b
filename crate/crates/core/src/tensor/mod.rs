//! Dense tensors and a tape-based reverse-mode autodiff engine.
//!
//! Every value is a row-major [`Tensor`]. Differentiable computation is
//! recorded on a [`Graph`]: each op appends a node holding its output value
//! plus whatever it saved for the backward pass. [`Graph::backward`] then
//! walks the tape once in reverse, which is a reverse topological order
//! because an op can only reference nodes that already exist.
//!
//! Training runs in `f32`; the same code instantiated at `f64` backs
//! [`gradcheck`].

mod activation;
mod conv;
mod graph;
mod loss;
mod pool;
mod reduce;

pub mod gradcheck;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

use crate::error::{Error, Result};

pub use activation::Activation;
pub use conv::{output_len, ConvSpec};
pub use loss::{kl_divergence, log_softmax, softmax};
pub use graph::{Grads, Graph, OpKind, Var};
pub(crate) use graph::Op;
pub use pool::{PoolKind, PoolSpec};

/// Floating point element type of a tensor.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
    /// Round to nearest integer, ties to even.
    fn round_half_even(self) -> Self;
    /// Round to the nearest IEEE binary16 value.
    fn to_half_precision(self) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn round_half_even(self) -> Self {
        self.round_ties_even()
    }
    #[inline]
    fn to_half_precision(self) -> Self {
        half::f16::from_f32(self).to_f32()
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
    #[inline]
    fn round_half_even(self) -> Self {
        self.round_ties_even()
    }
    #[inline]
    fn to_half_precision(self) -> Self {
        half::f16::from_f64(self).to_f64()
    }
}

/// Dense row-major N-dimensional array.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<T>) -> Result<Self> {
        let shape = shape.into();
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::dim(
                "tensor",
                format!("shape {shape:?} holds {numel} elements, buffer has {}", data.len()),
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, T::zero())
    }

    pub fn full(shape: impl Into<Vec<usize>>, value: T) -> Self {
        let shape = shape.into();
        let numel = shape.iter().product();
        Self { shape, data: vec![value; numel] }
    }

    pub fn scalar(value: T) -> Self {
        Self { shape: vec![1], data: vec![value] }
    }

    pub fn from_fn(shape: impl Into<Vec<usize>>, mut f: impl FnMut(usize) -> T) -> Self {
        let shape = shape.into();
        let numel: usize = shape.iter().product();
        Self { shape, data: (0..numel).map(&mut f).collect() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    /// Shape as `[n, c, f, t]`, failing for anything but rank 4.
    pub fn dims4(&self, op: &'static str) -> Result<[usize; 4]> {
        match self.shape[..] {
            [n, c, f, t] => Ok([n, c, f, t]),
            _ => Err(Error::dim(op, format!("expected rank-4 (N,C,F,T) input, got {:?}", self.shape))),
        }
    }

    pub fn reshape(mut self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::dim("reshape", format!("{:?} -> {shape:?}", self.shape)));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn mean(&self) -> T {
        T::of(self.data.iter().map(|v| v.as_f64()).sum::<f64>() / self.data.len().max(1) as f64)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_buffer() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn half_even_rounding() {
        assert_eq!(2.5f32.round_half_even(), 2.0);
        assert_eq!(3.5f32.round_half_even(), 4.0);
        assert_eq!((-2.5f64).round_half_even(), -2.0);
    }

    #[test]
    fn half_precision_round_trip() {
        assert_eq!(0.1f32.to_half_precision(), half::f16::from_f32(0.1).to_f32());
        assert_eq!(1.0f64.to_half_precision(), 1.0);
    }
}
