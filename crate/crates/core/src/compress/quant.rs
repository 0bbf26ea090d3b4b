//! Symmetric per-tensor int8 quantization and binary16 rounding, both as
//! plain functions and as straight-through graph ops.

use crate::error::Result;
use crate::tensor::{Graph, Op, Scalar, Tensor, Var};

pub const INT8_LIMIT: i32 = 127;

/// Integer codes plus the scale that maps them back: `w ~ q * scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantized {
    pub codes: Vec<i8>,
    pub scale: f32,
}

/// `max|w| / 127`, or the sentinel 1 for an all-zero tensor.
pub fn symmetric_scale<T: Scalar>(w: &[T]) -> T {
    let m = w.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    if m == T::zero() {
        T::one()
    } else {
        m / T::of(INT8_LIMIT as f64)
    }
}

#[inline]
fn code<T: Scalar>(v: T, scale: T) -> T {
    let lim = T::of(INT8_LIMIT as f64);
    (v / scale).round_half_even().max(-lim).min(lim)
}

pub fn quantize<T: Scalar>(w: &[T]) -> Quantized {
    let scale = symmetric_scale(w);
    let codes = w.iter().map(|&v| code(v, scale).to_i8().unwrap_or(0)).collect();
    Quantized { codes, scale: scale.to_f32().unwrap_or(1.0) }
}

pub fn dequantize<T: Scalar>(q: &Quantized) -> Vec<T> {
    let scale = T::of(q.scale as f64);
    q.codes.iter().map(|&c| T::of(c as f64) * scale).collect()
}

/// Quantize then dequantize; returns the values and the scale.
pub fn fake_quant_values<T: Scalar>(w: &[T]) -> (Vec<T>, T) {
    let scale = symmetric_scale(w);
    if w.iter().all(|v| *v == T::zero()) {
        return (w.to_vec(), scale);
    }
    (w.iter().map(|&v| code(v, scale) * scale).collect(), scale)
}

pub fn fake_quant<T: Scalar>(w: &Tensor<T>) -> Tensor<T> {
    let (v, _) = fake_quant_values(w.data());
    Tensor::new(w.shape().to_vec(), v).expect("same shape")
}

pub fn to_half<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(Scalar::to_half_precision)
}

impl<T: Scalar> Graph<T> {
    /// Int8 fake quantization with a straight-through gradient inside the
    /// clamp range.
    pub fn fake_quant(&mut self, w: Var) -> Result<Var> {
        let wv = self.value(w);
        let (v, scale) = fake_quant_values(wv.data());
        let y = Tensor::new(wv.shape().to_vec(), v)?;
        let limit = scale * T::of(INT8_LIMIT as f64);
        Ok(self.push(y, Op::FakeQuant { w, limit }, &[w]))
    }

    /// Rounds to the nearest binary16 value; identity gradient.
    pub fn fake_half(&mut self, x: Var) -> Var {
        let y = to_half(self.value(x));
        self.push(y, Op::FakeHalf { x }, &[x])
    }
}
