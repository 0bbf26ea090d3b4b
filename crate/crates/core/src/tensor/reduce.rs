//! Elementwise arithmetic, reductions and the frequency broadcast used by
//! the broadcast-residual block.

use crate::error::{Error, Result};

use super::graph::{Graph, Op, Var};
use super::{Scalar, Tensor};

impl<T: Scalar> Graph<T> {
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::dim("add", format!("{:?} vs {:?}", va.shape(), vb.shape())));
        }
        let y = Tensor::new(va.shape().to_vec(), va.data().iter().zip(vb.data()).map(|(&x, &y)| x + y).collect())?;
        Ok(self.push(y, Op::Add { a, b }, &[a, b]))
    }

    /// `full (N,C,F,T) + narrow (N,C,1,T)`, repeating `narrow` over frequency.
    pub fn add_freq_broadcast(&mut self, full: Var, narrow: Var) -> Result<Var> {
        let fv = self.value(full);
        let [n, c, f, t] = fv.dims4("add_freq_broadcast")?;
        let nv = self.value(narrow);
        if nv.shape() != [n, c, 1, t] {
            return Err(Error::dim(
                "add_freq_broadcast",
                format!("narrow operand {:?} cannot broadcast to {:?} (axis 2 must be 1)", nv.shape(), fv.shape()),
            ));
        }
        let mut y = fv.data().to_vec();
        for nc in 0..n * c {
            let src = &nv.data()[nc * t..(nc + 1) * t];
            for fi in 0..f {
                y[(nc * f + fi) * t..][..t].iter_mut().zip(src).for_each(|(d, &s)| *d += s);
            }
        }
        let y = Tensor::new(vec![n, c, f, t], y)?;
        Ok(self.push(y, Op::AddFreqBroadcast { full, narrow }, &[full, narrow]))
    }

    /// Mean over the frequency axis, keeping it as extent 1.
    pub fn mean_freq(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let [n, c, f, t] = xv.dims4("mean_freq")?;
        let inv = T::one() / T::of(f as f64);
        let mut y = vec![T::zero(); n * c * t];
        for nc in 0..n * c {
            let dst = &mut y[nc * t..(nc + 1) * t];
            for fi in 0..f {
                let src = &xv.data()[(nc * f + fi) * t..][..t];
                dst.iter_mut().zip(src).for_each(|(d, &s)| *d += s);
            }
            dst.iter_mut().for_each(|d| *d *= inv);
        }
        let y = Tensor::new(vec![n, c, 1, t], y)?;
        Ok(self.push(y, Op::MeanFreq { x }, &[x]))
    }

    /// Global average over both spatial axes: `(N,C,F,T) -> (N,C)`.
    pub fn mean_spatial(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let [n, c, f, t] = xv.dims4("mean_spatial")?;
        let y: Vec<T> = xv
            .data()
            .chunks(f * t)
            .map(|p| T::of(p.iter().map(|v| v.as_f64()).sum::<f64>() / (f * t) as f64))
            .collect();
        let y = Tensor::new(vec![n, c], y)?;
        Ok(self.push(y, Op::MeanSpatial { x }, &[x]))
    }

    pub fn scale(&mut self, x: Var, factor: T) -> Var {
        let y = self.value(x).map(|v| v * factor);
        self.push(y, Op::Scale { x, factor }, &[x])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::dim("mul", format!("{:?} vs {:?}", va.shape(), vb.shape())));
        }
        let y = Tensor::new(va.shape().to_vec(), va.data().iter().zip(vb.data()).map(|(&x, &y)| x * y).collect())?;
        Ok(self.push(y, Op::Mul { a, b }, &[a, b]))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Tensor::scalar(s), Op::Sum { x }, &[x])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freq_mean_then_broadcast_shapes() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::from_fn(vec![2, 3, 4, 5], |i| i as f64));
        let m = g.mean_freq(x).unwrap();
        assert_eq!(g.shape(m), &[2, 3, 1, 5]);
        let y = g.add_freq_broadcast(x, m).unwrap();
        assert_eq!(g.shape(y), &[2, 3, 4, 5]);
        // first (n,c) plane: rows are t + 5 f, mean over f is t + 7.5
        assert_eq!(g.value(m).data()[0], 7.5);
        assert_eq!(g.value(y).data()[6], 6.0 + 8.5);
    }

    #[test]
    fn broadcast_rejects_full_rank_operand() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::zeros(vec![1, 2, 4, 3]));
        assert!(matches!(g.add_freq_broadcast(x, x), Err(Error::Dim { .. })));
    }
}
