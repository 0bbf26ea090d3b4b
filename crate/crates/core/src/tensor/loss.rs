//! Classification losses over `(N, K)` logits.

use crate::error::{Error, Result};

use super::graph::{Graph, Op, Var};
use super::{Scalar, Tensor};

/// Row-wise log-softmax of `logits / temperature`.
pub fn log_softmax<T: Scalar>(logits: &[T], k: usize, temperature: T) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(k) {
        let m = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b / temperature));
        let lse = row.iter().map(|&z| (z / temperature - m).exp()).sum::<T>().ln() + m;
        out.extend(row.iter().map(|&z| z / temperature - lse));
    }
    out
}

pub fn softmax<T: Scalar>(logits: &[T], k: usize, temperature: T) -> Vec<T> {
    log_softmax(logits, k, temperature).into_iter().map(T::exp).collect()
}

fn check_pair<T: Scalar>(logits: &Tensor<T>, other: &Tensor<T>, what: &str) -> Result<(usize, usize)> {
    let &[n, k] = logits.shape() else {
        return Err(Error::dim("loss", format!("logits must be (N, K), got {:?}", logits.shape())));
    };
    if other.shape() != logits.shape() {
        return Err(Error::dim("loss", format!("{what} shape {:?} != logits {:?}", other.shape(), logits.shape())));
    }
    Ok((n, k))
}

fn cross_entropy<T: Scalar>(logp: &[T], targets: &[T], n: usize) -> T {
    let s: f64 = logp.iter().zip(targets).map(|(&l, &t)| if t == T::zero() { 0.0 } else { -(t * l).as_f64() }).sum();
    T::of(s / n as f64)
}

/// Mean KL(p_teacher || p_student) over the batch.
pub fn kl_divergence<T: Scalar>(log_teacher: &[T], log_student: &[T], n: usize) -> T {
    let s: f64 = log_teacher
        .iter()
        .zip(log_student)
        .map(|(&lt, &ls)| {
            let pt = lt.exp();
            if pt == T::zero() {
                0.0
            } else {
                (pt * (lt - ls)).as_f64()
            }
        })
        .sum();
    T::of(s / n as f64)
}

pub(crate) fn soft_ce_backward<T: Scalar>(probs: &[T], targets: &[T], k: usize, g: T) -> Vec<T> {
    let n = probs.len() / k;
    let scale = g / T::of(n as f64);
    let mut out = Vec::with_capacity(probs.len());
    for (p, t) in probs.chunks(k).zip(targets.chunks(k)) {
        let mass: T = t.iter().copied().sum();
        out.extend(p.iter().zip(t).map(|(&pi, &ti)| scale * (pi * mass - ti)));
    }
    out
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn distillation_backward<T: Scalar>(
    probs: &[T],
    targets: &[T],
    soft_student: &[T],
    soft_teacher: &[T],
    k: usize,
    temperature: T,
    weight: T,
    g: T,
) -> Vec<T> {
    let n = probs.len() / k;
    let ce = soft_ce_backward(probs, targets, k, g * (T::one() - weight));
    let kd_scale = g * weight * temperature / T::of(n as f64);
    ce.iter()
        .zip(soft_student.iter().zip(soft_teacher))
        .map(|(&c, (&s, &t))| c + kd_scale * (s - t))
        .collect()
}

impl<T: Scalar> Graph<T> {
    /// Mean cross-entropy against soft targets (one-hot or mixed).
    pub fn soft_cross_entropy(&mut self, logits: Var, targets: &Tensor<T>) -> Result<Var> {
        let lv = self.value(logits);
        let (n, k) = check_pair(lv, targets, "targets")?;
        let logp = log_softmax(lv.data(), k, T::one());
        let loss = cross_entropy(&logp, targets.data(), n);
        let probs = logp.into_iter().map(T::exp).collect();
        Ok(self.push(Tensor::scalar(loss), Op::SoftCrossEntropy { logits, targets: targets.data().to_vec(), probs }, &[logits]))
    }

    /// `(1 - weight) * CE(student, targets) + weight * T^2 * KL(softmax(teacher/T) || softmax(student/T))`.
    pub fn distillation_loss(
        &mut self,
        logits: Var,
        teacher_logits: &Tensor<T>,
        targets: &Tensor<T>,
        temperature: T,
        weight: T,
    ) -> Result<Var> {
        if !(temperature > T::zero()) {
            return Err(Error::Arg(format!("distillation temperature must be positive, got {temperature}")));
        }
        if !(T::zero()..=T::one()).contains(&weight) {
            return Err(Error::Arg(format!("distillation weight {weight} outside [0, 1]")));
        }
        let lv = self.value(logits);
        let (n, k) = check_pair(lv, targets, "targets")?;
        check_pair(lv, teacher_logits, "teacher logits")?;
        let logp = log_softmax(lv.data(), k, T::one());
        let log_s = log_softmax(lv.data(), k, temperature);
        let log_t = log_softmax(teacher_logits.data(), k, temperature);
        let ce = cross_entropy(&logp, targets.data(), n);
        let kl = kl_divergence(&log_t, &log_s, n);
        let total = (T::one() - weight) * ce + weight * temperature * temperature * kl;
        let op = Op::Distillation {
            logits,
            targets: targets.data().to_vec(),
            probs: logp.into_iter().map(T::exp).collect(),
            soft_student: log_s.into_iter().map(T::exp).collect(),
            soft_teacher: log_t.into_iter().map(T::exp).collect(),
            temperature,
            weight,
        };
        Ok(self.push(Tensor::scalar(total), op, &[logits]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax(&[1.0f64, 2.0, 3.0, -1.0, 0.0, 1000.0], 3, 1.0);
        assert!((p[..3].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_targets_weight_both_classes() {
        let mut g = Graph::<f64>::new();
        let z = g.constant(Tensor::zeros(vec![1, 4]));
        let t = Tensor::new(vec![1, 4], vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let l = g.soft_cross_entropy(z, &t).unwrap();
        assert!((g.value(l).data()[0] - 4f64.ln()).abs() < 1e-12);
    }
}
