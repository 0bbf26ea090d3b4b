//! Finite-difference gradient checking in `f64`.

use crate::error::{Error, Result};

use super::{Graph, Tensor, Var};

/// Knobs for [`gradcheck_with`].
#[derive(Clone, Copy, Debug)]
pub struct GradCheck {
    /// Initial step; about the roundoff-optimal `f64` step for a
    /// five-point stencil.
    pub eps: f64,
    /// The step shrinks tenfold while a probe leaves the piecewise-smooth
    /// region of the base point (a ReLU sign or max-pool winner flips),
    /// down to this bound.
    pub min_eps: f64,
    /// Upper bound on probed coordinates per input; coordinates are spread
    /// evenly over the tensor when it is larger.
    pub max_coords: usize,
}

impl Default for GradCheck {
    fn default() -> Self {
        Self { eps: 1e-3, min_eps: 1e-9, max_coords: usize::MAX }
    }
}

/// Relative error as `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn evaluate<F>(f: &F, inputs: &[Tensor<f64>], track: bool) -> Result<(Graph<f64>, Vec<Var>, Var)>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), track)).collect();
    let out = f(&mut g, &vars)?;
    g.check_finite()?;
    let out = if g.value(out).numel() == 1 { out } else { g.sum(out) };
    Ok((g, vars, out))
}

/// Max relative error between the tape gradient of `sum(f(x))` and
/// five-point central differences, over every coordinate of `x`.
pub fn gradcheck<F>(f: F, x: &Tensor<f64>, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph<f64>, Var) -> Result<Var>,
{
    gradcheck_with(|g, v| f(g, v[0]), std::slice::from_ref(x), GradCheck { eps, ..GradCheck::default() })
}

/// Multi-input variant; every input is differentiated.
pub fn gradcheck_with<F>(f: F, inputs: &[Tensor<f64>], opts: GradCheck) -> Result<f64>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let (g, vars, out) = evaluate(&f, inputs, true)?;
    let base = g.branch_signature();
    let grads = g.backward(out)?;
    let mut worst = 0.0f64;
    let mut probe = inputs.to_vec();
    for (k, input) in inputs.iter().enumerate() {
        let analytic = grads.get(vars[k]).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; input.numel()]);
        let n = input.numel();
        let step = if n > opts.max_coords { n.div_ceil(opts.max_coords) } else { 1 };
        for i in (0..n).step_by(step) {
            let orig = input.data()[i];
            let mut h = opts.eps;
            let numeric = loop {
                let mut at = |d: f64| -> Result<(f64, bool)> {
                    probe[k].data_mut()[i] = orig + d;
                    let (v, sig) = scalar(&f, &probe)?;
                    Ok((v, sig == base))
                };
                let (p1, s1) = at(h)?;
                let (m1, s2) = at(-h)?;
                let (p2, s3) = at(2.0 * h)?;
                let (m2, s4) = at(-2.0 * h)?;
                probe[k].data_mut()[i] = orig;
                if (s1 && s2 && s3 && s4) || h / 10.0 < opts.min_eps {
                    break (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
                }
                h /= 10.0;
            };
            worst = worst.max(relative_error(analytic[i], numeric));
        }
    }
    if !worst.is_finite() {
        return Err(Error::Arg("gradcheck produced a non-finite error".into()));
    }
    Ok(worst)
}

fn scalar<F>(f: &F, inputs: &[Tensor<f64>]) -> Result<(f64, u64)>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let (g, _, out) = evaluate(f, inputs, false)?;
    Ok((g.value(out).data()[0], g.branch_signature()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_sum() {
        let x = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let mut g = Graph::new();
        let v = g.leaf(x.clone(), true);
        let sq = g.mul(v, v).unwrap();
        let s = g.sum(sq);
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(v).unwrap(), &[2.0, 4.0]);
        let err = gradcheck(|g, v| g.mul(v, v), &x, 1e-6).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn relu_linear_region() {
        let x = Tensor::new(vec![4], vec![0.5, 1.0, 2.0, 3.0]).unwrap();
        let err = gradcheck(|g, v| Ok(g.relu(v)), &x, 1e-6).unwrap();
        assert!(err < 1e-7);
    }

    #[test]
    fn step_shrinks_near_a_kink() {
        let x = Tensor::new(vec![3], vec![2e-5, -3e-5, 1.0]).unwrap();
        let opts = GradCheck { eps: 1e-4, ..GradCheck::default() };
        let err = gradcheck_with(|g, v| Ok(g.relu(v[0])), &[x], opts).unwrap();
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn non_finite_names_the_op() {
        let x = Tensor::new(vec![1], vec![1.0]).unwrap();
        let err = gradcheck(|g, v| Ok(g.scale(v, f64::INFINITY)), &x, 1e-6).unwrap_err();
        assert!(matches!(err, Error::NonFinite { op: "scale", .. }), "{err}");
    }
}
