//! Central-difference verification of tape gradients.

mod suite;

pub use suite::{
    full_model_check, gradient_suite, tiny_model_config, CheckResult, SUITE_TOLERANCE,
};

use alloc::vec::Vec;

use crate::autodiff::{Tape, Var};
use crate::error::Result;
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Which coordinates of each input to probe.
#[derive(Debug, Clone, Copy)]
pub enum Coverage {
    All,
    /// At most this many coordinates per input, chosen with the given seed.
    Sample {
        per_input: usize,
        seed: u64,
    },
}

/// Compares `backward` against central differences for a single input.
/// Returns `max |analytic - numeric| / max(1, |numeric|)`.
pub fn finite_diff_check<F>(f: F, x: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    finite_diff_check_many(
        |tape, vars| f(tape, vars[0]),
        core::slice::from_ref(x),
        eps,
        Coverage::All,
    )
}

/// Multi-input variant; every input is a trainable leaf.
pub fn finite_diff_check_many<F>(
    f: F,
    inputs: &[Tensor],
    eps: f64,
    coverage: Coverage,
) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    assert!(eps > 0.0, "eps must be positive");
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
    let loss = f(&mut tape, &vars)?;
    tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| tape.grad_or_zeros(v)).collect();

    let eval = |probe: &[Tensor]| -> Result<f64> {
        let mut t = Tape::new();
        let vs: Vec<Var> = probe.iter().map(|x| t.constant(x.clone())).collect();
        let l = f(&mut t, &vs)?;
        Ok(t.value(l).item())
    };

    let mut probe: Vec<Tensor> = inputs.to_vec();
    let mut worst = 0.0f64;
    let mut rng = match coverage {
        Coverage::Sample { seed, .. } => Some(Rng::new(seed)),
        Coverage::All => None,
    };
    for (k, input) in inputs.iter().enumerate() {
        let n = input.numel();
        let coords: Vec<usize> = match (coverage, rng.as_mut()) {
            (Coverage::Sample { per_input, .. }, Some(rng)) if per_input < n => {
                let mut all: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut all);
                all.truncate(per_input);
                all
            }
            _ => (0..n).collect(),
        };
        for i in coords {
            let orig = input.data()[i];
            probe[k].data_mut()[i] = orig + eps;
            let plus = eval(&probe)?;
            probe[k].data_mut()[i] = orig - eps;
            let minus = eval(&probe)?;
            probe[k].data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[k].data()[i];
            let err = (a - numeric).abs() / numeric.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let x = Tensor::from_fn(&[2, 3], |i| i as f64 * 0.1 - 0.2);
        let err = finite_diff_check(
            |t, v| {
                let s = t.scale(v, 3.0);
                Ok(t.sum(s))
            },
            &x,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err <= 1e-9, "err = {err}");
    }

    #[test]
    fn softmax_sum_of_squares() {
        let mut rng = Rng::new(11);
        let x = rng.uniform_tensor(&[3, 4], 1.0);
        let err = finite_diff_check(
            |t, v| {
                let s = t.scaled_row_softmax(v, 2.0)?;
                let sq = t.mul(s, s)?;
                Ok(t.sum(sq))
            },
            &x,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err <= 1e-4, "err = {err}");
    }

    #[test]
    fn quadratic_matches() {
        let x = Tensor::from_rows(&[&[0.5, -0.5]]);
        let err = finite_diff_check(
            |t, v| {
                let y = t.mul(v, v)?;
                Ok(t.sum(y))
            },
            &x,
            DEFAULT_EPS,
        )
        .unwrap();
        assert!(err < 1e-8);
    }
}
