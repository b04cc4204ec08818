//! Central-difference verification of tape gradients.
//!
//! A check builds the graph twice per perturbed element, so it is meant for
//! small tensors in f64. The comparison is relative with a floored
//! denominator: tiny gradients are effectively compared absolutely.

use crate::error::CoreResult;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Step for the symmetric difference quotient.
    pub eps: f64,
    /// Denominator floor in `|a - n| / max(|a|, |n|, floor)`.
    pub floor: f64,
    /// Cap on probed elements per input tensor; probes are spread evenly
    /// across the tensor. `None` probes every element.
    pub max_probes_per_input: Option<usize>,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            floor: 1e-2,
            max_probes_per_input: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    /// (input index, element index, analytic, numeric) of the worst element.
    pub worst: Option<(usize, usize, f64, f64)>,
    /// Any analytic gradient, loss value or difference quotient was NaN/Inf.
    pub nonfinite: bool,
    /// Number of scalar elements compared.
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        !self.nonfinite && self.max_rel_err <= tol
    }

    /// Panic with a readable location when the check fails, for use in tests.
    pub fn assert_ok(&self, tol: f64) {
        if self.nonfinite {
            panic!("gradient check produced non-finite values: {self:?}");
        }
        if self.max_rel_err > tol {
            let (inp, idx, a, n) = self.worst.expect("worst element recorded");
            panic!(
                "gradient mismatch: input {inp} element {idx}: analytic {a:.9e} vs numeric {n:.9e} (rel {:.3e} > tol {tol:.1e})",
                self.max_rel_err
            );
        }
    }
}

/// Compare tape gradients of `build` against central differences at `inputs`.
///
/// `build` must register one leaf per input (gradients enabled) and return the
/// scalar output var. It is re-invoked on a fresh tape for every perturbation,
/// so it must be deterministic.
pub fn grad_check<F>(
    build: F,
    inputs: &[Tensor<f64>],
    cfg: GradCheckConfig,
) -> CoreResult<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[VarId]) -> CoreResult<VarId>,
{
    let eval = |points: &[Tensor<f64>]| -> CoreResult<(Tape<f64>, Vec<VarId>, VarId)> {
        let mut tape = Tape::new();
        let ids: Vec<VarId> = points
            .iter()
            .map(|t| tape.leaf(t.clone(), true))
            .collect();
        let out = build(&mut tape, &ids)?;
        Ok((tape, ids, out))
    };

    let (mut tape, ids, out) = eval(inputs)?;
    let mut nonfinite = !tape.value(out).all_finite();
    tape.backward(out)?;
    let analytic: Vec<Tensor<f64>> = ids.iter().map(|&id| tape.grad_or_zeros(id)).collect();

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        max_abs_err: 0.0,
        worst: None,
        nonfinite: false,
        checked: 0,
    };

    for (i, input) in inputs.iter().enumerate() {
        nonfinite |= !analytic[i].all_finite();
        let n = input.numel();
        let stride = match cfg.max_probes_per_input {
            Some(limit) if limit > 0 && n > limit => n.div_ceil(limit),
            _ => 1,
        };
        for j in (0..n).step_by(stride) {
            let probe = |delta: f64| -> CoreResult<f64> {
                let mut shifted: Vec<Tensor<f64>> = inputs.to_vec();
                shifted[i].data_mut()[j] += delta;
                let (t, _, o) = eval(&shifted)?;
                Ok(t.value(o).data()[0])
            };
            let plus = probe(cfg.eps)?;
            let minus = probe(-cfg.eps)?;
            let numeric = (plus - minus) / (2.0 * cfg.eps);
            let a = analytic[i].data()[j];
            nonfinite |= !numeric.is_finite() || !a.is_finite();
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(cfg.floor);
            report.checked += 1;
            report.max_abs_err = report.max_abs_err.max(abs);
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((i, j, a, numeric));
            }
        }
    }
    report.nonfinite = nonfinite;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_form_passes() {
        let x = Tensor::new(vec![3], vec![0.4, -1.2, 2.0]).unwrap();
        let report = grad_check(
            |tape, ids| {
                let sq = tape.mul(ids[0], ids[0])?;
                tape.sum_all(sq)
            },
            &[x],
            GradCheckConfig::default(),
        )
        .unwrap();
        report.assert_ok(1e-6);
        assert_eq!(report.checked, 3);
    }

    #[test]
    fn deliberately_wrong_gradient_is_caught() {
        // Forward is x^2 but we claim d/dx = 1 by building with a detached
        // square: stop-gradient via constant copy.
        let x = Tensor::new(vec![2], vec![1.5, -0.5]).unwrap();
        let report = grad_check(
            |tape, ids| {
                let frozen = tape.constant(tape.value(ids[0]).clone());
                let xx = tape.mul(ids[0], frozen)?; // analytic grad = x, true grad = 2x
                tape.sum_all(xx)
            },
            &[x],
            GradCheckConfig::default(),
        )
        .unwrap();
        assert!(!report.passes(1e-4));
    }
}
