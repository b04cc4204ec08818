//! Simultaneous truth and performance level estimation (STAPLE) for fusing
//! binary annotations from several raters.
//!
//! EM alternates between the posterior truth probability per pixel (E-step)
//! and per-rater sensitivity/specificity estimates (M-step). Parameters are
//! clamped away from 0 and 1 and denominators guarded, so degenerate inputs
//! (all-identical pixels, unanimous raters) stay finite.

use crate::error::{EvalError, EvalResult};
use crate::metrics::check_same_size;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vtu_core::Mask;

const CLAMP_LO: f64 = 1e-5;
const CLAMP_HI: f64 = 1.0 - 1e-5;
const PRIOR_LO: f64 = 1e-6;
const GUARD: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct StapleOptions {
    /// Scalar foreground prior; defaults to the mean rater foreground
    /// fraction when `None`.
    pub prior: Option<f64>,
    /// Convergence threshold on the largest parameter change.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial sensitivity and specificity for every rater.
    pub init_quality: f64,
}

impl Default for StapleOptions {
    fn default() -> Self {
        Self {
            prior: None,
            tol: 1e-6,
            max_iter: 100,
            init_quality: 0.9999,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StapleOutput {
    /// Posterior foreground probability per pixel.
    pub posterior: Vec<f64>,
    /// Posterior thresholded at 0.5.
    pub fused: Mask,
    /// Estimated sensitivity per rater.
    pub sensitivity: Vec<f64>,
    /// Estimated specificity per rater.
    pub specificity: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Complete-data log-likelihood at the start of each iteration plus a
    /// final entry at the converged parameters; non-decreasing.
    pub log_likelihood: Vec<f64>,
}

pub fn staple(raters: &[&Mask], opts: &StapleOptions) -> EvalResult<StapleOutput> {
    if raters.len() < 2 {
        return Err(EvalError::NotEnoughRaters { got: raters.len() });
    }
    for r in &raters[1..] {
        check_same_size(raters[0], r)?;
    }
    let n = raters[0].data.len();
    let r = raters.len();

    let prior = opts
        .prior
        .unwrap_or_else(|| {
            raters.iter().map(|m| m.foreground_fraction()).sum::<f64>() / r as f64
        })
        .clamp(PRIOR_LO, 1.0 - PRIOR_LO);

    let mut p = vec![opts.init_quality.clamp(CLAMP_LO, CLAMP_HI); r];
    let mut q = p.clone();
    let mut posterior = vec![0.0f64; n];
    let mut ll_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let e_step = |p: &[f64], q: &[f64], w: &mut [f64]| -> f64 {
        let mut ll = 0.0;
        for i in 0..n {
            let mut a = prior;
            let mut b = 1.0 - prior;
            for j in 0..r {
                if raters[j].data[i] {
                    a *= p[j];
                    b *= 1.0 - q[j];
                } else {
                    a *= 1.0 - p[j];
                    b *= q[j];
                }
            }
            let denom = a + b;
            w[i] = a / denom;
            ll += denom.ln();
        }
        ll
    };

    for _ in 0..opts.max_iter {
        iterations += 1;
        ll_trace.push(e_step(&p, &q, &mut posterior));

        let sum_w: f64 = posterior.iter().sum();
        let sum_not: f64 = n as f64 - sum_w;
        let mut delta: f64 = 0.0;
        for j in 0..r {
            let mut w_on = 0.0;
            let mut not_off = 0.0;
            for i in 0..n {
                if raters[j].data[i] {
                    w_on += posterior[i];
                } else {
                    not_off += 1.0 - posterior[i];
                }
            }
            let p_new = if sum_w > GUARD {
                (w_on / sum_w).clamp(CLAMP_LO, CLAMP_HI)
            } else {
                p[j]
            };
            let q_new = if sum_not > GUARD {
                (not_off / sum_not).clamp(CLAMP_LO, CLAMP_HI)
            } else {
                q[j]
            };
            delta = delta.max((p_new - p[j]).abs()).max((q_new - q[j]).abs());
            p[j] = p_new;
            q[j] = q_new;
        }
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    // Final posterior and likelihood at the parameters being reported.
    ll_trace.push(e_step(&p, &q, &mut posterior));

    let fused = Mask {
        width: raters[0].width,
        height: raters[0].height,
        data: posterior.iter().map(|&w| w >= 0.5).collect(),
    };
    Ok(StapleOutput {
        posterior,
        fused,
        sensitivity: p,
        specificity: q,
        iterations,
        converged,
        log_likelihood: ll_trace,
    })
}

/// Corrupt a ground-truth mask the way an imperfect rater would: keeps a true
/// pixel with probability `sensitivity`, keeps a false pixel false with
/// probability `specificity`.
pub fn simulate_rater(
    truth: &Mask,
    sensitivity: f64,
    specificity: f64,
    rng: &mut ChaCha8Rng,
) -> Mask {
    Mask {
        width: truth.width,
        height: truth.height,
        data: truth
            .data
            .iter()
            .map(|&t| {
                if t {
                    rng.random_bool(sensitivity)
                } else {
                    !rng.random_bool(specificity)
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn assert_monotone(ll: &[f64]) {
        for pair in ll.windows(2) {
            assert!(
                pair[1] >= pair[0] - 1e-9,
                "log-likelihood decreased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    fn disk(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> Mask {
        Mask::from_fn(w, h, |x, y| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn unanimous_raters_reproduce_their_mask() {
        let m = disk(16, 16, 8.0, 8.0, 4.5);
        let out = staple(&[&m, &m, &m], &StapleOptions::default()).unwrap();
        assert_eq!(out.fused, m);
        assert!(out.converged);
        assert!(out.sensitivity.iter().all(|&v| v > 0.99));
        assert!(out.specificity.iter().all(|&v| v > 0.99));
        assert_monotone(&out.log_likelihood);
    }

    #[test]
    fn contradictory_pair_with_flat_prior_is_undecided() {
        let m = disk(12, 12, 6.0, 6.0, 3.5);
        let inv = Mask {
            width: m.width,
            height: m.height,
            data: m.data.iter().map(|&b| !b).collect(),
        };
        let out = staple(
            &[&m, &inv],
            &StapleOptions {
                prior: Some(0.5),
                ..Default::default()
            },
        )
        .unwrap();
        for &w in &out.posterior {
            assert!((w - 0.5).abs() < 1e-9, "posterior {w} should stay at 1/2");
        }
        assert_monotone(&out.log_likelihood);
    }

    #[test]
    fn recovers_rater_quality_from_simulation() {
        let quality = [(0.95, 0.98), (0.85, 0.99), (0.90, 0.97)];
        let truth = disk(64, 64, 31.0, 30.0, 18.0);
        let mut dscs = Vec::new();
        let mut recovery_errs = Vec::new();
        for seed in 0..5u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let raters: Vec<Mask> = quality
                .iter()
                .map(|&(p, q)| simulate_rater(&truth, p, q, &mut rng))
                .collect();
            let refs: Vec<&Mask> = raters.iter().collect();
            let out = staple(&refs, &StapleOptions::default()).unwrap();
            assert!(out.converged, "EM should converge well inside 100 iters");
            assert_monotone(&out.log_likelihood);
            let mut err: f64 = 0.0;
            for (j, &(p, q)) in quality.iter().enumerate() {
                err = err
                    .max((out.sensitivity[j] - p).abs())
                    .max((out.specificity[j] - q).abs());
            }
            recovery_errs.push(err);
            dscs.push(crate::metrics::dsc(&out.fused, &truth).unwrap());
        }
        dscs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        recovery_errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(dscs[2] >= 0.98, "median fused dsc {} of {dscs:?}", dscs[2]);
        assert!(
            recovery_errs[2] < 0.05,
            "median recovery error {} of {recovery_errs:?}",
            recovery_errs[2]
        );
    }

    #[test]
    fn degenerate_all_foreground_input_stays_finite() {
        let full = Mask::from_fn(8, 8, |_, _| true);
        let out = staple(&[&full, &full, &full], &StapleOptions::default()).unwrap();
        assert!(out.posterior.iter().all(|w| w.is_finite() && *w > 0.99));
        assert_eq!(out.fused, full);
        assert!(out.log_likelihood.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn single_rater_is_rejected() {
        let m = Mask::empty(4, 4);
        assert!(matches!(
            staple(&[&m], &StapleOptions::default()),
            Err(EvalError::NotEnoughRaters { got: 1 })
        ));
    }
}
