use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{EtdStepper, Integrator, ModelParams};
use crate::error::{Error, Result};
use crate::field::{Field, SpectralField, TWO_THIRDS};
use crate::symbols::sigma;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub t0: f64,
    /// Trapezoid sub-intervals on `[0, T0]`.
    pub nodes: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Order `s` of the `H^s` distance.
    pub sobolev_order: f64,
    pub dealias_rule: f64,
}

impl PicardConfig {
    pub fn new(t0: f64) -> Self {
        PicardConfig {
            t0,
            nodes: 200,
            max_iter: 40,
            tol: 1e-10,
            sobolev_order: 1.0,
            dealias_rule: TWO_THIRDS,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PicardResult {
    pub times: Vec<f64>,
    /// `d_m = sup_t |u^{m+1}(t) - u^m(t)|_{H^s}`, starting at `m = 0`.
    pub distances: Vec<f64>,
    /// `k_m = d_m / d_{m-1}`, starting at `m = 1`.
    pub factors: Vec<f64>,
    pub converged: bool,
    /// Last iterate at `T0`.
    #[serde(skip)]
    pub final_state: Option<SpectralField>,
}

impl PicardResult {
    pub fn final_field(&self) -> Option<Field> {
        self.final_state.as_ref().map(SpectralField::inverse)
    }
}

/// Iterates `u^{m+1}(t) = G(t) u0 + int_0^t G(t - tau) N(u^m(tau)) dtau`
/// from `u^0 = 0`, with the Duhamel integral done by the composite trapezoid
/// rule on `nodes` sub-intervals and the exact propagator at every node.
/// Stops when `d_m < tol`; three consecutive factors `k_m >= 1` (for
/// `m >= 2`) are reported as [`Error::NonContraction`].
pub fn picard_solve(u0: &Field, model: &ModelParams, config: &PicardConfig) -> Result<PicardResult> {
    let grid = u0.grid();
    if !(config.t0 > 0.0 && config.t0.is_finite()) {
        return Err(Error::param("t0", format!("need finite T0 > 0, got {}", config.t0)));
    }
    if config.nodes == 0 {
        return Err(Error::param("nodes", "need at least one sub-interval".to_string()));
    }
    if !(config.tol > 0.0) {
        return Err(Error::param("tol", format!("need tol > 0, got {}", config.tol)));
    }
    let m = config.nodes;
    let h = config.t0 / m as f64;
    let times: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let stepper = EtdStepper::new(grid, model, h, Integrator::Etd1, config.dealias_rule)?;
    let sig: Vec<f64> = grid.xi_sq().iter().map(|&xs| sigma(xs, model.s1)).collect();
    let step_prop: Vec<f64> = sig.iter().map(|s| (-s * h).exp()).collect();
    let weight: Vec<f64> = grid
        .xi_sq()
        .iter()
        .map(|&xs| (config.sobolev_order * xs.ln_1p()).exp() * grid.spectral_weight())
        .collect();
    let u0_hat = u0.forward().into_coeffs();
    let free: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| {
            u0_hat
                .iter()
                .zip(&sig)
                .map(|(c, s)| c * (-s * t).exp())
                .collect()
        })
        .collect();

    let mut prev: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); grid.len()]; m + 1];
    let mut distances = Vec::new();
    let mut factors = Vec::new();
    let mut converged = false;
    let mut streak = 0;
    for iteration in 0..config.max_iter {
        let sources = prev
            .iter()
            .zip(&times)
            .map(|(u, &t)| stepper.nonlinear(u, t))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                // iterates that overflow have stopped contracting
                Error::BlowUp { .. } => Error::NonContraction {
                    iteration,
                    factor: f64::INFINITY,
                },
                other => other,
            })?;
        let mut acc = sources[0].clone();
        let mut next = Vec::with_capacity(m + 1);
        next.push(free[0].clone());
        for i in 1..=m {
            for ((a, e), n) in acc.iter_mut().zip(&step_prop).zip(&sources[i]) {
                *a = *a * e + n;
            }
            let state: Vec<Complex64> = (0..grid.len())
                .map(|k| {
                    let start = sources[0][k] * (-sig[k] * times[i]).exp();
                    free[i][k] + (acc[k] - 0.5 * start - 0.5 * sources[i][k]) * h
                })
                .collect();
            next.push(state);
        }
        let d = next
            .iter()
            .zip(&prev)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .zip(&weight)
                    .map(|((x, y), w)| (x - y).norm_sqr() * w)
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if !d.is_finite() {
            return Err(Error::NonContraction {
                iteration,
                factor: f64::INFINITY,
            });
        }
        if let Some(&last) = distances.last() {
            let k = d / last;
            factors.push(k);
            if iteration >= 2 && !(k < 1.0) {
                streak += 1;
                if streak >= 3 {
                    return Err(Error::NonContraction { iteration, factor: k });
                }
            } else {
                streak = 0;
            }
        }
        distances.push(d);
        prev = next;
        if d < config.tol {
            converged = true;
            break;
        }
    }
    let final_state = SpectralField::new(grid, prev.pop().expect("nodes >= 1"))?;
    Ok(PicardResult {
        times,
        distances,
        factors,
        converged,
        final_state: Some(final_state),
    })
}
