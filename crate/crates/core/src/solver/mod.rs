//! Exponential time differencing for the nonlinear flow, plus the Picard
//! iteration and the snapshot format.

mod model;
mod picard;
mod snapshot;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use model::{HypothesisViolation, ModelParams};
pub use picard::{picard_solve, PicardConfig, PicardResult};
pub use snapshot::{read_snapshot, write_snapshot, HEADER_BYTES};

use crate::error::{Error, Result};
use crate::field::{DealiasMask, Field, SpectralField, TWO_THIRDS};
use crate::grid::Grid;
use crate::norms::{hom_sobolev_norm, lp_norm, sobolev_norm};
use crate::symbols::{bessel, sigma};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Etd1,
    Etdrk2,
}

/// `(e^z - 1) / z`.
pub fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        z.exp_m1() / z
    }
}

/// `(e^z - 1 - z) / z^2`.
pub fn phi2(z: f64) -> f64 {
    if z.abs() < 0.2 {
        let mut term = 0.5;
        let mut sum = 0.0;
        for k in 2..20 {
            sum += term;
            term *= z / (k as f64 + 1.0);
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub model: ModelParams,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    /// Fraction of the half-band kept after forming `u^{theta+1}`.
    pub dealias_rule: f64,
    /// Steps between norm records.
    pub record_every: usize,
    /// Order `s` of the `Hdot_s` column.
    pub sobolev_order: f64,
    pub keep_snapshots: bool,
}

impl SolverConfig {
    pub fn new(model: ModelParams, dt: f64, t_final: f64) -> Self {
        SolverConfig {
            model,
            dt,
            t_final,
            integrator: Integrator::Etdrk2,
            dealias_rule: TWO_THIRDS,
            record_every: 1,
            sobolev_order: 1.0,
            keep_snapshots: false,
        }
    }

    /// Number of steps; `t_final` must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("need finite dt > 0, got {}", self.dt)));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::param(
                "t_final",
                format!("need finite T >= dt, got T = {} with dt = {}", self.t_final, self.dt),
            ));
        }
        let ratio = self.t_final / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-9 * ratio {
            return Err(Error::param(
                "t_final",
                format!("T = {} is not a whole number of steps dt = {}", self.t_final, self.dt),
            ));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self, grid: &Grid) -> Result<usize> {
        self.model.validate(grid.dim())?;
        if !(self.dealias_rule > 0.0 && self.dealias_rule <= 1.0) {
            return Err(Error::param(
                "dealias_rule",
                format!("need a fraction in (0, 1], got {}", self.dealias_rule),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "need at least 1".to_string()));
        }
        if !(self.sobolev_order >= 0.0 && self.sobolev_order.is_finite()) {
            return Err(Error::param(
                "sobolev_order",
                format!("need finite s >= 0, got {}", self.sobolev_order),
            ));
        }
        self.steps()
    }
}

/// Precomputed propagator, `phi` weights and flux symbol for one `dt`.
pub struct EtdStepper {
    grid: Grid,
    dt: f64,
    integrator: Integrator,
    power: i32,
    propagator: Vec<f64>,
    phi1_dt: Vec<f64>,
    phi2_dt: Vec<f64>,
    flux: Vec<Complex64>,
    linear: bool,
}

/// `-i (xi . b) (1 + |xi|^2)^{-s2}` times the flux coefficient, with the
/// truncated band and Nyquist planes zeroed.
fn flux_symbol(grid: &Grid, model: &ModelParams, rule: f64) -> Result<Vec<Complex64>> {
    let mask = DealiasMask::new(grid, rule)?;
    let dim = grid.dim();
    Ok((0..grid.len())
        .map(|flat| {
            if !mask.keeps(flat) || grid.is_nyquist(flat) {
                return Complex64::default();
            }
            let xi = grid.xi(flat);
            let dot: f64 = xi[..dim].iter().zip(&model.flux_dir).map(|(a, b)| a * b).sum();
            let scale = model.flux_coefficient * bessel(grid.xi_sq()[flat], model.s2);
            Complex64::new(0.0, -dot * scale)
        })
        .collect())
}

impl EtdStepper {
    pub fn new(grid: &Grid, model: &ModelParams, dt: f64, integrator: Integrator, rule: f64) -> Result<Self> {
        model.validate(grid.dim())?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("need finite dt > 0, got {dt}")));
        }
        let sig: Vec<f64> = grid.xi_sq().iter().map(|&xs| sigma(xs, model.s1)).collect();
        Ok(EtdStepper {
            grid: grid.clone(),
            dt,
            integrator,
            power: model.theta as i32 + 1,
            propagator: sig.iter().map(|s| (-s * dt).exp()).collect(),
            phi1_dt: sig.iter().map(|s| dt * phi1(-s * dt)).collect(),
            phi2_dt: sig.iter().map(|s| dt * phi2(-s * dt)).collect(),
            flux: flux_symbol(grid, model, rule)?,
            linear: model.is_linear(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Spectral flux term for the state `u_hat` at time `t`.
    pub fn nonlinear(&self, u_hat: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let mut buf = u_hat.to_vec();
        if self.linear {
            buf.iter_mut().for_each(|c| *c = Complex64::default());
            return Ok(buf);
        }
        self.grid.inverse_in_place(&mut buf);
        for c in buf.iter_mut() {
            let p = c.re.powi(self.power);
            if !p.is_finite() {
                return Err(Error::BlowUp {
                    time: t,
                    reason: format!("u^{} overflowed (u = {})", self.power, c.re),
                });
            }
            *c = Complex64::new(p, 0.0);
        }
        self.grid.forward_in_place(&mut buf);
        for (c, m) in buf.iter_mut().zip(&self.flux) {
            *c *= m;
        }
        Ok(buf)
    }

    /// Advances `u_hat` from `t` to `t + dt` in place.
    pub fn advance(&self, u_hat: &mut [Complex64], t: f64) -> Result<()> {
        let n0 = self.nonlinear(u_hat, t)?;
        for ((u, n), (e, p1)) in u_hat
            .iter_mut()
            .zip(&n0)
            .zip(self.propagator.iter().zip(&self.phi1_dt))
        {
            *u = *u * e + n * p1;
        }
        if self.integrator == Integrator::Etdrk2 && !self.linear {
            let n1 = self.nonlinear(u_hat, t + self.dt)?;
            for ((u, p2), (a, b)) in u_hat.iter_mut().zip(&self.phi2_dt).zip(n1.iter().zip(&n0)) {
                *u += (a - b) * p2;
            }
        }
        if let Some(bad) = u_hat.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp {
                time: t + self.dt,
                reason: format!("non-finite Fourier coefficient at lattice index {bad}"),
            });
        }
        Ok(())
    }
}

/// `-div (I - Delta)^{-s2} (u^{theta+1} b)` in Fourier space, dealiased with `rule`.
pub fn nonlinear_rhs(u: &Field, model: &ModelParams, rule: f64) -> Result<SpectralField> {
    let grid = u.grid();
    let stepper = EtdStepper::new(grid, model, 1.0, Integrator::Etd1, rule)?;
    let spec = u.forward();
    SpectralField::new(grid, stepper.nonlinear(spec.coeffs(), 0.0)?)
}

/// One step of size `dt` from `u`.
pub fn step(u: &Field, dt: f64, model: &ModelParams, integrator: Integrator, rule: f64) -> Result<Field> {
    let stepper = EtdStepper::new(u.grid(), model, dt, integrator, rule)?;
    let mut coeffs = u.forward().into_coeffs();
    stepper.advance(&mut coeffs, 0.0)?;
    Ok(SpectralField::new(u.grid(), coeffs)?.inverse())
}

/// Norms of the solution at one recorded time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub hs2: f64,
    pub hdot_s: f64,
    pub mean: f64,
    /// `sum (1 + |xi|^2)^{s2 - s1} |xi|^2 |u_hat|^2 w`.
    pub dissipation: f64,
}

impl NormRecord {
    pub fn measure(t: f64, spec: &SpectralField, model: &ModelParams, s: f64) -> Result<Self> {
        let u = spec.inverse();
        let exponent = model.s2 - model.s1;
        Ok(NormRecord {
            t,
            l1: lp_norm(&u, 1.0)?.value,
            l2: sobolev_norm(spec, 0.0).value,
            linf: u.max_abs(),
            hs2: sobolev_norm(spec, model.s2).value,
            hdot_s: hom_sobolev_norm(spec, s)?.value,
            mean: spec.mean(),
            dissipation: spec.weighted_sum(|xs| (exponent * xs.ln_1p()).exp() * xs),
        })
    }
}

pub const NORMS_CSV_HEADER: &str = "t,L1,L2,Linf,Hs2,Hdot_s,mean";

pub fn write_norms_csv<W: Write>(mut out: W, records: &[NormRecord]) -> Result<()> {
    writeln!(out, "{NORMS_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.l1, r.l2, r.linf, r.hs2, r.hdot_s, r.mean
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub records: Vec<NormRecord>,
    /// Solution at each recorded time when snapshots are kept.
    pub snapshots: Vec<Field>,
    /// Records at which `|u|_{H^{s2}}` grew by more than `1e-12` relative.
    pub hs2_increases: Vec<f64>,
    /// First time the spectral tail exceeded `1e-6` of the peak, if ever.
    pub resolution_warning: Option<f64>,
}

impl Trajectory {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(t) = self.resolution_warning {
            out.push(format!(
                "resolution: spectral tail above 1e-6 of the peak at t = {t}; refine the grid"
            ));
        }
        if let Some(t) = self.hs2_increases.first() {
            out.push(format!(
                "H^s2 norm increased at {} record(s), first at t = {t}",
                self.hs2_increases.len()
            ));
        }
        out
    }
}

/// Largest coefficient in the outer quarter of the retained band (and
/// beyond), relative to the largest coefficient.
pub fn spectral_tail(spec: &SpectralField, rule: f64) -> f64 {
    let grid = spec.grid();
    let limit = 0.75 * rule * grid.points() as f64 / 2.0;
    let dim = grid.dim();
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    for (flat, c) in spec.coeffs().iter().enumerate() {
        let a = c.norm();
        peak = peak.max(a);
        if grid.k(flat)[..dim].iter().any(|&k| k.unsigned_abs() as f64 >= limit) {
            tail = tail.max(a);
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        tail / peak
    }
}

/// Result of a run that may have stopped early.
pub struct PartialRun {
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
}

/// Runs the solver, calling `observer(t, u_hat)` at every record (including
/// `t = 0`). A failure mid-run keeps everything recorded so far.
pub fn solve_partial(
    u0: &Field,
    config: &SolverConfig,
    observer: &mut dyn FnMut(f64, &SpectralField) -> Result<()>,
) -> Result<PartialRun> {
    let grid = u0.grid().clone();
    let steps = config.validate(&grid)?;
    let stepper = EtdStepper::new(&grid, &config.model, config.dt, config.integrator, config.dealias_rule)?;
    let mut traj = Trajectory {
        times: Vec::new(),
        records: Vec::new(),
        snapshots: Vec::new(),
        hs2_increases: Vec::new(),
        resolution_warning: None,
    };
    let mut state = u0.forward();
    let mut record = |t: f64, spec: &SpectralField, traj: &mut Trajectory| -> Result<()> {
        let rec = NormRecord::measure(t, spec, &config.model, config.sobolev_order)?;
        if let Some(prev) = traj.records.last() {
            if rec.hs2 > prev.hs2 * (1.0 + 1e-12) {
                traj.hs2_increases.push(t);
            }
        }
        if traj.resolution_warning.is_none() && spectral_tail(spec, config.dealias_rule) > 1e-6 {
            traj.resolution_warning = Some(t);
        }
        traj.times.push(t);
        traj.records.push(rec);
        if config.keep_snapshots {
            traj.snapshots.push(spec.inverse());
        }
        observer(t, spec)
    };
    record(0.0, &state, &mut traj)?;
    for n in 0..steps {
        let t = n as f64 * config.dt;
        if let Err(e) = stepper.advance(state.coeffs_mut(), t) {
            return Ok(PartialRun {
                trajectory: traj,
                failure: Some(e),
            });
        }
        let done = n + 1;
        if done % config.record_every == 0 || done == steps {
            record(done as f64 * config.dt, &state, &mut traj)?;
        }
    }
    Ok(PartialRun {
        trajectory: traj,
        failure: None,
    })
}

pub fn solve(u0: &Field, config: &SolverConfig) -> Result<Trajectory> {
    solve_with(u0, config, &mut |_, _| Ok(()))
}

pub fn solve_with(
    u0: &Field,
    config: &SolverConfig,
    observer: &mut dyn FnMut(f64, &SpectralField) -> Result<()>,
) -> Result<Trajectory> {
    let run = solve_partial(u0, config, observer)?;
    match run.failure {
        Some(e) => Err(e),
        None => Ok(run.trajectory),
    }
}

/// Final state of a run without recording anything but the endpoints.
pub fn evolve(u0: &Field, config: &SolverConfig) -> Result<SpectralField> {
    let mut last = None;
    let cfg = SolverConfig {
        record_every: usize::MAX,
        keep_snapshots: false,
        ..config.clone()
    };
    solve_with(u0, &cfg, &mut |_, s| {
        last = Some(s.clone());
        Ok(())
    })?;
    Ok(last.expect("at least the final record is emitted"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_functions_are_continuous() {
        for z in [-1e-4, 1e-4, -0.2, 0.2] {
            let below = z * (1.0 - 1e-12);
            let above = z * (1.0 + 1e-12);
            assert!((phi1(below) - phi1(above)).abs() < 1e-12);
            assert!((phi2(below) - phi2(above)).abs() < 1e-12);
        }
        assert_eq!(phi1(0.0), 1.0);
        assert_eq!(phi2(0.0), 0.5);
        assert!((phi1(-50.0) - 1.0 / 50.0).abs() < 1e-15);
    }

    #[test]
    fn phi_series_against_direct_form() {
        // both branches agree where each is accurate
        for z in [-0.19f64, -0.05, 0.1] {
            let direct = (z.exp_m1() - z) / (z * z);
            assert!((phi2(z) - direct).abs() < 1e-12);
        }
        let z = -5e-5f64;
        assert!((phi1(z) - z.exp_m1() / z).abs() < 1e-15);
    }

    #[test]
    fn step_count_must_divide() {
        let m = ModelParams::new(1, 0.25, 0.75, 2).unwrap();
        assert_eq!(SolverConfig::new(m.clone(), 0.1, 1.0).steps().unwrap(), 10);
        assert!(SolverConfig::new(m.clone(), 0.3, 1.0).steps().is_err());
        assert!(SolverConfig::new(m.clone(), 0.0, 1.0).steps().is_err());
        assert!(SolverConfig::new(m, 1.0, 0.5).steps().is_err());
    }
}
