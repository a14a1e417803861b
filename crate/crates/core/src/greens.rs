//! Green's function of the linear flow, its smooth three-band decomposition,
//! pointwise envelope checks and norm laws.
//!
//! Physical-space kernels are `inverse(symbol) / h^n`, which approximates the
//! whole-space kernel as long as it has decayed well inside the box.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::grid::Grid;
use crate::norms::lp_norm;
use crate::symbols::{sigma, smooth_step};

/// `e^{-t sigma(xi)}` on the lattice.
pub fn greens_hat(grid: &Grid, t: f64, s1: f64) -> Result<SpectralField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("need finite t >= 0, got {t}")));
    }
    if !(s1 >= 0.0 && s1.is_finite()) {
        return Err(Error::param("s1", format!("need finite s1 >= 0, got {s1}")));
    }
    Ok(SpectralField::from_radial(grid, |xs| (-t * sigma(xs, s1)).exp()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    Mid,
    High,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Low, Band::Mid, Band::High];

    pub fn label(self) -> &'static str {
        match self {
            Band::Low => "G1",
            Band::Mid => "G2",
            Band::High => "G3",
        }
    }
}

/// Smooth partition of unity `chi1 + chi2 + chi3 = 1` in `|xi|`:
/// `chi1 = 1` on `|xi| <= delta`, `0` on `|xi| >= 2 delta`;
/// `chi3 = 0` on `|xi| <= R - 1`, `1` on `|xi| >= R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffBank {
    delta: f64,
    radius: f64,
}

impl Default for CutoffBank {
    fn default() -> Self {
        CutoffBank {
            delta: 0.5,
            radius: 3.0,
        }
    }
}

impl CutoffBank {
    pub fn new(delta: f64, radius: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", format!("need 0 < delta < 1, got {delta}")));
        }
        if !(radius > 2.0 && radius.is_finite()) {
            return Err(Error::param("R", format!("need finite R > 2, got {radius}")));
        }
        if 2.0 * delta >= radius - 1.0 {
            return Err(Error::param(
                "delta",
                format!("bands collide: 2 delta = {} >= R - 1 = {}", 2.0 * delta, radius - 1.0),
            ));
        }
        Ok(CutoffBank { delta, radius })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn chi1(&self, xi_abs: f64) -> f64 {
        smooth_step(2.0 - xi_abs / self.delta)
    }

    pub fn chi3(&self, xi_abs: f64) -> f64 {
        smooth_step(xi_abs - (self.radius - 1.0))
    }

    pub fn chi2(&self, xi_abs: f64) -> f64 {
        1.0 - self.chi1(xi_abs) - self.chi3(xi_abs)
    }

    pub fn chi(&self, band: Band, xi_abs: f64) -> f64 {
        match band {
            Band::Low => self.chi1(xi_abs),
            Band::Mid => self.chi2(xi_abs),
            Band::High => self.chi3(xi_abs),
        }
    }

    pub fn on_grid(&self, grid: &Grid, band: Band) -> SpectralField {
        SpectralField::from_radial(grid, |xs| self.chi(band, xs.sqrt()))
    }
}

/// `chi(t, xi) = rho(2 - (1 + t) |xi|^2 / mu)`: equal to 1 for
/// `|xi| <= eta(t) = sqrt(mu / (1 + t))` and 0 for `|xi| >= sqrt(2) eta(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeFrequencyCutoff {
    mu: f64,
}

impl TimeFrequencyCutoff {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", format!("need finite mu > 0, got {mu}")));
        }
        Ok(TimeFrequencyCutoff { mu })
    }

    /// Smallest integer strictly above `n + 2s`, plus one.
    pub fn default_mu(dim: usize, s: f64) -> f64 {
        (dim as f64 + 2.0 * s).ceil() + 1.0
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn eta(&self, t: f64) -> f64 {
        (self.mu / (1.0 + t)).sqrt()
    }

    pub fn chi(&self, t: f64, xi_sq: f64) -> f64 {
        smooth_step(2.0 - (1.0 + t) * xi_sq / self.mu)
    }
}

/// `G(t, .)` on a grid with its symbol.
#[derive(Clone, Debug)]
pub struct GreensKernel {
    t: f64,
    s1: f64,
    spectral: SpectralField,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub g1: Field,
    pub g2: Field,
    pub g3: Field,
}

impl GreensKernel {
    pub fn new(grid: &Grid, t: f64, s1: f64) -> Result<Self> {
        Ok(GreensKernel {
            t,
            s1,
            spectral: greens_hat(grid, t, s1)?,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    pub fn spectral(&self) -> &SpectralField {
        &self.spectral
    }

    fn to_physical(&self, spec: &SpectralField) -> Field {
        spec.inverse().scaled(1.0 / self.grid().cell_volume())
    }

    fn symbol(&self, band: Option<(Band, &CutoffBank)>, derivative: Option<usize>) -> Result<SpectralField> {
        let mut spec = match band {
            Some((b, bank)) => self.spectral.mul(&bank.on_grid(self.grid(), b))?,
            None => self.spectral.clone(),
        };
        if let Some(axis) = derivative {
            spec = spec.derivative(axis)?;
        }
        Ok(spec)
    }

    pub fn physical(&self) -> Field {
        self.to_physical(&self.spectral)
    }

    pub fn gradient(&self, axis: usize) -> Result<Field> {
        Ok(self.to_physical(&self.symbol(None, Some(axis))?))
    }

    /// `D^alpha G_i` with `alpha` empty or a single axis.
    pub fn part(&self, bank: &CutoffBank, band: Band, derivative: Option<usize>) -> Result<Field> {
        Ok(self.to_physical(&self.symbol(Some((band, bank)), derivative)?))
    }

    pub fn decompose(&self, bank: &CutoffBank) -> Result<Decomposition> {
        Ok(Decomposition {
            g1: self.part(bank, Band::Low, None)?,
            g2: self.part(bank, Band::Mid, None)?,
            g3: self.part(bank, Band::High, None)?,
        })
    }
}

/// Envelope order `ceil(n / (2 (1 - s1))) + 1`, the smallest integer with
/// `2 (1 - s1) N > n` plus one.
pub fn envelope_order(dim: usize, s1: f64) -> Result<u32> {
    if !(0.0..1.0).contains(&s1) {
        return Err(Error::param("s1", format!("need 0 <= s1 < 1, got {s1}")));
    }
    Ok((dim as f64 / (2.0 * (1.0 - s1))).ceil() as u32 + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub t: f64,
    pub band: Band,
    pub derivative: Option<usize>,
    pub order: u32,
    /// Power of `t` multiplying the ratio.
    pub time_exponent: f64,
    /// `sup |D^alpha G_i|` over `|x| <= L/4`.
    pub sup: f64,
    /// `sup |D^alpha G_i| t^{time_exponent} / envelope` over `|x| <= L/4`.
    pub max_ratio: f64,
    /// Distance from the origin where `max_ratio` is attained.
    pub argmax_radius: f64,
}

fn envelope_check(
    kernel: &GreensKernel,
    bank: &CutoffBank,
    band: Band,
    order: u32,
    derivative: Option<usize>,
    spatial_power: f64,
    time_exponent: f64,
) -> Result<EnvelopeReport> {
    if kernel.t < 1.0 {
        return Err(Error::param("t", format!("envelopes are checked for t >= 1, got {}", kernel.t)));
    }
    let field = kernel.part(bank, band, derivative)?;
    let grid = kernel.grid();
    let window = grid.extent() / 4.0;
    let t = kernel.t;
    let scale = t.powf(time_exponent);
    let mut sup = 0.0f64;
    let mut best = (0.0f64, 0.0f64);
    for (flat, v) in field.values().iter().enumerate() {
        let r = grid.radius(flat);
        if r > window {
            continue;
        }
        sup = sup.max(v.abs());
        let envelope = (-(order as f64) * (r.powf(spatial_power) / (1.0 + t)).ln_1p()).exp();
        let ratio = v.abs() * scale / envelope;
        if ratio > best.0 {
            best = (ratio, r);
        }
    }
    Ok(EnvelopeReport {
        t,
        band,
        derivative,
        order,
        time_exponent,
        sup,
        max_ratio: best.0,
        argmax_radius: best.1,
    })
}

/// `sup |D^alpha G1| t^{(n+|alpha|)/2} / B_N(t, |x|)` with
/// `B_N = (1 + |x|^2 / (1 + t))^{-N}`.
pub fn check_envelope_g1(
    kernel: &GreensKernel,
    bank: &CutoffBank,
    order: u32,
    derivative: Option<usize>,
) -> Result<EnvelopeReport> {
    let alpha = derivative.is_some() as usize as f64;
    let n = kernel.grid().dim() as f64;
    envelope_check(kernel, bank, Band::Low, order, derivative, 2.0, (n + alpha) / 2.0)
}

/// `sup |D^alpha G3| t^{(n+|alpha|)/(2 nu)} / B^nu_N(t, |x|)` with
/// `nu = 1 - s1` and `B^nu_N = (1 + |x|^{2 nu} / (1 + t))^{-N}`.
pub fn check_envelope_g3(
    kernel: &GreensKernel,
    bank: &CutoffBank,
    order: u32,
    derivative: Option<usize>,
) -> Result<EnvelopeReport> {
    if !(kernel.s1 < 1.0) {
        return Err(Error::param(
            "s1",
            format!("the high-frequency envelope needs s1 < 1, got {}", kernel.s1),
        ));
    }
    let nu = 1.0 - kernel.s1;
    let alpha = derivative.is_some() as usize as f64;
    let n = kernel.grid().dim() as f64;
    envelope_check(
        kernel,
        bank,
        Band::High,
        order,
        derivative,
        2.0 * nu,
        (n + alpha) / (2.0 * nu),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreensNorms {
    pub t: f64,
    pub l1: f64,
    /// `L^1` norm of the Euclidean length of the spectral gradient.
    pub grad_l1: f64,
    pub l2: f64,
}

pub fn greens_norms(kernel: &GreensKernel) -> Result<GreensNorms> {
    let grid = kernel.grid();
    let g = kernel.physical();
    let mut grad_sq = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        for (acc, v) in grad_sq.iter_mut().zip(kernel.gradient(axis)?.values()) {
            *acc += v * v;
        }
    }
    let grad = Field::new(grid, grad_sq.into_iter().map(f64::sqrt).collect())?;
    Ok(GreensNorms {
        t: kernel.t,
        l1: lp_norm(&g, 1.0)?.value,
        grad_l1: lp_norm(&grad, 1.0)?.value,
        l2: lp_norm(&g, 2.0)?.value,
    })
}

/// One CSV row: time, quantity label, raw value and its time-scaled ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    pub quantity: String,
    pub value: f64,
    pub ratio: f64,
}

impl GreensNorms {
    /// Rows `L1`, `gradL1`, `L2` with ratios scaled by `t^0`, `t^{1/2}`, `t^{n/4}`.
    pub fn rows(&self, dim: usize) -> [SweepRow; 3] {
        let t = self.t;
        [
            SweepRow {
                t,
                quantity: "L1".into(),
                value: self.l1,
                ratio: self.l1,
            },
            SweepRow {
                t,
                quantity: "gradL1".into(),
                value: self.grad_l1,
                ratio: self.grad_l1 * t.sqrt(),
            },
            SweepRow {
                t,
                quantity: "L2".into(),
                value: self.l2,
                ratio: self.l2 * t.powf(dim as f64 / 4.0),
            },
        ]
    }
}

impl EnvelopeReport {
    pub fn row(&self) -> SweepRow {
        let suffix = match self.derivative {
            Some(axis) => format!("_d{axis}"),
            None => String::new(),
        };
        SweepRow {
            t: self.t,
            quantity: format!("envelope_{}{}", self.band.label(), suffix),
            value: self.sup,
            ratio: self.max_ratio,
        }
    }
}

/// Norms at each time, computed in parallel and returned in input order.
pub fn norm_sweep(grid: &Grid, s1: f64, times: &[f64]) -> Result<Vec<GreensNorms>> {
    times
        .par_iter()
        .map(|&t| greens_norms(&GreensKernel::new(grid, t, s1)?))
        .collect()
}

/// G1 and G3 envelope reports (plain and first derivative) at each time.
pub fn envelope_sweep(
    grid: &Grid,
    s1: f64,
    bank: &CutoffBank,
    order: u32,
    times: &[f64],
) -> Result<Vec<EnvelopeReport>> {
    let per_time: Vec<Vec<EnvelopeReport>> = times
        .par_iter()
        .map(|&t| {
            let kernel = GreensKernel::new(grid, t, s1)?;
            Ok(vec![
                check_envelope_g1(&kernel, bank, order, None)?,
                check_envelope_g1(&kernel, bank, order, Some(0))?,
                check_envelope_g3(&kernel, bank, order, None)?,
                check_envelope_g3(&kernel, bank, order, Some(0))?,
            ])
        })
        .collect::<Result<_>>()?;
    Ok(per_time.into_iter().flatten().collect())
}

/// `max / min` of a positive series.
pub fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi / lo
}

/// Largest later-over-earlier ratio `max_{i < j} v_j / v_i`; at most 1 for a
/// non-increasing series.
pub fn growth_factor(values: &[f64]) -> f64 {
    let mut running_min = f64::INFINITY;
    let mut worst = 0.0f64;
    for &v in values {
        if running_min.is_finite() {
            worst = worst.max(v / running_min);
        }
        running_min = running_min.min(v);
    }
    if values.len() < 2 {
        1.0
    } else {
        worst
    }
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "t,quantity,value,ratio")?;
    for r in rows {
        writeln!(out, "{},{},{:e},{:e}", r.t, r.quantity, r.value, r.ratio)?;
    }
    Ok(())
}
