//! Long-time experiments: time-frequency splitting, the energy identity,
//! power-law fits of norm histories, and the decay report.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::greens::TimeFrequencyCutoff;
use crate::grid::{Grid, GridSpec};
use crate::solver::{solve_partial, NormRecord, SolverConfig};
use crate::symbols::abs_power;

/// `u = u_L + u_H` with `u_L = chi(t, D) u`.
#[derive(Clone, Debug)]
pub struct FrequencySplit {
    pub mu: f64,
    pub t: f64,
    pub eta: f64,
    pub low: Field,
    pub high: Field,
}

pub fn split_spectral(spec: &SpectralField, t: f64, cutoff: &TimeFrequencyCutoff) -> (SpectralField, SpectralField) {
    let low = SpectralField::from_radial(spec.grid(), |xs| cutoff.chi(t, xs))
        .mul(spec)
        .expect("same grid");
    let high = spec.sub(&low).expect("same grid");
    (low, high)
}

pub fn split(u: &Field, t: f64, mu: f64) -> Result<FrequencySplit> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("need finite t >= 0, got {t}")));
    }
    let cutoff = TimeFrequencyCutoff::new(mu)?;
    let (low, _) = split_spectral(&u.forward(), t, &cutoff);
    let low = low.inverse();
    let high = u.sub(&low)?;
    Ok(FrequencySplit {
        mu,
        t,
        eta: cutoff.eta(t),
        low,
        high,
    })
}

/// `|H(t) + 2 int_0^t D - H(0)| / H(0)` at every record, where
/// `H = |u|_{H^{s2}}^2` and `D` is the recorded dissipation; the time
/// integral uses the trapezoid rule over the records.
pub fn energy_identity_residual(records: &[NormRecord]) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let h0 = first.hs2 * first.hs2;
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(records.len());
    out.push(0.0);
    for w in records.windows(2) {
        integral += 0.5 * (w[0].dissipation + w[1].dissipation) * (w[1].t - w[0].t);
        let h = w[1].hs2 * w[1].hs2;
        out.push(if h0 == 0.0 {
            0.0
        } else {
            (h + 2.0 * integral - h0).abs() / h0
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    /// Slope of `log(value)` against `log(1 + t)`.
    pub slope: f64,
    pub stderr: f64,
    pub samples: usize,
    /// First and last sample times used.
    pub t_first: f64,
    pub t_last: f64,
}

/// Least-squares power law over the samples with `t` in `window`. Needs at
/// least 8 samples and a span of one decade in `1 + t`.
pub fn fit_exponent(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerFit> {
    if times.len() != values.len() {
        return Err(Error::Fit(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let pts: Vec<(f64, f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= window.0 && t <= window.1)
        .map(|(&t, &v)| (t, (1.0 + t).ln(), v.ln()))
        .collect();
    if pts.len() < 8 {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} samples, need at least 8",
            window.0,
            window.1,
            pts.len()
        )));
    }
    if let Some(bad) = pts.iter().find(|p| !p.2.is_finite()) {
        return Err(Error::Fit(format!("non-positive or non-finite value at t = {}", bad.0)));
    }
    let (t_first, t_last) = (pts[0].0, pts[pts.len() - 1].0);
    if (1.0 + t_last) / (1.0 + t_first) < 10.0 - 1e-12 {
        return Err(Error::Fit(format!(
            "samples span [{t_first}, {t_last}], less than one decade in 1 + t"
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.2 - intercept - slope * p.1).powi(2))
        .sum();
    Ok(PowerFit {
        slope,
        stderr: (rss / (n - 2.0) / sxx).sqrt(),
        samples: pts.len(),
        t_first,
        t_last,
    })
}

/// `max_j` of the `u^2`-weighted variance along axis `j` about the centre of mass.
pub fn spread_radius_sq(u: &Field) -> f64 {
    let grid = u.grid();
    let dim = grid.dim();
    let mut mass = 0.0;
    let mut first = [0.0; 3];
    let mut second = [0.0; 3];
    for (flat, v) in u.values().iter().enumerate() {
        let w = v * v;
        let x = grid.position(flat);
        mass += w;
        for j in 0..dim {
            first[j] += w * x[j];
            second[j] += w * x[j] * x[j];
        }
    }
    if mass == 0.0 {
        return 0.0;
    }
    (0..dim)
        .map(|j| second[j] / mass - (first[j] / mass).powi(2))
        .fold(0.0, f64::max)
}

/// `exp(-L^2 / (8 r^2))`: the relative weight a profile of spread `r` puts
/// at distance `L/2` from its centre, i.e. on the periodic images.
pub fn wraparound_estimate(grid: &Grid, radius_sq: f64) -> f64 {
    if radius_sq <= 0.0 {
        return 0.0;
    }
    (-grid.extent().powi(2) / (8.0 * radius_sq)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `amplitude * exp(-|x|^2 / (4 width^2))`.
    Gaussian { amplitude: f64, width: f64 },
}

impl InitialData {
    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        match *self {
            InitialData::Gaussian { amplitude, width } => {
                if !(amplitude.is_finite() && width > 0.0 && width.is_finite()) {
                    return Err(Error::param(
                        "initial",
                        format!("need finite amplitude and width > 0, got {amplitude}, {width}"),
                    ));
                }
                Ok(Field::from_fn(grid, |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    amplitude * (-r2 / (4.0 * width * width)).exp()
                }))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayConfig {
    pub id: String,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub initial: InitialData,
    /// Orders `l` of the tracked `|Lambda^l u|_{L^2}`.
    pub lambda_orders: Vec<f64>,
    /// Orders `l` of the tracked `|Lambda^l u_L|_{L^2}`.
    pub low_orders: Vec<f64>,
    /// Regularity index `s` entering the default `mu`.
    pub regularity: f64,
    /// Defaults to `ceil(n + 2s) + 1`.
    pub mu: Option<f64>,
    pub t_min: f64,
    /// Absolute slope tolerance.
    pub tolerance: f64,
    /// Per-norm tolerance overrides keyed by norm name.
    pub tolerance_overrides: BTreeMap<String, f64>,
    /// Bound on `sup_t |u(t)|_{L^1} / |u0|_{L^1}`.
    pub l1_bound: f64,
    /// Wraparound estimate above which records are treated as contaminated.
    pub wrap_threshold: f64,
}

impl DecayConfig {
    pub fn new(id: impl Into<String>, grid: GridSpec, solver: SolverConfig, initial: InitialData) -> Self {
        DecayConfig {
            id: id.into(),
            grid,
            solver,
            initial,
            lambda_orders: vec![1.0],
            low_orders: vec![0.0, 1.0],
            regularity: 1.0,
            mu: None,
            t_min: 5.0,
            tolerance: 0.05,
            tolerance_overrides: BTreeMap::new(),
            l1_bound: 3.0,
            wrap_threshold: 1e-4,
        }
    }

    pub fn effective_mu(&self) -> f64 {
        self.mu
            .unwrap_or_else(|| TimeFrequencyCutoff::default_mu(self.grid.dim, self.regularity))
    }

    fn tolerance_for(&self, name: &str) -> f64 {
        self.tolerance_overrides.get(name).copied().unwrap_or(self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayParameters {
    pub n: usize,
    pub s1: f64,
    pub s2: f64,
    pub theta: u32,
    pub s: f64,
    pub mu: f64,
    pub flux_coefficient: f64,
    pub points: usize,
    pub extent: f64,
    pub dt: f64,
    pub t_final: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
    /// First record whose wraparound estimate exceeded the threshold.
    pub t_wrap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormFit {
    pub name: String,
    pub expected: f64,
    pub fitted: Option<f64>,
    pub stderr: Option<f64>,
    pub samples: usize,
    pub tolerance: f64,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Check {
    pub sup_ratio: f64,
    pub bound: f64,
    pub verdict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyCheck {
    pub final_residual: f64,
    pub max_residual: f64,
    pub hs2_non_increasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub id: String,
    pub parameters: DecayParameters,
    /// Hypotheses of the decay analysis that these parameters violate.
    pub hypotheses: Vec<String>,
    pub exploratory: bool,
    pub window: FitWindow,
    pub fits: Vec<NormFit>,
    pub l1: L1Check,
    pub energy: EnergyCheck,
    pub complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl DecayReport {
    pub fn fit(&self, name: &str) -> Option<&NormFit> {
        self.fits.iter().find(|f| f.name == name)
    }
}

/// Norm histories sampled at every record of a decay run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// `columns[i][k]` is norm `names[i]` at `times[k]`.
    pub columns: Vec<Vec<f64>>,
    pub wrap: Vec<f64>,
    /// Standard solver norms at the same records.
    #[serde(skip)]
    pub records: Vec<NormRecord>,
}

impl DecaySeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t")?;
        for n in &self.names {
            write!(out, ",{n}")?;
        }
        writeln!(out, ",wrap")?;
        for (k, t) in self.times.iter().enumerate() {
            write!(out, "{t}")?;
            for c in &self.columns {
                write!(out, ",{:e}", c[k])?;
            }
            writeln!(out, ",{:e}", self.wrap[k])?;
        }
        Ok(())
    }
}

fn order_label(prefix: &str, l: f64) -> String {
    format!("{prefix}{l}")
}

/// Runs the solver and evaluates every tracked norm, the fits and the
/// verdicts. A solver failure yields an incomplete report with
/// `passed = false` rather than an error.
pub fn run_decay_experiment(config: &DecayConfig) -> Result<(DecayReport, DecaySeries)> {
    let grid = config.grid.build()?;
    let model = &config.solver.model;
    let dim = grid.dim();
    let mu = config.effective_mu();
    let cutoff = TimeFrequencyCutoff::new(mu)?;
    for (name, l) in config.lambda_orders.iter().chain(&config.low_orders).map(|l| ("l", *l)) {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::param(name, format!("need finite l >= 0, got {l}")));
        }
    }
    let mut warnings = Vec::new();
    if mu <= dim as f64 + 2.0 * config.regularity {
        warnings.push(format!(
            "mu = {mu} does not exceed n + 2s = {}; splitting is exploratory",
            dim as f64 + 2.0 * config.regularity
        ));
    }

    let mut names = vec!["L1".to_string(), "L2".to_string()];
    names.extend(config.lambda_orders.iter().map(|&l| order_label("Lambda", l)));
    names.push("Hs2".to_string());
    names.extend(config.low_orders.iter().map(|&l| order_label("low_Lambda", l)));
    let mut series = DecaySeries {
        columns: vec![Vec::new(); names.len()],
        names,
        ..Default::default()
    };

    let u0 = config.initial.sample(&grid)?;
    let mut observer = |t: f64, spec: &SpectralField| -> Result<()> {
        let u = spec.inverse();
        let l1 = crate::norms::lp_norm(&u, 1.0)?.value;
        let mut row = vec![l1, spec.l2_norm()];
        for &l in &config.lambda_orders {
            row.push(spec.weighted_sum(|xs| abs_power(xs, 2.0 * l)).sqrt());
        }
        row.push(crate::norms::sobolev_norm(spec, model.s2).value);
        for &l in &config.low_orders {
            row.push(
                spec.weighted_sum(|xs| cutoff.chi(t, xs).powi(2) * abs_power(xs, 2.0 * l))
                    .sqrt(),
            );
        }
        for (c, v) in series.columns.iter_mut().zip(row) {
            c.push(v);
        }
        series.times.push(t);
        series.wrap.push(wraparound_estimate(&grid, spread_radius_sq(&u)));
        Ok(())
    };
    let run = solve_partial(&u0, &config.solver, &mut observer)?;
    let traj = run.trajectory;
    warnings.extend(traj.warnings());
    series.records = traj.records.clone();

    let wrap_index = series.wrap.iter().position(|&w| w > config.wrap_threshold);
    let t_wrap = wrap_index.map(|k| series.times[k]);
    // the window stops at the last clean record
    let t_max = match wrap_index {
        Some(0) => 0.0,
        Some(k) => series.times[k - 1],
        None => series.times.last().copied().unwrap_or(0.0),
    };
    let window = FitWindow {
        t_min: config.t_min,
        t_max,
        t_wrap,
    };
    if let Some(tw) = t_wrap {
        warnings.push(format!("wraparound estimate exceeded {} at t = {tw}", config.wrap_threshold));
    }

    let base = -(dim as f64) / 4.0;
    let mut targets: Vec<(String, f64)> = vec![("L2".into(), base)];
    targets.extend(
        config
            .lambda_orders
            .iter()
            .map(|&l| (order_label("Lambda", l), base - l / 2.0)),
    );
    targets.push(("Hs2".into(), base));
    targets.extend(
        config
            .low_orders
            .iter()
            .map(|&l| (order_label("low_Lambda", l), base - l / 2.0)),
    );
    let fits: Vec<NormFit> = targets
        .into_iter()
        .map(|(name, expected)| {
            let tolerance = config.tolerance_for(&name);
            let values = series.column(&name).expect("tracked column");
            match fit_exponent(&series.times, values, (window.t_min, window.t_max)) {
                Ok(fit) => NormFit {
                    verdict: (fit.slope - expected).abs() <= tolerance,
                    name,
                    expected,
                    fitted: Some(fit.slope),
                    stderr: Some(fit.stderr),
                    samples: fit.samples,
                    tolerance,
                    error: None,
                },
                Err(e) => NormFit {
                    name,
                    expected,
                    fitted: None,
                    stderr: None,
                    samples: 0,
                    tolerance,
                    verdict: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let l1_col = series.column("L1").unwrap_or(&[]);
    let l1_0 = l1_col.first().copied().unwrap_or(0.0);
    let sup_ratio = l1_col
        .iter()
        .zip(&series.times)
        .filter(|(_, &t)| t <= window.t_max)
        .map(|(v, _)| v / l1_0)
        .fold(0.0, f64::max);
    let l1 = L1Check {
        sup_ratio,
        bound: config.l1_bound,
        verdict: sup_ratio <= config.l1_bound,
    };

    let residual = energy_identity_residual(&traj.records);
    let energy = EnergyCheck {
        final_residual: residual.last().copied().unwrap_or(0.0),
        max_residual: residual.iter().copied().fold(0.0, f64::max),
        hs2_non_increasing: traj.hs2_increases.is_empty(),
    };

    let hypotheses: Vec<String> = model
        .decay_hypothesis_violations(dim)
        .into_iter()
        .map(|v| v.message)
        .collect();
    let complete = run.failure.is_none();
    let passed = complete && fits.iter().all(|f| f.verdict) && l1.verdict;
    let report = DecayReport {
        id: config.id.clone(),
        parameters: DecayParameters {
            n: dim,
            s1: model.s1,
            s2: model.s2,
            theta: model.theta,
            s: config.regularity,
            mu,
            flux_coefficient: model.flux_coefficient,
            points: grid.points(),
            extent: grid.extent(),
            dt: config.solver.dt,
            t_final: config.solver.t_final,
        },
        exploratory: !hypotheses.is_empty(),
        hypotheses,
        window,
        fits,
        l1,
        energy,
        complete,
        failure: run.failure.map(|e| e.to_string()),
        warnings,
        passed,
    };
    Ok((report, series))
}

/// Independent experiments in parallel; results keep the input order.
pub fn run_decay_sweep(configs: &[DecayConfig]) -> Vec<Result<(DecayReport, DecaySeries)>> {
    configs.par_iter().map(run_decay_experiment).collect()
}
