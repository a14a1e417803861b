//! Empirical checks of interpolation, Gagliardo-Nirenberg and product
//! inequalities on grid fields, plus a seeded suite that runs them over a
//! family of random fields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::grid::Grid;
use crate::norms::{equivalence_constants, hom_sobolev_norm, lp_norm, sobolev_norm};
use crate::random::BandLimitedSampler;
use crate::symbols::abs_power;

/// `lhs`, `rhs` and `lhs / rhs` of one inequality instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl RatioReport {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs == 0.0 {
            if lhs == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            lhs / rhs
        };
        RatioReport { lhs, rhs, ratio }
    }

    /// `lhs <= rhs (1 + slack)`.
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + slack)
    }
}

/// Frequency set over which the spectral sums of [`check_interpolation`] run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyRegion {
    All,
    /// `|xi| <= radius`
    Ball { radius: f64 },
    /// `inner < |xi| <= outer`
    Annulus { inner: f64, outer: f64 },
    /// `|xi| > radius`
    Exterior { radius: f64 },
}

impl FrequencyRegion {
    pub fn contains(&self, xi_sq: f64) -> bool {
        match *self {
            FrequencyRegion::All => true,
            FrequencyRegion::Ball { radius } => xi_sq <= radius * radius,
            FrequencyRegion::Annulus { inner, outer } => {
                xi_sq > inner * inner && xi_sq <= outer * outer
            }
            FrequencyRegion::Exterior { radius } => xi_sq > radius * radius,
        }
    }
}

/// Hoelder interpolation of weighted spectral sums over `region`:
/// `sum_D |xi|^{2 r1} |F|^2 <= (sum_D |xi|^{2 r2} |F|^2)^a (sum_D |F|^2)^{1-a}`
/// with `a = r1 / r2`.
pub fn check_interpolation(
    spec: &SpectralField,
    r1: f64,
    r2: f64,
    region: FrequencyRegion,
) -> Result<RatioReport> {
    if !(r1 > 0.0) {
        return Err(Error::param("r1", format!("need r1 > 0, got {r1}")));
    }
    if !(r2 >= r1 && r2.is_finite()) {
        return Err(Error::param("r2", format!("need finite r2 >= r1, got {r2}")));
    }
    let a = r1 / r2;
    let masked = |w: &dyn Fn(f64) -> f64| {
        spec.weighted_sum(|xs| if region.contains(xs) { w(xs) } else { 0.0 })
    };
    let lhs = masked(&|xs| abs_power(xs, 2.0 * r1));
    let top = masked(&|xs| abs_power(xs, 2.0 * r2));
    let base = masked(&|_| 1.0);
    Ok(RatioReport::new(lhs, top.powf(a) * base.powf(1.0 - a)))
}

/// Exponents of `|D^j u|_{L^p} <= C |D^m u|_{L^r}^a |u|_{L^q}^{1-a}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnExponents {
    pub j: u32,
    pub m: u32,
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GnReport {
    /// Interpolation parameter fixed by dimensional balance.
    pub a: f64,
    #[serde(flatten)]
    pub report: RatioReport,
}

impl GnExponents {
    /// Solves `1/p = j/n + a (1/r - m/n) + (1 - a)/q` for `a` and checks that
    /// it is admissible: `j/m <= a <= 1`, with `a = 1` excluded when
    /// `m - j - n/r` is a non-negative integer.
    pub fn admissible_a(&self, dim: usize) -> Result<f64> {
        for (name, v) in [("p", self.p), ("q", self.q), ("r", self.r)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::param(name, format!("need an exponent in [1, inf], got {v}")));
            }
        }
        if self.j > self.m {
            return Err(Error::param("j", format!("need j <= m, got j={} m={}", self.j, self.m)));
        }
        let n = dim as f64;
        let (j, m) = (self.j as f64, self.m as f64);
        let num = 1.0 / self.p - j / n - 1.0 / self.q;
        let den = 1.0 / self.r - m / n - 1.0 / self.q;
        if den.abs() < 1e-14 {
            return Err(Error::param(
                "exponents",
                "dimensional balance does not determine a".to_string(),
            ));
        }
        let a = num / den;
        let lower = if self.m == 0 { 0.0 } else { j / m };
        if a < lower - 1e-12 || a > 1.0 + 1e-12 {
            return Err(Error::param(
                "exponents",
                format!("balance gives a = {a}, outside [{lower}, 1]"),
            ));
        }
        let gap = m - j - n / self.r;
        let gap_is_integer = gap >= -1e-12 && (gap - gap.round()).abs() < 1e-12;
        if (a - 1.0).abs() < 1e-12 && gap_is_integer {
            return Err(Error::param(
                "exponents",
                format!("a = 1 is excluded when m - j - n/r = {gap} is a non-negative integer"),
            ));
        }
        Ok(a.clamp(lower, 1.0))
    }
}

/// Pointwise `|D^j u| = (sum over ordered j-tuples of axes |d^alpha u|^2)^{1/2}`.
pub fn derivative_magnitude(u: &Field, order: u32) -> Result<Field> {
    if order == 0 {
        return u.try_map(f64::abs);
    }
    let dim = u.grid().dim();
    let mut layer = vec![u.forward()];
    for _ in 0..order {
        let mut next = Vec::with_capacity(layer.len() * dim);
        for spec in &layer {
            for axis in 0..dim {
                next.push(spec.derivative(axis)?);
            }
        }
        layer = next;
    }
    let mut sq = vec![0.0; u.grid().len()];
    for spec in &layer {
        for (acc, v) in sq.iter_mut().zip(spec.inverse().values()) {
            *acc += v * v;
        }
    }
    Field::new(u.grid(), sq.into_iter().map(f64::sqrt).collect())
}

pub fn check_gagliardo_nirenberg(u: &Field, e: GnExponents) -> Result<GnReport> {
    let a = e.admissible_a(u.grid().dim())?;
    let lhs = lp_norm(&derivative_magnitude(u, e.j)?, e.p)?.value;
    let top = lp_norm(&derivative_magnitude(u, e.m)?, e.r)?.value;
    let base = lp_norm(u, e.q)?.value;
    Ok(GnReport {
        a,
        report: RatioReport::new(lhs, top.powf(a) * base.powf(1.0 - a)),
    })
}

/// Exponents with `1/r = 1/p1 + 1/q1 = 1/p2 + 1/q2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductExponents {
    pub r: f64,
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
}

impl ProductExponents {
    /// `(r, p1, q1, p2, q2) = (2, inf, 2, 2, inf)`.
    pub fn l2_linf() -> Self {
        ProductExponents {
            r: 2.0,
            p1: f64::INFINITY,
            q1: 2.0,
            p2: 2.0,
            q2: f64::INFINITY,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r", self.r),
            ("p1", self.p1),
            ("q1", self.q1),
            ("p2", self.p2),
            ("q2", self.q2),
        ] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::param(name, format!("need an exponent in [1, inf], got {v}")));
            }
        }
        let inv_r = 1.0 / self.r;
        if (1.0 / self.p1 + 1.0 / self.q1 - inv_r).abs() > 1e-12
            || (1.0 / self.p2 + 1.0 / self.q2 - inv_r).abs() > 1e-12
        {
            return Err(Error::param(
                "exponents",
                "need 1/r = 1/p1 + 1/q1 = 1/p2 + 1/q2".to_string(),
            ));
        }
        Ok(())
    }
}

fn lambda(f: &Field, l: f64) -> Result<Field> {
    Ok(f.forward().lambda_power(l)?.inverse())
}

/// `|Lambda^l (g h)|_{L^r}` against
/// `|g|_{L^p1} |Lambda^l h|_{L^q1} + |Lambda^l g|_{L^p2} |h|_{L^q2}`.
/// The product is formed on the grid, so `g` and `h` should be band-limited
/// to `N/4` for it to be alias-free.
pub fn check_product_estimate(
    g: &Field,
    h: &Field,
    l: f64,
    e: ProductExponents,
) -> Result<RatioReport> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::param("l", format!("need l > 0, got {l}")));
    }
    e.validate()?;
    let lhs = lp_norm(&lambda(&g.mul(h)?, l)?, e.r)?.value;
    let rhs = lp_norm(g, e.p1)?.value * lp_norm(&lambda(h, l)?, e.q1)?.value
        + lp_norm(&lambda(g, l)?, e.p2)?.value * lp_norm(h, e.q2)?.value;
    Ok(RatioReport::new(lhs, rhs))
}

/// `|Lambda^l u^{theta+1}|_{L^2}` against
/// `|Lambda^l u|_{L^2} (|u^theta|_{L^inf} + |u|_{L^inf}^theta)`.
pub fn check_power_estimate(u: &Field, l: f64, theta: u32) -> Result<RatioReport> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::param("l", format!("need l > 0, got {l}")));
    }
    if theta == 0 {
        return Err(Error::param("theta", "need theta >= 1".to_string()));
    }
    let power = u.try_map(|v| v.powi(theta as i32 + 1))?;
    let u_theta = u.try_map(|v| v.powi(theta as i32))?;
    let lhs = lp_norm(&lambda(&power, l)?, 2.0)?.value;
    let sup = u.max_abs();
    let rhs = lp_norm(&lambda(u, l)?, 2.0)?.value * (u_theta.max_abs() + sup.powi(theta as i32));
    Ok(RatioReport::new(lhs, rhs))
}

/// Parameters of the random-field inequality suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InequalitySuiteConfig {
    pub dim: usize,
    pub points: usize,
    pub extent: f64,
    pub fields: usize,
    pub seed: u64,
    pub interpolation: (f64, f64),
    pub equivalence_orders: Vec<f64>,
    pub product_order: f64,
    pub product_exponents: ProductExponents,
    pub theta: u32,
}

impl Default for InequalitySuiteConfig {
    fn default() -> Self {
        InequalitySuiteConfig {
            dim: 1,
            points: 256,
            extent: 16.0 * std::f64::consts::PI,
            fields: 1000,
            seed: 7,
            interpolation: (0.5, 2.0),
            equivalence_orders: vec![0.5, 1.0, 2.0],
            product_order: 1.0,
            product_exponents: ProductExponents::l2_linf(),
            theta: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantStats {
    pub min: f64,
    pub max: f64,
    /// `max / min`
    pub spread: f64,
}

impl ConstantStats {
    fn from_ratios(ratios: impl Iterator<Item = f64>) -> Self {
        let (min, max) = ratios.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        ConstantStats {
            min,
            max,
            spread: max / min,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRecord {
    pub s: f64,
    pub c0: f64,
    pub c1: f64,
    /// Extremes of `|f|_{H^s}^2 / (|f|_{L^2}^2 + |f|_{\dot H^s}^2)` over the family.
    pub observed: ConstantStats,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalitySummary {
    pub fields: usize,
    pub seed: u64,
    pub interpolation_checks: usize,
    pub interpolation_violations: usize,
    pub interpolation_max_ratio: f64,
    pub equivalence: Vec<EquivalenceRecord>,
    /// One-dimensional runs only.
    pub agmon: Option<ConstantStats>,
    pub agmon_violations: usize,
    pub product: ConstantStats,
    pub power: ConstantStats,
}

impl InequalitySummary {
    pub fn violations(&self) -> usize {
        self.interpolation_violations
            + self.agmon_violations
            + self.equivalence.iter().map(|e| e.violations).sum::<usize>()
    }
}

const SLACK: f64 = 1e-12;

struct FieldOutcome {
    interpolation: Vec<RatioReport>,
    equivalence: Vec<f64>,
    agmon: Option<RatioReport>,
    product: RatioReport,
    power: RatioReport,
}

/// Runs every check over `config.fields` seeded fields. Fields are drawn
/// sequentially and evaluated in parallel; reductions run in draw order.
pub fn run_inequality_suite(config: &InequalitySuiteConfig) -> Result<InequalitySummary> {
    let grid = Grid::new(config.dim, config.points, config.extent)?;
    let n = config.points;
    let mut pair_sampler = BandLimitedSampler::new(&grid, n / 4, config.seed)?;
    let power_band = (n / (2 * (config.theta as usize + 1))).max(1);
    let mut power_sampler =
        BandLimitedSampler::new(&grid, power_band, config.seed.wrapping_add(1))?;
    let draws: Vec<(Field, Field, Field)> = (0..config.fields)
        .map(|_| (pair_sampler.sample(), pair_sampler.sample(), power_sampler.sample()))
        .collect();

    let (r1, r2) = config.interpolation;
    let kmax = std::f64::consts::PI * n as f64 / config.extent;
    let regions = [
        FrequencyRegion::All,
        FrequencyRegion::Ball { radius: 0.25 * kmax },
        FrequencyRegion::Annulus {
            inner: 0.1 * kmax,
            outer: 0.3 * kmax,
        },
        FrequencyRegion::Exterior { radius: 0.2 * kmax },
    ];
    let agmon = GnExponents {
        j: 0,
        m: 1,
        p: f64::INFINITY,
        q: 2.0,
        r: 2.0,
    };

    let outcomes: Vec<FieldOutcome> = draws
        .par_iter()
        .map(|(g, h, u)| -> Result<FieldOutcome> {
            let spec = g.forward();
            let interpolation = regions
                .iter()
                .map(|&region| check_interpolation(&spec, r1, r2, region))
                .collect::<Result<Vec<_>>>()?;
            let l2 = sobolev_norm(&spec, 0.0).value.powi(2);
            let equivalence = config
                .equivalence_orders
                .iter()
                .map(|&s| {
                    let full = sobolev_norm(&spec, s).value.powi(2);
                    let hom = hom_sobolev_norm(&spec, s)?.value.powi(2);
                    Ok(full / (l2 + hom))
                })
                .collect::<Result<Vec<_>>>()?;
            let agmon = if config.dim == 1 {
                Some(check_gagliardo_nirenberg(g, agmon)?.report)
            } else {
                None
            };
            Ok(FieldOutcome {
                interpolation,
                equivalence,
                agmon,
                product: check_product_estimate(
                    g,
                    h,
                    config.product_order,
                    config.product_exponents,
                )?,
                power: check_power_estimate(u, config.product_order, config.theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let all_interp = || outcomes.iter().flat_map(|o| o.interpolation.iter());
    let equivalence = config
        .equivalence_orders
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let (c0, c1) = equivalence_constants(s);
            let ratios = || outcomes.iter().map(move |o| o.equivalence[i]);
            EquivalenceRecord {
                s,
                c0,
                c1,
                observed: ConstantStats::from_ratios(ratios()),
                violations: ratios()
                    .filter(|&q| q < c0 * (1.0 - SLACK) || q > c1 * (1.0 + SLACK))
                    .count(),
            }
        })
        .collect();
    let agmon_reports: Vec<RatioReport> = outcomes.iter().filter_map(|o| o.agmon).collect();

    Ok(InequalitySummary {
        fields: config.fields,
        seed: config.seed,
        interpolation_checks: all_interp().count(),
        interpolation_violations: all_interp().filter(|r| !r.holds(SLACK)).count(),
        interpolation_max_ratio: all_interp().fold(0.0, |m, r| m.max(r.ratio)),
        equivalence,
        agmon_violations: agmon_reports.iter().filter(|r| !r.holds(SLACK)).count(),
        agmon: (!agmon_reports.is_empty())
            .then(|| ConstantStats::from_ratios(agmon_reports.iter().map(|r| r.ratio))),
        product: ConstantStats::from_ratios(outcomes.iter().map(|o| o.product.ratio)),
        power: ConstantStats::from_ratios(outcomes.iter().map(|o| o.power.ratio)),
    })
}
