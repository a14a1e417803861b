//! Discrete Lebesgue and Sobolev norms.
//!
//! Physical norms use the quadrature weight `h^n`; spectral norms use the
//! Parseval-matched weight `h^n / N^n`, so `sobolev_norm(f.forward(), 0.0)`
//! and `lp_norm(&f, 2.0)` agree to round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::symbols::abs_power;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "order")]
pub enum NormKind {
    /// `L^p`, with `p = f64::INFINITY` for the sup norm.
    Lp(f64),
    /// Inhomogeneous `H^s`.
    Sobolev(f64),
    /// Homogeneous `\dot H^s`.
    HomSobolev(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub kind: NormKind,
    pub value: f64,
}

/// `(sum |f|^p h^n)^{1/p}`, or `max |f|` when `p` is infinite.
pub fn lp_norm(f: &Field, p: f64) -> Result<NormValue> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param("p", format!("need p >= 1, got {p}")));
    }
    let peak = f.max_abs();
    let value = if p.is_infinite() {
        peak
    } else if peak == 0.0 {
        0.0
    } else if p == 1.0 {
        f.values().iter().map(|v| v.abs()).sum::<f64>() * f.grid().cell_volume()
    } else if p == 2.0 {
        (f.values().iter().map(|v| v * v).sum::<f64>() * f.grid().cell_volume()).sqrt()
    } else {
        // scale by the peak so large p cannot overflow
        let sum: f64 = f.values().iter().map(|v| (v.abs() / peak).powf(p)).sum();
        peak * (sum * f.grid().cell_volume()).powf(1.0 / p)
    };
    Ok(NormValue {
        kind: NormKind::Lp(p),
        value,
    })
}

/// `(sum (1 + |xi|^2)^s |F|^2 w)^{1/2}` for any real `s`.
pub fn sobolev_norm(spec: &SpectralField, s: f64) -> NormValue {
    let value = if s == 0.0 {
        spec.weighted_sum(|_| 1.0)
    } else {
        spec.weighted_sum(|xs| (s * xs.ln_1p()).exp())
    }
    .sqrt();
    NormValue {
        kind: NormKind::Sobolev(s),
        value,
    }
}

/// `(sum |xi|^{2s} |F|^2 w)^{1/2}`; the mean mode drops out for `s > 0`.
pub fn hom_sobolev_norm(spec: &SpectralField, s: f64) -> Result<NormValue> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::param(
            "s",
            format!("homogeneous order must be finite and non-negative, got {s}"),
        ));
    }
    let value = spec.weighted_sum(|xs| abs_power(xs, 2.0 * s)).sqrt();
    Ok(NormValue {
        kind: NormKind::HomSobolev(s),
        value,
    })
}

/// Evaluates any [`NormKind`], transforming once if a spectral norm is asked for.
pub fn norm(f: &Field, kind: NormKind) -> Result<NormValue> {
    match kind {
        NormKind::Lp(p) => lp_norm(f, p),
        NormKind::Sobolev(s) => Ok(sobolev_norm(&f.forward(), s)),
        NormKind::HomSobolev(s) => hom_sobolev_norm(&f.forward(), s),
    }
}

/// Constants `(c0, c1)` with
/// `c0 (|f|_{L^2}^2 + |f|_{\dot H^s}^2) <= |f|_{H^s}^2 <= c1 (|f|_{L^2}^2 + |f|_{\dot H^s}^2)`,
/// the extreme values of `(1 + a)^s / (1 + a^s)` over `a >= 0`.
pub fn equivalence_constants(s: f64) -> (f64, f64) {
    let m = 2f64.powf(s - 1.0);
    (m.min(1.0), m.max(1.0))
}
