//! Scalar Fourier symbols shared by the linear operator, the nonlinearity and
//! the frequency cutoffs. All fractional powers go through `exp(p ln(.))`
//! with `ln_1p`, so nothing subtracts large terms.

/// Dissipation symbol `|xi|^2 / (1 + |xi|^2)^{s1}` of the linear operator.
pub fn sigma(xi_sq: f64, s1: f64) -> f64 {
    debug_assert!(xi_sq >= 0.0);
    if xi_sq == 0.0 {
        return 0.0;
    }
    xi_sq * (-s1 * xi_sq.ln_1p()).exp()
}

/// Bessel-potential symbol `(1 + |xi|^2)^{-s}`.
pub fn bessel(xi_sq: f64, s: f64) -> f64 {
    debug_assert!(xi_sq >= 0.0);
    (-s * xi_sq.ln_1p()).exp()
}

/// `|xi|^l` from `|xi|^2`, with the convention `0^0 = 1`.
pub fn abs_power(xi_sq: f64, l: f64) -> f64 {
    if l == 0.0 {
        1.0
    } else if xi_sq == 0.0 {
        0.0
    } else {
        (0.5 * l * xi_sq.ln()).exp()
    }
}

/// C-infinity ramp: 0 for `s <= 0`, 1 for `s >= 1`, and
/// `e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)})` in between.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let exponent = 1.0 / s - 1.0 / (1.0 - s);
        1.0 / (1.0 + exponent.exp())
    }
}
