//! Real sample fields and their Fourier coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, MAX_DIM};

/// Real samples of a scalar function on a [`Grid`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients on the lattice of a [`Grid`], in storage order.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::param(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param("values", format!("sample {i} is not finite")));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Field {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every grid point. Panics if `f` returns a non-finite value.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|flat| {
                let x = grid.position(flat);
                let v = f(&x[..dim]);
                assert!(v.is_finite(), "sampled function is not finite at {x:?}");
                v
            })
            .collect();
        Field {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `sum f h^n`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn forward(&self) -> SpectralField {
        let mut coeffs: Vec<Complex64> =
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward_in_place(&mut coeffs);
        SpectralField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Pointwise map; rejects non-finite results.
    pub fn try_map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        Field::new(&self.grid, values)
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

impl SpectralField {
    pub fn new(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::param(
                "coeffs",
                format!("expected {} coefficients, got {}", grid.len(), coeffs.len()),
            ));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            coeffs,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// Spectrum whose every coefficient is `symbol(|xi|^2)`.
    pub fn from_radial(grid: &Grid, symbol: impl Fn(f64) -> f64) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: grid
                .xi_sq()
                .iter()
                .map(|&xs| Complex64::new(symbol(xs), 0.0))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Inverse transform, keeping the real part. For spectra with Hermitian
    /// symmetry the discarded imaginary part is round-off.
    pub fn inverse(&self) -> Field {
        let values = self.inverse_complex().into_iter().map(|c| c.re).collect();
        Field {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Inverse transform without discarding the imaginary part.
    pub fn inverse_complex(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        self.grid.inverse_in_place(&mut data);
        data
    }

    /// Largest `|Im|` of the inverse relative to the largest `|Re|`.
    pub fn imaginary_residue(&self) -> f64 {
        let data = self.inverse_complex();
        let re = data.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
        let im = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
        if re == 0.0 {
            im
        } else {
            im / re
        }
    }

    /// Mean of the physical field (the `xi = 0` coefficient over `N^n`).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re / self.grid.len() as f64
    }

    /// Multiplies every coefficient by `m(xi)`; rejects symbols that are not
    /// finite on the lattice.
    pub fn apply_multiplier(
        &self,
        m: impl Fn(&[f64; MAX_DIM]) -> Complex64,
    ) -> Result<SpectralField> {
        let mut coeffs = self.coeffs.clone();
        for (flat, c) in coeffs.iter_mut().enumerate() {
            let factor = m(&self.grid.xi(flat));
            if !(factor.re.is_finite() && factor.im.is_finite()) {
                return Err(Error::NonFiniteSymbol { index: flat });
            }
            *c *= factor;
        }
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs,
        })
    }

    /// Multiplies by a real radial symbol `m(|xi|^2)`.
    pub fn apply_radial(&self, m: impl Fn(f64) -> f64) -> Result<SpectralField> {
        let mut coeffs = self.coeffs.clone();
        for (flat, (c, &xs)) in coeffs.iter_mut().zip(self.grid.xi_sq()).enumerate() {
            let factor = m(xs);
            if !factor.is_finite() {
                return Err(Error::NonFiniteSymbol { index: flat });
            }
            *c *= factor;
        }
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs,
        })
    }

    /// `Lambda^l = (-Delta)^{l/2}`, i.e. multiplication by `|xi|^l`.
    pub fn lambda_power(&self, l: f64) -> Result<SpectralField> {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::param(
                "l",
                format!("homogeneous power must be finite and non-negative, got {l}"),
            ));
        }
        if l == 0.0 {
            return Ok(self.clone());
        }
        self.apply_radial(|xs| crate::symbols::abs_power(xs, l))
    }

    /// Zeroes every coefficient with some `|k_j| > rule * N / 2`.
    pub fn dealias(&self, rule: f64) -> Result<SpectralField> {
        let mask = DealiasMask::new(&self.grid, rule)?;
        let mut out = self.clone();
        mask.apply(&mut out.coeffs);
        Ok(out)
    }

    /// Spectral partial derivative along `axis` (multiplier `i xi_axis`). The
    /// Nyquist plane of that axis is zeroed so real fields stay real.
    pub fn derivative(&self, axis: usize) -> Result<SpectralField> {
        if axis >= self.grid.dim() {
            return Err(Error::param(
                "axis",
                format!("axis {axis} out of range for a {}-D grid", self.grid.dim()),
            ));
        }
        let half = self.grid.points() / 2;
        let mut out = self.clone();
        for (flat, c) in out.coeffs.iter_mut().enumerate() {
            if self.grid.multi_index(flat)[axis] == half {
                *c = Complex64::default();
            } else {
                *c *= Complex64::new(0.0, self.grid.xi(flat)[axis]);
            }
        }
        Ok(out)
    }

    /// Checks `F(-xi) = conj F(xi)` on every mirrored pair and that
    /// Nyquist-row coefficients are real, to `tol` relative to `max |F|`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.coeffs.len()).all(|flat| match self.grid.mirror(flat) {
            Some(m) => (self.coeffs[m] - self.coeffs[flat].conj()).norm() <= tol * scale,
            None => true,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Parseval-matched `L^2` norm: `(sum |F|^2 h^n / N^n)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        self.weighted_sum(|_| 1.0).sqrt()
    }

    /// `sum w(|xi|^2) |F|^2` times the spectral weight.
    pub fn weighted_sum(&self, w: impl Fn(f64) -> f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.grid.xi_sq())
            .map(|(c, &xs)| w(xs) * c.norm_sqr())
            .sum::<f64>()
            * self.grid.spectral_weight()
    }

    pub fn scaled(&self, c: f64) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product of spectra (composition of multipliers).
    pub fn mul(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(
        &self,
        other: &SpectralField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SpectralField> {
        self.grid.ensure_same(&other.grid)?;
        Ok(SpectralField {
            grid: self.grid.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Precomputed retained-band indicator for a truncation rule.
#[derive(Clone, Debug)]
pub struct DealiasMask {
    keep: Vec<bool>,
}

impl DealiasMask {
    pub fn new(grid: &Grid, rule: f64) -> Result<Self> {
        if !(rule > 0.0 && rule <= 1.0) {
            return Err(Error::param(
                "rule",
                format!("dealiasing fraction must lie in (0, 1], got {rule}"),
            ));
        }
        let limit = rule * grid.points() as f64 / 2.0;
        let dim = grid.dim();
        let keep = (0..grid.len())
            .map(|flat| {
                grid.k(flat)[..dim]
                    .iter()
                    .all(|&k| (k.unsigned_abs() as f64) <= limit)
            })
            .collect();
        Ok(DealiasMask { keep })
    }

    pub fn keeps(&self, flat: usize) -> bool {
        self.keep[flat]
    }

    pub fn apply(&self, coeffs: &mut [Complex64]) {
        for (c, &keep) in coeffs.iter_mut().zip(&self.keep) {
            if !keep {
                *c = Complex64::default();
            }
        }
    }
}

/// Band fraction that keeps `u^{theta+1}` free of aliasing onto retained
/// modes: `2 / (theta + 2)`, which is the usual 2/3 rule for `theta = 1`.
pub fn strict_dealias_rule(theta: u32) -> f64 {
    2.0 / (theta as f64 + 2.0)
}

/// Default truncation fraction.
pub const TWO_THIRDS: f64 = 2.0 / 3.0;
