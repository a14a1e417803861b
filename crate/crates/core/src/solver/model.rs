use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of
/// `u_t - Delta (I - Delta)^{-s1} u = -div (I - Delta)^{-s2} (u^{theta+1} b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub s1: f64,
    pub s2: f64,
    pub theta: u32,
    /// Unit flux direction `b`, one entry per dimension.
    pub flux_dir: Vec<f64>,
    /// Multiplies the flux term; 0 gives the linear flow.
    pub flux_coefficient: f64,
}

/// A model hypothesis that does not hold for a parameter set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisViolation {
    /// Short form of the violated condition, e.g. `s2>s1`.
    pub condition: String,
    pub message: String,
}

impl ModelParams {
    /// Flux along the first axis with unit coefficient.
    pub fn new(dim: usize, s1: f64, s2: f64, theta: u32) -> Result<Self> {
        let mut flux_dir = vec![0.0; dim];
        if let Some(first) = flux_dir.first_mut() {
            *first = 1.0;
        }
        let m = ModelParams {
            s1,
            s2,
            theta,
            flux_dir,
            flux_coefficient: 1.0,
        };
        m.validate(dim)?;
        Ok(m)
    }

    pub fn with_flux_dir(mut self, b: Vec<f64>) -> Result<Self> {
        let dim = b.len();
        self.flux_dir = b;
        self.validate(dim)?;
        Ok(self)
    }

    pub fn with_flux_coefficient(mut self, c: f64) -> Result<Self> {
        self.flux_coefficient = c;
        self.validate(self.flux_dir.len())?;
        Ok(self)
    }

    pub fn linear(self) -> Self {
        ModelParams {
            flux_coefficient: 0.0,
            ..self
        }
    }

    pub fn is_linear(&self) -> bool {
        self.flux_coefficient == 0.0
    }

    /// Structural checks; hypotheses of the analysis are reported separately
    /// by [`ModelParams::hypothesis_violations`].
    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.s1 >= 0.0 && self.s1.is_finite()) {
            return Err(Error::param("s1", format!("need finite s1 >= 0, got {}", self.s1)));
        }
        if !self.s2.is_finite() {
            return Err(Error::param("s2", format!("need finite s2, got {}", self.s2)));
        }
        if self.theta == 0 {
            return Err(Error::param("theta", "need an integer theta >= 1".to_string()));
        }
        if self.flux_dir.len() != dim {
            return Err(Error::param(
                "flux_dir",
                format!("expected {dim} components, got {}", self.flux_dir.len()),
            ));
        }
        let norm = self.flux_dir.iter().map(|b| b * b).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(Error::param(
                "flux_dir",
                format!("flux direction must be a unit vector, |b| = {norm}"),
            ));
        }
        if !self.flux_coefficient.is_finite() {
            return Err(Error::param("flux_coefficient", "must be finite".to_string()));
        }
        Ok(())
    }

    /// `theta0 = 2 (1 + 2 (s2 - s1)) / (n - 2 s2)` when `n > 2 s2`; `None`
    /// when the growth exponent is unconstrained.
    pub fn theta_max(&self, dim: usize) -> Option<f64> {
        let n = dim as f64;
        (n > 2.0 * self.s2).then(|| 2.0 * (1.0 + 2.0 * (self.s2 - self.s1)) / (n - 2.0 * self.s2))
    }

    /// Violations of `s2 > s1` and `theta <= theta0`.
    pub fn hypothesis_violations(&self, dim: usize) -> Vec<HypothesisViolation> {
        let mut out = Vec::new();
        if self.s2 <= self.s1 {
            out.push(HypothesisViolation {
                condition: "s2>s1".into(),
                message: format!(
                    "violates s2>s1 (global existence hypothesis): s2 = {} <= s1 = {}",
                    self.s2, self.s1
                ),
            });
        }
        if let Some(theta0) = self.theta_max(dim) {
            if self.theta as f64 > theta0 {
                out.push(HypothesisViolation {
                    condition: "theta<=theta0".into(),
                    message: format!(
                        "violates theta<=theta0 (growth bound of the nonlinearity): theta = {} > theta0 = 2(1+2(s2-s1))/(n-2s2) = {:.4}",
                        self.theta, theta0
                    ),
                });
            }
        }
        out
    }

    /// [`ModelParams::hypothesis_violations`] plus the conditions the decay
    /// rates rely on: `s1 < 1` and `n > 2`.
    pub fn decay_hypothesis_violations(&self, dim: usize) -> Vec<HypothesisViolation> {
        let mut out = self.hypothesis_violations(dim);
        if self.s1 >= 1.0 {
            out.push(HypothesisViolation {
                condition: "s1<1".into(),
                message: format!(
                    "violates s1<1 (decay rates are stated for the regularity-gain regime): s1 = {}",
                    self.s1
                ),
            });
        }
        if dim <= 2 {
            out.push(HypothesisViolation {
                condition: "n>2".into(),
                message: format!(
                    "below the n>2 hypothesis of the decay rate (n = {dim}): consistency probe"
                ),
            });
        }
        out
    }
}
