//! Seeded band-limited random fields for property suites.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::grid::Grid;

/// Random fields whose Fourier coefficients are complex normals scaled by
/// `|xi|^{-(n+1)/2 - 1}` on `0 < max_j |k_j| <= band` and zero elsewhere.
/// The field is the real part of the inverse transform, so it has zero mean.
pub struct BandLimitedSampler {
    grid: Grid,
    amplitude: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BandLimitedSampler {
    pub fn new(grid: &Grid, band: usize, seed: u64) -> Result<Self> {
        if band == 0 || band > grid.points() / 2 {
            return Err(Error::param(
                "band",
                format!("band must lie in 1..={}, got {band}", grid.points() / 2),
            ));
        }
        let dim = grid.dim();
        let decay = -((dim as f64 + 1.0) / 2.0 + 1.0);
        let amplitude = (0..grid.len())
            .map(|flat| {
                let k = grid.k(flat);
                let kmax = k[..dim].iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
                if kmax == 0 || kmax as usize > band {
                    0.0
                } else {
                    grid.xi_sq()[flat].powf(decay / 2.0)
                }
            })
            .collect();
        Ok(BandLimitedSampler {
            grid: grid.clone(),
            amplitude,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn sample(&mut self) -> Field {
        let coeffs: Vec<Complex64> = self
            .amplitude
            .iter()
            .map(|&a| {
                let re: f64 = StandardNormal.sample(&mut self.rng);
                let im: f64 = StandardNormal.sample(&mut self.rng);
                Complex64::new(a * re, a * im)
            })
            .collect();
        SpectralField::new(&self.grid, coeffs)
            .expect("coefficient count matches grid")
            .inverse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field() {
        let g = Grid::new(2, 16, 10.0).unwrap();
        let a = BandLimitedSampler::new(&g, 4, 9).unwrap().sample();
        let b = BandLimitedSampler::new(&g, 4, 9).unwrap().sample();
        assert_eq!(a.values(), b.values());
        let c = BandLimitedSampler::new(&g, 4, 10).unwrap().sample();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn spectrum_stays_in_band() {
        let g = Grid::new(1, 64, 10.0).unwrap();
        let f = BandLimitedSampler::new(&g, 8, 1).unwrap().sample();
        let spec = f.forward();
        assert!(f.mean().abs() < 1e-14);
        for flat in 0..g.len() {
            if g.k(flat)[0].abs() > 8 {
                assert!(spec.coeffs()[flat].norm() < 1e-12);
            }
        }
        assert!(spec.is_hermitian(1e-12));
    }

    #[test]
    fn rejects_bad_band() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        assert!(BandLimitedSampler::new(&g, 0, 1).is_err());
        assert!(BandLimitedSampler::new(&g, 9, 1).is_err());
    }
}
