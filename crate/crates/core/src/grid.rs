//! Periodic box discretization and its Fourier lattice.
//!
//! The box is `[-L/2, L/2)^n` sampled at `x_j = -L/2 + j h`, `h = L/N`.
//! Samples are stored row-major (last axis fastest). Along each axis the
//! lattice index `j` maps to the signed wavenumber `k = j` for `j < N/2` and
//! `k = j - N` otherwise, so `k` runs over `-N/2 ..= N/2 - 1` and the
//! frequency is `xi = 2 pi k / L`. The entry `k = -N/2` is the Nyquist row.
//!
//! Transform convention (fixed for the whole crate):
//!
//! ```text
//! forward:  F(xi_k) = sum_j f(x_j) exp(-i xi_k . x_j)
//! inverse:  f(x_j)  = N^{-n} sum_k F(xi_k) exp(+i xi_k . x_j)
//! ```
//!
//! Because the origin sits at the centre of the box, the forward transform is
//! the plain DFT times `(-1)^{j_1 + ... + j_n}`. A continuous Fourier
//! transform is approximated by `h^n F`, and the Parseval-matched spectral
//! quadrature weight is `h^n / N^n` (see [`Grid::spectral_weight`]).

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    points: usize,
    extent: f64,
    spacing: f64,
    len: usize,
    wavenumbers: Vec<f64>,
    signed: Vec<i64>,
    xi_sq: Vec<f64>,
    odd_parity: Vec<bool>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Grid {
    /// Builds an `n`-dimensional grid with `points` samples per axis on a box
    /// of side `extent`.
    pub fn new(dim: usize, points: usize, extent: f64) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be even and at least 8, got {points}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive and finite, got {extent}"
            )));
        }

        let len = points.pow(dim as u32);
        let signed: Vec<i64> = (0..points)
            .map(|j| {
                let j = j as i64;
                if j < points as i64 / 2 {
                    j
                } else {
                    j - points as i64
                }
            })
            .collect();
        let wavenumbers: Vec<f64> = signed
            .iter()
            .map(|&k| 2.0 * std::f64::consts::PI * k as f64 / extent)
            .collect();

        let mut xi_sq = vec![0.0; len];
        let mut odd_parity = vec![false; len];
        for flat in 0..len {
            let idx = unflatten(flat, dim, points);
            xi_sq[flat] = idx[..dim].iter().map(|&j| wavenumbers[j].powi(2)).sum();
            odd_parity[flat] = idx[..dim].iter().sum::<usize>() % 2 == 1;
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);

        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                points,
                extent,
                spacing: extent / points as f64,
                len,
                wavenumbers,
                signed,
                xi_sq,
                odd_parity,
                forward,
                inverse,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Samples per axis.
    pub fn points(&self) -> usize {
        self.inner.points
    }

    pub fn extent(&self) -> f64 {
        self.inner.extent
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Total number of samples, `N^n`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^n` for physical-space integrals.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.powi(self.inner.dim as i32)
    }

    /// Box volume `L^n`.
    pub fn volume(&self) -> f64 {
        self.inner.extent.powi(self.inner.dim as i32)
    }

    /// Spectral weight `h^n / N^n` making `sum |F|^2 w` equal the physical `L^2` norm squared.
    pub fn spectral_weight(&self) -> f64 {
        self.cell_volume() / self.inner.len as f64
    }

    /// Signed wavenumber index `k` for a 1-D lattice position.
    pub fn signed_index(&self, j: usize) -> i64 {
        self.inner.signed[j]
    }

    /// Angular frequency `2 pi k / L` for a 1-D lattice position.
    pub fn wavenumber(&self, j: usize) -> f64 {
        self.inner.wavenumbers[j]
    }

    /// The 1-D frequencies in storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// `|xi|^2` for every lattice point, in storage order.
    pub fn xi_sq(&self) -> &[f64] {
        &self.inner.xi_sq
    }

    /// Per-axis lattice positions of a flat index (unused axes are zero).
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        unflatten(flat, self.inner.dim, self.inner.points)
    }

    /// Frequency vector at a flat index (unused axes are zero).
    pub fn xi(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut out = [0.0; MAX_DIM];
        for a in 0..self.inner.dim {
            out[a] = self.inner.wavenumbers[idx[a]];
        }
        out
    }

    /// Signed wavenumber indices at a flat index.
    pub fn k(&self, flat: usize) -> [i64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut out = [0; MAX_DIM];
        for a in 0..self.inner.dim {
            out[a] = self.inner.signed[idx[a]];
        }
        out
    }

    /// Physical coordinates at a flat index (unused axes are zero).
    pub fn position(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(flat);
        let mut out = [0.0; MAX_DIM];
        for a in 0..self.inner.dim {
            out[a] = self.coordinate(idx[a]);
        }
        out
    }

    /// 1-D coordinate `-L/2 + j h`.
    pub fn coordinate(&self, j: usize) -> f64 {
        -0.5 * self.inner.extent + j as f64 * self.inner.spacing
    }

    /// Euclidean distance of a sample from the origin.
    pub fn radius(&self, flat: usize) -> f64 {
        self.position(flat).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// True when any axis of the flat index sits on the Nyquist row.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let half = self.inner.points / 2;
        self.multi_index(flat)[..self.inner.dim].contains(&half)
    }

    /// Flat index of the lattice point mirrored through the origin, if it is
    /// on the lattice (the Nyquist row has no mirror).
    pub fn mirror(&self, flat: usize) -> Option<usize> {
        if self.is_nyquist(flat) {
            return None;
        }
        let n = self.inner.points;
        let idx = self.multi_index(flat);
        let mut out = 0;
        for &j in idx[..self.inner.dim].iter() {
            out = out * n + (n - j) % n;
        }
        Some(out)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.points == other.inner.points
                && self.inner.extent == other.inner.extent)
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Forward transform in place (centred-origin convention, no scaling).
    pub(crate) fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform_axes(data, &self.inner.forward);
        self.apply_centering(data);
    }

    /// Inverse transform in place, including the `N^{-n}` factor.
    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.apply_centering(data);
        self.transform_axes(data, &self.inner.inverse);
        let scale = 1.0 / self.inner.len as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn apply_centering(&self, data: &mut [Complex64]) {
        for (c, &odd) in data.iter_mut().zip(&self.inner.odd_parity) {
            if odd {
                *c = -*c;
            }
        }
    }

    fn transform_axes(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.inner.points;
        let dim = self.inner.dim;
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

        // Last axis is contiguous: rustfft handles the batch directly.
        fft.process_with_scratch(data, &mut scratch);

        let mut line = vec![Complex64::default(); n];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        data[base + j * stride] = *value;
                    }
                }
            }
        }
    }
}

fn unflatten(mut flat: usize, dim: usize, points: usize) -> [usize; MAX_DIM] {
    let mut idx = [0; MAX_DIM];
    for a in (0..dim).rev() {
        idx[a] = flat % points;
        flat /= points;
    }
    idx
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("points", &self.inner.points)
            .field("extent", &self.inner.extent)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

/// Serializable shape of a [`Grid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub extent: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, self.points, self.extent)
    }
}

impl From<&Grid> for GridSpec {
    fn from(g: &Grid) -> Self {
        GridSpec {
            dim: g.dim(),
            points: g.points(),
            extent: g.extent(),
        }
    }
}
