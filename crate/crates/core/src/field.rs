//! Uniform cell-centered grids on a box-shaped domain and the fields living
//! on them.
//!
//! A grid with `n` cells along an axis of length `L` has spacing `h = L / n`
//! and its sample points sit at the cell centers `(i + 1/2) h`, strictly
//! inside the domain. Two-dimensional grids are stored row-major.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};

/// Maps an angle onto its canonical representative in `[0, 2π)`.
pub fn canonicalize_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::NonFinite(a));
    }
    Ok(wrap_2pi(a))
}

/// Infallible version for values already known to be finite.
#[inline]
pub(crate) fn wrap_2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    ndim: usize,
    shape: [usize; 2],
    extent: [f64; 2],
}

impl GridSpec {
    /// A one-dimensional grid of `n` cells on `(0, extent)`.
    pub fn line(n: usize, extent: f64) -> Result<Self> {
        Self::build(1, [n, 1], [extent, 1.0])
    }

    /// A `rows × cols` grid on `(0, extent[0]) × (0, extent[1])`.
    pub fn plane(rows: usize, cols: usize, extent: [f64; 2]) -> Result<Self> {
        Self::build(2, [rows, cols], extent)
    }

    /// Image convention: the row axis has unit length and the column axis is
    /// scaled by the aspect ratio, so both spacings equal `1 / rows`.
    pub fn image(rows: usize, cols: usize) -> Result<Self> {
        Self::plane(rows, cols, [1.0, cols as f64 / rows.max(1) as f64])
    }

    fn build(ndim: usize, shape: [usize; 2], extent: [f64; 2]) -> Result<Self> {
        for axis in 0..ndim {
            if shape[axis] < 2 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {} points, need at least 2",
                    shape[axis]
                )));
            }
            if !(extent[axis].is_finite() && extent[axis] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} extent {} must be positive",
                    extent[axis]
                )));
            }
        }
        Ok(Self {
            ndim,
            shape,
            extent,
        })
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// `(rows, cols)`; a 1D grid reports `(n, 1)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.shape[0], self.shape[1])
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.ndim]
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spacing along each axis.
    pub fn spacing(&self) -> [f64; 2] {
        let h0 = self.extent[0] / self.shape[0] as f64;
        let h1 = if self.ndim == 2 {
            self.extent[1] / self.shape[1] as f64
        } else {
            0.0
        };
        [h0, h1]
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        let h = self.spacing();
        h[0].max(h[1])
    }

    /// Volume of one cell, `h^N` on an isotropic grid.
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        if self.ndim == 1 {
            h[0]
        } else {
            h[0] * h[1]
        }
    }

    /// Total measure of the domain.
    pub fn volume(&self) -> f64 {
        self.extent().iter().product()
    }

    #[inline]
    pub fn row_col(&self, index: usize) -> (usize, usize) {
        (index / self.shape[1], index % self.shape[1])
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.shape[1] + col
    }

    /// Cell-center coordinates of grid point `index` (second entry is 0 in 1D).
    pub fn coords(&self, index: usize) -> [f64; 2] {
        let (r, c) = self.row_col(index);
        let h = self.spacing();
        [(r as f64 + 0.5) * h[0], (c as f64 + 0.5) * h[1]]
    }

    /// Distance from `index` to the nearest face of the domain.
    pub fn boundary_distance(&self, index: usize) -> f64 {
        let x = self.coords(index);
        (0..self.ndim)
            .map(|a| x[a].min(self.extent[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Euclidean distance between the cell centers of `i` and `j`.
    pub fn pair_distance(&self, i: usize, j: usize) -> Result<f64> {
        let len = self.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
        }
        let (ri, ci) = self.row_col(i);
        let (rj, cj) = self.row_col(j);
        let h = self.spacing();
        Ok(offset_length(
            rj as isize - ri as isize,
            cj as isize - ci as isize,
            h,
        ))
    }

    pub fn ensure_same(&self, other: &GridSpec, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }
}

#[inline]
pub(crate) fn offset_length(dr: isize, dc: isize, h: [f64; 2]) -> f64 {
    let a = dr as f64 * h[0];
    let b = dc as f64 * h[1];
    a.hypot(b)
}

/// Circle-valued samples on a grid, stored as angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl AngleField {
    /// Builds a field, canonicalizing every value.
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} points",
                values.len(),
                grid.len()
            )));
        }
        let values = values
            .into_iter()
            .map(canonicalize_angle)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, angle: f64) -> Result<Self> {
        let a = canonicalize_angle(angle)?;
        Ok(Self {
            grid,
            values: vec![a; grid.len()],
        })
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::new(grid, values)
    }

    /// Wraps values that are already canonical.
    pub(crate) fn from_canonical(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..TAU).contains(v)));
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Global rotation by `c` radians.
    pub fn rotated(&self, c: f64) -> Result<Self> {
        let c = canonicalize_angle(c)?;
        let values = self.values.iter().map(|&v| wrap_2pi(v + c)).collect();
        Ok(Self::from_canonical(self.grid, values))
    }
}

/// Marks which grid points carry observed data. `known[i] == false` puts
/// point `i` in the region to be inpainted.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    grid: GridSpec,
    known: Vec<bool>,
}

impl Mask {
    pub fn new(grid: GridSpec, known: Vec<bool>) -> Result<Self> {
        if known.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "mask has {} entries for a grid with {} points",
                known.len(),
                grid.len()
            )));
        }
        if !known.iter().any(|&k| k) {
            return Err(Error::InvalidMask("mask has no known points".into()));
        }
        Ok(Self { grid, known })
    }

    pub fn all_known(grid: GridSpec) -> Self {
        Self {
            grid,
            known: vec![true; grid.len()],
        }
    }

    /// Builds a mask from a predicate that is true on the unknown region.
    pub fn from_unknown(grid: GridSpec, mut unknown: impl FnMut(usize) -> bool) -> Result<Self> {
        let known = (0..grid.len()).map(|i| !unknown(i)).collect();
        Self::new(grid, known)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn known(&self) -> &[bool] {
        &self.known
    }

    #[inline]
    pub fn is_known(&self, i: usize) -> bool {
        self.known[i]
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    pub fn unknown_count(&self) -> usize {
        self.known.len() - self.known_count()
    }
}
