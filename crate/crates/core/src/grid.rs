//! Periodic uniform lattices on `[-L, L)^d` and real fields sampled on them.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic lattice with `n` points per axis on `[-L, L)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {n} must be a power of two >= 8"
            )));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid(format!("half-width {half_width} must be positive")));
        }
        Ok(Self { dim, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// Quadrature weight `h^d` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of index `j` along any axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Wavenumbers in FFT storage order: `k = pi m / L` with
    /// `m = 0, 1, .., n/2 - 1, -n/2, .., -1`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as isize;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j } else { j - n };
                PI * m as f64 / self.half_width
            })
            .collect()
    }

    /// `|k|^2` for every storage slot of the d-dimensional spectrum.
    pub fn k_squared(&self) -> Vec<f64> {
        let k = self.wavenumbers();
        match self.dim {
            1 => k.iter().map(|v| v * v).collect(),
            _ => {
                let mut out = Vec::with_capacity(self.len());
                for ki in &k {
                    for kj in &k {
                        out.push(ki * ki + kj * kj);
                    }
                }
                out
            }
        }
    }

    /// Physical point of flat index `idx` (row-major, last axis fastest).
    /// The second component is 0 in one dimension.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(idx), 0.0],
            _ => [self.coord(idx / self.n), self.coord(idx % self.n)],
        }
    }

    /// Squared radius `|x|^2` at every sample.
    pub fn radius_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let p = self.point(i);
                p[0] * p[0] + p[1] * p[1]
            })
            .collect()
    }

    /// The same lattice with every coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.dim, self.n, self.half_width * factor)
    }
}

/// Real samples on a [`Grid`], row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite sample at index {bad}")));
        }
        Ok(Self { grid, values })
    }

    /// Values already known to be finite and of the right length.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(x)` at every grid point; `x` has `dim` components.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..d])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    fn assert_same_grid(&self, other: &Field) {
        assert!(
            self.grid == other.grid,
            "fields live on different grids: {:?} vs {:?}",
            self.grid,
            other.grid
        );
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Field) -> Self {
        self.assert_same_grid(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + alpha * b).collect();
        Self { grid: self.grid, values }
    }

    pub fn add(&self, other: &Field) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Self {
        self.axpy(-1.0, other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Self {
        self.assert_same_grid(other);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Self { grid: self.grid, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Reflection `x -> -x` on every axis (exact on the periodic lattice).
    pub fn reflected(&self) -> Self {
        let n = self.grid.n();
        let flip = |j: usize| (n - j) % n;
        let values = match self.grid.dim() {
            1 => (0..n).map(|j| self.values[flip(j)]).collect(),
            _ => {
                let mut out = vec![0.0; self.values.len()];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = self.values[flip(i) * n + flip(j)];
                    }
                }
                out
            }
        };
        Self { grid: self.grid, values }
    }

    /// Index of the sample closest to the origin.
    pub fn origin_index(&self) -> usize {
        let n = self.grid.n();
        match self.grid.dim() {
            1 => n / 2,
            _ => (n / 2) * n + n / 2,
        }
    }

    /// Same samples attached to another lattice with identical shape.
    pub fn with_grid(self, grid: Grid) -> Result<Self> {
        if grid.len() != self.grid.len() || grid.dim() != self.grid.dim() {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", grid, self.grid)));
        }
        Ok(Self { grid, values: self.values })
    }
}
