//! Periodic-torus discretization, scalar fields and the norms the solver
//! estimates are stated in.
//!
//! The torus stands in for the whole space: it keeps the heat kernel
//! translation invariant and the propagators diagonal in Fourier space.
//! `dim` is restricted to 1 or 2.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Uniform periodic grid: `points` samples per axis over a box of side
/// `extent`, in one or two dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, extent: f64, points: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidParameter(format!("extent must be positive, got {extent}")));
        }
        if points < 8 || points % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "points must be even and at least 8, got {points}"
            )));
        }
        Ok(Self { dim, extent, points })
    }

    pub fn new_1d(extent: f64, points: usize) -> Result<Self> {
        Self::new(1, extent, points)
    }

    pub fn new_2d(extent: f64, points: usize) -> Result<Self> {
        Self::new(2, extent, points)
    }

    /// Grid spacing per axis.
    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    /// Total number of sample points.
    pub fn len(&self) -> usize {
        match self.dim {
            1 => self.points,
            _ => self.points * self.points,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical coordinate of index `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }
}

/// Scalar samples on a [`GridSpec`]. Values are row-major for 2-D grids.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    /// Wrap raw values; length must match the grid and all entries be finite.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        let f = Self { grid, values };
        f.check_finite("from_values", None)?;
        Ok(f)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.len()])
    }

    /// Independent uniform draws in `[lo, hi]`.
    pub fn random_uniform<R: Rng>(grid: GridSpec, lo: f64, hi: f64, rng: &mut R) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidParameter(format!("lo {lo} > hi {hi}")));
        }
        let values = (0..grid.len()).map(|_| rng.gen_range(lo..=hi)).collect();
        Self::from_values(grid, values)
    }

    /// `baseline + amplitude * exp(-d^2 / (2 width^2))` with `d` the periodic
    /// distance from `center` (same center coordinate on every axis).
    pub fn gaussian_bump(
        grid: GridSpec,
        center: f64,
        width: f64,
        amplitude: f64,
        baseline: f64,
    ) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!("bump width must be positive, got {width}")));
        }
        let l = grid.extent;
        let wrap = |x: f64| {
            let mut d = (x - center).abs() % l;
            if d > l / 2.0 {
                d = l - d;
            }
            d
        };
        let n = grid.points;
        let values = match grid.dim {
            1 => (0..n)
                .map(|i| {
                    let d = wrap(grid.coord(i));
                    baseline + amplitude * (-d * d / (2.0 * width * width)).exp()
                })
                .collect(),
            _ => {
                let mut v = Vec::with_capacity(n * n);
                for iy in 0..n {
                    let dy = wrap(grid.coord(iy));
                    for ix in 0..n {
                        let dx = wrap(grid.coord(ix));
                        let d2 = dx * dx + dy * dy;
                        v.push(baseline + amplitude * (-d2 / (2.0 * width * width)).exp());
                    }
                }
                v
            }
        };
        Self::from_values(grid, values)
    }

    /// `baseline + amplitude * sin(2 pi k x / L)` along the first axis.
    pub fn single_mode(grid: GridSpec, k: usize, amplitude: f64, baseline: f64) -> Result<Self> {
        let l = grid.extent;
        let n = grid.points;
        let omega = 2.0 * std::f64::consts::PI * k as f64 / l;
        let line: Vec<f64> = (0..n)
            .map(|i| baseline + amplitude * (omega * grid.coord(i)).sin())
            .collect();
        let values = match grid.dim {
            1 => line,
            _ => {
                let mut v = Vec::with_capacity(n * n);
                for _iy in 0..n {
                    v.extend_from_slice(&line);
                }
                v
            }
        };
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `ess sup |f|` restricted to the grid.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sup over grid points of the Euclidean norm of the centered-difference
    /// gradient. Centered differences keep the norm local and monotone under
    /// pointwise bounds; spectral derivatives stay internal to the solvers.
    pub fn grad_sup_norm(&self) -> f64 {
        let n = self.grid.points;
        let inv2h = 1.0 / (2.0 * self.grid.spacing());
        match self.grid.dim {
            1 => {
                let v = &self.values;
                let mut worst = 0.0f64;
                for i in 0..n {
                    let prev = v[(i + n - 1) % n];
                    let next = v[(i + 1) % n];
                    worst = worst.max(((next - prev) * inv2h).abs());
                }
                worst
            }
            _ => {
                let v = &self.values;
                let mut worst = 0.0f64;
                for iy in 0..n {
                    let row = iy * n;
                    let up = ((iy + n - 1) % n) * n;
                    let down = ((iy + 1) % n) * n;
                    for ix in 0..n {
                        let gx = (v[row + (ix + 1) % n] - v[row + (ix + n - 1) % n]) * inv2h;
                        let gy = (v[down + ix] - v[up + ix]) * inv2h;
                        worst = worst.max((gx * gx + gy * gy).sqrt());
                    }
                }
                worst
            }
        }
    }

    /// Pointwise map, revalidating finiteness.
    pub fn map(&self, context: &'static str, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        let out = Self { grid: self.grid, values };
        out.check_finite(context, None)?;
        Ok(out)
    }

    /// Sup-norm distance between two fields on the same grid.
    pub fn sup_distance(&self, other: &Field) -> Result<f64> {
        self.assert_same_grid(other, "sup_distance")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn check_finite(&self, context: &'static str, step: Option<u64>) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { context, step })
        }
    }

    pub(crate) fn assert_same_grid(&self, other: &Field, context: &str) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{context}: {:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }
}

/// The pair (u, v) at one time instant.
#[derive(Clone, Debug)]
pub struct StatePair {
    pub u: Field,
    pub v: Field,
    pub time: f64,
}

impl StatePair {
    pub fn new(u: Field, v: Field, time: f64) -> Result<Self> {
        u.assert_same_grid(&v, "StatePair")?;
        if !(time >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be non-negative, got {time}")));
        }
        Ok(Self { u, v, time })
    }

    pub fn grid(&self) -> GridSpec {
        self.u.grid()
    }
}
