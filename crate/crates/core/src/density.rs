//! Evaluable one-dimensional probability densities and their sampled grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of grid points per fringe period when a density is tabulated.
pub const POINTS_PER_PERIOD: usize = 32;
/// Tabulation domain in envelope widths on either side of the density.
pub const GRID_WIDTHS: f64 = 8.0;

/// A normalized probability density on the real line.
pub trait Density: Sync {
    fn pdf(&self, x: f64) -> f64;

    /// Interval carrying all but a negligible part of the mass.
    fn support(&self) -> (f64, f64);

    /// Shortest length scale that a grid must resolve.
    fn resolution_scale(&self) -> f64;

    /// Tabulate on a uniform grid covering [`Density::support`] with at least
    /// `POINTS_PER_PERIOD` points per `resolution_scale` and at least
    /// `min_points` points overall.
    fn tabulate(&self, min_points: usize) -> GridDensity {
        let (lo, hi) = self.support();
        let by_scale = ((hi - lo) / self.resolution_scale() * POINTS_PER_PERIOD as f64).ceil();
        let n = (by_scale as usize).max(min_points).max(2);
        GridDensity::from_fn(lo, (hi - lo) / (n - 1) as f64, n, |x| self.pdf(x))
    }
}

/// Density values on a uniform grid `start + i * step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn from_fn<F: Fn(f64) -> f64>(start: f64, step: f64, n: usize, f: F) -> Self {
        let values = (0..n).map(|i| f(start + i as f64 * step)).collect();
        Self { start, step, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.x(i))
    }

    /// Riemann mass `Σ values · step`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.step
    }

    pub fn mean(&self) -> f64 {
        let m = self.mass();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.x(i))
            .sum::<f64>()
            * self.step
            / m
    }

    pub fn check_aligned(&self, other: &Self) -> Result<()> {
        let tol = 1e-12 * self.step.abs().max(other.step.abs());
        if self.len() != other.len()
            || (self.step - other.step).abs() > tol
            || (self.start - other.start).abs() > tol * self.len() as f64
        {
            return Err(Error::Alignment(format!(
                "grids differ: ({}, {}, {}) vs ({}, {}, {})",
                self.start,
                self.step,
                self.len(),
                other.start,
                other.step,
                other.len()
            )));
        }
        Ok(())
    }
}
