//! Discrete Legendre–Fenchel transform on uniform rectangular grids.
//!
//! Grid functions may take the value `+∞` (a genuine sentinel, excluded from
//! the maximization) so indicator-type functions are representable. The
//! conjugate is evaluated exactly over the sampled nodes:
//! `out[s] = max_z ⟨s, z⟩ − f(z)` with `z` ranging over the finite nodes of
//! the primal grid and `s` over the nodes of the dual grid.

use crate::error::{Error, Result};
use crate::par;

/// Uniform rectangular grid: `npts[k] ≥ 2` nodes on `[mins[k], maxs[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    npts: Vec<usize>,
}

impl Grid {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>, npts: Vec<usize>) -> Result<Self> {
        if mins.len() != maxs.len() || mins.len() != npts.len() || mins.is_empty() {
            return Err(Error::DimensionMismatch(
                "grid axis specifications must agree and be nonempty".into(),
            ));
        }
        for k in 0..mins.len() {
            if npts[k] < 2 {
                return Err(Error::InvalidInput(
                    "grid needs at least 2 points per axis".into(),
                ));
            }
            if !(mins[k] < maxs[k]) || !mins[k].is_finite() || !maxs[k].is_finite() {
                return Err(Error::InvalidInput("grid axis range is degenerate".into()));
            }
        }
        Ok(Grid { mins, maxs, npts })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn len(&self) -> usize {
        self.npts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn npts(&self) -> &[usize] {
        &self.npts
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.maxs[axis] - self.mins[axis]) / (self.npts[axis] - 1) as f64
    }

    /// Coordinates of the flat-indexed node (row-major, last axis fastest).
    pub fn node(&self, flat: usize) -> Vec<f64> {
        let d = self.dim();
        let mut idx = flat;
        let mut out = vec![0.0; d];
        for k in (0..d).rev() {
            let i = idx % self.npts[k];
            idx /= self.npts[k];
            out[k] = self.mins[k] + self.spacing(k) * i as f64;
        }
        out
    }

    /// Flat index from per-axis indices.
    pub fn flat(&self, multi: &[usize]) -> usize {
        let mut f = 0usize;
        for (k, &i) in multi.iter().enumerate() {
            f = f * self.npts[k] + i;
        }
        f
    }

    /// True when no per-axis index touches the first or last node.
    pub fn is_interior(&self, flat: usize) -> bool {
        let d = self.dim();
        let mut idx = flat;
        for k in (0..d).rev() {
            let i = idx % self.npts[k];
            idx /= self.npts[k];
            if i == 0 || i == self.npts[k] - 1 {
                return false;
            }
        }
        true
    }
}

/// A function sampled on a grid; `+∞` entries mark points outside the domain.
#[derive(Debug, Clone)]
pub struct GridFn {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(
                "value table length differs from grid size".into(),
            ));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidInput(
                "grid values must be finite or +∞".into(),
            ));
        }
        Ok(GridFn { grid, values })
    }

    /// Samples `f` on every node of `grid`.
    pub fn sample<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.node(i))).collect();
        GridFn::new(grid, values)
    }
}

/// Discrete convex conjugate of `f`, evaluated at the nodes of `dual`.
///
/// Errors when every primal value is `+∞` (the conjugate would be `−∞`).
pub fn grid_conjugate(f: &GridFn, dual: &Grid) -> Result<GridFn> {
    if f.grid.dim() != dual.dim() {
        return Err(Error::DimensionMismatch(
            "primal and dual grids must share the dimension".into(),
        ));
    }
    let finite: Vec<(Vec<f64>, f64)> = (0..f.grid.len())
        .filter(|&i| f.values[i].is_finite())
        .map(|i| (f.grid.node(i), f.values[i]))
        .collect();
    if finite.is_empty() {
        return Err(Error::InvalidInput(
            "conjugate of an identically +∞ function".into(),
        ));
    }
    let values = par::map_indices(dual.len(), |si| {
        let s = dual.node(si);
        finite
            .iter()
            .map(|(z, fz)| s.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() - fz)
            .fold(f64::NEG_INFINITY, f64::max)
    });
    GridFn::new(dual.clone(), values)
}
