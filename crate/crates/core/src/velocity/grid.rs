//! Regular tensor grids and centered finite-difference stencils.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Tensor grid with `n[i]` equally spaced nodes on `[lo[i], hi[i]]`; cells are
/// indexed row-major with the last coordinate fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

impl SpatialGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != n.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: n.len() });
        }
        if let Some(&k) = n.iter().find(|&&k| k < 2) {
            return Err(Error::GridTooCoarse { need: 2, got: k });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid("grid requires lo < hi"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn uniform_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![n])
    }

    /// Grid over the central `coverage` fraction of each coordinate of the
    /// `k × d` sample block.
    pub fn central(samples: &[f64], d: usize, nodes: usize, coverage: f64) -> Result<Self> {
        if samples.len() < 2 * d || !samples.len().is_multiple_of(d) {
            return Err(Error::invalid("need at least two samples to span a grid"));
        }
        let tail = 0.5 * (1.0 - coverage);
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for i in 0..d {
            let mut col: Vec<f64> = samples.chunks(d).map(|r| r[i]).collect();
            col.sort_by(f64::total_cmp);
            let at = |q: f64| col[((col.len() - 1) as f64 * q).round() as usize];
            lo.push(at(tail));
            hi.push(at(1.0 - tail));
        }
        Self::new(lo, hi, vec![nodes; d])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n.iter().product()
    }

    pub fn spacing(&self, i: usize) -> f64 {
        (self.hi[i] - self.lo[i]) / (self.n[i] - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.lo[i] + j as f64 * self.spacing(i)
    }

    pub fn multi_index(&self, mut cell: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for i in (0..self.dim()).rev() {
            idx[i] = cell % self.n[i];
            cell /= self.n[i];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.n).fold(0, |acc, (&j, &n)| acc * n + j)
    }

    pub fn point(&self, cell: usize) -> Vec<f64> {
        self.multi_index(cell).iter().enumerate().map(|(i, &j)| self.node(i, j)).collect()
    }

    /// All node coordinates, `n_cells × d`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n_cells()).flat_map(|c| self.point(c)).collect()
    }

    pub fn stride(&self, i: usize) -> usize {
        self.n[i + 1..].iter().product()
    }

    /// Cell shifted by `offset` nodes along axis `i`, if inside.
    pub fn neighbor(&self, cell: usize, i: usize, offset: isize) -> Option<usize> {
        let j = (cell / self.stride(i)) % self.n[i];
        let k = j as isize + offset;
        (k >= 0 && (k as usize) < self.n[i]).then(|| (cell as isize + offset * self.stride(i) as isize) as usize)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| self.lo[i] <= v && v <= self.hi[i])
    }

    pub fn same_as(&self, other: &SpatialGrid) -> bool {
        self == other
    }
}

/// Antisymmetric weights `c_k`, `k = 1..=order/2`, of the centered first
/// derivative `f' ≈ Σ c_k (f(x + kh) − f(x − kh)) / h`.
pub fn central_weights(order: usize) -> Result<&'static [f64]> {
    const O2: [f64; 1] = [0.5];
    const O4: [f64; 2] = [2.0 / 3.0, -1.0 / 12.0];
    const O6: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    const O8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    match order {
        2 => Ok(&O2),
        4 => Ok(&O4),
        6 => Ok(&O6),
        8 => Ok(&O8),
        _ => Err(Error::invalid(format!("finite-difference order {order} not in {{2, 4, 6, 8}}"))),
    }
}

/// Centered derivative of a cell field along axis `i`; `None` when the stencil
/// leaves the grid or touches an invalid cell.
pub fn axis_derivative(
    grid: &SpatialGrid,
    field: impl Fn(usize) -> f64,
    valid: impl Fn(usize) -> bool,
    cell: usize,
    i: usize,
    weights: &[f64],
) -> Option<f64> {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        let off = (k + 1) as isize;
        let p = grid.neighbor(cell, i, off)?;
        let m = grid.neighbor(cell, i, -off)?;
        if !valid(p) || !valid(m) {
            return None;
        }
        acc += w * (field(p) - field(m));
    }
    Some(acc / grid.spacing(i))
}
