//! Conditional velocity fields, their closed Gaussian forms, kernel estimators
//! on path ensembles and the transport/momentum PDE residuals.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Mat, Vector};
use crate::{Error, Result};

mod estimate;
mod gaussian;
mod grid;
mod residual;

pub use estimate::{
    empirical_conditional_stats, silverman_bandwidth, stats_triplet, ConditionalStats, EstimatorOptions, Fields,
    Regression,
};
pub use gaussian::{
    analytic_affine_stats, analytic_velocity, covariance_derivative_check, gaussian_moments, max_cross_covariance,
    straightness_identity, GaussianField, GaussianPathStats, GaussianSlice, SINGULAR_COND,
};
pub use grid::{axis_derivative, central_weights, SpatialGrid};
pub use residual::{
    balance_residual, continuity_residual, lemma_residual, momentum_residual, ContinuityResidual, ResidualField,
    ResidualSummary,
};

/// A time-dependent vector field on `R^d`.
pub trait VelocityField: Sync {
    fn dim(&self) -> usize;

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// Evaluates `k` points (`xs` is `k × d`) at one time.
    fn velocity_batch(&self, t: f64, xs: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        for (x, o) in xs.chunks(d).zip(out.chunks_mut(d)) {
            self.velocity(t, x, o)?;
        }
        Ok(())
    }

    /// Exact `(∇v, ∂_t v)` when the field knows them.
    fn derivatives(&self, _t: f64, _x: &[f64]) -> Option<Result<(Mat, Vector)>> {
        None
    }

    /// Whether `(t, x)` lies inside the region where the field is defined
    /// without extrapolation.
    fn contains(&self, _t: f64, _x: &[f64]) -> bool {
        true
    }
}

impl VelocityField for GaussianField {
    fn dim(&self) -> usize {
        GaussianField::dim(self)
    }

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let v = self.slice(t)?.velocity(x);
        out.copy_from_slice(v.as_slice());
        Ok(())
    }

    fn velocity_batch(&self, t: f64, xs: &[f64], out: &mut [f64]) -> Result<()> {
        let s = self.slice(t)?;
        let d = self.dim();
        let (m, mdot, k) = (&s.stats.m, &s.stats.mdot, &s.gain);
        for (x, o) in xs.chunks(d).zip(out.chunks_mut(d)) {
            for i in 0..d {
                let mut acc = mdot[i];
                for j in 0..d {
                    acc += k[(i, j)] * (x[j] - m[j]);
                }
                o[i] = acc;
            }
        }
        Ok(())
    }

    fn derivatives(&self, t: f64, x: &[f64]) -> Option<Result<(Mat, Vector)>> {
        Some(self.slice(t).map(|s| (s.gain.clone(), s.time_derivative(x))))
    }
}

/// `v ≡ c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantField {
    pub c: Vec<f64>,
}

impl VelocityField for ConstantField {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn velocity(&self, _t: f64, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.c);
        Ok(())
    }

    fn derivatives(&self, _t: f64, _x: &[f64]) -> Option<Result<(Mat, Vector)>> {
        let d = self.c.len();
        Some(Ok((Mat::zeros(d, d), Vector::zeros(d))))
    }
}

type FieldFn = dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync;

/// Field given by a closure.
pub struct FnField {
    dim: usize,
    f: Box<FieldFn>,
}

impl FnField {
    pub fn new(dim: usize, f: impl Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static) -> Self {
        Self { dim, f: Box::new(f) }
    }
}

impl core::fmt::Debug for FnField {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).finish()
    }
}

impl VelocityField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, x, out)
    }
}

/// Tabulated field: values on `times × grid`, interpolated linearly in time and
/// multilinearly in space; outside the hull the nearest grid value is used.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub times: Vec<f64>,
    pub grid: SpatialGrid,
    /// `times.len() × n_cells × d`.
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(times: Vec<f64>, grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        let expected = times.len() * grid.n_cells() * grid.dim();
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: values.len() });
        }
        if times.is_empty() || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("field times must be strictly increasing"));
        }
        Ok(Self { times, grid, values })
    }

    /// Tabulates `f` on `times × grid`.
    pub fn tabulate(f: &dyn VelocityField, times: Vec<f64>, grid: SpatialGrid) -> Result<Self> {
        let pts = grid.points();
        let mut values = vec![0.0; times.len() * pts.len()];
        for (k, &t) in times.iter().enumerate() {
            f.velocity_batch(t, &pts, &mut values[k * pts.len()..(k + 1) * pts.len()])?;
        }
        Self::new(times, grid, values)
    }

    fn spatial(&self, k: usize, x: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let d = g.dim();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for i in 0..d {
            let s = ((x[i] - g.lo[i]) / g.spacing(i)).clamp(0.0, (g.n[i] - 1) as f64);
            let j = (s.floor() as usize).min(g.n[i] - 2);
            base[i] = j;
            frac[i] = s - j as f64;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        let slab = &self.values[k * g.n_cells() * d..(k + 1) * g.n_cells() * d];
        let mut idx = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for i in 0..d {
                let bit = (corner >> i) & 1;
                idx[i] = base[i] + bit;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
            }
            if w == 0.0 {
                continue;
            }
            let c = g.flat_index(&idx);
            for (o, v) in out.iter_mut().zip(&slab[c * d..(c + 1) * d]) {
                *o += w * v;
            }
        }
    }
}

impl VelocityField for GridField {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn velocity(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let nt = self.times.len();
        if nt == 1 {
            self.spatial(0, x, out);
            return Ok(());
        }
        let tc = t.clamp(self.times[0], self.times[nt - 1]);
        let k = self.times.partition_point(|&s| s <= tc).clamp(1, nt - 1) - 1;
        let w = (tc - self.times[k]) / (self.times[k + 1] - self.times[k]);
        let mut hi = vec![0.0; out.len()];
        self.spatial(k, x, out);
        self.spatial(k + 1, x, &mut hi);
        for (o, h) in out.iter_mut().zip(hi) {
            *o = (1.0 - w) * *o + w * h;
        }
        Ok(())
    }

    fn contains(&self, t: f64, x: &[f64]) -> bool {
        t >= self.times[0] && t <= self.times[self.times.len() - 1] && self.grid.contains(x)
    }
}

/// Steps for finite-difference derivatives of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub ht: f64,
    pub hx: f64,
}

/// Material derivative `D_t v = ∂_t v + (∇v)v` at `(t, x)`: exact when the
/// field provides derivatives and `steps` is `None`, central differences otherwise.
pub fn burgers_residual(f: &dyn VelocityField, t: f64, x: &[f64], steps: Option<FdSteps>) -> Result<Vector> {
    let d = f.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: x.len() });
    }
    let mut v = vec![0.0; d];
    f.velocity(t, x, &mut v)?;
    let v = Vector::from_vec(v);
    let (grad, dt) = match steps {
        None => match f.derivatives(t, x) {
            Some(r) => r?,
            None => return Err(Error::Unsupported("field has no exact derivatives; pass FD steps".into())),
        },
        Some(FdSteps { ht, hx }) => {
            if !f.contains(t, x) {
                return Err(Error::OutsideDomain);
            }
            let eval = |s: f64, y: &[f64]| -> Result<Vector> {
                if !f.contains(s, y) {
                    return Err(Error::OutsideDomain);
                }
                let mut o = vec![0.0; d];
                f.velocity(s, y, &mut o)?;
                Ok(Vector::from_vec(o))
            };
            let dt = (eval(t + ht, x)? - eval(t - ht, x)?) / (2.0 * ht);
            let mut grad = Mat::zeros(d, d);
            let mut y = x.to_vec();
            for j in 0..d {
                y[j] = x[j] + hx;
                let p = eval(t, &y)?;
                y[j] = x[j] - hx;
                let m = eval(t, &y)?;
                y[j] = x[j];
                grad.set_column(j, &((p - m) / (2.0 * hx)));
            }
            (grad, dt)
        }
    };
    Ok(dt + grad * v)
}

/// Largest difference quotient `‖v(t,x) − v(t,y)‖ / ‖x − y‖` over pairs of the
/// `k × d` point set.
pub fn lipschitz_estimate(f: &dyn VelocityField, t: f64, points: &[f64]) -> Result<f64> {
    let d = f.dim();
    if !points.len().is_multiple_of(d) || points.len() < 2 * d {
        return Err(Error::invalid("Lipschitz estimate needs at least two points"));
    }
    let k = points.len() / d;
    let mut v = vec![0.0; points.len()];
    f.velocity_batch(t, points, &mut v)?;
    let mut best: f64 = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let (mut num, mut den) = (0.0, 0.0);
            for c in 0..d {
                num += (v[i * d + c] - v[j * d + c]).powi(2);
                den += (points[i * d + c] - points[j * d + c]).powi(2);
            }
            if den > 0.0 {
                best = best.max(libm::sqrt(num / den));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests;
