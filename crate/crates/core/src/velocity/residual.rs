//! Finite-difference residuals of the transport, momentum and balance
//! identities on conditional statistics.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::vec;
use alloc::vec::Vec;

use super::estimate::{ConditionalStats, Fields};
use super::grid::{axis_derivative, central_weights, SpatialGrid};
use super::VelocityField;
use crate::{Error, Result};

/// Residual vector per cell with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub grid: SpatialGrid,
    /// `cells × d`.
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    pub valid: Vec<bool>,
    /// Density used for the weighted norm.
    pub weight: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    pub max_abs: f64,
    /// `(Σ ρ‖r‖² / Σ ρ)^{1/2}` over valid cells.
    pub weighted_l2: f64,
    /// Fraction of valid cells with every component within 3 SE of 0.
    pub frac_within_3se: f64,
    /// Largest `|r| / SE` over valid cells and components.
    pub max_z: f64,
    pub n_valid: usize,
}

impl ResidualField {
    pub fn summary(&self) -> ResidualSummary {
        let d = self.grid.dim();
        let (mut max_abs, mut num, mut den, mut ok, mut n, mut max_z) = (0.0f64, 0.0, 0.0, 0usize, 0usize, 0.0f64);
        for c in (0..self.valid.len()).filter(|&c| self.valid[c]) {
            n += 1;
            let r = &self.values[c * d..(c + 1) * d];
            let s = &self.se[c * d..(c + 1) * d];
            let norm2: f64 = r.iter().map(|x| x * x).sum();
            max_abs = r.iter().fold(max_abs, |m, x| m.max(x.abs()));
            num += self.weight[c] * norm2;
            den += self.weight[c];
            if r.iter().zip(s).all(|(x, e)| x.abs() <= 3.0 * e) {
                ok += 1;
            }
            for (x, e) in r.iter().zip(s) {
                let z = if *e > 0.0 { x.abs() / e } else if *x == 0.0 { 0.0 } else { f64::INFINITY };
                max_z = max_z.max(z);
            }
        }
        ResidualSummary {
            max_abs,
            weighted_l2: if den > 0.0 { libm::sqrt(num / den) } else { 0.0 },
            frac_within_3se: if n > 0 { ok as f64 / n as f64 } else { 0.0 },
            max_z,
            n_valid: n,
        }
    }
}

fn check_spatial(grid: &SpatialGrid, order: usize) -> Result<&'static [f64]> {
    let w = central_weights(order)?;
    let need = (2 * w.len() + 1).max(5);
    if let Some(&k) = grid.n.iter().find(|&&k| k < need) {
        return Err(Error::GridTooCoarse { need, got: k });
    }
    Ok(w)
}

/// Divergence `(∇·M)_i = Σ_j ∂_j M_ij` of a `cells × d²` matrix field.
fn divergence(grid: &SpatialGrid, m: &[f64], valid: &[bool], c: usize, w: &[f64]) -> Option<Vec<f64>> {
    let d = grid.dim();
    let mut out = vec![0.0; d];
    for i in 0..d {
        for j in 0..d {
            out[i] += axis_derivative(grid, |k| m[k * d * d + i * d + j], |k| valid[k], c, j, w)?;
        }
    }
    Some(out)
}

/// `∇v` with `(∇v)_ij = ∂_j v_i`.
fn jacobian(grid: &SpatialGrid, v: &[f64], valid: &[bool], c: usize, w: &[f64]) -> Option<Vec<f64>> {
    let d = grid.dim();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = axis_derivative(grid, |k| v[k * d + i], |k| valid[k], c, j, w)?;
        }
    }
    Some(out)
}

fn scaled(rho: &[f64], m: &[f64], width: usize) -> Vec<f64> {
    m.iter().enumerate().map(|(k, x)| rho[k / width] * x).collect()
}

/// Evaluates `rule` on the pooled fields and on every batch, and assembles the
/// residual with batch-means standard errors.
fn assemble(
    grid: &SpatialGrid,
    valid: &[bool],
    weight: &[f64],
    pooled: &[&Fields],
    batches: &[Vec<&Fields>],
    rule: impl Fn(&[&Fields], usize) -> Option<Vec<f64>>,
) -> ResidualField {
    let d = grid.dim();
    let cells = grid.n_cells();
    let mut values = vec![0.0; cells * d];
    let mut se = vec![0.0; cells * d];
    let mut ok = vec![false; cells];
    let prepared: Vec<Vec<&Fields>> = batches.to_vec();
    for c in (0..cells).filter(|&c| valid[c]) {
        let Some(r) = rule(pooled, c) else { continue };
        ok[c] = true;
        values[c * d..(c + 1) * d].copy_from_slice(&r);
        let per_batch: Vec<Vec<f64>> = prepared.iter().filter_map(|b| rule(b, c)).collect();
        let bn = per_batch.len();
        if bn >= 2 {
            for i in 0..d {
                let mean = per_batch.iter().map(|r| r[i]).sum::<f64>() / bn as f64;
                let var = per_batch.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (bn - 1) as f64;
                se[c * d + i] = libm::sqrt(var / bn as f64);
            }
        }
    }
    ResidualField { grid: grid.clone(), values, se, valid: ok, weight: weight.to_vec() }
}

fn batch_views<'a>(slices: &[&'a ConditionalStats]) -> Vec<Vec<&'a Fields>> {
    let nb = slices.iter().map(|s| s.batches.len()).min().unwrap_or(0);
    (0..nb).map(|b| slices.iter().map(|s| &s.batches[b]).collect()).collect()
}

/// `∇·(ρΠ) − ρa`.
pub fn balance_residual(stats: &ConditionalStats, order: usize) -> Result<ResidualField> {
    let w = check_spatial(&stats.grid, order)?;
    let grid = &stats.grid;
    let d = grid.dim();
    let valid = &stats.valid;
    let rule = |f: &[&Fields], c: usize| -> Option<Vec<f64>> {
        let f = f[0];
        let rho_pi = scaled(&f.rho, &f.pi, d * d);
        let div = divergence(grid, &rho_pi, valid, c, w)?;
        Some((0..d).map(|i| div[i] - f.rho[c] * f.a[c * d + i]).collect())
    };
    Ok(assemble(grid, valid, &stats.fields.rho, &[&stats.fields], &batch_views(&[stats]), rule))
}

fn check_triplet(prev: &ConditionalStats, cur: &ConditionalStats, next: &ConditionalStats) -> Result<f64> {
    if prev.grid != cur.grid || next.grid != cur.grid {
        return Err(Error::invalid("time neighbours use different spatial grids"));
    }
    let (h1, h2) = (cur.t - prev.t, next.t - cur.t);
    if !(h1 > 0.0) || (h1 - h2).abs() > 1e-9 * h1.max(h2) {
        return Err(Error::invalid("time neighbours must be equally spaced around the slice"));
    }
    Ok(next.t - prev.t)
}

fn joint_valid(slices: &[&ConditionalStats]) -> Vec<bool> {
    (0..slices[0].valid.len()).map(|c| slices.iter().all(|s| s.valid[c])).collect()
}

/// `∂_t(ρv) + ∇·(ρC) − ρa`, centered in time.
pub fn momentum_residual(
    prev: &ConditionalStats,
    cur: &ConditionalStats,
    next: &ConditionalStats,
    order: usize,
) -> Result<ResidualField> {
    let span = check_triplet(prev, cur, next)?;
    let w = check_spatial(&cur.grid, order)?;
    let grid = &cur.grid;
    let d = grid.dim();
    let valid = joint_valid(&[prev, cur, next]);
    let rule = |f: &[&Fields], c: usize| -> Option<Vec<f64>> {
        let (p, m, n) = (f[0], f[1], f[2]);
        let rho_c = scaled(&m.rho, &m.c, d * d);
        let div = divergence(grid, &rho_c, &valid, c, w)?;
        Some(
            (0..d)
                .map(|i| {
                    let k = c * d + i;
                    (n.rho[c] * n.v[k] - p.rho[c] * p.v[k]) / span + div[i] - m.rho[c] * m.a[k]
                })
                .collect(),
        )
    };
    let pooled = [&prev.fields, &cur.fields, &next.fields];
    Ok(assemble(grid, &valid, &cur.fields.rho, &pooled, &batch_views(&[prev, cur, next]), rule))
}

/// `ρ(∂_t v + (∇v)v) + ∇·(ρΠ) − ρa`: momentum minus `v` times continuity,
/// which vanishes for every process.
pub fn lemma_residual(
    prev: &ConditionalStats,
    cur: &ConditionalStats,
    next: &ConditionalStats,
    order: usize,
) -> Result<ResidualField> {
    let span = check_triplet(prev, cur, next)?;
    let w = check_spatial(&cur.grid, order)?;
    let grid = &cur.grid;
    let d = grid.dim();
    let valid = joint_valid(&[prev, cur, next]);
    let rule = |f: &[&Fields], c: usize| -> Option<Vec<f64>> {
        let (p, m, n) = (f[0], f[1], f[2]);
        let rho_pi = scaled(&m.rho, &m.pi, d * d);
        let div = divergence(grid, &rho_pi, &valid, c, w)?;
        let jac = jacobian(grid, &m.v, &valid, c, w)?;
        Some(
            (0..d)
                .map(|i| {
                    let k = c * d + i;
                    let conv: f64 = (0..d).map(|j| jac[i * d + j] * m.v[c * d + j]).sum();
                    let material = (n.v[k] - p.v[k]) / span + conv;
                    m.rho[c] * material + div[i] - m.rho[c] * m.a[k]
                })
                .collect(),
        )
    };
    let pooled = [&prev.fields, &cur.fields, &next.fields];
    Ok(assemble(grid, &valid, &cur.fields.rho, &pooled, &batch_views(&[prev, cur, next]), rule))
}

/// `∂_tρ + ∇·(ρv)` on `times × grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityResidual {
    /// `times × cells`.
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub max_abs: f64,
}

/// Continuity residual of a tabulated density against a velocity field, with
/// centered stencils of `order` in both time and space. Times must be uniform.
pub fn continuity_residual(
    times: &[f64],
    grid: &SpatialGrid,
    rho: &[f64],
    f: &dyn VelocityField,
    order: usize,
) -> Result<ContinuityResidual> {
    let cells = grid.n_cells();
    let nt = times.len();
    let d = grid.dim();
    if rho.len() != nt * cells || f.dim() != d {
        return Err(Error::DimensionMismatch { expected: nt * cells, found: rho.len() });
    }
    let w = check_spatial(grid, order)?;
    let r = w.len();
    if nt < 2 * r + 1 {
        return Err(Error::GridTooCoarse { need: 2 * r + 1, got: nt });
    }
    let dt = times[1] - times[0];
    if times.windows(2).any(|p| ((p[1] - p[0]) - dt).abs() > 1e-12 * (1.0 + dt.abs())) {
        return Err(Error::invalid("continuity residual needs uniform times"));
    }
    let pts = grid.points();
    let mut values = vec![0.0; nt * cells];
    let mut valid = vec![false; nt * cells];
    let mut max_abs: f64 = 0.0;
    let mut flux = vec![0.0; cells * d];
    let mut v = vec![0.0; cells * d];
    for k in r..nt - r {
        f.velocity_batch(times[k], &pts, &mut v)?;
        for c in 0..cells {
            for i in 0..d {
                flux[c * d + i] = rho[k * cells + c] * v[c * d + i];
            }
        }
        for c in 0..cells {
            let mut div = Some(0.0);
            for i in 0..d {
                div = div.and_then(|acc| axis_derivative(grid, |q| flux[q * d + i], |_| true, c, i, w).map(|x| acc + x));
            }
            let Some(div) = div else { continue };
            let mut drho = 0.0;
            for (j, wj) in w.iter().enumerate() {
                let s = j + 1;
                drho += wj * (rho[(k + s) * cells + c] - rho[(k - s) * cells + c]);
            }
            let res = drho / dt + div;
            values[k * cells + c] = res;
            valid[k * cells + c] = true;
            max_abs = max_abs.max(res.abs());
        }
    }
    Ok(ContinuityResidual { values, valid, max_abs })
}
