//! Kernel-weighted conditional statistics on a path ensemble.
//!
//! Each path contributes Gaussian-kernel weights `w = ∏ φ((x_i − g_i)/h_i)` to
//! grid nodes within `cutoff · h`. Weighted sufficient statistics are kept per
//! batch of contiguous paths; the batch spread gives the standard errors.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::vec;
use alloc::vec::Vec;

use super::gaussian::GaussianField;
use super::grid::SpatialGrid;
use crate::interpolants::{derivatives_at, PathEnsemble};
use crate::special::normal_pdf;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regression {
    /// Nadaraya–Watson kernel average.
    #[default]
    LocalConstant,
    /// Kernel-weighted least squares on `[1, x − g]`; `Π` is the weighted
    /// residual covariance, so it vanishes for deterministic couplings.
    LocalLinear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOptions {
    /// Per-dimension bandwidth; `None` selects `1.06 σ̂ n^{-1/(d+4)}`.
    pub bandwidth: Option<Vec<f64>>,
    pub regression: Regression,
    pub batches: usize,
    /// Kernel support in bandwidths.
    pub cutoff: f64,
    pub min_n_eff: f64,
    pub min_batch_n_eff: f64,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            bandwidth: None,
            regression: Regression::LocalConstant,
            batches: 20,
            cutoff: 5.0,
            min_n_eff: 50.0,
            min_batch_n_eff: 10.0,
        }
    }
}

/// Per-cell fields: `rho` (cells), `v`, `a` (cells × d), `c`, `pi` (cells × d²).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Fields {
    pub rho: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub pi: Vec<f64>,
}

impl Fields {
    fn zeros(cells: usize, d: usize) -> Self {
        Self {
            rho: vec![0.0; cells],
            v: vec![0.0; cells * d],
            a: vec![0.0; cells * d],
            c: vec![0.0; cells * d * d],
            pi: vec![0.0; cells * d * d],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalStats {
    pub t: f64,
    pub grid: SpatialGrid,
    pub bandwidth: Vec<f64>,
    pub n_paths: usize,
    pub regression: Regression,
    pub fields: Fields,
    /// Batch-means standard errors, same layout as `fields`.
    pub se: Fields,
    /// Kish effective sample size `(Σw)² / Σw²` per cell.
    pub n_eff: Vec<f64>,
    pub valid: Vec<bool>,
    /// Per-batch estimates (empty for analytic stats).
    pub batches: Vec<Fields>,
}

impl ConditionalStats {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Exact statistics of a Gaussian interpolant on `grid` (zero standard errors).
    pub fn analytic(field: &GaussianField, t: f64, grid: &SpatialGrid) -> Result<Self> {
        let s = field.slice(t)?;
        let d = grid.dim();
        let cells = grid.n_cells();
        let mut f = Fields::zeros(cells, d);
        for c in 0..cells {
            let x = grid.point(c);
            f.rho[c] = s.density(&x);
            let v = s.velocity(&x);
            let a = s.acceleration(&x);
            for i in 0..d {
                f.v[c * d + i] = v[i];
                f.a[c * d + i] = a[i];
                for j in 0..d {
                    f.pi[c * d * d + i * d + j] = s.pi[(i, j)];
                    f.c[c * d * d + i * d + j] = s.pi[(i, j)] + v[i] * v[j];
                }
            }
        }
        Ok(Self {
            t,
            grid: grid.clone(),
            bandwidth: vec![0.0; d],
            n_paths: 0,
            regression: Regression::LocalConstant,
            fields: f,
            se: Fields::zeros(cells, d),
            n_eff: vec![f64::INFINITY; cells],
            valid: vec![true; cells],
            batches: Vec::new(),
        })
    }

    /// Symmetric `Π̂` with smallest eigenvalue `≥ −3·SE` at every valid cell.
    pub fn pi_is_psd_within_noise(&self) -> bool {
        let d = self.dim();
        (0..self.grid.n_cells()).filter(|&c| self.valid[c]).all(|c| {
            let block = &self.fields.pi[c * d * d..(c + 1) * d * d];
            let m = crate::Mat::from_row_slice(d, d, block);
            let se = self.se.pi[c * d * d..(c + 1) * d * d].iter().fold(0.0f64, |a, &b| a.max(b));
            let sym = (0..d).all(|i| (0..d).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * (1.0 + m.amax())));
            sym && crate::linalg::sym_eigen(&m).0[0] >= -3.0 * se
        })
    }

    /// Cells where `|estimate − truth| ≤ 3·SE` for every component of the
    /// chosen field, as a fraction of valid cells.
    pub fn fraction_within(&self, pick: impl Fn(&Fields) -> &Vec<f64>, truth: impl Fn(usize) -> Vec<f64>) -> f64 {
        let width = pick(&self.fields).len() / self.grid.n_cells();
        let mut ok = 0usize;
        let mut total = 0usize;
        for c in (0..self.grid.n_cells()).filter(|&c| self.valid[c]) {
            let want = truth(c);
            let est = &pick(&self.fields)[c * width..(c + 1) * width];
            let se = &pick(&self.se)[c * width..(c + 1) * width];
            total += 1;
            if est.iter().zip(se).zip(&want).all(|((e, s), w)| (e - w).abs() <= 3.0 * s) {
                ok += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            ok as f64 / total as f64
        }
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// `1.06 σ̂_i n^{-1/(d+4)}` per coordinate of the `n × d` block.
pub fn silverman_bandwidth(xs: &[f64], d: usize) -> Vec<f64> {
    let n = xs.len() / d;
    let rate = libm::pow(n as f64, -1.0 / (d as f64 + 4.0));
    (0..d)
        .map(|i| {
            let mean = xs.chunks(d).map(|r| r[i]).sum::<f64>() / n as f64;
            let var = xs.chunks(d).map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
            1.06 * libm::sqrt(var) * rate
        })
        .collect()
}

/// Offsets into a cell's block of sufficient statistics.
#[derive(Clone, Copy)]
struct Layout {
    d: usize,
    s1: usize,
    s2: usize,
    sy: usize,
    suy: usize,
    syy: usize,
    sa: usize,
    sua: usize,
    len: usize,
}

impl Layout {
    fn new(d: usize) -> Self {
        let s1 = 2;
        let s2 = s1 + d;
        let sy = s2 + d * d;
        let suy = sy + d;
        let syy = suy + d * d;
        let sa = syy + d * d;
        let sua = sa + d;
        Self { d, s1, s2, sy, suy, syy, sa, sua, len: sua + d * d }
    }
}

/// Calls `visit(cell, w, u)` for every grid node within the kernel cutoff of `x`,
/// with `u = x − node`.
fn for_each_neighbor(grid: &SpatialGrid, h: &[f64], cutoff: f64, x: &[f64], mut visit: impl FnMut(usize, f64, &[f64])) {
    let d = grid.dim();
    let mut lo = vec![0usize; d];
    let mut w1: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut u1: Vec<Vec<f64>> = Vec::with_capacity(d);
    for i in 0..d {
        let dx = grid.spacing(i);
        let a = ((x[i] - cutoff * h[i] - grid.lo[i]) / dx).ceil().max(0.0);
        let b = ((x[i] + cutoff * h[i] - grid.lo[i]) / dx).floor().min((grid.n[i] - 1) as f64);
        if a > b {
            return;
        }
        lo[i] = a as usize;
        let (ws, us): (Vec<f64>, Vec<f64>) = (a as usize..=b as usize)
            .map(|j| {
                let u = x[i] - grid.node(i, j);
                (normal_pdf(u / h[i]), u)
            })
            .unzip();
        w1.push(ws);
        u1.push(us);
    }
    let mut idx = vec![0usize; d];
    let mut u = vec![0.0; d];
    loop {
        let mut w = 1.0;
        let mut cell = 0;
        for i in 0..d {
            w *= w1[i][idx[i]];
            u[i] = u1[i][idx[i]];
            cell = cell * grid.n[i] + lo[i] + idx[i];
        }
        visit(cell, w, &u);
        // odometer, last axis fastest
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < w1[i].len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

fn batch_range(b: usize, batches: usize, n: usize) -> core::ops::Range<usize> {
    (b * n / batches)..((b + 1) * n / batches)
}

/// Solves the SPD system `m · x = rhs` (`k × k`, `k × r`) in place; `false` if singular.
fn solve_spd(m: &[f64], rhs: &[f64], k: usize, r: usize, out: &mut [f64]) -> bool {
    let mm = crate::Mat::from_row_slice(k, k, m);
    let b = crate::Mat::from_row_slice(k, r, rhs);
    match mm.cholesky() {
        Some(ch) => {
            let x = ch.solve(&b);
            for i in 0..k {
                for j in 0..r {
                    out[i * r + j] = x[(i, j)];
                }
            }
            out.iter().all(|v| v.is_finite())
        }
        None => false,
    }
}

/// Local-linear coefficients `(d + 1) × d` for the response whose sums start at
/// `(s_resp, s_uresp)`; `None` when the weighted design is singular.
fn local_linear(cell: &[f64], l: Layout, s_resp: usize, s_uresp: usize) -> Option<Vec<f64>> {
    let d = l.d;
    let k = d + 1;
    let mut m = vec![0.0; k * k];
    m[0] = cell[0];
    for i in 0..d {
        m[i + 1] = cell[l.s1 + i];
        m[(i + 1) * k] = cell[l.s1 + i];
        for j in 0..d {
            m[(i + 1) * k + j + 1] = cell[l.s2 + i * d + j];
        }
    }
    let mut rhs = vec![0.0; k * d];
    rhs[..d].copy_from_slice(&cell[s_resp..s_resp + d]);
    rhs[d..].copy_from_slice(&cell[s_uresp..s_uresp + d * d]);
    let mut out = vec![0.0; k * d];
    solve_spd(&m, &rhs, k, d, &mut out).then_some(out)
}

/// Point estimates for one cell from its sums. `resid` carries `Σ w r rᵀ` for
/// local-linear fits.
fn cell_fields(
    cell: &[f64],
    l: Layout,
    norm: f64,
    regression: Regression,
    resid: Option<&[f64]>,
    f: &mut Fields,
    c: usize,
) -> bool {
    let d = l.d;
    let s0 = cell[0];
    if !(s0 > 0.0) {
        return false;
    }
    f.rho[c] = s0 / norm;
    let mut ok = true;
    let (v, a): (Vec<f64>, Vec<f64>) = match regression {
        Regression::LocalConstant => (
            (0..d).map(|i| cell[l.sy + i] / s0).collect(),
            (0..d).map(|i| cell[l.sa + i] / s0).collect(),
        ),
        Regression::LocalLinear => {
            match (local_linear(cell, l, l.sy, l.suy), local_linear(cell, l, l.sa, l.sua)) {
                (Some(cy), Some(ca)) => (cy[..d].to_vec(), ca[..d].to_vec()),
                _ => {
                    ok = false;
                    (
                        (0..d).map(|i| cell[l.sy + i] / s0).collect(),
                        (0..d).map(|i| cell[l.sa + i] / s0).collect(),
                    )
                }
            }
        }
    };
    f.v[c * d..(c + 1) * d].copy_from_slice(&v);
    f.a[c * d..(c + 1) * d].copy_from_slice(&a);
    for i in 0..d {
        for j in 0..d {
            let k = c * d * d + i * d + j;
            match (regression, resid) {
                (Regression::LocalLinear, Some(r)) if ok => {
                    f.pi[k] = r[i * d + j] / s0;
                    f.c[k] = f.pi[k] + v[i] * v[j];
                }
                _ => {
                    f.c[k] = cell[l.syy + i * d + j] / s0;
                    f.pi[k] = f.c[k] - v[i] * v[j];
                }
            }
        }
    }
    ok
}

/// Kernel estimates of `ρ, v, C, Π, a` at interior time index `k`.
pub fn empirical_conditional_stats(
    e: &PathEnsemble,
    k: usize,
    grid: &SpatialGrid,
    opts: &EstimatorOptions,
) -> Result<ConditionalStats> {
    let d = e.dim;
    if grid.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: grid.dim() });
    }
    if e.n_paths < 1000 {
        return Err(Error::invalid("conditional statistics need at least 1000 paths"));
    }
    let b_count = opts.batches.max(2);
    let (vel, acc) = derivatives_at(e, k)?;
    let xs = e.slice_at(k);
    let h = match &opts.bandwidth {
        Some(h) if h.len() == d && h.iter().all(|&x| x > 0.0) => h.clone(),
        Some(_) => return Err(Error::invalid("bandwidth must be positive, one per dimension")),
        None => silverman_bandwidth(&xs, d),
    };
    let l = Layout::new(d);
    let cells = grid.n_cells();
    let linear = opts.regression == Regression::LocalLinear;
    let n = e.n_paths;

    let mut sums = vec![0.0; b_count * cells * l.len];
    par::for_each_chunk(&mut sums, cells * l.len, |b, out| {
        for p in batch_range(b, b_count, n) {
            let (x, y, a) = (&xs[p * d..(p + 1) * d], &vel[p * d..(p + 1) * d], &acc[p * d..(p + 1) * d]);
            for_each_neighbor(grid, &h, opts.cutoff, x, |c, w, u| {
                let s = &mut out[c * l.len..(c + 1) * l.len];
                s[0] += w;
                s[1] += w * w;
                for i in 0..d {
                    s[l.sy + i] += w * y[i];
                    s[l.sa + i] += w * a[i];
                    for j in 0..d {
                        s[l.syy + i * d + j] += w * y[i] * y[j];
                    }
                }
                if linear {
                    for i in 0..d {
                        s[l.s1 + i] += w * u[i];
                        for j in 0..d {
                            s[l.s2 + i * d + j] += w * u[i] * u[j];
                            s[l.suy + i * d + j] += w * u[i] * y[j];
                            s[l.sua + i * d + j] += w * u[i] * a[j];
                        }
                    }
                }
            });
        }
    });

    let mut total = vec![0.0; cells * l.len];
    for chunk in sums.chunks(cells * l.len) {
        for (t, s) in total.iter_mut().zip(chunk) {
            *t += s;
        }
    }

    // local-linear residual covariance from the pooled fit
    let resid = if linear {
        let coefs: Vec<Option<Vec<f64>>> = (0..cells)
            .map(|c| local_linear(&total[c * l.len..(c + 1) * l.len], l, l.sy, l.suy))
            .collect();
        let mut r = vec![0.0; b_count * cells * d * d];
        par::for_each_chunk(&mut r, cells * d * d, |b, out| {
            let mut res = vec![0.0; d];
            for p in batch_range(b, b_count, n) {
                let (x, y) = (&xs[p * d..(p + 1) * d], &vel[p * d..(p + 1) * d]);
                for_each_neighbor(grid, &h, opts.cutoff, x, |c, w, u| {
                    let Some(cf) = &coefs[c] else { return };
                    for j in 0..d {
                        let mut fit = cf[j];
                        for i in 0..d {
                            fit += u[i] * cf[(i + 1) * d + j];
                        }
                        res[j] = y[j] - fit;
                    }
                    let o = &mut out[c * d * d..(c + 1) * d * d];
                    for i in 0..d {
                        for j in 0..d {
                            o[i * d + j] += w * res[i] * res[j];
                        }
                    }
                });
            }
        });
        Some(r)
    } else {
        None
    };
    let resid_total: Option<Vec<f64>> = resid.as_ref().map(|r| {
        let mut t = vec![0.0; cells * d * d];
        for chunk in r.chunks(cells * d * d) {
            for (a, b) in t.iter_mut().zip(chunk) {
                *a += b;
            }
        }
        t
    });

    let prod_h: f64 = h.iter().product();
    let mut fields = Fields::zeros(cells, d);
    let mut valid = vec![false; cells];
    let mut n_eff = vec![0.0; cells];
    for c in 0..cells {
        let cell = &total[c * l.len..(c + 1) * l.len];
        n_eff[c] = if cell[1] > 0.0 { cell[0] * cell[0] / cell[1] } else { 0.0 };
        let r = resid_total.as_ref().map(|r| &r[c * d * d..(c + 1) * d * d]);
        let ok = cell_fields(cell, l, n as f64 * prod_h, opts.regression, r, &mut fields, c);
        valid[c] = ok && n_eff[c] >= opts.min_n_eff;
    }
    let mut batches = Vec::with_capacity(b_count);
    for b in 0..b_count {
        let nb = batch_range(b, b_count, n).len() as f64;
        let mut f = Fields::zeros(cells, d);
        for c in 0..cells {
            let cell = &sums[(b * cells + c) * l.len..(b * cells + c + 1) * l.len];
            let batch_neff = if cell[1] > 0.0 { cell[0] * cell[0] / cell[1] } else { 0.0 };
            let r = resid.as_ref().map(|r| &r[(b * cells + c) * d * d..(b * cells + c + 1) * d * d]);
            let ok = cell_fields(cell, l, nb * prod_h, opts.regression, r, &mut f, c);
            if !ok || batch_neff < opts.min_batch_n_eff {
                valid[c] = false;
            }
        }
        batches.push(f);
    }
    let se = batch_standard_errors(&fields, &batches, d);
    Ok(ConditionalStats {
        t: e.times[k],
        grid: grid.clone(),
        bandwidth: h,
        n_paths: n,
        regression: opts.regression,
        fields,
        se,
        n_eff,
        valid,
        batches,
    })
}

/// Relative floor on standard errors: the resolution of double-precision sums.
const SE_FLOOR: f64 = 1e-12;

fn batch_sd(values: impl Iterator<Item = f64> + Clone, count: usize) -> f64 {
    let mean = values.clone().sum::<f64>() / count as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (count as f64 - 1.0);
    libm::sqrt(var / count as f64)
}

/// Batch-means standard error of every entry, floored at `SE_FLOOR` times the
/// cell's second-moment scale.
pub(crate) fn batch_standard_errors(fields: &Fields, batches: &[Fields], d: usize) -> Fields {
    let cells = fields.rho.len();
    let bn = batches.len();
    let mut se = Fields::zeros(cells, d);
    if bn < 2 {
        return se;
    }
    let sd_of = |pick: fn(&Fields) -> &Vec<f64>, idx: usize| batch_sd(batches.iter().map(move |f| pick(f)[idx]), bn);
    for c in 0..cells {
        let scale = (0..d).map(|i| fields.c[c * d * d + i * d + i].abs()).fold(0.0, f64::max);
        let floor2 = SE_FLOOR * scale;
        let floor1 = SE_FLOOR * libm::sqrt(scale);
        se.rho[c] = sd_of(|f| &f.rho, c).max(SE_FLOOR * fields.rho[c].abs());
        for i in 0..d {
            se.v[c * d + i] = sd_of(|f| &f.v, c * d + i).max(floor1);
            se.a[c * d + i] = sd_of(|f| &f.a, c * d + i).max(floor1);
        }
        for k in c * d * d..(c + 1) * d * d {
            se.c[k] = sd_of(|f| &f.c, k).max(floor2);
            se.pi[k] = sd_of(|f| &f.pi, k).max(floor2);
        }
    }
    se
}

/// Statistics at `k − 1`, `k`, `k + 1` sharing one bandwidth (taken at `k`).
pub fn stats_triplet(
    e: &PathEnsemble,
    k: usize,
    grid: &SpatialGrid,
    opts: &EstimatorOptions,
) -> Result<[ConditionalStats; 3]> {
    if k < 2 || k + 2 >= e.n_times() {
        return Err(Error::invalid("time neighbours of the slice are not interior"));
    }
    let mut o = opts.clone();
    if o.bandwidth.is_none() {
        o.bandwidth = Some(silverman_bandwidth(&e.slice_at(k), e.dim));
    }
    Ok([
        empirical_conditional_stats(e, k - 1, grid, &o)?,
        empirical_conditional_stats(e, k, grid, &o)?,
        empirical_conditional_stats(e, k + 1, grid, &o)?,
    ])
}
