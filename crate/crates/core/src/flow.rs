//! Fixed-step flow integration and Lagrangian straightness checks.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::float::F64Ext;
use crate::interpolants::fd_weights;
use crate::measures::MeasureSpec;
use crate::rng;
use crate::velocity::VelocityField;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectories {
    /// `k × d`.
    pub initial: Vec<f64>,
    pub times: Vec<f64>,
    /// `k × n_times × d`; nodes at or past `valid_until` are NaN.
    pub states: Vec<f64>,
    pub method: Method,
    pub dim: usize,
    /// First time index at which each trajectory sat outside the field's hull.
    pub exited: Vec<Option<usize>>,
    /// Number of leading time nodes that were integrated.
    pub valid_until: usize,
    /// Why integration stopped early, if it did.
    pub halted: Option<Error>,
}

impl FlowTrajectories {
    pub fn n_traj(&self) -> usize {
        self.exited.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn state(&self, traj: usize, k: usize) -> &[f64] {
        let d = self.dim;
        let base = (traj * self.n_times() + k) * d;
        &self.states[base..base + d]
    }

    pub fn is_complete(&self) -> bool {
        self.valid_until == self.n_times()
    }

    pub fn n_exited(&self) -> usize {
        self.exited.iter().filter(|e| e.is_some()).count()
    }

    /// States at the last node, `k × d`.
    pub fn endpoints(&self) -> Vec<f64> {
        let last = self.n_times() - 1;
        (0..self.n_traj()).flat_map(|j| self.state(j, last).iter().copied()).collect()
    }
}

const EVAL_CHUNK: usize = 512;

fn eval_all(f: &dyn VelocityField, t: f64, xs: &[f64], out: &mut [f64]) -> Result<()> {
    let d = f.dim();
    let chunk = EVAL_CHUNK * d;
    let results = par::map_range(xs.len().div_ceil(chunk), |c| {
        let lo = c * chunk;
        let hi = (lo + chunk).min(xs.len());
        let mut o = vec![0.0; hi - lo];
        f.velocity_batch(t, &xs[lo..hi], &mut o).map(|_| o)
    });
    for (c, r) in results.into_iter().enumerate() {
        let o = r?;
        out[c * chunk..c * chunk + o.len()].copy_from_slice(&o);
    }
    Ok(())
}

/// Integrates `∂_t φ = v(t, φ)` from every row of `x0` across `times`.
pub fn integrate_flow(f: &dyn VelocityField, x0: &[f64], times: &[f64], method: Method) -> Result<FlowTrajectories> {
    let d = f.dim();
    if x0.is_empty() || !x0.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d, found: x0.len() % d.max(1) });
    }
    if times.len() < 2 || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("flow times must be strictly increasing with at least two nodes"));
    }
    let k = x0.len() / d;
    let nt = times.len();
    let mut states = vec![f64::NAN; k * nt * d];
    let mut exited = vec![None; k];
    let mut x = x0.to_vec();
    let record = |states: &mut [f64], exited: &mut [Option<usize>], x: &[f64], j: usize| {
        for p in 0..k {
            let row = &x[p * d..(p + 1) * d];
            states[(p * nt + j) * d..(p * nt + j + 1) * d].copy_from_slice(row);
            if exited[p].is_none() && !f.contains(times[j], row) {
                exited[p] = Some(j);
            }
        }
    };
    record(&mut states, &mut exited, &x, 0);
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut halted = None;
    let mut valid_until = nt;
    for j in 0..nt - 1 {
        let (t, h) = (times[j], times[j + 1] - times[j]);
        let step = (|| -> Result<()> {
            eval_all(f, t, &x, &mut k1)?;
            match method {
                Method::Euler => {
                    for i in 0..n {
                        tmp[i] = x[i] + h * k1[i];
                    }
                }
                Method::Rk4 => {
                    for i in 0..n {
                        tmp[i] = x[i] + 0.5 * h * k1[i];
                    }
                    eval_all(f, t + 0.5 * h, &tmp, &mut k2)?;
                    for i in 0..n {
                        tmp[i] = x[i] + 0.5 * h * k2[i];
                    }
                    eval_all(f, t + 0.5 * h, &tmp, &mut k3)?;
                    for i in 0..n {
                        tmp[i] = x[i] + h * k3[i];
                    }
                    eval_all(f, t + h, &tmp, &mut k4)?;
                    for i in 0..n {
                        tmp[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
            }
            Ok(())
        })();
        if let Err(e) = step {
            halted = Some(e);
            valid_until = j + 1;
            break;
        }
        core::mem::swap(&mut x, &mut tmp);
        record(&mut states, &mut exited, &x, j + 1);
    }
    Ok(FlowTrajectories {
        initial: x0.to_vec(),
        times: times.to_vec(),
        states,
        method,
        dim: d,
        exited,
        valid_until,
        halted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Straightness {
    /// `max ‖φ_t(x) − ((1 − t)x + tφ_1(x))‖` over kept trajectories and nodes.
    pub max_deviation: f64,
    /// Trajectories left out because they exited the field's hull.
    pub excluded: usize,
}

pub fn straightness_deviation(tr: &FlowTrajectories) -> Result<Straightness> {
    if !tr.is_complete() {
        return Err(Error::invalid("trajectories were truncated before t = 1"));
    }
    let (d, nt) = (tr.dim, tr.n_times());
    let (t0, t1) = (tr.times[0], tr.times[nt - 1]);
    let mut worst: f64 = 0.0;
    for p in (0..tr.n_traj()).filter(|&p| tr.exited[p].is_none()) {
        let (x, end) = (tr.state(p, 0), tr.state(p, nt - 1));
        for k in 0..nt {
            let s = (tr.times[k] - t0) / (t1 - t0);
            let y = tr.state(p, k);
            let dev: f64 = (0..d).map(|i| (y[i] - ((1.0 - s) * x[i] + s * end[i])).powi(2)).sum();
            worst = worst.max(dev.sqrt());
        }
    }
    Ok(Straightness { max_deviation: worst, excluded: tr.n_exited() })
}

/// Largest second difference of any trajectory coordinate at interior nodes,
/// normalized by the squared step.
pub fn acceleration_diagnostic(tr: &FlowTrajectories) -> Result<f64> {
    let nt = tr.valid_until;
    if nt < 3 {
        return Err(Error::GridTooCoarse { need: 3, got: nt });
    }
    let mut worst: f64 = 0.0;
    for k in 1..nt - 1 {
        let (_, w) = fd_weights(tr.times[k] - tr.times[k - 1], tr.times[k + 1] - tr.times[k]);
        for p in 0..tr.n_traj() {
            let (a, b, c) = (tr.state(p, k - 1), tr.state(p, k), tr.state(p, k + 1));
            for i in 0..tr.dim {
                worst = worst.max((w[0] * a[i] + w[1] * b[i] + w[2] * c[i]).abs());
            }
        }
    }
    Ok(worst)
}

/// `max ‖Euler(0→1, one step) − RK4(times)‖` over the initial points.
pub fn one_step_gap(f: &dyn VelocityField, x0: &[f64], times: &[f64]) -> Result<f64> {
    let fine = integrate_flow(f, x0, times, Method::Rk4)?;
    let coarse = integrate_flow(f, x0, &[times[0], times[times.len() - 1]], Method::Euler)?;
    if !fine.is_complete() || !coarse.is_complete() {
        return Err(fine.halted.or(coarse.halted).unwrap_or(Error::OutsideDomain));
    }
    let (a, b) = (fine.endpoints(), coarse.endpoints());
    let d = f.dim();
    Ok(a.chunks(d)
        .zip(b.chunks(d))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectivityVerdict {
    pub injective: bool,
    /// First time index where the ordering was not strict.
    pub first_violation: Option<usize>,
}

/// Strict order preservation of sorted 1-d starting points at every node.
pub fn injectivity_check_1d(tr: &FlowTrajectories) -> Result<InjectivityVerdict> {
    if tr.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: tr.dim });
    }
    if tr.initial.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("initial points must be strictly increasing"));
    }
    for k in 0..tr.valid_until {
        if (1..tr.n_traj()).any(|p| !(tr.state(p - 1, k)[0] < tr.state(p, k)[0])) {
            return Ok(InjectivityVerdict { injective: false, first_violation: Some(k) });
        }
    }
    Ok(InjectivityVerdict { injective: true, first_violation: None })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushforwardReport {
    /// `‖mean(φ_1(X₀)) − E P₁‖`.
    pub mean_gap: f64,
    pub mean_se: f64,
    /// `‖Cov(φ_1(X₀)) − Cov P₁‖_F`.
    pub cov_gap: f64,
    pub cov_se: f64,
    /// Unbiased energy distance between pushed samples and fresh `P₁` samples.
    pub energy: f64,
    /// Standard deviation of the statistic over label permutations.
    pub energy_se: f64,
    pub exits: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushforwardOptions {
    pub time_nodes: usize,
    pub permutations: usize,
}

impl Default for PushforwardOptions {
    fn default() -> Self {
        Self { time_nodes: 201, permutations: 20 }
    }
}

/// Pushes `n` draws of `P₀` through the RK4 flow and compares with `P₁`.
pub fn pushforward_test(
    f: &dyn VelocityField,
    p0: &MeasureSpec,
    p1: &MeasureSpec,
    n: usize,
    seed: u64,
    opts: PushforwardOptions,
) -> Result<PushforwardReport> {
    let d = f.dim();
    if p0.dim() != d || p1.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: p0.dim() });
    }
    if n < 2 {
        return Err(Error::invalid("pushforward test needs at least two samples"));
    }
    let x0 = p0.sample(n, rng::derive_seed(seed, 0))?;
    let times = crate::interpolants::uniform_grid(opts.time_nodes)?;
    let tr = integrate_flow(f, &x0, &times, Method::Rk4)?;
    if let Some(e) = tr.halted {
        return Err(e);
    }
    let y = tr.endpoints();
    let z = p1.sample(n, rng::derive_seed(seed, 1))?;

    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|i| y.chunks(d).map(|r| r[i]).sum::<f64>() / nf).collect();
    let target_mean = p1.mean();
    let target_cov = p1.covariance();
    let mut mean_gap = 0.0;
    let mut mean_var = 0.0;
    let mut cov_gap = 0.0;
    let mut cov_var = 0.0;
    for i in 0..d {
        mean_gap += (mean[i] - target_mean[i]).powi(2);
        for j in 0..d {
            let prods: Vec<f64> = y.chunks(d).map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).collect();
            let s = prods.iter().sum::<f64>() / (nf - 1.0);
            let v = prods.iter().map(|p| (p - s).powi(2)).sum::<f64>() / (nf - 1.0);
            cov_gap += (s - target_cov[(i, j)]).powi(2);
            cov_var += v / nf;
            if i == j {
                mean_var += s / nf;
            }
        }
    }
    let (energy, energy_se) = energy_distance(&y, &z, d, opts.permutations, rng::derive_seed(seed, 2));
    Ok(PushforwardReport {
        mean_gap: mean_gap.sqrt(),
        mean_se: mean_var.sqrt(),
        cov_gap: cov_gap.sqrt(),
        cov_se: cov_var.sqrt(),
        energy,
        energy_se,
        exits: tr.n_exited(),
        n,
    })
}

/// Sum of `‖a_i − a_j‖` over unordered pairs of the listed rows.
fn pair_sum(pool: &[f64], rows: &[usize], d: usize) -> f64 {
    if d == 1 {
        let mut v: Vec<f64> = rows.iter().map(|&r| pool[r]).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len() as f64;
        return v.iter().enumerate().map(|(k, x)| (2.0 * k as f64 - m + 1.0) * x).sum();
    }
    let partial = par::map_range(rows.len(), |a| {
        let x = &pool[rows[a] * d..(rows[a] + 1) * d];
        let mut s = 0.0;
        for &b in &rows[a + 1..] {
            let y = &pool[b * d..(b + 1) * d];
            s += x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        }
        s
    });
    partial.iter().sum()
}

/// Unbiased energy distance `2E‖Y − Z‖ − E‖Y − Y'‖ − E‖Z − Z'‖` and its
/// permutation standard deviation.
pub fn energy_distance(y: &[f64], z: &[f64], d: usize, permutations: usize, seed: u64) -> (f64, f64) {
    let (n, m) = (y.len() / d, z.len() / d);
    let mut pool = y.to_vec();
    pool.extend_from_slice(z);
    let all: Vec<usize> = (0..n + m).collect();
    let total = pair_sum(&pool, &all, d);
    let stat = |left: &[usize], right: &[usize]| {
        let (sy, sz) = (pair_sum(&pool, left, d), pair_sum(&pool, right, d));
        let cross = total - sy - sz;
        let (nf, mf) = (left.len() as f64, right.len() as f64);
        2.0 * cross / (nf * mf) - 2.0 * sy / (nf * (nf - 1.0)) - 2.0 * sz / (mf * (mf - 1.0))
    };
    let observed = stat(&all[..n], &all[n..]);
    if permutations < 2 {
        return (observed, 0.0);
    }
    let perms: Vec<f64> = (0..permutations)
        .map(|p| {
            let mut r = rng::stream(seed, p as u64);
            let mut idx = all.clone();
            for i in (1..idx.len()).rev() {
                let j = (rng::uniform(&mut r) * (i + 1) as f64) as usize;
                idx.swap(i, j.min(i));
            }
            stat(&idx[..n], &idx[n..])
        })
        .collect();
    let mean = perms.iter().sum::<f64>() / permutations as f64;
    let var = perms.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (permutations as f64 - 1.0);
    (observed, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolants::{build_1d_gaussian, build_affine, build_same_cov_gaussian, uniform_grid, Coupling};
    use crate::velocity::{burgers_residual, ConstantField, FnField, GaussianField, GridField, SpatialGrid};

    fn launch(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    fn curved_field(s0: f64, s1: f64) -> GaussianField {
        let c = Coupling::independent(
            MeasureSpec::gaussian_1d(0.0, s0 * s0).unwrap(),
            MeasureSpec::gaussian_1d(0.0, s1 * s1).unwrap(),
        )
        .unwrap();
        GaussianField::new(&build_affine(c)).unwrap()
    }

    /// `φ(t, x) = x σ_t / σ₀` with `σ_t² = (1 − t)²σ₀² + t²σ₁²`.
    fn curved_flow(s0: f64, s1: f64, t: f64, x: f64) -> f64 {
        x * ((1.0 - t).powi(2) * s0 * s0 + t * t * s1 * s1).sqrt() / s0
    }

    #[test]
    fn constant_field_is_integrated_exactly() {
        let f = ConstantField { c: vec![0.5, -1.25] };
        let x0 = [1.0, 2.0, -3.0, 0.0];
        let times = uniform_grid(9).unwrap();
        for m in [Method::Euler, Method::Rk4] {
            let tr = integrate_flow(&f, &x0, &times, m).unwrap();
            for (k, &t) in times.iter().enumerate() {
                assert_eq!(tr.state(0, k), &[1.0 + 0.5 * t, 2.0 - 1.25 * t][..]);
            }
            assert_eq!(tr.state(1, 0), &x0[2..]);
        }
    }

    #[test]
    fn figure_one_flow_is_the_initial_velocity_chord() {
        let f = GaussianField::new(&build_1d_gaussian(-2.0, 0.6, 3.0, 1.5).unwrap()).unwrap();
        let x0 = launch(-4.0, 0.0, 50);
        let times = uniform_grid(201).unwrap();
        let tr = integrate_flow(&f, &x0, &times, Method::Rk4).unwrap();
        let mut v0 = vec![0.0; 50];
        f.velocity_batch(0.0, &x0, &mut v0).unwrap();
        for p in 0..50 {
            for (k, &t) in times.iter().enumerate() {
                assert!((tr.state(p, k)[0] - (x0[p] + t * v0[p])).abs() < 1e-10);
            }
        }
        assert!(straightness_deviation(&tr).unwrap().max_deviation <= 1e-8);
        assert!(acceleration_diagnostic(&tr).unwrap() <= 1e-8);
        assert!(one_step_gap(&f, &x0, &times).unwrap() <= 1e-8);
        assert!(injectivity_check_1d(&tr).unwrap().injective);
    }

    #[test]
    fn curved_affine_flow_is_curved() {
        let f = curved_field(0.6, 1.5);
        let x0 = launch(-2.0, 2.0, 21);
        let tr = integrate_flow(&f, &x0, &uniform_grid(201).unwrap(), Method::Rk4).unwrap();
        for p in 0..21 {
            assert!((tr.state(p, 200)[0] - curved_flow(0.6, 1.5, 1.0, x0[p])).abs() < 1e-9);
        }
        assert!(straightness_deviation(&tr).unwrap().max_deviation > 0.1);
        assert!(acceleration_diagnostic(&tr).unwrap() > 0.1);
        assert!(burgers_residual(&f, 0.5, &[1.0], None).unwrap()[0].abs() > 0.1);
    }

    fn endpoint_error(f: &GaussianField, method: Method, nodes: usize) -> f64 {
        let x0 = launch(-2.0, 2.0, 9);
        let tr = integrate_flow(f, &x0, &uniform_grid(nodes).unwrap(), method).unwrap();
        (0..9)
            .map(|p| (tr.state(p, nodes - 1)[0] - curved_flow(0.6, 1.5, 1.0, x0[p])).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn integrator_orders() {
        let f = curved_field(0.6, 1.5);
        let rk = [endpoint_error(&f, Method::Rk4, 11), endpoint_error(&f, Method::Rk4, 21)];
        let eu = [endpoint_error(&f, Method::Euler, 101), endpoint_error(&f, Method::Euler, 201)];
        let rk_order = (rk[0] / rk[1]).log2();
        let eu_order = (eu[0] / eu[1]).log2();
        assert!(rk_order >= 3.8, "RK4 order {rk_order}");
        assert!(eu_order >= 0.9, "Euler order {eu_order}");
    }

    #[test]
    fn zero_field_has_no_deviation() {
        let tr = integrate_flow(&ConstantField { c: vec![0.0] }, &[1.0, 2.0], &uniform_grid(5).unwrap(), Method::Rk4)
            .unwrap();
        assert_eq!(straightness_deviation(&tr).unwrap().max_deviation, 0.0);
    }

    #[test]
    fn manufactured_quadratic_acceleration() {
        let times = uniform_grid(11).unwrap();
        let states: Vec<f64> = times.iter().map(|t| 1.0 + t * t).collect();
        let tr = FlowTrajectories {
            initial: vec![1.0],
            times,
            states,
            method: Method::Euler,
            dim: 1,
            exited: vec![None],
            valid_until: 11,
            halted: None,
        };
        assert!((acceleration_diagnostic(&tr).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn crossing_field_breaks_injectivity() {
        // x(t) = x0 (1 − 2t): every trajectory passes through 0 at t = ½
        let f = FnField::new(1, |t, x, o| {
            o[0] = if (t - 0.5f64).abs() < 1e-15 { 0.0 } else { -2.0 * x[0] / (1.0 - 2.0 * t) };
            Ok(())
        });
        let tr = integrate_flow(&f, &[-1.0, 1.0], &uniform_grid(11).unwrap(), Method::Euler).unwrap();
        let v = injectivity_check_1d(&tr).unwrap();
        assert!(!v.injective);
        assert_eq!(v.first_violation, Some(5));
        assert!(injectivity_check_1d(&integrate_flow(&f, &[1.0, -1.0], &[0.0, 0.1], Method::Euler).unwrap()).is_err());
    }

    #[test]
    fn collapse_trajectories_meet_at_tau() {
        let c = Coupling::independent(MeasureSpec::gaussian_1d(0.0, 1.0).unwrap(), MeasureSpec::gaussian_1d(0.0, 1.0).unwrap())
            .unwrap();
        let f = GaussianField::new(&crate::interpolants::build_collapse(0.5, c).unwrap()).unwrap();
        let tr = integrate_flow(&f, &launch(-1.0, 1.0, 5), &uniform_grid(21).unwrap(), Method::Euler).unwrap();
        assert!(matches!(tr.halted, Some(Error::Singular { .. })));
        assert_eq!(tr.valid_until, 11);
        let v = injectivity_check_1d(&tr).unwrap();
        assert_eq!(v.first_violation, Some(10));
        assert!(straightness_deviation(&tr).is_err());
    }

    #[test]
    fn grid_field_exits_are_flagged() {
        let grid = SpatialGrid::uniform_1d(-1.0, 1.0, 11).unwrap();
        let gf = GridField::tabulate(&ConstantField { c: vec![1.0] }, vec![0.0, 1.0], grid).unwrap();
        let tr = integrate_flow(&gf, &[-0.5, 0.5], &uniform_grid(11).unwrap(), Method::Rk4).unwrap();
        assert_eq!(tr.exited, vec![None, Some(6)]);
        assert_eq!(straightness_deviation(&tr).unwrap().excluded, 1);
    }

    #[test]
    fn pushforward_of_same_cov_builder() {
        let interp = build_same_cov_gaussian(vec![-1.0], vec![2.0], crate::Mat::from_element(1, 1, 0.5)).unwrap();
        let f = GaussianField::new(&interp).unwrap();
        let (p0, p1) = match &interp.coupling {
            Coupling::Independent { p0, p1 } => (p0.clone(), p1.clone()),
            _ => unreachable!(),
        };
        let r = pushforward_test(&f, &p0, &p1, 2000, 3, PushforwardOptions::default()).unwrap();
        assert!(r.mean_gap <= 4.0 * r.mean_se, "{r:?}");
        assert!(r.cov_gap <= 4.0 * r.cov_se, "{r:?}");
        assert!(r.energy.abs() <= 4.0 * r.energy_se, "{r:?}");
        // identity flow between a law and itself
        let r = pushforward_test(&ConstantField { c: vec![0.0] }, &p0, &p0, 2000, 4, PushforwardOptions::default()).unwrap();
        assert!(r.energy.abs() <= 4.0 * r.energy_se, "{r:?}");
        // a wrong target is detected
        let r = pushforward_test(&ConstantField { c: vec![0.0] }, &p0, &p1, 2000, 4, PushforwardOptions::default()).unwrap();
        assert!(r.energy > 10.0 * r.energy_se && r.mean_gap > 10.0 * r.mean_se);
    }

    #[test]
    fn energy_distance_agrees_between_sorted_and_pairwise_paths() {
        let y = MeasureSpec::gaussian_1d(0.0, 1.0).unwrap().sample(300, 1).unwrap();
        let z = MeasureSpec::gaussian_1d(0.5, 1.0).unwrap().sample(200, 2).unwrap();
        let (e1, _) = energy_distance(&y, &z, 1, 0, 0);
        // embed in 2-d with a zero coordinate to force the pairwise branch
        let y2: Vec<f64> = y.iter().flat_map(|&v| [v, 0.0]).collect();
        let z2: Vec<f64> = z.iter().flat_map(|&v| [v, 0.0]).collect();
        let (e2, _) = energy_distance(&y2, &z2, 2, 0, 0);
        assert!((e1 - e2).abs() < 1e-12);
        let brute = {
            let mean = |a: &[f64], b: &[f64], same: bool| {
                let mut s = 0.0;
                let mut c = 0.0;
                for (i, x) in a.iter().enumerate() {
                    for (j, w) in b.iter().enumerate() {
                        if same && i == j {
                            continue;
                        }
                        s += (x - w).abs();
                        c += 1.0;
                    }
                }
                s / c
            };
            2.0 * mean(&y, &z, false) - mean(&y, &y, true) - mean(&z, &z, true)
        };
        assert!((e1 - brute).abs() < 1e-12);
    }
}
