use std::path::Path;

use serde_json::{json, Value};
use sflow_core::flow::{
    acceleration_diagnostic, injectivity_check_1d, integrate_flow, one_step_gap, pushforward_test,
    straightness_deviation, Method, PushforwardOptions,
};
use sflow_core::interpolants::{local_grid, sample_paths, uniform_grid, Schedule};
use sflow_core::measures::MeasureSpec;
use sflow_core::velocity::{
    balance_residual, burgers_residual, continuity_residual, lemma_residual,
    lipschitz_estimate, momentum_residual, stats_triplet, straightness_identity, EstimatorOptions, GaussianField,
    Regression, ResidualSummary, SpatialGrid,
};

use super::{analytic_field, launch_points, mat, probe_points, section};
use crate::config::{resolve_process, ExperimentConfig, Process};
use crate::output::write_json;
use crate::CliError;

/// Thresholds a field must meet to be reported straight.
pub const BURGERS_TOL: f64 = 1e-10;
pub const STRAIGHTNESS_TOL: f64 = 1e-8;
pub const ACCELERATION_TOL: f64 = 1e-8;
/// `L̂` nearest the singular time over `L̂` farthest from it.
pub const DIVERGENCE_RATIO: f64 = 10.0;

/// Stencil order of the analytic continuity check; densities are smooth so
/// the high order pays off.
pub const CONTINUITY_ORDER: usize = 8;

const SWEEP_OFFSETS: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnoseVerdict {
    Straight,
    NotStraight,
    NonLipschitz,
}

impl DiagnoseVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Straight => "straight",
            Self::NotStraight => "not straight",
            Self::NonLipschitz => "not straight (non-Lipschitz)",
        }
    }
}

fn summary(s: ResidualSummary) -> Value {
    json!({
        "max_abs": s.max_abs,
        "weighted_l2": s.weighted_l2,
        "frac_within_3se": s.frac_within_3se,
        "max_z": s.max_z,
        "n_valid": s.n_valid,
    })
}

struct Analytic {
    report: Value,
    burgers_max: f64,
    velocity_scale: f64,
    singular_times: Vec<f64>,
}

fn analytic_section(f: &GaussianField, times: &[f64]) -> Analytic {
    let (mut burgers_max, mut velocity_scale) = (0.0f64, 0.0f64);
    let mut singular_times = Vec::new();
    let mut ok_times = Vec::new();
    let mut cov_check = 0.0f64;
    let h = 1e-4;
    for &t in &times[1..times.len() - 1] {
        let s = match f.slice(t) {
            Ok(s) => s,
            Err(_) => {
                singular_times.push(t);
                continue;
            }
        };
        let mut failed = false;
        for x in probe_points(s.stats.m.as_slice(), &s.stats.sigma) {
            velocity_scale = velocity_scale.max(s.velocity(&x).amax());
            match burgers_residual(f, t, &x, None) {
                Ok(r) => burgers_max = burgers_max.max(r.amax()),
                Err(_) => failed = true,
            }
        }
        if failed {
            singular_times.push(t);
            continue;
        }
        ok_times.push(t);
        if t - h >= 0.0 && t + h <= 1.0 {
            if let Ok(c) = covariance_derivative_check_field(f, t, h) {
                cov_check = cov_check.max(c);
            }
        }
    }
    let identity = straightness_identity(f, &ok_times).ok();
    Analytic {
        report: json!({
            "burgers_max": burgers_max,
            "velocity_scale": velocity_scale,
            "covariance_identity_max": identity,
            "covariance_derivative_max": cov_check,
            "times_checked": ok_times.len(),
            "singular_times": singular_times,
        }),
        burgers_max,
        velocity_scale,
        singular_times,
    }
}

/// `‖(Σ_{t+h} − Σ_{t−h})/2h − (G + Gᵀ)‖_F` straight from the field.
fn covariance_derivative_check_field(f: &GaussianField, t: f64, h: f64) -> Result<f64, CliError> {
    let fd = (f.covariance(t + h) - f.covariance(t - h)) / (2.0 * h);
    let m = f.moments(t)?;
    Ok(sflow_core::linalg::frobenius(&(fd - (&m.g + m.g.transpose()))))
}

struct FlowOutcome {
    report: Value,
    halted: bool,
    straightness: Option<f64>,
    acceleration: Option<f64>,
}

fn flow_section(f: &GaussianField, p0: &MeasureSpec, cfg: &ExperimentConfig, times: &[f64]) -> Result<FlowOutcome, CliError> {
    let x0 = launch_points(p0, cfg.grids.launch, cfg.seed)?;
    let tr = integrate_flow(f, &x0, times, Method::Rk4)?;
    if let Some(e) = &tr.halted {
        return Ok(FlowOutcome {
            report: json!({
                "halted": e.to_string(),
                "valid_until_t": tr.times[tr.valid_until.min(tr.times.len() - 1)],
                "trajectories": tr.n_traj(),
            }),
            halted: true,
            straightness: None,
            acceleration: None,
        });
    }
    let st = straightness_deviation(&tr)?;
    let acc = acceleration_diagnostic(&tr)?;
    let gap = one_step_gap(f, &x0, times)?;
    let injective = if tr.dim == 1 {
        let v = injectivity_check_1d(&tr)?;
        json!({ "injective": v.injective, "first_violation": v.first_violation })
    } else {
        Value::Null
    };
    Ok(FlowOutcome {
        report: json!({
            "trajectories": tr.n_traj(),
            "straightness_deviation": st.max_deviation,
            "excluded": st.excluded,
            "max_acceleration": acc,
            "one_step_gap": gap,
            "exits": tr.n_exited(),
            "injectivity": injective,
        }),
        halted: false,
        straightness: Some(st.max_deviation),
        acceleration: Some(acc),
    })
}

/// `L̂(t)` on probe points; near a known singular time `τ` the sweep is
/// `τ ± {0.2, 0.1, 0.05, 0.02, 0.01}`.
fn lipschitz_section(f: &GaussianField, center: Option<f64>) -> (Value, bool) {
    let ts: Vec<f64> = match center {
        Some(tau) => SWEEP_OFFSETS
            .iter()
            .flat_map(|&o| [tau - o, tau + o])
            .filter(|&t| t > 0.0 && t < 1.0)
            .collect(),
        None => (1..10).map(|i| i as f64 / 10.0).collect(),
    };
    let mut rows = Vec::new();
    let (mut near, mut far) = ((f64::INFINITY, 0.0f64), (0.0f64, f64::INFINITY));
    for t in ts {
        let l = f.slice(t).map_err(CliError::from).and_then(|s| {
            let pts: Vec<f64> = probe_points(s.stats.m.as_slice(), &s.stats.sigma).concat();
            Ok(lipschitz_estimate(f, t, &pts)?)
        });
        let l = l.unwrap_or(f64::INFINITY);
        let dist = center.map(|c| (t - c).abs());
        if let Some(dd) = dist {
            if dd < near.0 {
                near = (dd, l);
            }
            if dd > far.0 {
                far = (dd, l);
            }
        }
        rows.push(json!({ "t": t, "l_hat": l, "distance": dist, "l_times_distance": dist.map(|dd| dd * l) }));
    }
    let diverging = center.is_some() && near.1 >= DIVERGENCE_RATIO * far.1;
    (json!({ "center": center, "sweep": rows, "diverging": diverging }), diverging)
}

/// Kernel statistics at one interior time: momentum, balance and lemma
/// residuals, and agreement with the closed form when one exists.
fn empirical_section(process: &Process, f: Option<&GaussianField>, cfg: &ExperimentConfig, t: f64) -> Result<Value, CliError> {
    let g = &cfg.grids;
    let times = local_grid(t, 0.005, 2)?;
    let e = sample_paths(process.sampler(), g.paths, &times, sflow_core::rng::derive_seed(cfg.seed, 3))?;
    let d = e.dim;
    let nodes = match d {
        1 => g.spatial_nodes,
        2 => g.spatial_nodes.min(15),
        _ => g.spatial_nodes.min(7),
    };
    let grid = SpatialGrid::central(&e.slice_at(3), d, nodes, 0.99)?;
    let opts = EstimatorOptions { regression: Regression::LocalLinear, ..Default::default() };
    let [prev, cur, next] = stats_triplet(&e, 3, &grid, &opts)?;
    let order = g.stencil_order;
    let mut report = json!({
        "t": t,
        "paths": e.n_paths,
        "cells": grid.n_cells(),
        "valid_cells": cur.n_valid(),
        "momentum": section(momentum_residual(&prev, &cur, &next, order).map(|r| summary(r.summary())).map_err(Into::into)),
        "balance": section(balance_residual(&cur, order).map(|r| summary(r.summary())).map_err(Into::into)),
        "lemma": section(lemma_residual(&prev, &cur, &next, order).map(|r| summary(r.summary())).map_err(Into::into)),
        "pi_psd_within_noise": cur.pi_is_psd_within_noise(),
    });
    if let Some(f) = f {
        let s = f.slice(t)?;
        let v_ok = cur.fraction_within(|x| &x.v, |c| s.velocity(&grid.point(c)).as_slice().to_vec());
        let pi_ok = cur.fraction_within(|x| &x.pi, |_| s.pi.as_slice().to_vec());
        report["velocity_within_3se"] = json!(v_ok);
        report["pi_within_3se"] = json!(pi_ok);
        report["pi_analytic"] = mat(&s.pi);
    }
    Ok(report)
}

/// `∂_tρ + ∇·(ρv)` on 201 × 201 nodes with analytic densities (d = 1).
pub(crate) fn continuity_section(f: &GaussianField, order: usize) -> Result<Value, CliError> {
    if f.dim() != 1 {
        return Err(CliError::Config("continuity check runs on one-dimensional fields".into()));
    }
    let times = uniform_grid(201)?;
    let slices = times.iter().map(|&t| f.slice(t)).collect::<Result<Vec<_>, _>>()?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &slices {
        let (m, sd) = (s.stats.m[0], s.stats.sigma[(0, 0)].sqrt());
        lo = lo.min(m - 6.0 * sd);
        hi = hi.max(m + 6.0 * sd);
    }
    let grid = SpatialGrid::uniform_1d(lo, hi, 201)?;
    let pts = grid.points();
    let rho: Vec<f64> = slices.iter().flat_map(|s| pts.iter().map(move |&x| s.density(&[x]))).collect();
    let r = continuity_residual(&times, &grid, &rho, f, order)?;
    Ok(json!({ "max_abs": r.max_abs, "order": order, "lo": lo, "hi": hi }))
}

/// Aggregated diagnostics with a top-level verdict; writes `diagnose.json`.
pub fn diagnose(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let process = resolve_process(cfg)?;
    let p0 = cfg.p0.resolve("p0")?;
    let p1 = cfg.p1.resolve("p1")?;
    let times = uniform_grid(cfg.grids.time_nodes)?;
    let field = analytic_field(&process);
    let tau = match process.interpolant().map(|i| &i.schedule) {
        Some(Schedule::Collapse { tau }) => Some(*tau),
        _ => None,
    };
    let mut report = json!({ "config": cfg, "analytic_field": field.is_some() });
    let mut non_lipschitz = false;
    let mut straight = field.is_some();
    if let Some(f) = &field {
        let a = analytic_section(f, &times);
        non_lipschitz |= !a.singular_times.is_empty();
        straight &= a.burgers_max <= BURGERS_TOL * a.velocity_scale.max(1.0);
        let center = tau.or_else(|| a.singular_times.first().copied());
        report["analytic"] = a.report;

        match flow_section(f, &p0, cfg, &times) {
            Ok(fl) => {
                non_lipschitz |= fl.halted;
                straight &= fl.straightness.is_some_and(|s| s <= STRAIGHTNESS_TOL)
                    && fl.acceleration.is_some_and(|a| a <= ACCELERATION_TOL);
                report["flow"] = fl.report;
            }
            Err(e) => {
                straight = false;
                report["flow"] = json!({ "error": e.to_string() });
            }
        }

        let (lip, diverging) = lipschitz_section(f, center);
        non_lipschitz |= diverging;
        report["lipschitz"] = lip;

        report["continuity"] = if f.dim() == 1 && center.is_none() {
            section(continuity_section(f, CONTINUITY_ORDER))
        } else {
            json!({ "skipped": "needs a one-dimensional field without singular times" })
        };
        report["pushforward"] = section(
            pushforward_test(
                f,
                &p0,
                &p1,
                cfg.grids.pushforward_n,
                sflow_core::rng::derive_seed(cfg.seed, 4),
                PushforwardOptions { time_nodes: cfg.grids.time_nodes, permutations: cfg.grids.permutations },
            )
            .map(|r| {
                json!({
                    "n": r.n,
                    "mean_gap": r.mean_gap,
                    "mean_se": r.mean_se,
                    "cov_gap": r.cov_gap,
                    "cov_se": r.cov_se,
                    "energy": r.energy,
                    "energy_se": r.energy_se,
                    "exits": r.exits,
                })
            })
            .map_err(Into::into),
        );
    }
    // kernel statistics away from any collapse time
    let t_emp = match tau {
        Some(tau) if (tau - 0.5).abs() < 0.1 => 0.25,
        _ => 0.5,
    };
    report["empirical"] = section(empirical_section(&process, field.as_ref(), cfg, t_emp));

    let verdict = if non_lipschitz {
        DiagnoseVerdict::NonLipschitz
    } else if straight {
        DiagnoseVerdict::Straight
    } else {
        DiagnoseVerdict::NotStraight
    };
    report["verdict"] = json!(verdict.as_str());
    write_json(out, "diagnose.json", &report)?;
    Ok(report)
}
