use std::path::Path;

use serde_json::{json, Value};
use sflow_core::interpolants::{pencil_decompose, sample_paths, uniform_grid, Coupling, Schedule};

use super::mat;
use crate::config::{resolve_process, ExperimentConfig, Process};
use crate::output::{coord_columns, num, write_json, Table};
use crate::CliError;

fn schedule_json(s: &Schedule) -> Value {
    match s {
        Schedule::LinearAffine => json!({ "kind": "linear_affine" }),
        Schedule::SqrtBridge => json!({ "kind": "sqrt_bridge" }),
        Schedule::Collapse { tau } => json!({ "kind": "collapse", "tau": tau }),
        Schedule::Polynomial { a, b, c } => json!({ "kind": "polynomial", "a": a, "b": b, "c": c }),
    }
}

fn coupling_json(c: &Coupling) -> Value {
    match c {
        Coupling::Independent { .. } => json!({ "kind": "independent" }),
        Coupling::Deterministic { map, .. } => json!({
            "kind": "deterministic",
            "matrix": mat(&map.matrix),
            "offset": map.offset.as_slice(),
        }),
        Coupling::Joint(_) => json!({ "kind": "joint" }),
    }
}

/// Resolved interpolant: schedule, coupling, `Σ_Z`, endpoint moments and
/// the pencil factors of the endpoint covariances when both are Gaussian.
pub fn build(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let process = resolve_process(cfg)?;
    let p0 = cfg.p0.resolve("p0")?;
    let p1 = cfg.p1.resolve("p1")?;
    let mut report = json!({ "config": cfg, "dim": p0.dim() });
    match &process {
        Process::Bridge(b) => {
            report["process"] = json!("brownian_bridge");
            report["sigma"] = json!(b.sigma);
        }
        Process::Interpolant(i) => {
            report["process"] = json!("interpolant");
            report["schedule"] = schedule_json(&i.schedule);
            report["coupling"] = coupling_json(&i.coupling);
            report["noise_cov"] = if i.schedule.has_noise() { mat(&i.noise_cov()?) } else { Value::Null };
            if let Ok(g) = i.coupling.gaussian_moments() {
                report["endpoint_moments"] = json!({
                    "m0": g.m0.as_slice(),
                    "sigma0": mat(&g.sigma0),
                    "m1": g.m1.as_slice(),
                    "sigma1": mat(&g.sigma1),
                    "cross": mat(&g.cross),
                });
            }
        }
    }
    if let (Some(g0), Some(g1)) = (p0.as_gaussian(), p1.as_gaussian()) {
        let p = pencil_decompose(g0.cov(), g1.cov())?;
        report["pencil"] = json!({ "v": mat(&p.v), "lambda": p.lambda, "sigma_z": mat(&p.sigma_z()) });
    }
    write_json(out, "interpolant.json", &report)?;
    Ok(report)
}

/// `grids.sample_paths` paths on `grids.time_nodes` uniform nodes as `paths.csv`.
pub fn sample(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let process = resolve_process(cfg)?;
    let times = uniform_grid(cfg.grids.time_nodes)?;
    let e = sample_paths(process.sampler(), cfg.grids.sample_paths, &times, cfg.seed)?;
    paths_table(&e).write(out, "paths.csv")?;
    let report = json!({
        "config": cfg,
        "paths": e.n_paths,
        "time_nodes": times.len(),
        "dim": e.dim,
    });
    write_json(out, "sample.json", &report)?;
    Ok(report)
}

pub(crate) fn paths_table(e: &sflow_core::interpolants::PathEnsemble) -> Table {
    let mut t = Table::new(["path".to_string(), "t".to_string()].into_iter().chain(coord_columns("x", e.dim)));
    for p in 0..e.n_paths {
        for (k, &tk) in e.times.iter().enumerate() {
            let mut row = vec![p.to_string(), num(tk)];
            row.extend(e.value(p, k).iter().map(|&x| num(x)));
            t.push(row);
        }
    }
    t
}
