use std::path::Path;

use serde_json::{json, Value};
use sflow_core::flow::{
    acceleration_diagnostic, integrate_flow, one_step_gap, straightness_deviation, FlowTrajectories, Method,
};
use sflow_core::interpolants::{sample_paths, uniform_grid};
use sflow_core::measures::MeasureSpec;
use sflow_core::velocity::GaussianField;
use sflow_core::Mat;

use super::build::paths_table;
use super::{analytic_field, launch_points, mat};
use crate::config::{resolve_process, ExperimentConfig, GridConfig, InterpolantConfig, MeasureConfig};
use crate::output::{coord_columns, num, write_json, Table};
use crate::CliError;

/// Seed of the rotation applied to the default third-figure source covariance.
pub const FIGURE3_ROTATION_SEED: u64 = 3;

const MARGINAL_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Haar-like rotation from the QR factor of a seeded Gaussian matrix, `det = +1`.
pub fn figure3_rotation(seed: u64) -> Mat {
    let mut rng = sflow_core::rng::stream(seed, 0);
    let g = Mat::from_fn(3, 3, |_, _| sflow_core::rng::normal(&mut rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..3 {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Built-in Gaussian configurations for the three figures.
pub fn figure_config(which: u8, seed: u64) -> Result<ExperimentConfig, CliError> {
    let diag = |v: &[f64]| Mat::from_diagonal(&sflow_core::Vector::from_column_slice(v));
    let grids = GridConfig::default();
    let (p0, p1, interpolant) = match which {
        1 => {
            let mut c = ExperimentConfig::figure1();
            c.seed = seed;
            return Ok(c);
        }
        2 => (
            MeasureConfig::gaussian(vec![-2.0, -1.0], &diag(&[0.36, 1.0])),
            MeasureConfig::gaussian(vec![2.0, 1.0], &diag(&[2.25, 0.25])),
            InterpolantConfig::Multivariate,
        ),
        3 => {
            let r = figure3_rotation(FIGURE3_ROTATION_SEED);
            let s0 = &r * diag(&[0.25, 1.0, 2.25]) * r.transpose();
            let s0 = (&s0 + s0.transpose()) * 0.5;
            (
                MeasureConfig::gaussian(vec![-2.0, -1.0, 0.0], &s0),
                MeasureConfig::gaussian(vec![2.0, 1.0, 0.0], &diag(&[2.25, 0.25, 1.0])),
                InterpolantConfig::Multivariate,
            )
        }
        _ => return Err(CliError::Config(format!("unknown figure {which}; expected 1, 2 or 3"))),
    };
    Ok(ExperimentConfig { seed, p0, p1, interpolant, grids, nogo: None })
}

/// Tensor grid over `m0 ± 2.5σ` (1-d, `launch` points) or `m0 ± 2σ_i`
/// (5 per axis in 2-d, 4 per axis in 3-d and above).
fn launch_grid(p0: &MeasureSpec, launch: usize) -> Vec<f64> {
    let (m, s) = (p0.mean(), p0.covariance());
    let d = m.len();
    let (per_axis, width) = match d {
        1 => (launch, 2.5),
        2 => (5, 2.0),
        _ => (4, 2.0),
    };
    let axis = |i: usize| -> Vec<f64> {
        let sd = s[(i, i)].sqrt();
        (0..per_axis)
            .map(|j| m[i] - width * sd + 2.0 * width * sd * j as f64 / (per_axis - 1) as f64)
            .collect()
    };
    let axes: Vec<Vec<f64>> = (0..d).map(axis).collect();
    let total = per_axis.pow(d as u32);
    let mut out = Vec::with_capacity(total * d);
    for mut k in 0..total {
        let mut pt = vec![0.0; d];
        // last axis varies fastest
        for i in (0..d).rev() {
            pt[i] = axes[i][k % per_axis];
            k /= per_axis;
        }
        out.extend(pt);
    }
    out
}

fn flow_table(tr: &FlowTrajectories) -> Table {
    let mut t = Table::new(["trajectory".to_string(), "t".to_string()].into_iter().chain(coord_columns("x", tr.dim)));
    for j in 0..tr.n_traj() {
        for (k, &tk) in tr.times.iter().enumerate() {
            let mut row = vec![j.to_string(), num(tk)];
            row.extend(tr.state(j, k).iter().map(|&x| num(x)));
            t.push(row);
        }
    }
    t
}

fn need_field(cfg: &ExperimentConfig) -> Result<GaussianField, CliError> {
    analytic_field(&resolve_process(cfg)?)
        .ok_or_else(|| CliError::Config("flow needs a Gaussian interpolant with a closed-form field".into()))
}

fn flow_summary(f: &GaussianField, x0: &[f64], times: &[f64], tr: &FlowTrajectories) -> Result<Value, CliError> {
    if let Some(e) = &tr.halted {
        return Ok(json!({
            "trajectories": tr.n_traj(),
            "halted": e.to_string(),
            "valid_until_t": tr.times[tr.valid_until.min(tr.times.len() - 1)],
        }));
    }
    let st = straightness_deviation(tr)?;
    Ok(json!({
        "trajectories": tr.n_traj(),
        "straightness_deviation": st.max_deviation,
        "max_acceleration": acceleration_diagnostic(tr)?,
        "one_step_gap": one_step_gap(f, x0, times)?,
        "exits": tr.n_exited(),
    }))
}

/// RK4 trajectories of the closed-form field from `grids.launch` points of `P₀`.
pub fn flow(cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let f = need_field(cfg)?;
    let p0 = cfg.p0.resolve("p0")?;
    let times = uniform_grid(cfg.grids.time_nodes)?;
    let x0 = launch_points(&p0, cfg.grids.launch, cfg.seed)?;
    let tr = integrate_flow(&f, &x0, &times, Method::Rk4)?;
    flow_table(&tr).write(out, "flow.csv")?;
    let report = json!({ "config": cfg, "flow": flow_summary(&f, &x0, &times, &tr)? });
    write_json(out, "flow.json", &report)?;
    Ok(report)
}

/// `paths.csv`, `flow.csv`, `marginals.csv` (1-d only) and `figure.json`.
pub fn figure(which: u8, cfg: &ExperimentConfig, out: &Path) -> Result<Value, CliError> {
    let process = resolve_process(cfg)?;
    let f = analytic_field(&process)
        .ok_or_else(|| CliError::Config("figures need Gaussian endpoints and a Gaussian builder".into()))?;
    let p0 = cfg.p0.resolve("p0")?;
    let times = uniform_grid(cfg.grids.time_nodes)?;

    let e = sample_paths(process.sampler(), cfg.grids.sample_paths, &times, cfg.seed)?;
    paths_table(&e).write(out, "paths.csv")?;

    let x0 = launch_grid(&p0, cfg.grids.launch);
    let tr = integrate_flow(&f, &x0, &times, Method::Rk4)?;
    flow_table(&tr).write(out, "flow.csv")?;

    if f.dim() == 1 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &t in &MARGINAL_TIMES {
            let (m, sd) = (f.mean(t)[0], f.covariance(t)[(0, 0)].sqrt());
            lo = lo.min(m - 5.0 * sd);
            hi = hi.max(m + 5.0 * sd);
        }
        let mut table = Table::new(["t", "x", "density"]);
        for &t in &MARGINAL_TIMES {
            let s = f.slice(t)?;
            for j in 0..401 {
                let x = lo + (hi - lo) * j as f64 / 400.0;
                table.push(vec![num(t), num(x), num(s.density(&[x]))]);
            }
        }
        table.write(out, "marginals.csv")?;
    }

    let interp = process.interpolant().expect("analytic field implies an interpolant");
    let mut report = json!({
        "figure": which,
        "config": cfg,
        "sigma0": mat(&f.coupling.sigma0),
        "sigma1": mat(&f.coupling.sigma1),
        "sigma_z": if interp.schedule.has_noise() { mat(&f.sigma_z) } else { Value::Null },
        "sample_paths": e.n_paths,
        "flow": flow_summary(&f, &x0, &times, &tr)?,
    });
    if which == 3 && *cfg == figure_config(3, cfg.seed)? {
        report["rotation"] = mat(&figure3_rotation(FIGURE3_ROTATION_SEED));
        report["rotation_seed"] = json!(FIGURE3_ROTATION_SEED);
    }
    write_json(out, "figure.json", &report)?;
    Ok(report)
}
