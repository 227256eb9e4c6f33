//! Subcommand implementations. Each returns the JSON report it wrote.

mod build;
mod diagnose;
mod figure;
mod nogo;

use std::path::Path;

use serde_json::{json, Value};
use sflow_core::linalg::to_rows;
use sflow_core::measures::MeasureSpec;
use sflow_core::velocity::GaussianField;
use sflow_core::Mat;

use crate::config::{ExperimentConfig, Process};
use crate::CliError;

pub use build::{build, sample};
pub use diagnose::{diagnose, DiagnoseVerdict};
pub use figure::{figure, figure_config, flow, figure3_rotation, FIGURE3_ROTATION_SEED};
pub use nogo::{bound, nogo, BoundArgs};

/// Reads a config file and applies a seed override.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let path = path.ok_or_else(|| CliError::Config("this command needs --config <path>".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    validate_grids(&cfg)?;
    Ok(cfg)
}

pub fn validate_grids(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let g = &cfg.grids;
    let bad = |what: &str| Err(CliError::Config(format!("grids.{what}")));
    if g.time_nodes < 3 {
        return bad("time_nodes must be at least 3");
    }
    if g.sample_paths == 0 || g.launch < 2 {
        return bad("sample_paths must be positive and launch at least 2");
    }
    if g.paths < 1000 {
        return bad("paths must be at least 1000 for kernel statistics");
    }
    if g.pushforward_n < 2 || g.permutations == 0 {
        return bad("pushforward_n must be at least 2 and permutations positive");
    }
    if sflow_core::velocity::central_weights(g.stencil_order).is_err() {
        return bad("stencil_order must be one of 2, 4, 6, 8");
    }
    Ok(())
}

pub(crate) fn mat(m: &Mat) -> Value {
    json!(to_rows(m))
}

/// Closed-form field of a Gaussian interpolant; `None` for bridges and
/// non-Gaussian endpoints.
pub(crate) fn analytic_field(p: &Process) -> Option<GaussianField> {
    p.interpolant().and_then(|i| GaussianField::new(i).ok())
}

/// Launch points for flow diagnostics: `n` quantile midpoints in 1-d, `n`
/// seeded draws otherwise.
pub(crate) fn launch_points(p0: &MeasureSpec, n: usize, seed: u64) -> Result<Vec<f64>, CliError> {
    if p0.dim() == 1 {
        (0..n).map(|i| p0.quantile_1d((i as f64 + 0.5) / n as f64).map_err(CliError::from)).collect()
    } else {
        Ok(p0.sample(n, sflow_core::rng::derive_seed(seed, 7))?)
    }
}

/// `m ± s·√Σ_ii e_i` for `s ∈ {1, 2}` plus the mean itself.
pub(crate) fn probe_points(m: &[f64], sigma: &Mat) -> Vec<Vec<f64>> {
    let mut out = vec![m.to_vec()];
    for i in 0..m.len() {
        let sd = sigma[(i, i)].max(0.0).sqrt();
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let mut x = m.to_vec();
            x[i] += s * sd;
            out.push(x);
        }
    }
    out
}

/// Runs one report section; a failure becomes `{"error": …}` instead of aborting.
pub(crate) fn section(r: Result<Value, CliError>) -> Value {
    r.unwrap_or_else(|e| json!({ "error": e.to_string() }))
}
