use std::path::Path;

use serde_json::{json, Value};
use sflow_core::interpolants::{build_affine, build_brownian_bridge, sample_paths, uniform_grid, Coupling};
use sflow_core::measures::{epsilon_disconnected, AxisBox, MeasureSpec, Mixture, SupportGeometry};
use sflow_core::nogo::{
    b_constant, build_nogo_static, concentration_fit, crossing_bound, empirical_crossing_probability,
    impossibility_certificate, verify_envelope, ConcentrationFit, CrossingReport, NoGoZone, Verdict,
};

use crate::config::{ExperimentConfig, FitOverride, NogoConfig, ReferenceProcess};
use crate::output::{num, write_json, Table};
use crate::CliError;

/// Envelope cells may exceed the fit by at most this many standard errors.
pub const ENVELOPE_Z: f64 = 3.0;

fn interval_json(b: &AxisBox) -> Value {
    let end = |x: f64| if x.is_finite() { json!(x) } else { Value::Null };
    json!({ "lo": end(b.lo[0]), "hi": end(b.hi[0]) })
}

fn zone_json(z: &NoGoZone) -> Value {
    match *z {
        NoGoZone::Static { a, b } => json!({ "kind": "static", "a": a, "b": b }),
        NoGoZone::Trapezoid { x0, x1, s0, s1 } => json!({ "kind": "trapezoid", "x0": x0, "x1": x1, "s0": s0, "s1": s1 }),
    }
}

fn fit_json(f: &ConcentrationFit) -> Value {
    json!({
        "a": f.a,
        "alpha": f.alpha,
        "beta": f.beta,
        "a_least_squares": f.a_least_squares,
        "r_squared": f.r_squared,
        "cells_used": f.cells_used,
        "clamped": f.clamped,
    })
}

fn geometry_json(g: &SupportGeometry) -> Value {
    json!({
        "s0": interval_json(&g.s0),
        "s1": interval_json(&g.s1),
        "separation": g.separation,
        "w0": g.w0,
        "w1": g.w1,
        "epsilon": g.epsilon,
    })
}

fn certificate_json(r: &CrossingReport) -> Value {
    json!({
        "verdict": r.verdict.as_str(),
        "epsilon": r.epsilon,
        "w0w1": r.w0w1,
        "bound": r.bound,
        "epsilon0": r.epsilon0,
        "delta": r.delta_star,
        "terms": r.terms,
        "exponents": r.exponents,
        "d_constant": r.d_constant,
        "b_constant": r.b_constant,
        "case_constant": r.case_constant,
        "frostman": { "c": r.frostman.c, "gamma": r.frostman.gamma },
        "zone": zone_json(&r.zone),
        "p_cross": r.p_cross,
        "se_cross": r.se_cross,
        "p_enter": r.p_enter,
        "se_enter": r.se_enter,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn crossing_row(label: &str, sigma: Option<f64>, r: &CrossingReport) -> Vec<String> {
    vec![
        label.to_string(),
        opt(sigma),
        num(r.epsilon),
        num(r.w0w1),
        num(r.bound),
        num(r.epsilon0),
        r.verdict.as_str().to_string(),
        opt(r.p_cross),
        opt(r.se_cross),
        opt(r.p_enter),
        opt(r.se_enter),
    ]
}

/// Two-mode Gaussian target with every component variance replaced by `σ²`.
fn rescaled_target(p1: &MeasureSpec, sigma: f64) -> Result<MeasureSpec, CliError> {
    let bad = || CliError::Config("sigma_sweep needs a one-dimensional mixture of Gaussians as p1".into());
    let MeasureSpec::Mixture(m) = p1 else { return Err(bad()) };
    let parts = m
        .components()
        .iter()
        .map(|c| {
            let g = c.as_gaussian().filter(|g| g.dim() == 1).ok_or_else(bad)?;
            Ok(MeasureSpec::gaussian_1d(g.mean()[0], sigma * sigma)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Mixture::new(parts, m.weights().to_vec())?.into())
}

fn geometry(p1: &MeasureSpec, ng: &NogoConfig) -> Result<SupportGeometry, CliError> {
    let (s0, s1) = (ng.s0.to_box("nogo.s0")?, ng.s1.to_box("nogo.s1")?);
    let (s0, s1) = if s0.hi[0] <= s1.lo[0] { (s0, s1) } else { (s1, s0) };
    epsilon_disconnected(p1, &s0, &s1).map_err(|e| match e {
        sflow_core::Error::NotDisconnected(m) => CliError::Config(format!(
            "declared supports S0 and S1 are not disconnected ({m}); no no-go zone exists between touching sets"
        )),
        e => e.into(),
    })
}

/// Reference ensemble, concentration fit, ε-disconnected geometry of `P₁`,
/// certificate and empirical crossing rates; writes `nogo.json` and `crossing.csv`.
pub fn nogo(cfg: &ExperimentConfig, out: &Path, fail_on_violation: bool) -> Result<Value, CliError> {
    let ng = cfg.nogo.as_ref().ok_or_else(|| CliError::Config("config has no `nogo` section".into()))?;
    let p0 = cfg.p0.resolve("p0")?;
    let p1 = cfg.p1.resolve("p1")?;
    if p0.dim() != 1 || p1.dim() != 1 {
        return Err(CliError::Config("nogo runs on one-dimensional measures".into()));
    }
    if ng.paths < 1000 || ng.time_nodes < 3 {
        return Err(CliError::Config("nogo.paths must be at least 1000 and nogo.time_nodes at least 3".into()));
    }
    let g = geometry(&p1, ng)?;
    let times = uniform_grid(ng.time_nodes)?;
    let e = match ng.reference {
        ReferenceProcess::Affine => {
            let r = build_affine(Coupling::independent(p0.clone(), p1.clone())?);
            sample_paths(&r, ng.paths, &times, cfg.seed)?
        }
        ReferenceProcess::Bridge => {
            let r = build_brownian_bridge(p0.clone(), p1.clone())?.with_sigma(ng.bridge_sigma)?;
            sample_paths(&r, ng.paths, &times, cfg.seed)?
        }
    };
    let (fit, envelope) = match ng.fit {
        Some(FitOverride { a, alpha, beta }) => (ConcentrationFit::new(a, alpha, beta)?, Value::Null),
        None => {
            let fit = concentration_fit(&e, &ng.deltas, &ng.thetas)?;
            let chk = verify_envelope(&fit, &e, &ng.deltas, &ng.thetas, ENVELOPE_Z)?;
            let env = json!({ "cells": chk.cells, "violations": chk.violations, "max_excess_z": chk.max_excess_z });
            (fit, env)
        }
    };

    let cert = impossibility_certificate(&p0, &g, &fit)?;
    let zone = if g.epsilon == 0.0 { build_nogo_static(&g.s0, &g.s1)? } else { cert.zone };
    let est = empirical_crossing_probability(&e, &zone)?;
    let cert = cert.with_empirical(&est);

    let mut table = Table::new([
        "label", "sigma", "epsilon", "w0w1", "bound", "epsilon0", "verdict", "p_cross", "se_cross", "p_enter", "se_enter",
    ]);
    table.push(crossing_row("base", None, &cert));
    let mut sweep = Vec::new();
    for &sigma in &ng.sigma_sweep {
        let target = rescaled_target(&p1, sigma)?;
        let gs = geometry(&target, ng)?;
        let r = impossibility_certificate(&p0, &gs, &fit)?;
        table.push(crossing_row("sweep", Some(sigma), &r));
        sweep.push(json!({ "sigma": sigma, "geometry": geometry_json(&gs), "certificate": certificate_json(&r) }));
    }
    table.write(out, "crossing.csv")?;

    let lemma = if g.epsilon > 0.0 {
        let b = crossing_bound(g.epsilon, g.separation, &fit)?;
        json!({ "gap": g.separation, "bound": b.bound, "delta_star": b.delta_star })
    } else {
        Value::Null
    };
    let report = json!({
        "config": cfg,
        "reference": match ng.reference { ReferenceProcess::Affine => "affine_independent", ReferenceProcess::Bridge => "brownian_bridge" },
        "paths": e.n_paths,
        "fit": fit_json(&fit),
        "envelope": envelope,
        "geometry": geometry_json(&g),
        "empirical_zone": zone_json(&zone),
        "certificate": certificate_json(&cert),
        "crossing_lemma": lemma,
        "sigma_sweep": sweep,
    });
    write_json(out, "nogo.json", &report)?;
    if fail_on_violation && cert.verdict == Verdict::Violated {
        return Err(CliError::Violated);
    }
    Ok(report)
}

/// Arguments of the standalone crossing-bound calculator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundArgs {
    pub epsilon: f64,
    pub gap: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Frostman constant `C` and exponent for the early-crossing constant.
    pub frostman_c: f64,
    pub gamma: f64,
}

/// `P(N ≥ 1)` bound and `δ*` for given class constants; writes `bound.json`.
pub fn bound(args: BoundArgs, out: &Path) -> Result<Value, CliError> {
    let fit = ConcentrationFit::new(args.a, args.alpha, args.beta)
        .map_err(|e| CliError::Config(format!("bound constants: {e}")))?;
    let b = crossing_bound(args.epsilon, args.gap, &fit).map_err(|e| CliError::Config(format!("bound: {e}")))?;
    let report = json!({
        "epsilon": args.epsilon,
        "gap": args.gap,
        "a": args.a,
        "alpha": args.alpha,
        "beta": args.beta,
        "bound": b.bound,
        "delta_star": b.delta_star,
        "b_constant": b_constant(args.alpha, args.beta, args.gamma, args.a, args.frostman_c),
    });
    write_json(out, "bound.json", &report)?;
    Ok(report)
}
