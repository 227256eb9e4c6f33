//! JSON experiment configuration and its resolution into library objects.

use serde::{Deserialize, Serialize};
use sflow_core::interpolants::{
    build_1d_gaussian, build_affine, build_brownian_bridge, build_collapse, build_multivariate_gaussian,
    build_same_cov_gaussian, gaussian_ot_map, BrownianBridge, Coupling, GeneralizedInterpolant, PathSampler,
};
use sflow_core::linalg::{from_rows, to_rows};
use sflow_core::measures::{AxisBox, GaussianMeasure, MeasureSpec, Mixture};
use sflow_core::Mat;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureConfig {
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    Mixture { components: Vec<MeasureConfig>, weights: Vec<f64> },
}

impl MeasureConfig {
    pub fn gaussian_1d(mean: f64, var: f64) -> Self {
        Self::Gaussian { mean: vec![mean], cov: vec![vec![var]] }
    }

    pub fn gaussian(mean: Vec<f64>, cov: &Mat) -> Self {
        Self::Gaussian { mean, cov: to_rows(cov) }
    }

    pub fn resolve(&self, name: &str) -> Result<MeasureSpec, CliError> {
        let ctx = |e: sflow_core::Error| CliError::Config(format!("{name}: {e}"));
        Ok(match self {
            Self::Gaussian { mean, cov } => GaussianMeasure::new(mean.clone(), from_rows(cov).map_err(ctx)?).map_err(ctx)?.into(),
            Self::Uniform { lo, hi } => MeasureSpec::Uniform(sflow_core::measures::Uniform::new(lo.clone(), hi.clone()).map_err(ctx)?),
            Self::Mixture { components, weights } => {
                let parts = components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.resolve(&format!("{name}.components[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Mixture::new(parts, weights.clone()).map_err(ctx)?.into()
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AffineCoupling {
    #[default]
    Independent,
    /// Gaussian optimal transport map.
    Monge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case")]
pub enum InterpolantConfig {
    SameCov,
    Gaussian1d,
    Multivariate,
    Affine {
        #[serde(default)]
        coupling: AffineCoupling,
    },
    Collapse { tau: f64 },
    Bridge {
        #[serde(default = "one")]
        sigma: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub time_nodes: usize,
    /// Per-axis spatial nodes for kernel statistics (d = 1; higher d uses fewer).
    pub spatial_nodes: usize,
    /// Paths used for conditional statistics.
    pub paths: usize,
    /// Paths written by `sample` and the figure bundles.
    pub sample_paths: usize,
    pub pushforward_n: usize,
    pub permutations: usize,
    /// Launch points for flow diagnostics.
    pub launch: usize,
    pub stencil_order: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            time_nodes: 201,
            spatial_nodes: 41,
            paths: 20_000,
            sample_paths: 25,
            pushforward_n: 10_000,
            permutations: 20,
            launch: 50,
            stencil_order: 4,
        }
    }
}

/// Interval with optional (infinite) ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl IntervalConfig {
    pub fn to_box(&self, name: &str) -> Result<AxisBox, CliError> {
        AxisBox::interval(self.lo.unwrap_or(f64::NEG_INFINITY), self.hi.unwrap_or(f64::INFINITY))
            .map_err(|e| CliError::Config(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceProcess {
    #[default]
    Affine,
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOverride {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NogoConfig {
    pub s0: IntervalConfig,
    pub s1: IntervalConfig,
    #[serde(default)]
    pub reference: ReferenceProcess,
    #[serde(default = "one")]
    pub bridge_sigma: f64,
    #[serde(default = "nogo_paths")]
    pub paths: usize,
    #[serde(default = "nogo_nodes")]
    pub time_nodes: usize,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    /// Replace the component scale of a two-mode Gaussian target and recompute.
    #[serde(default)]
    pub sigma_sweep: Vec<f64>,
    /// Skip the fit and use these constants.
    #[serde(default)]
    pub fit: Option<FitOverride>,
}

fn nogo_paths() -> usize {
    20_000
}
fn nogo_nodes() -> usize {
    201
}
fn default_deltas() -> Vec<f64> {
    vec![0.02, 0.05, 0.1, 0.2, 0.4]
}
fn default_thetas() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 1.5, 2.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub p0: MeasureConfig,
    pub p1: MeasureConfig,
    pub interpolant: InterpolantConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub nogo: Option<NogoConfig>,
}

impl ExperimentConfig {
    /// The one-dimensional straight-line Gaussian example `N(−2, 0.36) → N(3, 2.25)`.
    pub fn figure1() -> Self {
        Self {
            seed: 0,
            p0: MeasureConfig::gaussian_1d(-2.0, 0.36),
            p1: MeasureConfig::gaussian_1d(3.0, 2.25),
            interpolant: InterpolantConfig::Gaussian1d,
            grids: GridConfig::default(),
            nogo: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }
}

/// A resolved process: either a schedule-affine interpolant or a Brownian bridge.
#[derive(Debug, Clone)]
pub enum Process {
    Interpolant(GeneralizedInterpolant),
    Bridge(BrownianBridge),
}

impl Process {
    pub fn sampler(&self) -> &dyn PathSampler {
        match self {
            Self::Interpolant(i) => i,
            Self::Bridge(b) => b,
        }
    }

    pub fn interpolant(&self) -> Option<&GeneralizedInterpolant> {
        match self {
            Self::Interpolant(i) => Some(i),
            Self::Bridge(_) => None,
        }
    }
}

fn gaussian_of<'a>(m: &'a MeasureSpec, name: &str) -> Result<&'a GaussianMeasure, CliError> {
    m.as_gaussian().ok_or_else(|| CliError::Config(format!("{name}: this builder needs a Gaussian measure")))
}

pub fn resolve_process(cfg: &ExperimentConfig) -> Result<Process, CliError> {
    let p0 = cfg.p0.resolve("p0")?;
    let p1 = cfg.p1.resolve("p1")?;
    let ctx = |e: sflow_core::Error| CliError::Config(format!("interpolant: {e}"));
    if p0.dim() != p1.dim() {
        return Err(CliError::Config(format!("p0 has dimension {} but p1 has {}", p0.dim(), p1.dim())));
    }
    let interp = match &cfg.interpolant {
        InterpolantConfig::SameCov => {
            let (g0, g1) = (gaussian_of(&p0, "p0")?, gaussian_of(&p1, "p1")?);
            let scale = sflow_core::linalg::frobenius(g0.cov()).max(1.0);
            if sflow_core::linalg::frobenius(&(g0.cov() - g1.cov())) > 1e-12 * scale {
                return Err(CliError::Config("same_cov builder: p0 and p1 covariances differ".into()));
            }
            build_same_cov_gaussian(g0.mean().iter().copied().collect(), g1.mean().iter().copied().collect(), g0.cov().clone())
                .map_err(ctx)?
        }
        InterpolantConfig::Gaussian1d => {
            let (g0, g1) = (gaussian_of(&p0, "p0")?, gaussian_of(&p1, "p1")?);
            if g0.dim() != 1 {
                return Err(CliError::Config("gaussian_1d builder needs one-dimensional measures".into()));
            }
            build_1d_gaussian(g0.mean()[0], g0.cov()[(0, 0)].sqrt(), g1.mean()[0], g1.cov()[(0, 0)].sqrt()).map_err(ctx)?
        }
        InterpolantConfig::Multivariate => {
            let (g0, g1) = (gaussian_of(&p0, "p0")?, gaussian_of(&p1, "p1")?);
            build_multivariate_gaussian(
                g0.mean().iter().copied().collect(),
                g0.cov().clone(),
                g1.mean().iter().copied().collect(),
                g1.cov().clone(),
            )
            .map_err(ctx)?
        }
        InterpolantConfig::Affine { coupling: AffineCoupling::Independent } => {
            build_affine(Coupling::independent(p0, p1).map_err(ctx)?)
        }
        InterpolantConfig::Affine { coupling: AffineCoupling::Monge } => {
            let (g0, g1) = (gaussian_of(&p0, "p0")?, gaussian_of(&p1, "p1")?);
            let map = gaussian_ot_map(g0.mean().as_slice(), g0.cov(), g1.mean().as_slice(), g1.cov()).map_err(ctx)?;
            build_affine(Coupling::deterministic(p0, map).map_err(ctx)?)
        }
        InterpolantConfig::Collapse { tau } => build_collapse(*tau, Coupling::independent(p0, p1).map_err(ctx)?).map_err(ctx)?,
        InterpolantConfig::Bridge { sigma } => {
            return Ok(Process::Bridge(build_brownian_bridge(p0, p1).and_then(|b| b.with_sigma(*sigma)).map_err(ctx)?));
        }
    };
    Ok(Process::Interpolant(interp))
}
