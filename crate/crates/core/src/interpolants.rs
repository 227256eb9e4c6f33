//! Generalized interpolants `X_t = a_t X₀ + b_t X₁ + c_t Z`, the Gaussian
//! straight-line builders, the Brownian bridge and path ensembles.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{check_spd, sym_apply, sym_eigen, sym_inv_sqrt, sym_sqrt, Mat, Vector};
use crate::measures::{GaussianMeasure, MeasureSpec};
use crate::rng::{self, PathRng};
use crate::{par, Error, Result};

/// Value and first two time derivatives of a scalar coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Self { v, d1, d2 }
    }
}

/// Schedule coefficients at one time. `c_sq` carries `c²` separately because it
/// stays smooth where `ċ` blows up (the sqrt bridge at `t ∈ {0, 1}`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: Jet,
    pub b: Jet,
    pub c: Jet,
    pub c_sq: Jet,
}

impl Coefficients {
    /// `ċ²`.
    pub fn c_dot_sq(&self) -> f64 {
        self.c.d1 * self.c.d1
    }

    /// `c·c̈ = ½(c²)'' − ċ²`.
    pub fn c_cddot(&self) -> f64 {
        0.5 * self.c_sq.d2 - self.c_dot_sq()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// `(1 − t, t, 0)`.
    LinearAffine,
    /// `(1 − t, t, √(2t(1 − t)))`.
    SqrtBridge,
    /// Linear collapse onto the origin at `τ`, then linear expansion to `X₁`.
    Collapse { tau: f64 },
    /// Polynomials in `t` with ascending coefficients.
    Polynomial { a: Vec<f64>, b: Vec<f64>, c: Vec<f64> },
}

fn poly_jet(p: &[f64], t: f64) -> Jet {
    let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &coef in p.iter().rev() {
        d2 = d2 * t + 2.0 * d1;
        d1 = d1 * t + v;
        v = v * t + coef;
    }
    Jet::new(v, d1, d2)
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, x) in p.iter().enumerate() {
        for (j, y) in q.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Schedule {
    pub fn collapse(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::invalid(format!("collapse time τ = {tau} outside (0, 1)")));
        }
        Ok(Schedule::Collapse { tau })
    }

    pub fn polynomial(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = Schedule::Polynomial { a, b, c };
        let (a0, b0, c0) = s.values(0.0);
        let (a1, b1, c1) = s.values(1.0);
        let ok = |x: f64, target: f64| (x - target).abs() <= 1e-14;
        if !(ok(a0, 1.0) && ok(b0, 0.0) && ok(c0, 0.0) && ok(a1, 0.0) && ok(b1, 1.0) && ok(c1, 0.0)) {
            return Err(Error::invalid(
                "polynomial schedule violates a(0)=1, a(1)=0, b(0)=0, b(1)=1, c(0)=c(1)=0",
            ));
        }
        Ok(s)
    }

    /// `(a_t, b_t, c_t)`; always defined on `[0, 1]`.
    pub fn values(&self, t: f64) -> (f64, f64, f64) {
        match self {
            Schedule::LinearAffine => (1.0 - t, t, 0.0),
            Schedule::SqrtBridge => (1.0 - t, t, libm::sqrt((2.0 * t * (1.0 - t)).max(0.0))),
            Schedule::Collapse { tau } => {
                let tau = *tau;
                if t < tau {
                    (1.0 - t / tau, 0.0, 0.0)
                } else if t > tau {
                    (0.0, (t - tau) / (1.0 - tau), 0.0)
                } else {
                    (0.0, 0.0, 0.0)
                }
            }
            Schedule::Polynomial { a, b, c } => (poly_jet(a, t).v, poly_jet(b, t).v, poly_jet(c, t).v),
        }
    }

    /// Coefficients with derivatives. The collapse kink at `τ` is undefined.
    pub fn jets(&self, t: f64) -> Result<Coefficients> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutsideDomain);
        }
        Ok(match self {
            Schedule::LinearAffine => Coefficients {
                a: Jet::new(1.0 - t, -1.0, 0.0),
                b: Jet::new(t, 1.0, 0.0),
                c: Jet::default(),
                c_sq: Jet::default(),
            },
            Schedule::SqrtBridge => {
                let c_sq = 2.0 * t * (1.0 - t);
                let c = libm::sqrt(c_sq.max(0.0));
                // ċ = (1 − 2t)/c, c̈ = −2/c − ċ²/c; both infinite at the endpoints
                let c1 = (1.0 - 2.0 * t) / c;
                let c2 = (-2.0 - c1 * c1) / c;
                Coefficients {
                    a: Jet::new(1.0 - t, -1.0, 0.0),
                    b: Jet::new(t, 1.0, 0.0),
                    c: Jet::new(c, c1, c2),
                    c_sq: Jet::new(c_sq, 2.0 - 4.0 * t, -4.0),
                }
            }
            Schedule::Collapse { tau } => {
                let tau = *tau;
                if t == tau {
                    return Err(Error::UndefinedDerivative { t });
                }
                let (a, b) = if t < tau {
                    (Jet::new(1.0 - t / tau, -1.0 / tau, 0.0), Jet::default())
                } else {
                    (Jet::default(), Jet::new((t - tau) / (1.0 - tau), 1.0 / (1.0 - tau), 0.0))
                };
                Coefficients { a, b, c: Jet::default(), c_sq: Jet::default() }
            }
            Schedule::Polynomial { a, b, c } => Coefficients {
                a: poly_jet(a, t),
                b: poly_jet(b, t),
                c: poly_jet(c, t),
                c_sq: poly_jet(&poly_mul(c, c), t),
            },
        })
    }

    pub fn has_noise(&self) -> bool {
        match self {
            Schedule::SqrtBridge => true,
            Schedule::Polynomial { c, .. } => c.iter().any(|&x| x != 0.0),
            _ => false,
        }
    }
}

/// `T(x) = matrix · x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Mat,
    pub offset: Vector,
}

impl AffineMap {
    pub fn new(matrix: Mat, offset: Vector) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != offset.len() {
            return Err(Error::DimensionMismatch { expected: offset.len(), found: matrix.nrows() });
        }
        Ok(Self { matrix, offset })
    }

    pub fn identity(d: usize) -> Self {
        Self { matrix: Mat::identity(d, d), offset: Vector::zeros(d) }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for i in 0..d {
            let mut acc = self.offset[i];
            for j in 0..d {
                acc += self.matrix[(i, j)] * x[j];
            }
            out[i] = acc;
        }
    }
}

/// Arbitrary joint law of `(X₀, X₁)`.
pub trait JointSampler: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn draw(&self, rng: &mut PathRng, x0: &mut [f64], x1: &mut [f64]);
    /// `(m₀, Σ₀, m₁, Σ₁, Cov(X₀, X₁))` when the joint law is Gaussian.
    fn gaussian_moments(&self) -> Option<GaussianCoupling> {
        None
    }
}

#[derive(Debug, Clone)]
pub enum Coupling {
    Independent { p0: MeasureSpec, p1: MeasureSpec },
    /// `X₁ = T(X₀)`.
    Deterministic { p0: MeasureSpec, map: AffineMap },
    Joint(Arc<dyn JointSampler>),
}

impl Coupling {
    pub fn independent(p0: MeasureSpec, p1: MeasureSpec) -> Result<Self> {
        if p0.dim() != p1.dim() {
            return Err(Error::DimensionMismatch { expected: p0.dim(), found: p1.dim() });
        }
        Ok(Coupling::Independent { p0, p1 })
    }

    pub fn deterministic(p0: MeasureSpec, map: AffineMap) -> Result<Self> {
        if p0.dim() != map.dim() {
            return Err(Error::DimensionMismatch { expected: p0.dim(), found: map.dim() });
        }
        Ok(Coupling::Deterministic { p0, map })
    }

    pub fn dim(&self) -> usize {
        match self {
            Coupling::Independent { p0, .. } | Coupling::Deterministic { p0, .. } => p0.dim(),
            Coupling::Joint(s) => s.dim(),
        }
    }

    /// Draws `(x₀, x₁)` from the joint law.
    pub fn draw(&self, rng: &mut PathRng, x0: &mut [f64], x1: &mut [f64]) {
        match self {
            Coupling::Independent { p0, p1 } => {
                p0.draw(rng, x0);
                p1.draw(rng, x1);
            }
            Coupling::Deterministic { p0, map } => {
                p0.draw(rng, x0);
                map.apply(x0, x1);
            }
            Coupling::Joint(s) => s.draw(rng, x0, x1),
        }
    }

    pub fn gaussian_moments(&self) -> Result<GaussianCoupling> {
        match self {
            Coupling::Independent { p0, p1 } => {
                let (g0, g1) = match (p0, p1) {
                    (MeasureSpec::Gaussian(g0), MeasureSpec::Gaussian(g1)) => (g0, g1),
                    _ => return Err(Error::NonGaussian),
                };
                let d = g0.dim();
                Ok(GaussianCoupling {
                    m0: g0.mean().clone(),
                    sigma0: g0.cov().clone(),
                    m1: g1.mean().clone(),
                    sigma1: g1.cov().clone(),
                    cross: Mat::zeros(d, d),
                })
            }
            Coupling::Deterministic { p0, map } => {
                let g0 = p0.as_gaussian().ok_or(Error::NonGaussian)?;
                let a = &map.matrix;
                Ok(GaussianCoupling {
                    m0: g0.mean().clone(),
                    sigma0: g0.cov().clone(),
                    m1: a * g0.mean() + &map.offset,
                    sigma1: a * g0.cov() * a.transpose(),
                    cross: g0.cov() * a.transpose(),
                })
            }
            Coupling::Joint(s) => s.gaussian_moments().ok_or(Error::NonGaussian),
        }
    }
}

/// First and second moments of a jointly Gaussian endpoint pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCoupling {
    pub m0: Vector,
    pub sigma0: Mat,
    pub m1: Vector,
    pub sigma1: Mat,
    /// `K = Cov(X₀, X₁)`.
    pub cross: Mat,
}

/// `X_t = a_t X₀ + b_t X₁ + c_t Z` with `(X₀, X₁) ∼ coupling` and `Z ∼ Q` independent.
#[derive(Debug, Clone)]
pub struct GeneralizedInterpolant {
    pub schedule: Schedule,
    pub coupling: Coupling,
    /// Auxiliary law `Q`; its dimension is the auxiliary dimension ℓ (equal to `d` here).
    pub noise: Option<MeasureSpec>,
}

impl GeneralizedInterpolant {
    pub fn new(schedule: Schedule, coupling: Coupling, noise: Option<MeasureSpec>) -> Result<Self> {
        let d = coupling.dim();
        match (&noise, schedule.has_noise()) {
            (Some(q), _) if q.dim() != d => {
                return Err(Error::DimensionMismatch { expected: d, found: q.dim() })
            }
            (None, true) => return Err(Error::invalid("schedule with c ≠ 0 needs an auxiliary law Q")),
            _ => {}
        }
        Ok(Self { schedule, coupling, noise })
    }

    pub fn dim(&self) -> usize {
        self.coupling.dim()
    }

    pub fn aux_dim(&self) -> usize {
        self.noise.as_ref().map_or(0, MeasureSpec::dim)
    }

    /// Noise covariance `Σ_Z` (zero without noise); errors if `Q` is not Gaussian.
    pub fn noise_cov(&self) -> Result<Mat> {
        match &self.noise {
            None => Ok(Mat::zeros(self.dim(), self.dim())),
            Some(MeasureSpec::Gaussian(q)) => Ok(q.cov().clone()),
            Some(_) => Err(Error::NonGaussian),
        }
    }

    /// `(x₀, x₁, z)` endpoint and noise draw for one path.
    pub fn draw_endpoints(&self, rng: &mut PathRng, x0: &mut [f64], x1: &mut [f64], z: &mut [f64]) {
        self.coupling.draw(rng, x0, x1);
        match &self.noise {
            Some(q) => q.draw(rng, z),
            None => z.iter_mut().for_each(|v| *v = 0.0),
        }
    }
}

/// Sqrt-bridge interpolant with `Q = N(0, Σ)` between `N(m₀, Σ)` and `N(m₁, Σ)`.
pub fn build_same_cov_gaussian(m0: Vec<f64>, m1: Vec<f64>, sigma: Mat) -> Result<GeneralizedInterpolant> {
    if m0.len() != m1.len() {
        return Err(Error::DimensionMismatch { expected: m0.len(), found: m1.len() });
    }
    let d = m0.len();
    let p0 = GaussianMeasure::new(m0, sigma.clone())?;
    let p1 = GaussianMeasure::new(m1, sigma.clone())?;
    let q = GaussianMeasure::new(vec![0.0; d], sigma)?;
    GeneralizedInterpolant::new(
        Schedule::SqrtBridge,
        Coupling::independent(p0.into(), p1.into())?,
        Some(q.into()),
    )
}

/// Sqrt-bridge interpolant between `N(m₀, s₀²)` and `N(m₁, s₁²)` with `Q = N(0, s₀s₁)`.
pub fn build_1d_gaussian(m0: f64, s0: f64, m1: f64, s1: f64) -> Result<GeneralizedInterpolant> {
    if !(s0 > 0.0 && s1 > 0.0) {
        return Err(Error::invalid(format!("standard deviations must be positive, got {s0}, {s1}")));
    }
    GeneralizedInterpolant::new(
        Schedule::SqrtBridge,
        Coupling::independent(
            GaussianMeasure::scalar(m0, s0 * s0)?.into(),
            GaussianMeasure::scalar(m1, s1 * s1)?.into(),
        )?,
        Some(GaussianMeasure::scalar(0.0, s0 * s1)?.into()),
    )
}

/// Simultaneous factorization `Σ₀ = VVᵀ`, `Σ₁ = VΛVᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    pub v: Mat,
    /// Diagonal of Λ, ascending.
    pub lambda: Vec<f64>,
}

impl Pencil {
    /// `Σ_Z = VΛ^{1/2}Vᵀ`.
    pub fn sigma_z(&self) -> Mat {
        let root = Vector::from_iterator(self.lambda.len(), self.lambda.iter().map(|l| l.sqrt()));
        &self.v * Mat::from_diagonal(&root) * self.v.transpose()
    }

    pub fn reconstruct(&self) -> (Mat, Mat) {
        let lam = Mat::from_diagonal(&Vector::from_vec(self.lambda.clone()));
        (&self.v * self.v.transpose(), &self.v * lam * self.v.transpose())
    }
}

pub fn pencil_decompose(sigma0: &Mat, sigma1: &Mat) -> Result<Pencil> {
    if sigma0.shape() != sigma1.shape() {
        return Err(Error::DimensionMismatch { expected: sigma0.nrows(), found: sigma1.nrows() });
    }
    check_spd(sigma0, "Sigma0")?;
    check_spd(sigma1, "Sigma1")?;
    let l = sigma0
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite { name: "Sigma0".into() })?
        .l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite { name: "Sigma0".into() })?;
    let m = &l_inv * sigma1 * l_inv.transpose();
    let (lambda, u) = sym_eigen(&m);
    if lambda.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::NotPositiveDefinite { name: "Sigma1".into() });
    }
    Ok(Pencil { v: l * u, lambda })
}

/// Sqrt-bridge interpolant with `Q = N(0, VΛ^{1/2}Vᵀ)`.
pub fn build_multivariate_gaussian(
    m0: Vec<f64>,
    sigma0: Mat,
    m1: Vec<f64>,
    sigma1: Mat,
) -> Result<GeneralizedInterpolant> {
    let pencil = pencil_decompose(&sigma0, &sigma1)?;
    let d = m0.len();
    let sz = crate::linalg::symmetrize(&pencil.sigma_z());
    GeneralizedInterpolant::new(
        Schedule::SqrtBridge,
        Coupling::independent(
            GaussianMeasure::new(m0, sigma0)?.into(),
            GaussianMeasure::new(m1, sigma1)?.into(),
        )?,
        Some(GaussianMeasure::new(vec![0.0; d], sz)?.into()),
    )
}

/// Linear interpolation `(1 − t)X₀ + tX₁` without auxiliary noise.
pub fn build_affine(coupling: Coupling) -> GeneralizedInterpolant {
    GeneralizedInterpolant { schedule: Schedule::LinearAffine, coupling, noise: None }
}

pub fn build_collapse(tau: f64, coupling: Coupling) -> Result<GeneralizedInterpolant> {
    if !matches!(coupling, Coupling::Independent { .. }) {
        return Err(Error::invalid("the collapse process uses an independent coupling"));
    }
    Ok(GeneralizedInterpolant { schedule: Schedule::collapse(tau)?, coupling, noise: None })
}

/// Monge map between Gaussians: `T(x) = m₁ + A(x − m₀)` with
/// `A = Σ₀^{-1/2}(Σ₀^{1/2}Σ₁Σ₀^{1/2})^{1/2}Σ₀^{-1/2}`.
pub fn gaussian_ot_map(m0: &[f64], sigma0: &Mat, m1: &[f64], sigma1: &Mat) -> Result<AffineMap> {
    if sigma0.shape() != sigma1.shape() || m0.len() != sigma0.nrows() || m1.len() != m0.len() {
        return Err(Error::DimensionMismatch { expected: m0.len(), found: sigma1.nrows() });
    }
    check_spd(sigma0, "Sigma0")?;
    check_spd(sigma1, "Sigma1")?;
    let r = sym_sqrt(sigma0);
    let r_inv = sym_inv_sqrt(sigma0);
    let mid = sym_sqrt(&crate::linalg::symmetrize(&(&r * sigma1 * &r)));
    let a = crate::linalg::symmetrize(&(&r_inv * mid * &r_inv));
    let m0 = Vector::from_column_slice(m0);
    let offset = Vector::from_column_slice(m1) - &a * m0;
    AffineMap::new(a, offset)
}

/// `(1 − t)X₀ + tX₁ + σW_t` with `W` a standard Brownian bridge independent of
/// independent endpoints.
#[derive(Debug, Clone)]
pub struct BrownianBridge {
    pub p0: MeasureSpec,
    pub p1: MeasureSpec,
    pub sigma: f64,
}

pub fn build_brownian_bridge(p0: MeasureSpec, p1: MeasureSpec) -> Result<BrownianBridge> {
    if p0.dim() != p1.dim() {
        return Err(Error::DimensionMismatch { expected: p0.dim(), found: p1.dim() });
    }
    Ok(BrownianBridge { p0, p1, sigma: 1.0 })
}

impl BrownianBridge {
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::invalid("bridge scale must be nonnegative"));
        }
        self.sigma = sigma;
        Ok(self)
    }
}

/// Anything that can write one sampled path onto a time grid.
pub trait PathSampler: Sync {
    fn dim(&self) -> usize;
    /// Fills `out` (`times.len() × d`, row-major by time) with one path.
    fn sample_path(&self, rng: &mut PathRng, times: &[f64], out: &mut [f64]);
}

impl PathSampler for GeneralizedInterpolant {
    fn dim(&self) -> usize {
        GeneralizedInterpolant::dim(self)
    }

    fn sample_path(&self, rng: &mut PathRng, times: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let (mut x0, mut x1, mut z) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        self.draw_endpoints(rng, &mut x0, &mut x1, &mut z);
        for (k, &t) in times.iter().enumerate() {
            let (a, b, c) = self.schedule.values(t);
            let row = &mut out[k * d..(k + 1) * d];
            for i in 0..d {
                row[i] = a * x0[i] + b * x1[i] + c * z[i];
            }
        }
    }
}

impl PathSampler for BrownianBridge {
    fn dim(&self) -> usize {
        self.p0.dim()
    }

    fn sample_path(&self, rng: &mut PathRng, times: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let (mut x0, mut x1) = (vec![0.0; d], vec![0.0; d]);
        self.p0.draw(rng, &mut x0);
        self.p1.draw(rng, &mut x1);
        // Brownian motion on the grid, then pinned: W_t = B_t − t·B_1 (grid ends at 1).
        let mut b = vec![0.0; times.len() * d];
        for k in 1..times.len() {
            let sd = libm::sqrt(times[k] - times[k - 1]);
            for i in 0..d {
                b[k * d + i] = b[(k - 1) * d + i] + sd * rng::normal(rng);
            }
        }
        let last = (times.len() - 1) * d;
        for (k, &t) in times.iter().enumerate() {
            for i in 0..d {
                let w = b[k * d + i] - t * b[last + i];
                out[k * d + i] = (1.0 - t) * x0[i] + t * x1[i] + self.sigma * w;
            }
        }
    }
}

/// `n` uniform nodes on `[0, 1]`.
pub fn uniform_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::GridTooCoarse { need: 2, got: n });
    }
    let last = (n - 1) as f64;
    Ok((0..n).map(|i| i as f64 / last).collect())
}

/// `[0, t − kh, …, t, …, t + kh, 1]`: a small grid carrying `2k + 1` equally
/// spaced nodes around `t` plus the two endpoints.
pub fn local_grid(t: f64, h: f64, k: usize) -> Result<Vec<f64>> {
    let span = k as f64 * h;
    if !(h > 0.0) || !(t - span > 0.0) || !(t + span < 1.0) {
        return Err(Error::invalid(format!("local grid around t={t} with h={h}, k={k} leaves (0, 1)")));
    }
    let mut g = vec![0.0];
    g.extend((0..=2 * k).map(|j| t + (j as f64 - k as f64) * h));
    g.push(1.0);
    Ok(g)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::GridTooCoarse { need: 2, got: times.len() });
    }
    if times[0] != 0.0 || times[times.len() - 1] != 1.0 {
        return Err(Error::invalid("time grid must start at 0 and end at 1"));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

/// `n_paths × n_times × d` values, row-major in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub values: Vec<f64>,
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub dim: usize,
    pub seed: u64,
}

impl PathEnsemble {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let stride = self.n_times() * self.dim;
        &self.values[p * stride..(p + 1) * stride]
    }

    pub fn value(&self, p: usize, k: usize) -> &[f64] {
        let d = self.dim;
        &self.path(p)[k * d..(k + 1) * d]
    }

    /// All path values at time index `k`, `n_paths × d`.
    pub fn slice_at(&self, k: usize) -> Vec<f64> {
        (0..self.n_paths).flat_map(|p| self.value(p, k).iter().copied()).collect()
    }

    /// Scalar series of coordinate `i` along path `p`.
    pub fn coordinate(&self, p: usize, i: usize) -> Vec<f64> {
        let d = self.dim;
        self.path(p).chunks(d).map(|row| row[i]).collect()
    }

    /// Index of the grid node equal to `t` (within 1e-12).
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12)
    }
}

/// Samples `n` paths on `times`; path `p` uses stream `(seed, p)`.
pub fn sample_paths<S: PathSampler + ?Sized>(s: &S, n: usize, times: &[f64], seed: u64) -> Result<PathEnsemble> {
    check_grid(times)?;
    if n == 0 {
        return Err(Error::invalid("need at least one path"));
    }
    let d = s.dim();
    let stride = times.len() * d;
    let mut values = vec![0.0; n * stride];
    par::for_each_chunk(&mut values, stride, |p, out| {
        let mut rng = rng::stream(seed, p as u64);
        s.sample_path(&mut rng, times, out);
    });
    Ok(PathEnsemble { values, times: times.to_vec(), n_paths: n, dim: d, seed })
}

/// Three-point weights `(w₋, w₀, w₊)` for the first and second derivative at a
/// node with left gap `h1` and right gap `h2`.
pub fn fd_weights(h1: f64, h2: f64) -> ([f64; 3], [f64; 3]) {
    let s = h1 + h2;
    let first = [-h2 / (h1 * s), (h2 - h1) / (h1 * h2), h1 / (h2 * s)];
    let second = [2.0 / (h1 * s), -2.0 / (h1 * h2), 2.0 / (h2 * s)];
    (first, second)
}

/// Per-path finite-difference velocity and acceleration at interior nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDerivatives {
    /// Interior time indices of the source ensemble.
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    /// `n_paths × indices.len() × d`.
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
}

/// Velocity and acceleration of every path at interior node `k`, each `n_paths × d`.
pub fn derivatives_at(e: &PathEnsemble, k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if e.n_times() < 3 {
        return Err(Error::GridTooCoarse { need: 3, got: e.n_times() });
    }
    if k == 0 || k + 1 >= e.n_times() {
        return Err(Error::invalid(format!("time index {k} is not interior")));
    }
    let (w1, w2) = fd_weights(e.times[k] - e.times[k - 1], e.times[k + 1] - e.times[k]);
    let d = e.dim;
    let mut vel = vec![0.0; e.n_paths * d];
    let mut acc = vec![0.0; e.n_paths * d];
    for p in 0..e.n_paths {
        let (xm, x, xp) = (e.value(p, k - 1), e.value(p, k), e.value(p, k + 1));
        for i in 0..d {
            vel[p * d + i] = w1[0] * xm[i] + w1[1] * x[i] + w1[2] * xp[i];
            acc[p * d + i] = w2[0] * xm[i] + w2[1] * x[i] + w2[2] * xp[i];
        }
    }
    Ok((vel, acc))
}

/// Centered differences at every interior node; endpoints are excluded because
/// `ċ` is unbounded there for the sqrt bridge.
pub fn path_derivatives(e: &PathEnsemble) -> Result<PathDerivatives> {
    if e.n_times() < 3 {
        return Err(Error::GridTooCoarse { need: 3, got: e.n_times() });
    }
    let indices: Vec<usize> = (1..e.n_times() - 1).collect();
    let d = e.dim;
    let m = indices.len();
    let mut velocity = vec![0.0; e.n_paths * m * d];
    let mut acceleration = vec![0.0; e.n_paths * m * d];
    for (j, &k) in indices.iter().enumerate() {
        let (v, a) = derivatives_at(e, k)?;
        for p in 0..e.n_paths {
            let dst = (p * m + j) * d;
            velocity[dst..dst + d].copy_from_slice(&v[p * d..(p + 1) * d]);
            acceleration[dst..dst + d].copy_from_slice(&a[p * d..(p + 1) * d]);
        }
    }
    let times = indices.iter().map(|&k| e.times[k]).collect();
    Ok(PathDerivatives { indices, times, velocity, acceleration })
}

/// Symmetric positive definite root used for Gaussian builders; re-exported for callers
/// assembling `Σ_Z = S₀S₁` in the commuting case.
pub fn spd_sqrt(m: &Mat) -> Mat {
    sym_apply(m, libm::sqrt)
}
