//! Probability measures: Gaussians, uniform boxes and finite mixtures.
//!
//! Everything here is immutable after construction and every random draw is
//! keyed by `(seed, sample index)` through [`crate::rng::stream`].

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{check_spd, Mat, Vector};
use crate::rng::{self, PathRng};
use crate::special::{normal_cdf, normal_interval, unit_ball_volume, INV_SQRT_2PI};
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    mean: Vector,
    cov: Mat,
    /// Lower Cholesky factor of `cov`.
    chol: Mat,
}

impl GaussianMeasure {
    pub fn new(mean: Vec<f64>, cov: Mat) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), found: cov.nrows() });
        }
        check_spd(&cov, "cov")?;
        let chol = cov.clone().cholesky().expect("checked SPD").l();
        Ok(Self { mean: Vector::from_vec(mean), cov, chol })
    }

    /// One-dimensional `N(mean, variance)`.
    pub fn scalar(mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::invalid(format!("variance must be positive, got {variance}")));
        }
        Self::new(vec![mean], Mat::from_element(1, 1, variance))
    }

    pub fn standard(d: usize) -> Self {
        Self::new(vec![0.0; d], Mat::identity(d, d)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn cov(&self) -> &Mat {
        &self.cov
    }

    pub fn chol(&self) -> &Mat {
        &self.chol
    }

    fn draw(&self, rng: &mut PathRng, out: &mut [f64]) {
        let d = self.dim();
        let z: Vec<f64> = (0..d).map(|_| rng::normal(rng)).collect();
        for i in 0..d {
            let mut acc = self.mean[i];
            for j in 0..=i {
                acc += self.chol[(i, j)] * z[j];
            }
            out[i] = acc;
        }
    }

    fn density(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        // forward substitution L y = x - m
        let mut y = vec![0.0; d];
        let mut log_det = 0.0;
        for i in 0..d {
            let mut r = x[i] - self.mean[i];
            for j in 0..i {
                r -= self.chol[(i, j)] * y[j];
            }
            y[i] = r / self.chol[(i, i)];
            log_det += libm::log(self.chol[(i, i)]);
        }
        let q: f64 = y.iter().map(|v| v * v).sum();
        libm::pow(INV_SQRT_2PI, d as f64) * libm::exp(-0.5 * q - log_det)
    }

    fn is_diagonal(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| i == j || self.cov[(i, j)] == 0.0))
    }
}

/// Uniform law on an axis-aligned box (an interval in one dimension).
#[derive(Debug, Clone, PartialEq)]
pub struct Uniform {
    support: AxisBox,
}

impl Uniform {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Ok(Self { support: AxisBox::new(lo, hi)? })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn support(&self) -> &AxisBox {
        &self.support
    }

    fn volume(&self) -> f64 {
        self.support.volume()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<MeasureSpec>,
    weights: Vec<f64>,
}

impl Mixture {
    pub fn new(components: Vec<MeasureSpec>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::invalid("mixture needs one weight per component"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        let d = components[0].dim();
        if let Some(c) = components.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: c.dim() });
        }
        Ok(Self { components, weights })
    }

    /// Equal-weight mixture.
    pub fn uniform_weights(components: Vec<MeasureSpec>) -> Result<Self> {
        let k = components.len();
        Self::new(components, vec![1.0 / k as f64; k])
    }

    pub fn components(&self) -> &[MeasureSpec] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Tagged description of a probability measure on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Gaussian(GaussianMeasure),
    Uniform(Uniform),
    Mixture(Mixture),
}

impl From<GaussianMeasure> for MeasureSpec {
    fn from(g: GaussianMeasure) -> Self {
        MeasureSpec::Gaussian(g)
    }
}

impl From<Uniform> for MeasureSpec {
    fn from(u: Uniform) -> Self {
        MeasureSpec::Uniform(u)
    }
}

impl From<Mixture> for MeasureSpec {
    fn from(m: Mixture) -> Self {
        MeasureSpec::Mixture(m)
    }
}

impl MeasureSpec {
    pub fn gaussian_1d(mean: f64, variance: f64) -> Result<Self> {
        GaussianMeasure::scalar(mean, variance).map(Into::into)
    }

    pub fn uniform_1d(lo: f64, hi: f64) -> Result<Self> {
        Uniform::interval(lo, hi).map(Into::into)
    }

    pub fn dim(&self) -> usize {
        match self {
            MeasureSpec::Gaussian(g) => g.dim(),
            MeasureSpec::Uniform(u) => u.support.dim(),
            MeasureSpec::Mixture(m) => m.components[0].dim(),
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianMeasure> {
        match self {
            MeasureSpec::Gaussian(g) => Some(g),
            _ => None,
        }
    }

    /// Writes one draw into `out` (length `dim`).
    pub fn draw(&self, rng: &mut PathRng, out: &mut [f64]) {
        match self {
            MeasureSpec::Gaussian(g) => g.draw(rng, out),
            MeasureSpec::Uniform(u) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let (lo, hi) = (u.support.lo[i], u.support.hi[i]);
                    *o = lo + (hi - lo) * rng::uniform(rng);
                }
            }
            MeasureSpec::Mixture(m) => {
                let u = rng::uniform(rng);
                let mut acc = 0.0;
                let mut pick = m.components.len() - 1;
                for (k, w) in m.weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = k;
                        break;
                    }
                }
                m.components[pick].draw(rng, out);
            }
        }
    }

    /// `n` i.i.d. draws as an `n × d` row-major buffer.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::invalid("sample size must be at least 1"));
        }
        let d = self.dim();
        let mut out = vec![0.0; n * d];
        par::for_each_chunk(&mut out, d, |i, row| {
            let mut rng = rng::stream(seed, i as u64);
            self.draw(&mut rng, row);
        });
        Ok(out)
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(match self {
            MeasureSpec::Gaussian(g) => g.density(x),
            MeasureSpec::Uniform(u) => {
                if u.support.contains(x) {
                    1.0 / u.volume()
                } else {
                    0.0
                }
            }
            MeasureSpec::Mixture(m) => m
                .components
                .iter()
                .zip(&m.weights)
                .map(|(c, w)| w * c.density(x).unwrap_or(0.0))
                .sum(),
        })
    }

    /// Supremum of the density (an upper bound for mixtures).
    pub fn sup_density(&self) -> f64 {
        match self {
            MeasureSpec::Gaussian(g) => {
                let log_det: f64 = (0..g.dim()).map(|i| libm::log(g.chol[(i, i)])).sum();
                libm::pow(INV_SQRT_2PI, g.dim() as f64) * libm::exp(-log_det)
            }
            MeasureSpec::Uniform(u) => 1.0 / u.volume(),
            MeasureSpec::Mixture(m) => {
                m.components.iter().zip(&m.weights).map(|(c, w)| w * c.sup_density()).sum()
            }
        }
    }

    pub fn cdf_1d(&self, x: f64) -> Result<f64> {
        self.check_dim(1)?;
        Ok(match self {
            MeasureSpec::Gaussian(g) => normal_cdf((x - g.mean[0]) / g.cov[(0, 0)].sqrt()),
            MeasureSpec::Uniform(u) => {
                let (lo, hi) = (u.support.lo[0], u.support.hi[0]);
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            }
            MeasureSpec::Mixture(m) => {
                let mut acc = 0.0;
                for (c, w) in m.components.iter().zip(&m.weights) {
                    acc += w * c.cdf_1d(x)?;
                }
                acc
            }
        })
    }

    /// Probability of an axis-aligned box. Exact for uniforms, one-dimensional or
    /// diagonal-covariance Gaussians, and mixtures of those.
    pub fn mass(&self, b: &AxisBox) -> Result<f64> {
        self.check_dim(b.dim())?;
        match self {
            MeasureSpec::Gaussian(g) => {
                if !g.is_diagonal() {
                    return Err(Error::Unsupported(
                        "box mass of a correlated multivariate Gaussian".into(),
                    ));
                }
                Ok((0..g.dim())
                    .map(|i| {
                        let s = g.cov[(i, i)].sqrt();
                        normal_interval((b.lo[i] - g.mean[i]) / s, (b.hi[i] - g.mean[i]) / s)
                    })
                    .product())
            }
            MeasureSpec::Uniform(u) => {
                let s = &u.support;
                Ok((0..s.dim())
                    .map(|i| {
                        let overlap = (b.hi[i].min(s.hi[i]) - b.lo[i].max(s.lo[i])).max(0.0);
                        overlap / (s.hi[i] - s.lo[i])
                    })
                    .product())
            }
            MeasureSpec::Mixture(m) => {
                let mut acc = 0.0;
                for (c, w) in m.components.iter().zip(&m.weights) {
                    acc += w * c.mass(b)?;
                }
                Ok(acc)
            }
        }
    }

    pub fn mean(&self) -> Vector {
        match self {
            MeasureSpec::Gaussian(g) => g.mean.clone(),
            MeasureSpec::Uniform(u) => Vector::from_iterator(
                u.support.dim(),
                u.support.lo.iter().zip(&u.support.hi).map(|(l, h)| 0.5 * (l + h)),
            ),
            MeasureSpec::Mixture(m) => m
                .components
                .iter()
                .zip(&m.weights)
                .fold(Vector::zeros(self.dim()), |acc, (c, w)| acc + c.mean() * *w),
        }
    }

    pub fn covariance(&self) -> Mat {
        match self {
            MeasureSpec::Gaussian(g) => g.cov.clone(),
            MeasureSpec::Uniform(u) => Mat::from_diagonal(&Vector::from_iterator(
                u.support.dim(),
                u.support.lo.iter().zip(&u.support.hi).map(|(l, h)| (h - l) * (h - l) / 12.0),
            )),
            MeasureSpec::Mixture(m) => {
                let mu = self.mean();
                let d = self.dim();
                let mut acc = Mat::zeros(d, d);
                for (c, w) in m.components.iter().zip(&m.weights) {
                    let dm = c.mean() - &mu;
                    acc += (c.covariance() + &dm * dm.transpose()) * *w;
                }
                acc
            }
        }
    }

    /// Inverse cdf in one dimension: bracketing bisection to `1e-8`, then three
    /// guarded Newton steps.
    pub fn quantile_1d(&self, p: f64) -> Result<f64> {
        self.check_dim(1)?;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(format!("quantile level {p} outside (0, 1)")));
        }
        let mu = self.mean()[0];
        let sd = self.covariance()[(0, 0)].sqrt().max(1e-300);
        let (mut lo, mut hi) = (mu - sd, mu + sd);
        let mut step = sd;
        while self.cdf_1d(lo)? >= p {
            step *= 2.0;
            lo = mu - step;
            if !lo.is_finite() {
                return Err(Error::invalid("quantile bracket diverged"));
            }
        }
        step = sd;
        while self.cdf_1d(hi)? <= p {
            step *= 2.0;
            hi = mu + step;
            if !hi.is_finite() {
                return Err(Error::invalid("quantile bracket diverged"));
            }
        }
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_1d(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..3 {
            let f = self.density(&[x])?;
            if f <= 0.0 {
                break;
            }
            let next = x - (self.cdf_1d(x)? - p) / f;
            if next < lo || next > hi {
                break;
            }
            x = next;
        }
        Ok(x)
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: d });
        }
        Ok(())
    }
}

/// Closed axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::invalid("box requires lo < hi in every coordinate"));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    /// Euclidean distance between two closed boxes (zero when they touch).
    pub fn distance(&self, other: &AxisBox) -> f64 {
        (0..self.dim())
            .map(|i| {
                let gap = (other.lo[i] - self.hi[i]).max(self.lo[i] - other.hi[i]).max(0.0);
                gap * gap
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Two separated supports and the mass they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGeometry {
    pub s0: AxisBox,
    pub s1: AxisBox,
    pub separation: f64,
    pub w0: f64,
    pub w1: f64,
    pub epsilon: f64,
}

/// Masses of `s0`, `s1` under `m` and the leftover `ε = 1 − w0 − w1`.
pub fn epsilon_disconnected(m: &MeasureSpec, s0: &AxisBox, s1: &AxisBox) -> Result<SupportGeometry> {
    if s0.dim() != s1.dim() {
        return Err(Error::DimensionMismatch { expected: s0.dim(), found: s1.dim() });
    }
    let separation = s0.distance(s1);
    if !(separation > 0.0) {
        return Err(Error::NotDisconnected("closed convex hulls of S0 and S1 intersect".into()));
    }
    let w0 = m.mass(s0)?;
    let w1 = m.mass(s1)?;
    let epsilon = if s0.dim() == 1 {
        // sum the complementary intervals directly so tiny ε keeps relative accuracy
        let (a, b) = if s0.hi[0] <= s1.lo[0] { (s0, s1) } else { (s1, s0) };
        let inf = f64::INFINITY;
        [(-inf, a.lo[0]), (a.hi[0], b.lo[0]), (b.hi[0], inf)]
            .iter()
            .map(|&(lo, hi)| AxisBox { lo: vec![lo], hi: vec![hi] })
            .map(|gap| m.mass(&gap))
            .sum::<Result<f64>>()?
    } else {
        (1.0 - w0 - w1).clamp(0.0, 1.0)
    };
    Ok(SupportGeometry { s0: s0.clone(), s1: s1.clone(), separation, w0, w1, epsilon })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrostmanConstant {
    pub c: f64,
    pub gamma: f64,
}

/// A density bounded by `sup_density` gives a `(sup_density · |B_1|, d)`-Frostman measure.
pub fn frostman_constant(sup_density: f64, d: usize) -> Result<FrostmanConstant> {
    if !(sup_density > 0.0) || d == 0 {
        return Err(Error::invalid("Frostman constant needs positive density bound and d ≥ 1"));
    }
    Ok(FrostmanConstant { c: sup_density * unit_ball_volume(d), gamma: d as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrostmanEstimate {
    /// Largest ratio `P̂(B_r(x)) / r^γ` over the grid.
    pub c_hat: f64,
    /// Binomial standard error of the maximizing cell.
    pub se: f64,
    pub center: usize,
    pub radius: f64,
}

/// Empirical Frostman constant over a grid of ball centers (`k × d` row-major) and radii.
pub fn frostman_empirical(
    m: &MeasureSpec,
    gamma: f64,
    centers: &[f64],
    radii: &[f64],
    n: usize,
    seed: u64,
) -> Result<FrostmanEstimate> {
    let d = m.dim();
    if centers.is_empty() || radii.is_empty() || !centers.len().is_multiple_of(d) {
        return Err(Error::invalid("Frostman grids must be non-empty"));
    }
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::invalid("radii must be positive"));
    }
    let samples = m.sample(n, seed)?;
    let sorted: Option<Vec<f64>> = (d == 1).then(|| {
        let mut s = samples.clone();
        s.sort_by(f64::total_cmp);
        s
    });
    let k = centers.len() / d;
    let per_center = par::map_range(k, |c| {
        let x = &centers[c * d..(c + 1) * d];
        radii
            .iter()
            .map(|&r| {
                let count = match &sorted {
                    // open ball (x - r, x + r)
                    Some(s) => s.partition_point(|&v| v < x[0] + r) - s.partition_point(|&v| v <= x[0] - r),
                    None => samples
                        .chunks(d)
                        .filter(|y| y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < r * r)
                        .count(),
                };
                let p = count as f64 / n as f64;
                let scale = libm::pow(r, gamma);
                (p / scale, libm::sqrt(p * (1.0 - p) / n as f64) / scale, r)
            })
            .collect::<Vec<_>>()
    });
    let mut best = FrostmanEstimate { c_hat: -1.0, se: 0.0, center: 0, radius: radii[0] };
    for (c, cells) in per_center.into_iter().enumerate() {
        for (ratio, se, r) in cells {
            if ratio > best.c_hat {
                best = FrostmanEstimate { c_hat: ratio, se, center: c, radius: r };
            }
        }
    }
    Ok(best)
}

impl MeasureSpec {
    /// Boxed mixture helper used by builders of symmetric two-mode targets.
    pub fn two_mode(a: MeasureSpec, b: MeasureSpec) -> Result<Self> {
        Mixture::uniform_weights(vec![a, b]).map(Into::into)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn uniform_mixture() -> MeasureSpec {
        MeasureSpec::two_mode(
            MeasureSpec::uniform_1d(-1.5, -0.5).unwrap(),
            MeasureSpec::uniform_1d(0.5, 1.5).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn standard_normal_sample_mean() {
        let n = 1_000_000;
        let xs = MeasureSpec::gaussian_1d(0.0, 1.0).unwrap().sample(n, 7).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn sampling_is_bit_reproducible() {
        let m = uniform_mixture();
        assert_eq!(m.sample(1000, 3).unwrap(), m.sample(1000, 3).unwrap());
        assert_ne!(m.sample(1000, 3).unwrap(), m.sample(1000, 4).unwrap());
    }

    #[test]
    fn uniform_draws_stay_in_support() {
        let xs = MeasureSpec::uniform_1d(0.5, 1.5).unwrap().sample(10_000, 1).unwrap();
        assert!(xs.iter().all(|&x| (0.5..=1.5).contains(&x)));
    }

    #[test]
    fn uniform_mixture_never_visits_the_gap() {
        let xs = uniform_mixture().sample(1_000_000, 11).unwrap();
        assert_eq!(xs.iter().filter(|&&x| x > -0.5 && x < 0.5).count(), 0);
    }

    #[test]
    fn densities() {
        let g = MeasureSpec::gaussian_1d(0.0, 1.0).unwrap();
        assert!((g.density(&[0.0]).unwrap() - 0.398_942_280_401_432_7).abs() < 1e-15);
        let u = MeasureSpec::uniform_1d(0.0, 2.0).unwrap();
        assert_eq!(u.density(&[1.0]).unwrap(), 0.5);
        assert_eq!(uniform_mixture().density(&[0.0]).unwrap(), 0.0);
        assert!(g.density(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn multivariate_density_matches_product_for_diagonal() {
        let g = GaussianMeasure::new(vec![1.0, -1.0], Mat::from_diagonal(&Vector::from_vec(vec![4.0, 0.25])))
            .unwrap();
        let x = [0.3, -0.6];
        let expected = (1.0 / 2.0) * crate::special::normal_pdf((0.3 - 1.0) / 2.0)
            * (1.0 / 0.5)
            * crate::special::normal_pdf((-0.6 + 1.0) / 0.5);
        assert!((MeasureSpec::from(g).density(&x).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn quantiles() {
        let g = MeasureSpec::gaussian_1d(0.0, 1.0).unwrap();
        assert!(g.quantile_1d(0.5).unwrap().abs() < 1e-12);
        let u = MeasureSpec::uniform_1d(0.0, 1.0).unwrap();
        assert!((u.quantile_1d(0.25).unwrap() - 0.25).abs() < 1e-12);
        assert!(g.quantile_1d(0.0).is_err());
        assert!(g.quantile_1d(1.0).is_err());
        // symmetric target masses give symmetric quantiles
        let w = (1.0 - 0.1) / 2.0;
        let x0 = g.quantile_1d(w).unwrap();
        let x1 = g.quantile_1d(1.0 - w).unwrap();
        assert!((x0 + x1).abs() < 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf_on_grid() {
        let measures = [
            MeasureSpec::gaussian_1d(-2.0, 0.36).unwrap(),
            MeasureSpec::uniform_1d(-1.0, 3.0).unwrap(),
            MeasureSpec::two_mode(
                MeasureSpec::gaussian_1d(-2.0, 0.25).unwrap(),
                MeasureSpec::gaussian_1d(2.0, 0.25).unwrap(),
            )
            .unwrap(),
        ];
        for m in &measures {
            for k in 1..=99 {
                let p = k as f64 / 100.0;
                let x = m.quantile_1d(p).unwrap();
                assert!((m.cdf_1d(x).unwrap() - p).abs() < 1e-10, "{m:?} p={p}");
            }
        }
    }

    #[test]
    fn frostman_constants() {
        let c = frostman_constant(INV_SQRT_2PI, 1).unwrap();
        assert!((c.c - 2.0 * INV_SQRT_2PI).abs() < 1e-15);
        assert!((c.c - 0.7979).abs() < 1e-4);
        assert_eq!(c.gamma, 1.0);
        let c = frostman_constant(1.0, 2).unwrap();
        assert!((c.c - core::f64::consts::PI).abs() < 1e-14);
        assert!((frostman_constant(0.5, 1).unwrap().c - 1.0).abs() < 1e-15);
        assert!(frostman_constant(0.0, 1).is_err());
    }

    fn line(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    #[test]
    fn empirical_frostman_respects_analytic_bound() {
        let g = MeasureSpec::gaussian_1d(0.0, 1.0).unwrap();
        let analytic = frostman_constant(g.sup_density(), 1).unwrap().c;
        let est = frostman_empirical(&g, 1.0, &line(-3.0, 3.0, 121), &line(0.1, 2.0, 20), 100_000, 5)
            .unwrap();
        assert!(est.c_hat <= analytic + 3.0 * est.se, "{est:?} vs {analytic}");
        assert!(est.c_hat > 0.9 * analytic);

        let u = MeasureSpec::uniform_1d(0.0, 1.0).unwrap();
        let est = frostman_empirical(&u, 1.0, &line(0.2, 0.8, 13), &[0.1, 0.2], 100_000, 5).unwrap();
        assert!((est.c_hat - 2.0).abs() < 0.06, "{est:?}");

        let est = frostman_empirical(&g, 0.0, &line(-1.0, 1.0, 5), &[0.5, 5.0, 50.0], 10_000, 5).unwrap();
        assert!(est.c_hat <= 1.0);
        assert!(frostman_empirical(&g, 1.0, &[], &[1.0], 10, 0).is_err());
    }

    #[test]
    fn disconnected_uniform_mixture() {
        let s0 = AxisBox::interval(-1.5, -0.5).unwrap();
        let s1 = AxisBox::interval(0.5, 1.5).unwrap();
        let geo = epsilon_disconnected(&uniform_mixture(), &s0, &s1).unwrap();
        assert_eq!(geo.epsilon, 0.0);
        assert!((geo.w0 - 0.5).abs() < 1e-15 && (geo.w1 - 0.5).abs() < 1e-15);
        assert!((geo.separation - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disconnected_standard_normal() {
        let g = MeasureSpec::gaussian_1d(0.0, 1.0).unwrap();
        let geo = epsilon_disconnected(
            &g,
            &AxisBox::interval(-2.0, -1.0).unwrap(),
            &AxisBox::interval(1.0, 2.0).unwrap(),
        )
        .unwrap();
        let expected = 1.0 - 2.0 * (normal_cdf(2.0) - normal_cdf(1.0));
        assert!((geo.epsilon - expected).abs() < 1e-14);
        assert!((geo.epsilon - 0.728_19).abs() < 1e-5);
        assert!((geo.w0 + geo.w1 + geo.epsilon - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_mixture_epsilon_vanishes_with_sigma() {
        let s0 = AxisBox::interval(-3.0, -1.0).unwrap();
        let s1 = AxisBox::interval(1.0, 3.0).unwrap();
        let mut last = 1.0;
        for sigma in [0.8, 0.4, 0.2, 0.1, 0.05] {
            let p = MeasureSpec::two_mode(
                MeasureSpec::gaussian_1d(-2.0, sigma * sigma).unwrap(),
                MeasureSpec::gaussian_1d(2.0, sigma * sigma).unwrap(),
            )
            .unwrap();
            let eps = epsilon_disconnected(&p, &s0, &s1).unwrap().epsilon;
            assert!(eps < last);
            last = eps;
        }
        assert!(last > 0.0 && last < 1e-15);
    }

    #[test]
    fn touching_supports_are_rejected() {
        let g = MeasureSpec::gaussian_1d(0.0, 1.0).unwrap();
        let r = epsilon_disconnected(
            &g,
            &AxisBox::interval(-1.0, 0.0).unwrap(),
            &AxisBox::interval(0.0, 1.0).unwrap(),
        );
        assert!(matches!(r, Err(Error::NotDisconnected(_))));
    }
}
