//! Closed-form conditional statistics for jointly Gaussian interpolants.
//!
//! With `K = Cov(X₀, X₁)` and `Σ_Z = Cov(Z)`, every quantity below is a
//! linear combination of `Σ₀, Σ₁, K, Kᵀ, Σ_Z` with schedule-jet weights.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::vec::Vec;

use crate::interpolants::{Coefficients, GaussianCoupling, GeneralizedInterpolant, Schedule};
use crate::linalg::{frobenius, sym_eigen, symmetrize, Mat, Vector};
use crate::{Error, Result};

/// Covariance condition number above which a time slice counts as singular.
pub const SINGULAR_COND: f64 = 1e12;

/// Moments of `X_t` and of its time derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPathStats {
    pub t: f64,
    pub m: Vector,
    pub mdot: Vector,
    pub mddot: Vector,
    pub sigma: Mat,
    pub sigma_dot: Mat,
    pub sigma_ddot: Mat,
    /// `G = Cov(Ẋ_t, X_t)`.
    pub g: Mat,
    pub g_dot: Mat,
    pub var_xdot: Mat,
    /// `Cov(Ẍ_t, X_t)`.
    pub cov_xddot_x: Mat,
}

/// Gaussian interpolant reduced to its endpoint moments and schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianField {
    pub schedule: Schedule,
    pub coupling: GaussianCoupling,
    pub sigma_z: Mat,
}

impl GaussianField {
    pub fn new(interp: &GeneralizedInterpolant) -> Result<Self> {
        Ok(Self {
            schedule: interp.schedule.clone(),
            coupling: interp.coupling.gaussian_moments()?,
            sigma_z: interp.noise_cov()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.coupling.m0.len()
    }

    fn kk(&self) -> Mat {
        &self.coupling.cross + self.coupling.cross.transpose()
    }

    /// `Σ_t` from schedule values alone (defined even where derivatives are not).
    pub fn covariance(&self, t: f64) -> Mat {
        let (a, b, c) = self.schedule.values(t);
        let g = &self.coupling;
        &g.sigma0 * (a * a) + &g.sigma1 * (b * b) + self.kk() * (a * b) + &self.sigma_z * (c * c)
    }

    pub fn mean(&self, t: f64) -> Vector {
        let (a, b, _) = self.schedule.values(t);
        &self.coupling.m0 * a + &self.coupling.m1 * b
    }

    pub fn moments(&self, t: f64) -> Result<GaussianPathStats> {
        let j = self.schedule.jets(t)?;
        Ok(self.moments_from(t, &j))
    }

    fn moments_from(&self, t: f64, j: &Coefficients) -> GaussianPathStats {
        let g = &self.coupling;
        let (s0, s1, k, sz) = (&g.sigma0, &g.sigma1, &g.cross, &self.sigma_z);
        let kt = k.transpose();
        let kk = self.kk();
        let (a, b, c2) = (j.a, j.b, j.c_sq);
        let lin = |wa: f64, wb: f64| &g.m0 * wa + &g.m1 * wb;
        let sigma = s0 * (a.v * a.v) + s1 * (b.v * b.v) + &kk * (a.v * b.v) + sz * c2.v;
        let sigma_dot = s0 * (2.0 * a.v * a.d1)
            + s1 * (2.0 * b.v * b.d1)
            + &kk * (a.d1 * b.v + a.v * b.d1)
            + sz * c2.d1;
        let sigma_ddot = s0 * (2.0 * (a.d1 * a.d1 + a.v * a.d2))
            + s1 * (2.0 * (b.d1 * b.d1 + b.v * b.d2))
            + &kk * (a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2)
            + sz * c2.d2;
        let gm = s0 * (a.d1 * a.v) + s1 * (b.d1 * b.v) + k * (a.d1 * b.v) + &kt * (b.d1 * a.v) + sz * (0.5 * c2.d1);
        let g_dot = s0 * (a.d2 * a.v + a.d1 * a.d1)
            + s1 * (b.d2 * b.v + b.d1 * b.d1)
            + k * (a.d2 * b.v + a.d1 * b.d1)
            + &kt * (b.d2 * a.v + b.d1 * a.d1)
            + sz * (0.5 * c2.d2);
        let var_xdot = s0 * (a.d1 * a.d1) + s1 * (b.d1 * b.d1) + &kk * (a.d1 * b.d1) + sz * j.c_dot_sq();
        let cov_xddot_x =
            s0 * (a.d2 * a.v) + s1 * (b.d2 * b.v) + k * (a.d2 * b.v) + &kt * (b.d2 * a.v) + sz * j.c_cddot();
        GaussianPathStats {
            t,
            m: lin(a.v, b.v),
            mdot: lin(a.d1, b.d1),
            mddot: lin(a.d2, b.d2),
            sigma,
            sigma_dot,
            sigma_ddot,
            g: gm,
            g_dot,
            var_xdot,
            cov_xddot_x,
        }
    }

    /// Conditional statistics at `t`; refuses singular `Σ_t`.
    pub fn slice(&self, t: f64) -> Result<GaussianSlice> {
        let sigma = symmetrize(&self.covariance(t));
        let (vals, _) = sym_eigen(&sigma);
        let lo = vals[0];
        let hi = vals[vals.len() - 1];
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(cond <= SINGULAR_COND) {
            return Err(Error::Singular { t, cond });
        }
        let stats = self.moments(t)?;
        let sigma_inv = sigma
            .clone()
            .cholesky()
            .ok_or(Error::Singular { t, cond })?
            .inverse();
        let gain = &stats.g * &sigma_inv;
        let gain_dot = &stats.g_dot * &sigma_inv - &gain * &stats.sigma_dot * &sigma_inv;
        let accel_gain = &stats.cov_xddot_x * &sigma_inv;
        let pi = symmetrize(&(&stats.var_xdot - &gain * stats.g.transpose()));
        let log_det: f64 = vals.iter().map(|l| libm::log(*l)).sum();
        Ok(GaussianSlice { stats, sigma_inv, gain, gain_dot, accel_gain, pi, log_det })
    }
}

/// Everything needed to evaluate the conditional fields at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSlice {
    pub stats: GaussianPathStats,
    pub sigma_inv: Mat,
    /// `∇v = GΣ⁻¹`.
    pub gain: Mat,
    /// `∂_t(GΣ⁻¹)`.
    pub gain_dot: Mat,
    /// `Cov(Ẍ, X)Σ⁻¹`.
    pub accel_gain: Mat,
    /// `Π = Var(Ẋ) − GΣ⁻¹Gᵀ`, constant in `x`.
    pub pi: Mat,
    log_det: f64,
}

impl GaussianSlice {
    fn centered(&self, x: &[f64]) -> Vector {
        Vector::from_iterator(x.len(), x.iter().zip(self.stats.m.iter()).map(|(a, b)| a - b))
    }

    pub fn velocity(&self, x: &[f64]) -> Vector {
        &self.stats.mdot + &self.gain * self.centered(x)
    }

    /// `∂_t v = m̈ + ∂_t(GΣ⁻¹)(x − m) − GΣ⁻¹ṁ`.
    pub fn time_derivative(&self, x: &[f64]) -> Vector {
        &self.stats.mddot + &self.gain_dot * self.centered(x) - &self.gain * &self.stats.mdot
    }

    /// Conditional acceleration `E[Ẍ | X = x]`.
    pub fn acceleration(&self, x: &[f64]) -> Vector {
        &self.stats.mddot + &self.accel_gain * self.centered(x)
    }

    /// Material derivative `∂_t v + (∇v)v`.
    pub fn material_derivative(&self, x: &[f64]) -> Vector {
        self.time_derivative(x) + &self.gain * self.velocity(x)
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        let y = self.centered(x);
        let q = y.dot(&(&self.sigma_inv * &y));
        let d = x.len() as f64;
        libm::exp(-0.5 * q - 0.5 * self.log_det - 0.5 * d * libm::log(2.0 * core::f64::consts::PI))
    }
}

pub fn gaussian_moments(interp: &GeneralizedInterpolant, t: f64) -> Result<GaussianPathStats> {
    GaussianField::new(interp)?.moments(t)
}

/// Exact conditional velocity `ṁ + GΣ⁻¹(x − m)`.
pub fn analytic_velocity(interp: &GeneralizedInterpolant, t: f64, x: &[f64]) -> Result<Vector> {
    let f = GaussianField::new(interp)?;
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: x.len() });
    }
    Ok(f.slice(t)?.velocity(x))
}

/// `(v(t, x), Π_t)` for the linear interpolant of a Gaussian coupling.
pub fn analytic_affine_stats(
    coupling: &crate::interpolants::Coupling,
    t: f64,
    x: &[f64],
) -> Result<(Vector, Mat)> {
    let interp = crate::interpolants::build_affine(coupling.clone());
    let s = GaussianField::new(&interp)?.slice(t)?;
    Ok((s.velocity(x), s.pi.clone()))
}

/// `‖(Σ_{t+h} − Σ_{t−h})/2h − (G + Gᵀ)‖_F`.
pub fn covariance_derivative_check(interp: &GeneralizedInterpolant, t: f64, h: f64) -> Result<f64> {
    let f = GaussianField::new(interp)?;
    if !(h > 0.0 && t - h >= 0.0 && t + h <= 1.0) {
        return Err(Error::invalid("covariance check needs 0 ≤ t − h < t + h ≤ 1"));
    }
    let fd = (f.covariance(t + h) - f.covariance(t - h)) / (2.0 * h);
    let m = f.moments(t)?;
    Ok(frobenius(&(fd - (&m.g + m.g.transpose()))))
}

/// `max_t ‖Σ̈_t − ½Σ̇_tΣ_t⁻¹Σ̇_t‖_F` over `times`.
pub fn straightness_identity(f: &GaussianField, times: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in times {
        let s = f.slice(t)?;
        let st = &s.stats;
        let r = &st.sigma_ddot - &st.sigma_dot * &s.sigma_inv * &st.sigma_dot * 0.5;
        worst = worst.max(frobenius(&r));
    }
    Ok(worst)
}

/// `max_t ‖Cov(Ẋ_t, X_t)‖_F` over `times`.
pub fn max_cross_covariance(f: &GaussianField, times: &[f64]) -> Result<f64> {
    times
        .iter()
        .map(|&t| f.moments(t).map(|m| frobenius(&m.g)))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}
