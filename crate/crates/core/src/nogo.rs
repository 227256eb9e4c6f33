//! No-go and low-go zones, up-crossing numbers, modulus-of-continuity
//! concentration and the quantitative impossibility certificate in one
//! spatial dimension.

#[allow(unused_imports)]
use crate::float::F64Ext;
use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::interpolants::PathEnsemble;
use crate::measures::{frostman_constant, AxisBox, FrostmanConstant, MeasureSpec, SupportGeometry};
use crate::{par, Error, Result};

/// A space-time region `{(t, x) : a_t < x < b_t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoGoZone {
    Static { a: f64, b: f64 },
    /// Bounded by the segments `(0, x0) → (1, s0)` below and `(0, x1) → (1, s1)` above.
    Trapezoid { x0: f64, x1: f64, s0: f64, s1: f64 },
}

impl NoGoZone {
    pub fn static_interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::invalid("zone needs a < b"));
        }
        Ok(Self::Static { a, b })
    }

    /// `x0 = x1` is allowed: the zone then pinches to a point at `t = 0`.
    pub fn trapezoid(x0: f64, x1: f64, s0: f64, s1: f64) -> Result<Self> {
        if !(x0 <= x1) || !(s0 < s1) {
            return Err(Error::invalid("trapezoid needs x0 <= x1 and s0 < s1"));
        }
        Ok(Self::Trapezoid { x0, x1, s0, s1 })
    }

    pub fn slice(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Static { a, b } => (a, b),
            Self::Trapezoid { x0, x1, s0, s1 } => (x0 + (s0 - x0) * t, x1 + (s1 - x1) * t),
        }
    }

    pub fn width(&self, t: f64) -> f64 {
        let (a, b) = self.slice(t);
        b - a
    }

    /// Widths are affine in `t`, so the minimum over `[t0, 1]` sits at an end.
    pub fn min_width_from(&self, t0: f64) -> f64 {
        self.width(t0).min(self.width(1.0))
    }

    pub fn contains(&self, t: f64, x: f64) -> bool {
        let (a, b) = self.slice(t);
        a < x && x < b
    }

    /// Diverging case `|x0 − x1| < ½|s0 − s1|` with rate `μ = |s1 − s0 − (x1 − x0)|`.
    pub fn diverging_rate(&self) -> Option<f64> {
        match *self {
            Self::Trapezoid { x0, x1, s0, s1 } if (x0 - x1).abs() < 0.5 * (s0 - s1).abs() => {
                Some((s1 - s0 - (x1 - x0)).abs())
            }
            _ => None,
        }
    }
}

fn sweep(n: usize, low: impl Fn(usize) -> bool, high: impl Fn(usize) -> bool) -> usize {
    let mut armed = false;
    let mut count = 0;
    for i in 0..n {
        if armed && high(i) {
            count += 1;
            armed = false;
        } else if !armed && low(i) {
            armed = true;
        }
    }
    count
}

/// Up-crossings of `(a, b)` by a sampled path: passages from `≤ a` to `≥ b`.
/// Greedy arming at the first low value is optimal, so one sweep suffices.
pub fn upcrossing_count(path: &[f64], a: f64, b: f64) -> usize {
    debug_assert!(a < b);
    sweep(path.len(), |i| path[i] <= a, |i| path[i] >= b)
}

/// Up-crossings of the moving interval `zone.slice(t)` with `times[i]` matching `path[i]`.
pub fn upcrossing_count_timevarying(times: &[f64], path: &[f64], zone: &NoGoZone) -> usize {
    debug_assert_eq!(times.len(), path.len());
    sweep(path.len(), |i| path[i] <= zone.slice(times[i]).0, |i| path[i] >= zone.slice(times[i]).1)
}

/// Exhaustive search over index pairs `t₁ < s₁ < t₂ < …`; exponential time.
pub fn upcrossing_count_bruteforce(path: &[f64], a: f64, b: f64) -> usize {
    fn best(path: &[f64], from: usize, a: f64, b: f64) -> usize {
        let mut out = 0;
        for i in from..path.len() {
            if path[i] > a {
                continue;
            }
            for j in i + 1..path.len() {
                if path[j] >= b {
                    out = out.max(1 + best(path, j + 1, a, b));
                }
            }
        }
        out
    }
    best(path, 0, a, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    pub value: f64,
    /// `δ` was below the smallest grid gap, so adjacent pairs were used instead.
    pub below_resolution: bool,
}

/// Slack on `|t − s| ≤ δ` so that `δ = m·h` keeps exactly `m` steps.
fn window_tol(times: &[f64]) -> f64 {
    1e-9 * times.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// `max |X_t − X_s|` over grid pairs with `|t − s| ≤ δ`, by a sliding-window
/// max and min.
pub fn modulus_of_continuity(times: &[f64], path: &[f64], delta: f64) -> Result<Modulus> {
    if !(delta > 0.0) {
        return Err(Error::invalid("modulus needs delta > 0"));
    }
    if times.len() != path.len() || times.len() < 2 {
        return Err(Error::DimensionMismatch { expected: times.len(), found: path.len() });
    }
    let tol = window_tol(times);
    let below = times.windows(2).all(|w| w[1] - w[0] > delta + tol);
    let n = path.len();
    let mut value: f64 = 0.0;
    let (mut maxq, mut minq) = (VecDeque::new(), VecDeque::new());
    let mut lo = 0;
    for hi in 0..n {
        while maxq.back().is_some_and(|&j: &usize| path[j] <= path[hi]) {
            maxq.pop_back();
        }
        maxq.push_back(hi);
        while minq.back().is_some_and(|&j: &usize| path[j] >= path[hi]) {
            minq.pop_back();
        }
        minq.push_back(hi);
        while (below && hi - lo > 1) || (!below && times[hi] - times[lo] > delta + tol) {
            lo += 1;
        }
        while maxq.front().is_some_and(|&j| j < lo) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&j| j < lo) {
            minq.pop_front();
        }
        value = value.max(path[maxq[0]] - path[minq[0]]);
    }
    Ok(Modulus { value, below_resolution: below })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExceedanceCell {
    pub delta: f64,
    pub theta: f64,
    /// Fraction of paths with `κ(δ) ≥ θ`.
    pub p_hat: f64,
    pub se: f64,
}

/// `P̂(κ(δ) ≥ θ)` over the product grid, deltas outer.
pub fn exceedance_table(e: &PathEnsemble, deltas: &[f64], thetas: &[f64]) -> Result<Vec<ExceedanceCell>> {
    if e.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: e.dim });
    }
    let kappas = par::map_range(e.n_paths, |p| {
        deltas
            .iter()
            .map(|&dl| modulus_of_continuity(&e.times, e.path(p), dl).map(|m| m.value))
            .collect::<Result<Vec<f64>>>()
    });
    let kappas = kappas.into_iter().collect::<Result<Vec<_>>>()?;
    let n = e.n_paths as f64;
    let mut cells = Vec::with_capacity(deltas.len() * thetas.len());
    for (i, &delta) in deltas.iter().enumerate() {
        for &theta in thetas {
            let hits = kappas.iter().filter(|k| k[i] >= theta).count() as f64;
            let p_hat = hits / n;
            cells.push(ExceedanceCell { delta, theta, p_hat, se: (p_hat * (1.0 - p_hat) / n).sqrt() });
        }
    }
    Ok(cells)
}

/// Envelope `P(κ(δ) ≥ θ) ≤ A δ^α / θ^β`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationFit {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Intercept of the least-squares fit before inflation.
    pub a_least_squares: f64,
    pub r_squared: f64,
    pub deltas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub cells_used: usize,
    /// At least one exponent hit the positivity floor.
    pub clamped: bool,
}

impl ConcentrationFit {
    pub fn new(a: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(a > 0.0 && alpha > 0.0 && beta > 0.0) {
            return Err(Error::invalid("concentration constants must be positive"));
        }
        Ok(Self {
            a,
            alpha,
            beta,
            a_least_squares: a,
            r_squared: f64::NAN,
            deltas: Vec::new(),
            thetas: Vec::new(),
            cells_used: 0,
            clamped: false,
        })
    }

    pub fn envelope(&self, delta: f64, theta: f64) -> f64 {
        self.a * delta.powf(self.alpha) / theta.powf(self.beta)
    }
}

pub const MIN_EXPONENT: f64 = 0.05;

/// Least-squares fit of `log P̂ = log A + α log δ − β log θ` on the unsaturated
/// cells, then `A` raised until the envelope majorizes every cell.
pub fn concentration_fit(e: &PathEnsemble, deltas: &[f64], thetas: &[f64]) -> Result<ConcentrationFit> {
    if e.n_paths < 1000 {
        return Err(Error::invalid("concentration fit needs at least 1000 paths"));
    }
    if deltas.len() < 4 || thetas.len() < 4 {
        return Err(Error::GridTooCoarse { need: 4, got: deltas.len().min(thetas.len()) });
    }
    if deltas.iter().chain(thetas).any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("concentration grids must be positive"));
    }
    let cells = exceedance_table(e, deltas, thetas)?;
    let positive: Vec<&ExceedanceCell> = cells.iter().filter(|c| c.p_hat > 0.0).collect();
    let interior: Vec<&ExceedanceCell> = positive.iter().copied().filter(|c| c.p_hat < 1.0).collect();
    let used = if interior.len() >= 3 { interior } else { positive.clone() };
    if used.len() < 3 {
        return Err(Error::invalid("fewer than three cells with nonzero exceedance"));
    }
    let rows: Vec<[f64; 3]> = used.iter().map(|c| [1.0, c.delta.ln(), -c.theta.ln()]).collect();
    let y: Vec<f64> = used.iter().map(|c| c.p_hat.ln()).collect();
    let x = crate::Mat::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let yv = crate::Vector::from_vec(y.clone());
    let coef = (x.transpose() * &x)
        .try_inverse()
        .map(|inv| inv * x.transpose() * &yv)
        .ok_or(Error::invalid("degenerate concentration grid"))?;
    let fitted = &x * &coef;
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(v, f)| (v - f).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let clamped = coef[1] < MIN_EXPONENT || coef[2] < MIN_EXPONENT;
    let (alpha, beta) = (coef[1].max(MIN_EXPONENT), coef[2].max(MIN_EXPONENT));
    let a_ls = coef[0].exp();
    let a = positive
        .iter()
        .map(|c| c.p_hat * c.theta.powf(beta) / c.delta.powf(alpha))
        .fold(a_ls, f64::max);
    Ok(ConcentrationFit {
        a,
        alpha,
        beta,
        a_least_squares: a_ls,
        r_squared,
        deltas: deltas.to_vec(),
        thetas: thetas.to_vec(),
        cells_used: used.len(),
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCheck {
    pub cells: usize,
    /// Cells with `P̂ > envelope + z·SE`.
    pub violations: usize,
    /// Largest `(P̂ − envelope) / SE` over cells with positive SE.
    pub max_excess_z: f64,
}

/// Tests the envelope against an independent ensemble at `z` standard errors.
pub fn verify_envelope(fit: &ConcentrationFit, e: &PathEnsemble, deltas: &[f64], thetas: &[f64], z: f64) -> Result<EnvelopeCheck> {
    let cells = exceedance_table(e, deltas, thetas)?;
    let mut violations = 0;
    let mut max_excess_z = f64::NEG_INFINITY;
    for c in &cells {
        let env = fit.envelope(c.delta, c.theta);
        if c.p_hat > env + z * c.se {
            violations += 1;
        }
        if c.se > 0.0 {
            max_excess_z = max_excess_z.max((c.p_hat - env) / c.se);
        }
    }
    Ok(EnvelopeCheck { cells: cells.len(), violations, max_excess_z })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingBound {
    pub bound: f64,
    pub delta_star: f64,
}

/// `A · (α + 1)/α^{α/(α+1)} · ε^{α/(α+1)} / gap^{β/(α+1)}` at the minimizer
/// `δ* = (gap^β ε / α)^{1/(α+1)}`.
pub fn crossing_bound(epsilon: f64, gap: f64, fit: &ConcentrationFit) -> Result<CrossingBound> {
    if !(epsilon >= 0.0) || !(gap > 0.0) {
        return Err(Error::invalid("crossing bound needs epsilon >= 0 and gap > 0"));
    }
    let (al, be) = (fit.alpha, fit.beta);
    let delta_star = (gap.powf(be) * epsilon / al).powf(1.0 / (al + 1.0));
    let constant = (al + 1.0) / al.powf(al / (al + 1.0));
    let bound = fit.a * constant * epsilon.powf(al / (al + 1.0)) / gap.powf(be / (al + 1.0));
    Ok(CrossingBound { bound, delta_star })
}

/// Zone `(sup S0, inf S1)` between two separated intervals.
pub fn build_nogo_static(s0: &AxisBox, s1: &AxisBox) -> Result<NoGoZone> {
    if s0.dim() != 1 || s1.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: s0.dim().max(s1.dim()) });
    }
    let (a, b) = (s0.hi[0], s1.lo[0]);
    if !(a < b) {
        return Err(Error::NotDisconnected("sup S0 must lie strictly below inf S1".into()));
    }
    NoGoZone::static_interval(a, b)
}

/// Trapezoid between `ℓ(x0, s0)` and `ℓ(x1, s1)` with `P0(X ≤ x0) = w0` and
/// `P0(X ≥ x1) = w1`.
pub fn build_lowgo_trapezoid(p0: &MeasureSpec, g: &SupportGeometry) -> Result<NoGoZone> {
    if p0.dim() != 1 || g.s0.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: p0.dim() });
    }
    let (s0, s1) = (g.s0.hi[0], g.s1.lo[0]);
    if !(s0 < s1) {
        return Err(Error::NotDisconnected("S0 must lie to the left of S1".into()));
    }
    if !(g.w0 > 0.0 && g.w1 > 0.0) {
        return Err(Error::invalid("support weights must be positive"));
    }
    let x0 = p0.quantile_1d(g.w0)?;
    let x1 = p0.quantile_1d(1.0 - g.w1)?.max(x0);
    NoGoZone::trapezoid(x0, x1, s0, s1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEstimate {
    /// Fraction of paths with at least one up-crossing of the zone.
    pub p_cross: f64,
    pub se_cross: f64,
    /// Fraction of paths that cross or have a node inside the zone.
    pub p_enter: f64,
    pub se_enter: f64,
    pub n: usize,
}

fn binomial(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

pub fn empirical_crossing_probability(e: &PathEnsemble, zone: &NoGoZone) -> Result<CrossingEstimate> {
    if e.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: e.dim });
    }
    if e.times[0].abs() > 1e-12 || (e.times[e.n_times() - 1] - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("ensemble times must cover [0, 1]"));
    }
    let flags = par::map_range(e.n_paths, |p| {
        let path = e.path(p);
        let cross = upcrossing_count_timevarying(&e.times, path, zone) >= 1;
        let inside = e.times.iter().zip(path).any(|(&t, &x)| zone.contains(t, x));
        (cross, cross || inside)
    });
    let (pc, sc) = binomial(flags.iter().filter(|f| f.0).count(), e.n_paths);
    let (pe, se) = binomial(flags.iter().filter(|f| f.1).count(), e.n_paths);
    Ok(CrossingEstimate { p_cross: pc, se_cross: sc, p_enter: pe, se_enter: se, n: e.n_paths })
}

/// Fraction of paths with `X_0 ≤ lo` and `X_1 ≥ hi`, with its binomial SE.
pub fn opposite_tail_probability(e: &PathEnsemble, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if e.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: e.dim });
    }
    let last = e.n_times() - 1;
    let hits = (0..e.n_paths).filter(|&p| e.value(p, 0)[0] <= lo && e.value(p, last)[0] >= hi).count();
    Ok(binomial(hits, e.n_paths))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshCheck {
    pub delta: f64,
    pub paths_with_crossing: usize,
    /// Crossing paths with no mesh node inside `(a, b)` and `κ(δ) < b − a`.
    pub violations: usize,
}

/// Checks `{N ≥ 1} ⊆ {some mesh node in (a, b)} ∪ {κ(δ) ≥ b − a}` on every path,
/// with the mesh made of every `m`-th node plus the last one.
pub fn mesh_event_inclusion(e: &PathEnsemble, a: f64, b: f64, m: usize) -> Result<MeshCheck> {
    if e.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: e.dim });
    }
    if m == 0 || m >= e.n_times() || !(a < b) {
        return Err(Error::invalid("mesh stride must lie in 1..n_times and a < b"));
    }
    let h = e.times[1] - e.times[0];
    if e.times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::invalid("mesh check needs a uniform time grid"));
    }
    let delta = m as f64 * h;
    let last = e.n_times() - 1;
    let outcome = par::map_range(e.n_paths, |p| -> Result<(bool, bool)> {
        let path = e.path(p);
        if upcrossing_count(path, a, b) == 0 {
            return Ok((false, false));
        }
        let on_mesh = (0..e.n_times()).filter(|&k| k % m == 0 || k == last).any(|k| a < path[k] && path[k] < b);
        let fast = modulus_of_continuity(&e.times, path, delta)?.value >= b - a;
        Ok((true, !(on_mesh || fast)))
    });
    let mut check = MeshCheck { delta, paths_with_crossing: 0, violations: 0 };
    for r in outcome {
        let (crossed, violated) = r?;
        check.paths_with_crossing += crossed as usize;
        check.violations += violated as usize;
    }
    Ok(check)
}

/// Constant `B(α, β, γ, A, C)` multiplying `δ^{αγ/(γ(α+1)+β)}` in the early-time
/// crossing estimate, evaluated as printed. With `β' = β/(α + 1)` the exact
/// minimum over `ξ` carries `(β'/γ)` where the printed form has `(β/α + 1)/γ`;
/// the printed value is the larger of the two, so it stays an upper bound.
pub fn b_constant(alpha: f64, beta: f64, gamma: f64, a: f64, c: f64) -> f64 {
    let bp = beta / (alpha + 1.0);
    let s = gamma + bp;
    let bracket = ((beta / alpha + 1.0) / gamma).powf(gamma / s) + (gamma / bp).powf(bp / s);
    bracket * c.powf(bp / s) * (2.0 * a).powf(gamma / s)
}

/// `min_ξ C ξ^γ + 2A δ^{α/(α+1)} / ξ^{β/(α+1)}` in closed form.
pub fn early_crossing_minimum(alpha: f64, beta: f64, gamma: f64, a: f64, c: f64, delta: f64) -> f64 {
    let bp = beta / (alpha + 1.0);
    let s = gamma + bp;
    let k = 2.0 * a * delta.powf(alpha / (alpha + 1.0));
    ((bp / gamma).powf(gamma / s) + (gamma / bp).powf(bp / s)) * c.powf(bp / s) * k.powf(gamma / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The inequality `w0·w1 ≤ bound` holds; nothing is derived.
    Consistent,
    /// `w0·w1` exceeds the bound, so no straight-line process in the fitted
    /// class connects the two measures.
    Violated,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Consistent => "consistent",
            Self::Violated => "violated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingReport {
    pub p_cross: Option<f64>,
    pub p_enter: Option<f64>,
    pub se_cross: Option<f64>,
    pub se_enter: Option<f64>,
    /// `D · Σ ε^{e_i}`.
    pub bound: f64,
    /// `δ(ε) = ε^{α/(2β)}`.
    pub delta_star: f64,
    pub epsilon: f64,
    pub w0w1: f64,
    /// `ε^{e_i}` for the four exponents.
    pub terms: [f64; 4],
    pub exponents: [f64; 4],
    pub d_constant: f64,
    pub b_constant: f64,
    /// `2^{β/(α+1)} A / |s0 − s1|^{β/(α+1)}`.
    pub case_constant: f64,
    /// Largest `ε` at which the bound still falls below `w0·w1`.
    pub epsilon0: f64,
    pub frostman: FrostmanConstant,
    pub fit: ConcentrationFit,
    pub zone: NoGoZone,
    pub verdict: Verdict,
}

impl CrossingReport {
    pub fn with_empirical(mut self, est: &CrossingEstimate) -> Self {
        self.p_cross = Some(est.p_cross);
        self.p_enter = Some(est.p_enter);
        self.se_cross = Some(est.se_cross);
        self.se_enter = Some(est.se_enter);
        self
    }
}

/// Exponents of `ε` in the four crossing terms.
pub fn certificate_exponents(alpha: f64, beta: f64, gamma: f64) -> [f64; 4] {
    [
        alpha * alpha * gamma / (2.0 * beta * gamma * (alpha + 1.0) + 2.0 * beta * beta),
        alpha / (2.0 * (alpha + 1.0)),
        alpha / (alpha + 1.0),
        1.0,
    ]
}

fn certificate_rhs(d: f64, ex: &[f64; 4], eps: f64) -> f64 {
    d * ex.iter().map(|&e| eps.powf(e)).sum::<f64>()
}

/// Evaluates `w0·w1 ≤ D(ε^{e1} + ε^{e2} + ε^{e3} + ε)` for a 1-d source with
/// bounded density and an ε-disconnected target geometry.
pub fn impossibility_certificate(p0: &MeasureSpec, g: &SupportGeometry, fit: &ConcentrationFit) -> Result<CrossingReport> {
    if p0.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: p0.dim() });
    }
    let frostman = frostman_constant(p0.sup_density(), 1)?;
    let zone = build_lowgo_trapezoid(p0, g)?;
    let (al, be, ga) = (fit.alpha, fit.beta, frostman.gamma);
    let (s0, s1) = (g.s0.hi[0], g.s1.lo[0]);
    let bp = be / (al + 1.0);
    let b = b_constant(al, be, ga, fit.a, frostman.c);
    let case_constant = 2f64.powf(bp) * fit.a / (s1 - s0).abs().powf(bp);
    let d = b.max(case_constant).max(1.0);
    let exponents = certificate_exponents(al, be, ga);
    let eps = g.epsilon.max(0.0);
    let terms = exponents.map(|e| eps.powf(e));
    let bound = d * terms.iter().sum::<f64>();
    let w0w1 = g.w0 * g.w1;
    // rhs is increasing in ε with rhs(1) = 4D > 1 ≥ w0·w1; bisect on log ε
    let (mut lo, mut hi) = (-700.0f64, 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if certificate_rhs(d, &exponents, mid.exp()) < w0w1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CrossingReport {
        p_cross: None,
        p_enter: None,
        se_cross: None,
        se_enter: None,
        bound,
        delta_star: eps.powf(al / (2.0 * be)),
        epsilon: eps,
        w0w1,
        terms,
        exponents,
        d_constant: d,
        b_constant: b,
        case_constant,
        epsilon0: lo.exp(),
        frostman,
        fit: fit.clone(),
        zone,
        verdict: if w0w1 > bound { Verdict::Violated } else { Verdict::Consistent },
    })
}

/// Largest probability `max_k P(X_{t_k} ∈ (c, c + width))` for Gaussian marginals
/// `(mean, sd)`.
pub fn gaussian_occupancy(marginals: &[(f64, f64)], c: f64, width: f64) -> f64 {
    marginals
        .iter()
        .map(|&(m, s)| crate::special::normal_interval((c - m) / s, (c + width - m) / s))
        .fold(0.0, f64::max)
}

/// Static zone `(c, c + width)` above every marginal mean whose largest
/// occupancy equals `epsilon`.
pub fn gaussian_occupancy_zone(marginals: &[(f64, f64)], width: f64, epsilon: f64) -> Result<NoGoZone> {
    if marginals.is_empty() || !(width > 0.0) || !(epsilon > 0.0) {
        return Err(Error::invalid("occupancy zone needs marginals, width > 0 and epsilon > 0"));
    }
    let mut lo = marginals.iter().map(|m| m.0).fold(f64::NEG_INFINITY, f64::max);
    if gaussian_occupancy(marginals, lo, width) <= epsilon {
        return Err(Error::invalid("zone at the largest mean already has occupancy below epsilon"));
    }
    let mut hi = lo + 1.0;
    while gaussian_occupancy(marginals, hi, width) > epsilon {
        hi += 2.0 * (hi - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gaussian_occupancy(marginals, mid, width) > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    NoGoZone::static_interval(hi, hi + width)
}
