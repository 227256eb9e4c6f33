use super::*;
use crate::interpolants::{
    build_1d_gaussian, build_affine, build_collapse, build_multivariate_gaussian, build_same_cov_gaussian,
    gaussian_ot_map, local_grid, sample_paths, Coupling,
};
use crate::linalg::frobenius;
use crate::measures::MeasureSpec;
use crate::Mat;

fn std_normal() -> MeasureSpec {
    MeasureSpec::gaussian_1d(0.0, 1.0).unwrap()
}

fn affine_independent_1d() -> crate::interpolants::GeneralizedInterpolant {
    build_affine(Coupling::independent(std_normal(), std_normal()).unwrap())
}

fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_column_slice(v))
}

#[test]
fn same_cov_velocity_is_constant() {
    let s = Mat::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let interp = build_same_cov_gaussian(vec![0.5, -1.0], vec![2.0, 1.0], s).unwrap();
    let f = GaussianField::new(&interp).unwrap();
    for &t in &[0.0, 0.1, 0.5, 0.9, 1.0] {
        let v = analytic_velocity(&interp, t, &[3.0, -7.0]).unwrap();
        assert!((v[0] - 1.5).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
        assert!(frobenius(&f.moments(t).unwrap().g) < 1e-14);
    }
    let r = burgers_residual(&f, 0.3, &[1.0, 1.0], None).unwrap();
    assert!(r.amax() <= 1e-12);
}

#[test]
fn same_cov_covariance_is_frozen() {
    let interp = build_same_cov_gaussian(vec![0.0], vec![0.0], diag(&[2.0])).unwrap();
    let f = GaussianField::new(&interp).unwrap();
    for &t in &[0.1, 0.4, 0.8] {
        let m = f.moments(t).unwrap();
        assert!(m.sigma_dot.amax() < 1e-14);
        assert!((m.sigma[(0, 0)] - 2.0).abs() < 1e-14);
        assert!(analytic_velocity(&interp, t, &[5.0]).unwrap()[0].abs() < 1e-14);
    }
}

#[test]
fn figure_one_moments() {
    let interp = build_1d_gaussian(-2.0, 0.6, 3.0, 1.5).unwrap();
    let m = gaussian_moments(&interp, 0.5).unwrap();
    assert!((m.m[0] - 0.5).abs() < 1e-15);
    assert!((m.sigma[(0, 0)].sqrt() - 1.05).abs() < 1e-14);
    let m0 = gaussian_moments(&interp, 0.0).unwrap();
    assert_eq!(m0.m[0], -2.0);
    assert!((m0.sigma[(0, 0)] - 0.36).abs() < 1e-15);
    assert!((analytic_velocity(&interp, 0.0, &[-2.0]).unwrap()[0] - 5.0).abs() < 1e-14);
    let mt = gaussian_moments(&interp, 0.3).unwrap();
    assert!((analytic_velocity(&interp, 0.3, &[mt.m[0]]).unwrap()[0] - 5.0).abs() < 1e-14);
}

#[test]
fn one_d_builder_is_burgers_free_and_lipschitz() {
    let interp = build_1d_gaussian(-2.0, 0.6, 3.0, 1.5).unwrap();
    let f = GaussianField::new(&interp).unwrap();
    let pts: Vec<f64> = (0..41).map(|i| -6.0 + 0.3 * i as f64).collect();
    for &t in &[0.0, 0.2, 0.5, 0.8, 1.0] {
        for &x in &[-5.0, -1.0, 0.0, 2.5, 7.0] {
            assert!(burgers_residual(&f, t, &[x], None).unwrap()[0].abs() <= 1e-12);
        }
        let sigma_t = 0.6 * (1.0 - t) + 1.5 * t;
        let l = lipschitz_estimate(&f, t, &pts).unwrap();
        assert!((l - 0.9 / sigma_t).abs() < 1e-12, "t={t}: {l}");
    }
}

#[test]
fn affine_independent_closed_forms() {
    let interp = affine_independent_1d();
    let f = GaussianField::new(&interp).unwrap();
    for &t in &[0.1, 0.5, 0.75] {
        for &x in &[-2.0, 0.5, 3.0] {
            let v = analytic_velocity(&interp, t, &[x]).unwrap()[0];
            let want = (2.0 * t - 1.0) * x / ((1.0 - t) * (1.0 - t) + t * t);
            assert!((v - want).abs() < 1e-14);
        }
    }
    let (v, pi) = analytic_affine_stats(&interp.coupling, 0.5, &[1.0]).unwrap();
    assert!(v[0].abs() < 1e-15);
    assert!((pi[(0, 0)] - 2.0).abs() < 1e-14);
    let exact = burgers_residual(&f, 0.5, &[1.0], None).unwrap()[0];
    assert!((exact - 4.0).abs() < 1e-12);
    let fd = burgers_residual(&f, 0.5, &[1.0], Some(FdSteps { ht: 1e-3, hx: 1e-3 })).unwrap()[0];
    assert!((fd - 4.0).abs() < 1e-4);
}

#[test]
fn affine_pi_at_start_is_target_covariance() {
    let s0 = diag(&[0.5, 2.0]);
    let s1 = Mat::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 3.0]);
    let c = Coupling::independent(
        crate::measures::GaussianMeasure::new(vec![0.0; 2], s0).unwrap().into(),
        crate::measures::GaussianMeasure::new(vec![0.0; 2], s1.clone()).unwrap().into(),
    )
    .unwrap();
    let (_, pi) = analytic_affine_stats(&c, 0.0, &[0.3, 0.1]).unwrap();
    assert!(frobenius(&(pi - s1)) < 1e-12);
}

#[test]
fn monge_coupling_has_no_reynolds_stress() {
    let s0 = Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.6]);
    let s1 = Mat::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.5]);
    let map = gaussian_ot_map(&[0.0, 0.0], &s0, &[1.0, 2.0], &s1).unwrap();
    let p0: MeasureSpec = crate::measures::GaussianMeasure::new(vec![0.0; 2], s0).unwrap().into();
    let c = Coupling::deterministic(p0, map).unwrap();
    let f = GaussianField::new(&build_affine(c.clone())).unwrap();
    for &t in &[0.0, 0.3, 0.6, 1.0] {
        let (_, pi) = analytic_affine_stats(&c, t, &[0.0, 0.0]).unwrap();
        assert!(pi.amax() < 1e-12, "t={t}");
        assert!(burgers_residual(&f, t, &[0.4, -0.3], None).unwrap().amax() < 1e-10);
    }
    assert!(frobenius(&(f.covariance(1.0) - s1)) < 1e-10);
}

#[test]
fn figure_two_pencil_identity() {
    let interp = build_multivariate_gaussian(vec![-1.0, 1.0], diag(&[0.36, 1.0]), vec![2.0, 0.0], diag(&[2.25, 0.25]))
        .unwrap();
    let f = GaussianField::new(&interp).unwrap();
    let times: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    assert!(straightness_identity(&f, &times).unwrap() <= 1e-10);
    for &t in &[0.0, 0.37, 1.0] {
        assert!(burgers_residual(&f, t, &[0.3, -0.2], None).unwrap().amax() <= 1e-10);
    }
}

#[test]
fn noncommuting_pencil_identity() {
    let s0 = Mat::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 0.8, -0.2, 0.1, -0.2, 1.5]);
    let s1 = Mat::from_row_slice(3, 3, &[2.0, -0.6, 0.0, -0.6, 0.9, 0.3, 0.0, 0.3, 0.4]);
    let interp = build_multivariate_gaussian(vec![0.0; 3], s0, vec![1.0, -1.0, 0.5], s1).unwrap();
    let f = GaussianField::new(&interp).unwrap();
    let times: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    assert!(straightness_identity(&f, &times).unwrap() <= 1e-10);
}

#[test]
fn covariance_derivative_matches_cross_covariance() {
    let builders = [
        build_1d_gaussian(-2.0, 0.6, 3.0, 1.5).unwrap(),
        build_multivariate_gaussian(vec![0.0; 2], diag(&[0.36, 1.0]), vec![1.0; 2], diag(&[2.25, 0.25])).unwrap(),
        build_same_cov_gaussian(vec![0.0], vec![1.0], diag(&[0.7])).unwrap(),
        affine_independent_1d(),
    ];
    for interp in &builders {
        for &t in &[0.1, 0.5, 0.9] {
            assert!(covariance_derivative_check(interp, t, 1e-4).unwrap() < 1e-8);
        }
    }
    // for the straight builders G = ½Σ̇
    let f = GaussianField::new(&builders[1]).unwrap();
    let m = f.moments(0.4).unwrap();
    assert!(frobenius(&(&m.g - &m.sigma_dot * 0.5)) < 1e-12);
}

#[test]
fn zero_cross_covariance_forces_equal_endpoints() {
    let times: Vec<f64> = (1..20).map(|i| i as f64 / 20.0).collect();
    let tol = 1e-12;
    for (s0, s1) in [(0.6, 1.5), (1.0, 1.0), (2.0, 0.5), (0.8, 0.8)] {
        let f = GaussianField::new(&build_1d_gaussian(0.0, s0, 1.0, s1).unwrap()).unwrap();
        if max_cross_covariance(&f, &times).unwrap() <= tol {
            assert!((s0 * s0 - s1 * s1).abs() <= tol);
        } else {
            assert!(s0 != s1);
        }
    }
}

#[test]
fn collapse_field_is_singular_at_tau_and_blows_up() {
    let interp = build_collapse(0.5, Coupling::independent(std_normal(), std_normal()).unwrap()).unwrap();
    assert!(matches!(analytic_velocity(&interp, 0.5, &[1.0]), Err(Error::Singular { .. })));
    let f = GaussianField::new(&interp).unwrap();
    let pts: Vec<f64> = (0..21).map(|i| -2.0 + 0.2 * i as f64).collect();
    for &t in &[0.3, 0.4, 0.45, 0.55, 0.6, 0.7] {
        let l = lipschitz_estimate(&f, t, &pts).unwrap();
        let want = 1.0 / (t - 0.5f64).abs();
        assert!((l / want - 1.0).abs() < 1e-10, "t={t}: {l} vs {want}");
        let v = analytic_velocity(&interp, t, &[1.0]).unwrap()[0];
        assert!((v - 1.0 / (t - 0.5)).abs() < 1e-9);
    }
}

#[test]
fn constant_field_basics() {
    let f = ConstantField { c: vec![1.0, -2.0] };
    assert_eq!(lipschitz_estimate(&f, 0.3, &[0.0, 0.0, 1.0, 1.0, 2.0, 5.0]).unwrap(), 0.0);
    assert_eq!(burgers_residual(&f, 0.3, &[0.0, 0.0], None).unwrap().amax(), 0.0);
    let fn_field = FnField::new(1, |_, x, o| {
        o[0] = x[0];
        Ok(())
    });
    assert!(burgers_residual(&fn_field, 0.5, &[1.0], None).is_err());
    assert!((burgers_residual(&fn_field, 0.5, &[1.0], Some(FdSteps { ht: 1e-3, hx: 1e-3 })).unwrap()[0] - 1.0).abs() < 1e-9);
}

#[test]
fn grid_field_interpolates_linear_fields_exactly() {
    let grid = SpatialGrid::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![5, 7]).unwrap();
    let lin = FnField::new(2, |t, x, o| {
        o[0] = 2.0 * x[0] - x[1] + t;
        o[1] = x[0] + 0.5 * t;
        Ok(())
    });
    let gf = GridField::tabulate(&lin, vec![0.0, 0.5, 1.0], grid).unwrap();
    let mut a = [0.0; 2];
    let mut b = [0.0; 2];
    for &(t, x, y) in &[(0.1, 0.3, -0.7), (0.77, -0.95, 0.12), (0.5, 0.0, 0.0)] {
        gf.velocity(t, &[x, y], &mut a).unwrap();
        lin.velocity(t, &[x, y], &mut b).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
    assert!(!gf.contains(0.5, &[1.5, 0.0]));
    gf.velocity(0.5, &[5.0, 0.0], &mut a).unwrap();
    gf.velocity(0.5, &[1.0, 0.0], &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn continuity_holds_for_figure_one_density() {
    let interp = build_1d_gaussian(-2.0, 0.6, 3.0, 1.5).unwrap();
    let f = GaussianField::new(&interp).unwrap();
    let times = crate::interpolants::uniform_grid(201).unwrap();
    let grid = SpatialGrid::uniform_1d(-6.5, 12.5, 201).unwrap();
    let pts = grid.points();
    let mut rho = Vec::new();
    for &t in &times {
        let s = f.slice(t).unwrap();
        rho.extend(pts.iter().map(|&x| s.density(&[x])));
    }
    let r8 = continuity_residual(&times, &grid, &rho, &f, 8).unwrap();
    assert!(r8.max_abs < 1e-6, "{}", r8.max_abs);
    let r2 = continuity_residual(&times, &grid, &rho, &f, 2).unwrap();
    assert!(r2.max_abs > r8.max_abs);
}

#[test]
fn continuity_of_translation_and_rest() {
    let times = crate::interpolants::uniform_grid(41).unwrap();
    let grid = SpatialGrid::uniform_1d(-4.0, 4.0, 81).unwrap();
    let pts = grid.points();
    let c = 0.7;
    let mut moving = Vec::new();
    let mut still = Vec::new();
    for &t in &times {
        moving.extend(pts.iter().map(|&x| crate::special::normal_pdf(x - c * t)));
        still.extend(pts.iter().map(|&x| crate::special::normal_pdf(x)));
    }
    let r = continuity_residual(&times, &grid, &moving, &ConstantField { c: vec![c] }, 2).unwrap();
    let r_fine = {
        let times = crate::interpolants::uniform_grid(81).unwrap();
        let grid = SpatialGrid::uniform_1d(-4.0, 4.0, 161).unwrap();
        let pts = grid.points();
        let mut m = Vec::new();
        for &t in &times {
            m.extend(pts.iter().map(|&x| crate::special::normal_pdf(x - c * t)));
        }
        continuity_residual(&times, &grid, &m, &ConstantField { c: vec![c] }, 2).unwrap()
    };
    assert!(r.max_abs < 1e-2);
    assert!(r.max_abs / r_fine.max_abs > 3.5, "second order: {} vs {}", r.max_abs, r_fine.max_abs);
    let z = continuity_residual(&times, &grid, &still, &ConstantField { c: vec![0.0] }, 4).unwrap();
    assert_eq!(z.max_abs, 0.0);
    assert!(continuity_residual(&times, &grid, &still[1..], &ConstantField { c: vec![0.0] }, 2).is_err());
}

#[test]
fn analytic_stats_satisfy_balance_for_straight_builder() {
    let interp = build_1d_gaussian(-2.0, 0.6, 3.0, 1.5).unwrap();
    let f = GaussianField::new(&interp).unwrap();
    let grid = SpatialGrid::uniform_1d(-4.0, 5.0, 181).unwrap();
    let s = ConditionalStats::analytic(&f, 0.5, &grid).unwrap();
    let r = balance_residual(&s, 4).unwrap().summary();
    assert!(r.max_abs < 1e-6, "{r:?}");
    // curved baseline: balance fails but the lemma form holds
    let g = GaussianField::new(&affine_independent_1d()).unwrap();
    let h = 1e-3;
    let trip: Vec<ConditionalStats> =
        [0.3 - h, 0.3, 0.3 + h].iter().map(|&t| ConditionalStats::analytic(&g, t, &grid).unwrap()).collect();
    let bal = balance_residual(&trip[1], 4).unwrap().summary();
    let lem = lemma_residual(&trip[0], &trip[1], &trip[2], 4).unwrap().summary();
    let mom = momentum_residual(&trip[0], &trip[1], &trip[2], 4).unwrap().summary();
    assert!(bal.max_abs > 0.1, "{bal:?}");
    assert!(lem.max_abs < 1e-5, "{lem:?}");
    assert!(mom.max_abs < 1e-5, "{mom:?}");
}

#[test]
fn residuals_reject_coarse_grids() {
    let g = GaussianField::new(&affine_independent_1d()).unwrap();
    let grid = SpatialGrid::uniform_1d(-1.0, 1.0, 4).unwrap();
    let s = ConditionalStats::analytic(&g, 0.5, &grid).unwrap();
    assert!(matches!(balance_residual(&s, 2), Err(Error::GridTooCoarse { .. })));
}

fn ensemble(interp: &crate::interpolants::GeneralizedInterpolant, n: usize, t: f64, seed: u64) -> crate::interpolants::PathEnsemble {
    sample_paths(interp, n, &local_grid(t, 0.005, 2).unwrap(), seed).unwrap()
}

#[test]
fn empirical_velocity_of_same_cov_builder() {
    let interp = build_same_cov_gaussian(vec![-1.0], vec![2.0], diag(&[0.8])).unwrap();
    let e = ensemble(&interp, 20_000, 0.4, 1);
    let k = e.time_index(0.4).unwrap();
    let grid = SpatialGrid::central(&e.slice_at(k), 1, 41, 0.99).unwrap();
    let s = empirical_conditional_stats(&e, k, &grid, &EstimatorOptions::default()).unwrap();
    assert!(s.n_valid() > 20);
    let frac = s.fraction_within(|f| &f.v, |_| vec![3.0]);
    assert!(frac >= 0.95, "{frac}");
    assert!(s.pi_is_psd_within_noise());
}

#[test]
fn empirical_reynolds_stress_of_affine_couplings() {
    let interp = affine_independent_1d();
    let e = ensemble(&interp, 20_000, 0.5, 2);
    let k = e.time_index(0.5).unwrap();
    let grid = SpatialGrid::central(&e.slice_at(k), 1, 31, 0.9).unwrap();
    let s = empirical_conditional_stats(&e, k, &grid, &EstimatorOptions::default()).unwrap();
    assert!(s.fraction_within(|f| &f.pi, |_| vec![2.0]) >= 0.95);

    let map = gaussian_ot_map(&[0.0], &diag(&[1.0]), &[1.0], &diag(&[4.0])).unwrap();
    let monge = build_affine(Coupling::deterministic(std_normal(), map).unwrap());
    let e = ensemble(&monge, 20_000, 0.5, 3);
    let opts = EstimatorOptions { regression: Regression::LocalLinear, ..Default::default() };
    let s = empirical_conditional_stats(&e, k, &grid, &opts).unwrap();
    assert!(s.fraction_within(|f| &f.pi, |_| vec![0.0]) >= 0.95);
    assert!(s.fields.pi.iter().zip(&s.valid).filter(|(_, &v)| v).all(|(p, _)| p.abs() < 1e-12));
}

#[test]
fn empirical_momentum_balance_of_curved_baseline() {
    let interp = affine_independent_1d();
    let e = ensemble(&interp, 20_000, 0.3, 4);
    let k = e.time_index(0.3).unwrap();
    let grid = SpatialGrid::central(&e.slice_at(k), 1, 61, 0.99).unwrap();
    let [p, c, n] = stats_triplet(&e, k, &grid, &EstimatorOptions::default()).unwrap();
    let mom = momentum_residual(&p, &c, &n, 4).unwrap().summary();
    assert!(mom.frac_within_3se >= 0.95, "{mom:?}");
    let lem = lemma_residual(&p, &c, &n, 4).unwrap().summary();
    assert!(lem.frac_within_3se >= 0.95, "{lem:?}");
}

#[test]
fn too_few_paths_is_rejected() {
    let e = ensemble(&affine_independent_1d(), 100, 0.5, 0);
    let grid = SpatialGrid::uniform_1d(-1.0, 1.0, 11).unwrap();
    assert!(empirical_conditional_stats(&e, 3, &grid, &EstimatorOptions::default()).is_err());
}
