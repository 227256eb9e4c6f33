use proptest::prelude::*;
use sflow_core::interpolants::{build_multivariate_gaussian, build_same_cov_gaussian, gaussian_ot_map, pencil_decompose};
use sflow_core::linalg::{frobenius, sym_sqrt};
use sflow_core::measures::MeasureSpec;
use sflow_core::nogo::{
    crossing_bound, modulus_of_continuity, upcrossing_count, upcrossing_count_bruteforce, upcrossing_count_timevarying,
    ConcentrationFit, NoGoZone,
};
use sflow_core::velocity::{burgers_residual, GaussianField};
use sflow_core::Mat;

fn spd(d: usize) -> impl Strategy<Value = Mat> {
    (prop::collection::vec(-1.0f64..1.0, d * d), 0.2f64..2.0).prop_map(move |(v, shift)| {
        let g = Mat::from_vec(d, d, v);
        &g * g.transpose() + Mat::identity(d, d) * shift
    })
}

fn pair(max_d: usize) -> impl Strategy<Value = (Mat, Mat)> {
    (1..=max_d).prop_flat_map(|d| (spd(d), spd(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pencil_reconstructs_both_covariances((s0, s1) in pair(4)) {
        let p = pencil_decompose(&s0, &s1).unwrap();
        let (r0, r1) = p.reconstruct();
        prop_assert!(frobenius(&(r0 - &s0)) <= 1e-9 * frobenius(&s0));
        prop_assert!(frobenius(&(r1 - &s1)) <= 1e-9 * frobenius(&s1));
        prop_assert!(p.lambda.windows(2).all(|w| w[0] <= w[1]) && p.lambda[0] > 0.0);
    }

    #[test]
    fn ot_map_pushes_covariance((s0, s1) in pair(4)) {
        let d = s0.nrows();
        let m = gaussian_ot_map(&vec![0.0; d], &s0, &vec![1.0; d], &s1).unwrap();
        let pushed = &m.matrix * &s0 * m.matrix.transpose();
        prop_assert!(frobenius(&(pushed - &s1)) <= 1e-8 * frobenius(&s1));
        prop_assert!(frobenius(&(&m.matrix - m.matrix.transpose())) <= 1e-9 * frobenius(&m.matrix));
    }

    #[test]
    fn gaussian_builders_solve_burgers((s0, s1) in pair(3), t in 0.05f64..0.95, seed in 0u64..1000) {
        let d = s0.nrows();
        let x: Vec<f64> = (0..d).map(|i| ((seed + i as u64) % 7) as f64 * 0.4 - 1.2).collect();
        let m0: Vec<f64> = (0..d).map(|i| i as f64 - 0.5).collect();
        let m1: Vec<f64> = (0..d).map(|i| 2.0 - i as f64).collect();
        let same = GaussianField::new(&build_same_cov_gaussian(m0.clone(), m1.clone(), s0.clone()).unwrap()).unwrap();
        let r = burgers_residual(&same, t, &x, None).unwrap();
        prop_assert!(r.amax() <= 1e-10);
        let multi = GaussianField::new(&build_multivariate_gaussian(m0, s0, m1, s1).unwrap()).unwrap();
        let r = burgers_residual(&multi, t, &x, None).unwrap();
        prop_assert!(r.amax() <= 1e-8 * (1.0 + x.iter().map(|v| v.abs()).sum::<f64>()), "{r}");
    }

    #[test]
    fn sqrt_squares_back(s in (1usize..5).prop_flat_map(spd)) {
        let r = sym_sqrt(&s);
        prop_assert!(frobenius(&(&r * &r - &s)) <= 1e-10 * frobenius(&s));
    }

    #[test]
    fn quantile_inverts_cdf(p in 1e-6f64..(1.0 - 1e-6), mu in -3.0f64..3.0, s in 0.1f64..3.0) {
        let g = MeasureSpec::gaussian_1d(mu, s * s).unwrap();
        let q = g.quantile_1d(p).unwrap();
        prop_assert!((g.cdf_1d(q).unwrap() - p).abs() <= 1e-10);
        let mix = MeasureSpec::two_mode(
            MeasureSpec::gaussian_1d(-mu - 2.0, s * s).unwrap(),
            MeasureSpec::gaussian_1d(mu + 2.0, 0.25).unwrap(),
        ).unwrap();
        let q = mix.quantile_1d(p).unwrap();
        prop_assert!((mix.cdf_1d(q).unwrap() - p).abs() <= 1e-9);
    }

    #[test]
    fn sweep_counter_matches_exhaustive_search(path in prop::collection::vec(-2.0f64..2.0, 0..13), a in -1.0f64..0.5, w in 0.01f64..1.0) {
        prop_assert_eq!(upcrossing_count(&path, a, a + w), upcrossing_count_bruteforce(&path, a, a + w));
    }

    #[test]
    fn constant_slices_reduce_to_static(path in prop::collection::vec(-2.0f64..2.0, 2..40), a in -1.0f64..0.5, w in 0.01f64..1.0) {
        let times: Vec<f64> = (0..path.len()).map(|i| i as f64 / (path.len() - 1) as f64).collect();
        let zone = NoGoZone::static_interval(a, a + w).unwrap();
        prop_assert_eq!(upcrossing_count_timevarying(&times, &path, &zone), upcrossing_count(&path, a, a + w));
        // a trapezoid with equal ends is the same zone
        let flat = NoGoZone::trapezoid(a, a + w, a, a + w).unwrap();
        prop_assert_eq!(upcrossing_count_timevarying(&times, &path, &flat), upcrossing_count(&path, a, a + w));
    }

    #[test]
    fn modulus_is_monotone_and_bounded(path in prop::collection::vec(-2.0f64..2.0, 2..60), d1 in 0.001f64..1.2, d2 in 0.001f64..1.2) {
        let times: Vec<f64> = (0..path.len()).map(|i| i as f64 / (path.len() - 1) as f64).collect();
        let (lo, hi) = (d1.min(d2), d1.max(d2));
        let k_lo = modulus_of_continuity(&times, &path, lo).unwrap().value;
        let k_hi = modulus_of_continuity(&times, &path, hi).unwrap().value;
        let osc = path.iter().cloned().fold(f64::MIN, f64::max) - path.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(k_lo <= k_hi && k_hi <= osc);
    }

    #[test]
    fn crossing_bound_grows_with_epsilon(e1 in 1e-12f64..1.0, e2 in 1e-12f64..1.0, al in 0.1f64..4.0, be in 0.1f64..4.0, gap in 0.05f64..5.0) {
        let fit = ConcentrationFit::new(1.3, al, be).unwrap();
        let (lo, hi) = (e1.min(e2), e1.max(e2));
        let b_lo = crossing_bound(lo, gap, &fit).unwrap();
        let b_hi = crossing_bound(hi, gap, &fit).unwrap();
        prop_assert!(b_lo.bound <= b_hi.bound && b_lo.delta_star <= b_hi.delta_star);
        let expect = (gap.powf(be) * lo / al).powf(1.0 / (al + 1.0));
        prop_assert!((b_lo.delta_star - expect).abs() <= 1e-12 * expect.max(1e-300));
    }
}
