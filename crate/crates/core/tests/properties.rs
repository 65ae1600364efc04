use penrose_lab::mass;
use penrose_lab::mu_bubble::{self, MuBubbleOptions, MuBubbleProblem, PrescribedMeanCurvature};
use penrose_lab::{Dimension, RadialProfile};
use proptest::prelude::*;

fn dim(n: u32) -> Dimension {
    Dimension::new(n).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // u -> λu scales lengths by λ^k, k = 2/(n-2)
    #[test]
    fn conformal_covariance(n in 3u32..6, m in 0.0f64..3.0, lambda in 0.5f64..2.0, r in 1e-2f64..1e2) {
        let p = RadialProfile::schwarzschild(dim(n), m).unwrap();
        let q = p.clone().scaled(lambda).unwrap();
        let k = 2.0 / f64::from(n - 2);
        let s = lambda.powf(k);
        let (gp, gq) = (p.sphere_geometry(r).unwrap(), q.sphere_geometry(r).unwrap());
        prop_assert!(close(gq.area, gp.area * s.powi(n as i32 - 1), 1e-10));
        prop_assert!(close(gq.mean_curvature, gp.mean_curvature / s, 1e-10));
        prop_assert!(close(gq.intrinsic_diameter, gp.intrinsic_diameter * s, 1e-10));
        let (dp, dq) = (
            p.geodesic_distance(r, 2.0 * r).unwrap().value(),
            q.geodesic_distance(r, 2.0 * r).unwrap().value(),
        );
        prop_assert!(close(dq, dp * s, 1e-10));
        if m == 0.0 {
            prop_assert_eq!(q.scalar_curvature(r).unwrap(), 0.0);
        }
    }

    #[test]
    fn schwarzschild_is_scalar_flat(n in 3u32..7, m in 0.0f64..5.0, log_r in -3.0f64..3.0) {
        let p = RadialProfile::schwarzschild(dim(n), m).unwrap();
        let r = 10f64.powf(log_r);
        prop_assert!(p.scalar_curvature(r).unwrap().abs() < 1e-10);
    }

    #[test]
    fn geodesic_distance_is_additive(m in 0.0f64..3.0, a in 1e-2f64..1.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let p = RadialProfile::schwarzschild(Dimension::THREE, m).unwrap();
        let c = a * 100.0;
        let b = a * 100f64.powf(t1.min(t2).max(1e-3));
        let whole = p.geodesic_distance(a, c).unwrap().value();
        let split = p.geodesic_distance(a, b).unwrap().value() + p.geodesic_distance(b, c).unwrap().value();
        prop_assert!((whole - split).abs() <= 1e-9 * (1.0 + whole), "{whole} vs {split}");
    }

    // d/dr of the areal radius has the sign of H
    #[test]
    fn area_monotone_where_mean_convex(n in 3u32..6, m in 0.1f64..3.0, log_r in -2.0f64..2.0) {
        let p = RadialProfile::schwarzschild(dim(n), m).unwrap();
        let r = 10f64.powf(log_r);
        let h = p.sphere_mean_curvature(r).unwrap();
        prop_assume!(h.abs() > 1e-6);
        let step = 1e-6 * r;
        let da = p.sphere_area(r + step).unwrap() - p.sphere_area(r - step).unwrap();
        prop_assert_eq!(da > 0.0, h > 0.0);
        prop_assert_eq!(p.area_radius_derivative(r).unwrap() > 0.0, h > 0.0);
    }

    #[test]
    fn prescribed_curvature_ode(eps in 1e-3f64..1.0, beta in 1e-2f64..10.0, log_x in -6.0f64..1.7) {
        let h = PrescribedMeanCurvature::new(eps, beta).unwrap();
        let t = (10f64.powf(log_x) - beta) / (0.75 * eps);
        let v = h.eval(t).unwrap();
        prop_assert!(v >= eps);
        let res = mu_bubble::h_ode_residual(&h, t).unwrap();
        prop_assert!(res.abs() <= 1e-12 * (1.0 + v * v), "{res:e}");
        prop_assert!(h.eval(h.barrier()).is_err());
    }

    #[test]
    fn hawking_mass_constant_on_schwarzschild(m in 0.05f64..10.0, t in 1e-3f64..8.0) {
        let p = RadialProfile::schwarzschild(Dimension::THREE, m).unwrap();
        let r = 0.5 * m * (1.0 + t);
        prop_assert!((mass::hawking_mass(&p, r).unwrap().value - m).abs() <= 1e-8 * m.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn functional_dominates_area(eps in 0.05f64..0.3, beta_scale in 1.0f64..4.0, t in 0.0f64..1.0) {
        let p = RadialProfile::schwarzschild(Dimension::THREE, 1.0).unwrap();
        let beta = mu_bubble::choose_beta(&p, 2.0, eps).unwrap() * beta_scale;
        let prob = MuBubbleProblem::new(p.clone(), 2.0, PrescribedMeanCurvature::new(eps, beta).unwrap()).unwrap();
        let lo = prob.barrier_radius().unwrap_or(0.0).max(0.4) * 1.05;
        let rho = lo + t * (2.0 - lo);
        let f = prob.functional_eval(rho).unwrap();
        prop_assert!(f >= p.sphere_area(rho).unwrap());
    }
}

#[test]
fn minimizers_nest_as_epsilon_shrinks() {
    let p = RadialProfile::schwarzschild(Dimension::THREE, 1.0).unwrap();
    let opts = MuBubbleOptions::default();
    let rhos: Vec<f64> = [0.25, 0.2, 0.15, 0.1, 0.07, 0.05, 0.03]
        .iter()
        .map(|&e| mu_bubble::solve_mu_bubble(&p, 2.0, e, &opts).unwrap().solution.rho_star)
        .collect();
    for w in rhos.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "{rhos:?}");
        assert!(w[1] > 0.5);
    }
}

#[test]
fn functional_blows_up_at_the_barrier() {
    let p = RadialProfile::schwarzschild(Dimension::THREE, 1.0).unwrap();
    let beta = mu_bubble::choose_beta(&p, 2.0, 0.1).unwrap();
    let prob = MuBubbleProblem::new(p, 2.0, PrescribedMeanCurvature::new(0.1, beta).unwrap()).unwrap();
    let scan = prob.scan(512).unwrap();
    let barrier = scan.barrier_radius.expect("barrier inside the domain");
    let finite: Vec<(f64, f64)> = scan
        .radii
        .iter()
        .zip(&scan.functional)
        .filter(|(_, f)| f.is_finite())
        .map(|(&r, &f)| (r, f))
        .collect();
    let (r_low, f_low) = finite[0];
    let f_min = finite.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    assert!(r_low < barrier * 1.05);
    assert!(f_low > 10.0 * f_min, "F near barrier {f_low}, min {f_min}");
    // strictly decreasing over the innermost stretch
    assert!(finite[..8].windows(2).all(|w| w[0].1 > w[1].1));
}
