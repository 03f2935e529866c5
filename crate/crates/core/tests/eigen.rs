mod support;

use std::f64::consts::PI;

use stefan_core::coeff::Coefficient;
use stefan_core::eigen::{d_thresholds, h_star, principal_eigenvalue, EigenOptions, HStar, Potential};
use support::j01;

fn coarse() -> EigenOptions {
    EigenOptions {
        n: 256,
        dt_max: 1e-3,
        ..EigenOptions::default()
    }
}

#[test]
fn dirichlet_ball_in_three_dimensions() {
    // first Dirichlet eigenvalue of B_R in R^3 is (pi / R)^2
    let opts = EigenOptions::default().with_dim(3);
    let got = principal_eigenvalue(2.0, &Potential::constant(0.5), 1.5, 1.0, &opts).unwrap().lambda1;
    let want = 2.0 * (PI / 1.5).powi(2) - 0.5;
    assert!((got - want).abs() / want < 2e-3, "{got} vs {want}");
}

#[test]
fn eigenfunction_is_positive_and_normalized() {
    let k = Potential::from_coefficient(Coefficient::custom(|t, r: f64| 1.0 + (2.0 * PI * t).cos() - r));
    let res = principal_eigenvalue(1.0, &k, 2.0, 1.0, &coarse()).unwrap();
    let sup = res.phi.iter().flat_map(|p| p.values.iter().copied()).fold(0.0, f64::max);
    assert!((sup - 1.0).abs() < 1e-12);
    for phase in &res.phi {
        let n = phase.values.len() - 1;
        assert!(phase.values[..n].iter().all(|&v| v > 0.0));
        assert_eq!(phase.values[n], 0.0);
    }
    assert!((res.log_rho + res.lambda1).abs() < 1e-9);
}

#[test]
fn period_scales_the_time_mean() {
    // r-independent potential: only its time mean matters, whatever the period
    let k = Potential::from_coefficient(Coefficient::custom(|t, _| 0.4 + 2.0 * (2.0 * PI * t / 3.0).sin()));
    let got = principal_eigenvalue(1.0, &k, 1.0, 3.0, &EigenOptions::default()).unwrap().lambda1;
    let want = j01().powi(2) - 0.4;
    assert!((got - want).abs() / want < 2e-3, "{got} vs {want}");
}

#[test]
fn h_star_scales_with_diffusion() {
    let k = Potential::constant(2.0);
    let opts = coarse();
    for d in [0.5, 2.0] {
        let found = h_star(d, &k, 1.0, 0.2, 4.0, 1e-4, &opts).unwrap();
        let want = j01() * (d / 2.0).sqrt();
        let HStar::Finite(h) = found else { panic!("{found:?}") };
        assert!((h - want).abs() < 2e-3, "d={d}: {h} vs {want}");
    }
}

#[test]
fn negative_potential_has_no_threshold_radius() {
    let found = h_star(1.0, &Potential::constant(-1.0), 1.0, 0.5, 2.0, 1e-3, &coarse()).unwrap();
    assert!(matches!(found, HStar::InfiniteWithinBracket(_)));
}

#[test]
fn diffusion_threshold_for_constant_growth() {
    // lambda1 = d j01^2 / R^2 - a changes sign at d = a R^2 / j01^2
    let radius = 2.0;
    let found = d_thresholds(&Potential::constant(1.0), radius, 1.0, 1e-2, 1e2, 1e-5, &coarse()).unwrap();
    let want = radius * radius / j01().powi(2);
    assert!((found.d_star - want).abs() / want < 2e-3, "{} vs {want}", found.d_star);
    assert!(!found.multiple_crossings());
}
