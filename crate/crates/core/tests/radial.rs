mod support;

use std::f64::consts::PI;

use stefan_core::coeff::{Coefficient, CoefficientField};
use stefan_core::radial::{
    periodic_attractor, radial_laplacian, Attractor, AttractorOptions, FieldOnGrid, RadialGrid,
};

/// Periodic solution of `p' = a(t) p - p^2` by RK4 over many periods.
fn logistic_reference(a: impl Fn(f64) -> f64, steps: usize) -> Vec<f64> {
    let f = |t: f64, p: f64| a(t) * p - p * p;
    let h = 1.0 / steps as f64;
    let mut p = 1.0;
    let mut orbit = vec![0.0; steps];
    for _ in 0..200 {
        for (k, slot) in orbit.iter_mut().enumerate() {
            *slot = p;
            let t = k as f64 * h;
            let k1 = f(t, p);
            let k2 = f(t + 0.5 * h, p + 0.5 * h * k1);
            let k3 = f(t + 0.5 * h, p + 0.5 * h * k2);
            let k4 = f(t + h, p + h * k3);
            p += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    orbit
}

#[test]
fn attractor_core_tracks_the_periodic_logistic() {
    let a = |t: f64| 1.0 + 0.5 * (2.0 * PI * t).sin();
    let alpha = Coefficient::custom(move |t, _| a(t) + 0.1);
    let field = CoefficientField::with_sampled_envelopes(alpha, 0.1.into(), 1.0.into(), 1.0, 40.0);
    let grid = RadialGrid::new(300, 30.0, 2);
    let init = FieldOnGrid::from_fn(&grid, 0.0, |r| 1.0 - (r / 30.0).powi(2));
    let opts = AttractorOptions::default();
    let Attractor::Periodic(orbit) = periodic_attractor(&grid, &field, 1.0, &opts, &init).unwrap() else {
        panic!("attractor vanished");
    };
    let reference = logistic_reference(a, 3200);
    let stride = reference.len() / orbit.phases.len();
    for (k, phase) in orbit.phases.iter().enumerate() {
        let want = reference[k * stride];
        let got = phase.values[0];
        assert!((got - want).abs() / want < 0.02, "phase {k}: {got} vs {want}");
    }
}

#[test]
fn small_ball_attractor_is_zero() {
    // lambda1 on B_1 with a = 1 is j01^2 - 1 > 0
    let field = CoefficientField::constant(1.1, 0.1, 1.0, 1.0);
    let grid = RadialGrid::new(64, 1.0, 2);
    let init = FieldOnGrid::from_fn(&grid, 0.0, |r| 1.0 - r * r);
    let out = periodic_attractor(&grid, &field, 1.0, &AttractorOptions::default(), &init).unwrap();
    assert!(matches!(out, Attractor::Zero { .. }));
}

#[test]
fn laplacian_of_quartic_converges() {
    // r^4 in dimension N: 4 (N + 2) r^2
    for dim in [2usize, 3] {
        let mut errors = Vec::new();
        for n in [50, 100] {
            let grid = RadialGrid::new(n, 1.0, dim);
            let u = FieldOnGrid::from_fn(&grid, 0.0, |r| r.powi(4));
            let lap = radial_laplacian(&grid, &u);
            let err = (1..n)
                .map(|j| {
                    let r = grid.node(j);
                    (lap.values[j] - 4.0 * (dim as f64 + 2.0) * r * r).abs()
                })
                .fold(0.0, f64::max);
            errors.push(err);
        }
        assert!(errors[0] / errors[1] > 3.5, "N={dim}: {errors:?}");
    }
}
