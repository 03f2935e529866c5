mod support;

use std::f64::consts::PI;
use std::sync::Arc;

use stefan_core::coeff::{
    classify_habitat, validate, Coefficient, CoefficientField, Envelope, HabitatClass, Profile, Violation,
};
use support::{constant_field, spec};

fn seasonal_field() -> CoefficientField {
    let alpha = Coefficient::custom(|t, r: f64| 1.0 + 0.5 * (2.0 * PI * t).sin() - 0.3 * r);
    CoefficientField::with_sampled_envelopes(alpha, 0.2.into(), 1.0.into(), 1.0, 20.0)
}

fn envelopes(alpha_lo: f64, alpha_hi: f64) -> [Envelope; 3] {
    [
        Envelope::constant(alpha_lo, alpha_hi),
        Envelope::constant(0.1, 0.1),
        Envelope::constant(1.0, 1.0),
    ]
}

#[test]
fn habitat_class_is_invariant_under_equal_rate_shifts() {
    let field = seasonal_field();
    let base = classify_habitat(&field, 6.0, 64, 2);
    for c in [0.5, 3.0] {
        let shifted = classify_habitat(&field.shifted_rates(c), 6.0, 64, 2);
        assert_eq!(shifted.favorable_radii, base.favorable_radii);
        assert_eq!(shifted.classification, base.classification);
        assert!((shifted.mean_birth - base.mean_birth - c).abs() < 1e-9);
        assert!((shifted.mean_death - base.mean_death - c).abs() < 1e-9);
    }
}

#[test]
fn favorable_radii_follow_the_sign_of_the_time_mean() {
    // time mean of alpha - gamma is 0.8 - 0.3 r, positive below r = 8/3
    let report = classify_habitat(&seasonal_field(), 6.0, 64, 2);
    assert!(report.has_favorable_site());
    assert!(report.favorable_radii.iter().all(|&r| r < 8.0 / 3.0));
    let largest = report.favorable_radii.iter().copied().fold(0.0, f64::max);
    assert!(largest > 8.0 / 3.0 - 6.0 / 63.0);
}

#[test]
fn means_weight_radii_by_volume() {
    let alpha = Coefficient::custom(|_, r: f64| 1.0 + r);
    let field = CoefficientField::with_sampled_envelopes(alpha, 0.5.into(), 1.0.into(), 1.0, 10.0);
    for dim in [2usize, 3] {
        let report = classify_habitat(&field, 2.0, 4001, dim);
        // mean of 1 + r against r^(N-1) on [0, 2]: 1 + 2 N / (N + 1)
        let n = dim as f64;
        let want = 1.0 + 2.0 * n / (n + 1.0);
        assert!((report.mean_birth - want).abs() < 1e-3, "N={dim}: {}", report.mean_birth);
    }
}

#[test]
fn everywhere_positive_growth_is_favorable() {
    let report = classify_habitat(&constant_field(1.0, 1.0), 3.0, 32, 2);
    assert_eq!(report.classification, HabitatClass::Favorable);
    let report = classify_habitat(&CoefficientField::constant(0.2, 0.5, 1.0, 1.0), 3.0, 32, 2);
    assert_eq!(report.classification, HabitatClass::Unfavorable);
    assert!(!report.has_favorable_site());
}

#[test]
fn standard_instance_validates() {
    assert!(validate(&spec(constant_field(1.0, 1.0), 1.0, 1.0, 2.0, 0.5, 64)).is_valid());
}

#[test]
fn validation_reports_each_defect() {
    let base = spec(constant_field(1.0, 1.0), 1.0, 1.0, 2.0, 0.5, 64);

    let mut bad = base.with_mu(-1.0);
    bad.numerics.n = 4;
    let report = validate(&bad);
    assert!(report.violations.contains(&Violation::InvalidParameter { name: "mu", value: -1.0 }));
    assert!(report.violations.iter().any(|v| matches!(v, Violation::InvalidParameter { name: "n", .. })));

    let lifted = base.with_u0(Profile(Coefficient::custom(|_, r: f64| 1.0 - 0.2 * r)));
    let report = validate(&lifted);
    assert!(report.violations.iter().any(|v| matches!(v, Violation::BoundaryMismatch { .. })));
    assert!(report.violations.iter().any(|v| matches!(v, Violation::NonzeroSlopeAtOrigin { .. })));

    let aperiodic = CoefficientField::new(
        Coefficient::custom(|t, _| 1.0 + 0.1 * t),
        0.1.into(),
        1.0.into(),
        1.0,
        envelopes(0.5, 100.0),
    );
    let mut s = base.clone();
    s.field = Arc::new(aperiodic);
    let report = validate(&s);
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::PeriodicityViolation { name: "alpha", .. })));
}

#[test]
fn envelope_breaches_are_reported() {
    let field = CoefficientField::new(
        Coefficient::custom(|t, _| 1.0 + 0.5 * (2.0 * PI * t).sin()),
        0.1.into(),
        1.0.into(),
        1.0,
        envelopes(0.9, 1.2),
    );
    let mut s = spec(constant_field(1.0, 1.0), 1.0, 1.0, 2.0, 0.5, 64);
    s.field = Arc::new(field);
    let report = validate(&s);
    assert!(report
        .violations
        .iter()
        .any(|v| matches!(v, Violation::EnvelopeViolation { name: "alpha", .. })));
}

#[test]
fn density_bound_uses_envelopes_and_initial_data() {
    let field = CoefficientField::constant(2.1, 0.1, 0.5, 1.0);
    assert_eq!(field.density_bound(1.0), 4.2);
    assert_eq!(field.density_bound(7.0), 7.0);
}
