mod support;

use std::sync::Arc;

use stefan_core::coeff::CoefficientField;
use stefan_core::front::{
    classify_outcome, decide, simulate, Classifier, Criterion, FreeBoundaryState, FrontStepper, Horizon,
    SimulateOptions, SnapshotPolicy, StopRule, Verdict,
};
use support::{constant_field, j01, spec};

fn plain(snapshots: SnapshotPolicy) -> SimulateOptions {
    SimulateOptions {
        sample_every: 1.0,
        snapshots,
        stop: StopRule::NEVER,
    }
}

#[test]
fn vanishing_run_has_a_monotone_settling_tail() {
    let s = spec(constant_field(1.0, 1.0), 1.0, 0.05, 1.0, 0.2, 128);
    let traj = simulate(&s, 40.0, &plain(SnapshotPolicy::None)).unwrap();
    assert!(traj.h.windows(2).all(|w| w[1] >= w[0]));
    assert!(traj.h_prime.iter().all(|&v| v >= 0.0));
    let tail = &traj.u_sup[traj.len() / 2..];
    assert!(tail.windows(2).all(|w| w[1] <= w[0]));
    assert!(*traj.h.last().unwrap() < j01());
}

#[test]
fn spreading_ratio_settles() {
    let s = spec(constant_field(1.0, 1.0), 1.0, 2.0, 3.0, 0.5, 256);
    let traj = simulate(&s, 120.0, &plain(SnapshotPolicy::None)).unwrap();
    let ratio = |i: usize| traj.h[i] / traj.times[i];
    let (mid, end) = (ratio(traj.len() * 3 / 4), ratio(traj.len() - 1));
    assert!((mid - end).abs() / end < 0.05, "{mid} vs {end}");
}

#[test]
fn larger_data_stays_ahead() {
    let field = constant_field(1.0, 1.0);
    let a = spec(field.clone(), 1.0, 1.0, 1.5, 0.3, 128);
    let b = spec(field, 1.0, 1.0, 2.0, 0.6, 128);
    let ta = simulate(&a, 15.0, &plain(SnapshotPolicy::EverySample)).unwrap();
    let tb = simulate(&b, 15.0, &plain(SnapshotPolicy::EverySample)).unwrap();
    for (sa, sb) in ta.snapshots.iter().zip(&tb.snapshots) {
        assert_eq!(sa.t, sb.t);
        assert!(sa.h <= sb.h + 1e-6);
        for r in sa.radii() {
            assert!(sa.value_at(r) <= sb.value_at(r) + 1e-6, "t={} r={r}", sa.t);
        }
    }
}

#[test]
fn samples_land_on_period_boundaries() {
    let s = spec(constant_field(1.0, 1.0), 1.0, 1.0, 2.0, 0.5, 64);
    let traj = simulate(&s, 5.0, &plain(SnapshotPolicy::Periods(2))).unwrap();
    assert_eq!(traj.times, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    let snap_times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    assert_eq!(snap_times, vec![0.0, 2.0, 4.0]);
}

#[test]
fn first_step_moves_the_front_by_the_stefan_flux() {
    let s = spec(constant_field(1.0, 1.0), 1.0, 2.0, 2.0, 0.5, 512);
    let mut state = FreeBoundaryState::initial(&s);
    // u0 = A cos(pi r / (2 h0)): u_r(h0) = -A pi / (2 h0)
    let want = 2.0 * 0.5 * std::f64::consts::PI / 4.0;
    assert!((state.front_speed(s.mu) - want).abs() / want < 1e-4);
    let mut stepper = FrontStepper::new(&s);
    let dt = 1e-4;
    stepper.step(&mut state, dt).unwrap();
    assert!((state.h - 2.0 - want * dt).abs() < 1e-3 * want * dt);
}

#[test]
fn decide_reports_the_criterion_it_used() {
    let s = spec(constant_field(1.0, 1.0), 1.0, 1.0, 3.0, 0.5, 128);
    let classifier = Classifier::for_spec(&s).unwrap();
    let h_star = classifier.h_star.value().unwrap();
    assert!((h_star - j01()).abs() < 2e-3);
    let (out, traj, _) = decide(&s, &classifier, Horizon::periods(1.0, 20, 80), 1.0).unwrap();
    assert_eq!(out.verdict, Verdict::Spreading);
    assert_eq!(out.evidence.criterion, Criterion::EigenvalueSign);
    assert!(out.evidence.lambda1_final.unwrap() < 0.0);
    assert_eq!(classify_outcome(&traj, &s, &classifier).unwrap().verdict, Verdict::Spreading);
}

#[test]
fn unfavorable_habitat_always_vanishes() {
    let field = Arc::new(CoefficientField::constant(0.2, 0.7, 1.0, 1.0));
    let s = spec(field, 1.0, 5.0, 2.0, 2.0, 128);
    let classifier = Classifier::for_spec(&s).unwrap();
    assert!(classifier.h_star.value().is_none());
    let (out, _, _) = decide(&s, &classifier, Horizon::periods(1.0, 20, 80), 1.0).unwrap();
    assert_eq!(out.verdict, Verdict::Vanishing);
    assert_eq!(out.evidence.criterion, Criterion::Decay);
}

#[test]
fn invalid_problems_are_rejected_before_stepping() {
    let s = spec(constant_field(1.0, 1.0), 1.0, 1.0, 2.0, 0.5, 128).with_mu(0.0);
    assert!(simulate(&s, 1.0, &plain(SnapshotPolicy::None)).is_err());
}
