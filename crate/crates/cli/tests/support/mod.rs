//! Independent reference values shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use stefan_core::coeff::{CoefficientField, Numerics, ProblemSpec, Profile};

/// `J_0(x)` from its power series.
pub fn bessel_j0(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// First positive zero of `J_0` by bisection on `[2, 3]`.
pub fn j01() -> f64 {
    let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Constant field with `alpha - gamma = a` and crowding `b`.
pub fn constant_field(a: f64, b: f64) -> Arc<CoefficientField> {
    Arc::new(CoefficientField::constant(a + 0.1, 0.1, b, 1.0))
}

pub fn spec(field: Arc<CoefficientField>, d: f64, mu: f64, h0: f64, amplitude: f64, n: usize) -> ProblemSpec {
    ProblemSpec {
        field,
        dim: 2,
        diffusion: d,
        mu,
        h0,
        u0: Profile::cosine_bump(h0, amplitude),
        numerics: Numerics {
            n,
            dt: 0.01,
            t_max: 50.0,
            tol: 1e-6,
        },
    }
}
