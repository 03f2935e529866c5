//! Periodic logistic orbit, half-line semi-waves with a periodic drift, the
//! self-consistent drift `k0` and spreading-speed estimates.

use serde::Serialize;
use thiserror::Error;

use crate::coeff::CoefficientField;
use crate::front::Trajectory;
use crate::radial::{clip_negatives, sup_distance, RadialError, Tridiagonal};

/// A scalar function of time, assumed periodic.
pub type TimeFn<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemiwaveError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("periodic orbit reached {value:e} at t = {t}")]
    NonPositive { t: f64, value: f64 },
    #[error("profile at L/2 = {half_length} is off the far-field value by {relative:.3e}")]
    TruncationTooSmall { half_length: f64, relative: f64 },
    #[error("speed {c} outside (0, {bound})")]
    BoundViolated { c: f64, bound: f64 },
    #[error("far-field lower envelope has time mean {mean} <= 0")]
    HypothesisHFailed { mean: f64 },
    #[error("front is not advancing over the measurement window")]
    NotSpreading,
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// Default truncation length of the half-line.
pub fn default_length(d: f64) -> f64 {
    50.0 * d.sqrt()
}

/// Samples `values[k] = f(k T / m)` of a `T`-periodic function, linearly
/// interpolated between phases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSeries {
    pub period: f64,
    pub values: Vec<f64>,
}

impl PeriodicSeries {
    pub fn from_fn(period: f64, phases: usize, f: impl Fn(f64) -> f64) -> Self {
        Self {
            period,
            values: (0..phases).map(|k| f(period * k as f64 / phases as f64)).collect(),
        }
    }

    pub fn constant(period: f64, phases: usize, value: f64) -> Self {
        Self {
            period,
            values: vec![value; phases],
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        let m = self.values.len();
        let s = (t / self.period).rem_euclid(1.0) * m as f64;
        let i = (s.floor() as usize).min(m - 1);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[(i + 1) % m]
    }

    /// Time mean of the interpolant.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            period: self.period,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn time_mean(f: TimeFn, period: f64) -> f64 {
    let m = 1024;
    (0..m).map(|k| f(period * k as f64 / m as f64)).sum::<f64>() / m as f64
}

/// RK4 steps per period for the logistic orbit.
pub const LOGISTIC_STEPS: usize = 4096;

/// The positive periodic solution of `V' = V (a - b V)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicLogistic {
    pub period: f64,
    /// `V(k T / steps)` for `k = 0..steps`.
    pub values: Vec<f64>,
    pub periods: usize,
}

impl PeriodicLogistic {
    pub fn value_at(&self, t: f64) -> f64 {
        let m = self.values.len();
        let s = (t / self.period).rem_euclid(1.0) * m as f64;
        let i = (s.floor() as usize).min(m - 1);
        let w = s - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[(i + 1) % m]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn logistic_period(a: TimeFn, b: TimeFn, period: f64, steps: usize, v0: f64, mut out: Option<&mut Vec<f64>>) -> f64 {
    let dt = period / steps as f64;
    let f = |t: f64, v: f64| v * (a(t) - b(t) * v);
    let mut v = v0;
    for i in 0..steps {
        if let Some(out) = out.as_deref_mut() {
            out.push(v);
        }
        let t = i as f64 * dt;
        let k1 = f(t, v);
        let k2 = f(t + 0.5 * dt, v + 0.5 * dt * k1);
        let k3 = f(t + 0.5 * dt, v + 0.5 * dt * k2);
        let k4 = f(t + dt, v + dt * k3);
        v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    v
}

/// Iterate the period map of the logistic ODE from `mean(a) / mean(b)`
/// to its fixed point.
pub fn periodic_logistic(a: TimeFn, b: TimeFn, period: f64) -> Result<PeriodicLogistic, SemiwaveError> {
    if !(period > 0.0) {
        return Err(SemiwaveError::InvalidInput("period must be positive"));
    }
    let mean_a = time_mean(a, period);
    let mean_b = time_mean(b, period);
    if !(mean_b > 0.0) {
        return Err(SemiwaveError::InvalidInput("b must be positive"));
    }
    let mut v = if mean_a > 0.0 { mean_a / mean_b } else { 1.0 };
    let max_periods = 100_000;
    for periods in 1..=max_periods {
        let next = logistic_period(a, b, period, LOGISTIC_STEPS, v, None);
        if !(next > 0.0) || !next.is_finite() {
            return Err(SemiwaveError::NonPositive {
                t: periods as f64 * period,
                value: next,
            });
        }
        let diff = (next - v).abs();
        v = next;
        if diff <= 1e-10 * v.max(1.0) {
            if v < 1e-8 {
                return Err(SemiwaveError::NonPositive {
                    t: periods as f64 * period,
                    value: v,
                });
            }
            let mut values = Vec::with_capacity(LOGISTIC_STEPS);
            logistic_period(a, b, period, LOGISTIC_STEPS, v, Some(&mut values));
            return Ok(PeriodicLogistic {
                period,
                values,
                periods,
            });
        }
    }
    Err(SemiwaveError::NoConvergence {
        iterations: max_periods,
        residual: f64::NAN,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiwaveOptions {
    /// Truncation length; `None` uses [`default_length`].
    pub length: Option<f64>,
    pub n: usize,
    /// Periodicity tolerance on the phase-zero profile (sup norm).
    pub tol: f64,
    pub max_periods: usize,
    /// Stored phases per period.
    pub phases: usize,
    pub dt_max: f64,
}

impl Default for SemiwaveOptions {
    fn default() -> Self {
        Self {
            length: None,
            n: 1024,
            tol: 1e-9,
            max_periods: 20_000,
            phases: 64,
            dt_max: 1e-2,
        }
    }
}

/// Periodic semi-wave `U^k(t, r)` on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiwaveProfile {
    pub period: f64,
    pub length: f64,
    /// `phases[k][j] = U(k T / m, j L / n)`.
    pub phases: Vec<Vec<f64>>,
    /// `U_r(k T / m, 0)` by the one-sided three-point stencil.
    pub slope_at_origin: PeriodicSeries,
    pub periods: usize,
    pub residual: f64,
}

impl SemiwaveProfile {
    pub fn n(&self) -> usize {
        self.phases[0].len() - 1
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n() as f64
    }

    /// `U` at stored phase `k` and radius `r`.
    pub fn value_at(&self, k: usize, r: f64) -> f64 {
        crate::radial::interpolate(&self.phases[k], self.length, r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(clippy::large_enum_variant)]
pub enum Semiwave {
    Zero,
    Profile(SemiwaveProfile),
}

impl Semiwave {
    pub fn profile(&self) -> Option<&SemiwaveProfile> {
        match self {
            Semiwave::Zero => None,
            Semiwave::Profile(p) => Some(p),
        }
    }
}

fn origin_slope(u: &[f64], dr: f64) -> f64 {
    (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dr)
}

/// Periodic attractor of `U_t = d U_rr - k(t) U_r + U (a - b U)` on
/// `[0, L]` with `U(t, 0) = 0` and `U(t, L) = V(t)`.
#[allow(clippy::too_many_arguments)]
pub fn semiwave_profile(
    k: &PeriodicSeries,
    a: TimeFn,
    b: TimeFn,
    d: f64,
    period: f64,
    opts: &SemiwaveOptions,
    warm: Option<&SemiwaveProfile>,
) -> Result<Semiwave, SemiwaveError> {
    if !(d > 0.0) || !(period > 0.0) || opts.n < 4 || opts.phases == 0 {
        return Err(SemiwaveError::InvalidInput("need d > 0, T > 0, n >= 4, phases > 0"));
    }
    if k.min() < 0.0 {
        return Err(SemiwaveError::InvalidInput("drift must be nonnegative"));
    }
    let mean_a = time_mean(a, period);
    let mean_k = k.mean();
    if mean_a <= mean_k * mean_k / (4.0 * d) {
        return Ok(Semiwave::Zero);
    }
    let far = periodic_logistic(a, b, period)?;
    let length = opts.length.unwrap_or_else(|| default_length(d));
    let n = opts.n;
    let dr = length / n as f64;
    let m = opts.phases;

    let a_max = (0..1024)
        .map(|i| a(period * i as f64 / 1024.0))
        .fold(0.0_f64, f64::max);
    let mut dt_limit = opts.dt_max;
    if k.max() > 0.0 {
        dt_limit = dt_limit.min(0.5 * dr / k.max());
    }
    if a_max > 0.0 {
        dt_limit = dt_limit.min(0.5 / a_max);
    }
    let per_phase = ((period / m as f64) / dt_limit).ceil().max(1.0) as usize;
    let steps = per_phase * m;
    let dt = period / steps as f64;

    // interior unknowns j = 1..n-1
    let kappa = d * dt / (dr * dr);
    let size = n - 1;
    let factored = Tridiagonal {
        lower: vec![-kappa; size],
        diag: vec![1.0 + 2.0 * kappa; size],
        upper: vec![-kappa; size],
    }
    .factor()?;

    let mut u: Vec<f64> = match warm {
        Some(p) if p.n() == n && (p.length - length).abs() < 1e-12 * length => p.phases[0].clone(),
        _ => (0..=n)
            .map(|j| far.value_at(0.0) * (j as f64 * dr / (2.0 * d.sqrt())).tanh())
            .collect(),
    };
    u[0] = 0.0;
    u[n] = far.value_at(0.0);

    let mut rhs = vec![0.0; size];
    let mut phases = vec![vec![0.0; n + 1]; m];
    let mut residual = f64::INFINITY;
    for periods in 1..=opts.max_periods {
        let start = u.clone();
        for s in 0..steps {
            if s % per_phase == 0 {
                phases[s / per_phase].copy_from_slice(&u);
            }
            let t = s as f64 * dt;
            let (kt, at, bt) = (k.at(t), a(t), b(t));
            for j in 1..n {
                let advect = -kt * (u[j] - u[j - 1]) / dr;
                let react = u[j] * (at - bt * u[j]);
                rhs[j - 1] = u[j] + dt * (advect + react);
            }
            let right = far.value_at(t + dt);
            rhs[size - 1] += kappa * right;
            factored.solve_in_place(&mut rhs);
            u[1..n].copy_from_slice(&rhs);
            u[n] = right;
            clip_negatives(&mut u[1..n]);
            if u.iter().any(|v| !v.is_finite()) {
                return Err(RadialError::NonFinite { t }.into());
            }
        }
        residual = sup_distance(&u, &start);
        if residual <= opts.tol {
            let half = n / 2;
            for (kk, phase) in phases.iter().enumerate() {
                let v = far.value_at(period * kk as f64 / m as f64);
                let relative = (phase[half] - v).abs() / v;
                if relative > 0.01 {
                    return Err(SemiwaveError::TruncationTooSmall {
                        half_length: half as f64 * dr,
                        relative,
                    });
                }
            }
            let slope_at_origin = PeriodicSeries {
                period,
                values: phases.iter().map(|p| origin_slope(p, dr)).collect(),
            };
            return Ok(Semiwave::Profile(SemiwaveProfile {
                period,
                length,
                phases,
                slope_at_origin,
                periods,
                residual,
            }));
        }
    }
    Err(SemiwaveError::NoConvergence {
        iterations: opts.max_periods,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpeedOptions {
    pub relax: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub profile: SemiwaveOptions,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        Self {
            relax: 0.5,
            tol: 1e-6,
            max_iter: 500,
            profile: SemiwaveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedResult {
    pub k0: PeriodicSeries,
    /// Time mean of `k0`.
    pub c: f64,
    pub profile: SemiwaveProfile,
    pub iterations: usize,
    pub residual: f64,
}

/// `2 sqrt(d mean(a))`, the upper bound for any semi-wave speed.
pub fn speed_bound(a: TimeFn, d: f64, period: f64) -> f64 {
    2.0 * (d * time_mean(a, period)).max(0.0).sqrt()
}

/// Damped fixed-point iteration for `mu U^{k}_r(t, 0) = k(t)` from `k = 0`.
pub fn k0_fixed_point(
    mu: f64,
    a: TimeFn,
    b: TimeFn,
    d: f64,
    period: f64,
    opts: &SpeedOptions,
) -> Result<SpeedResult, SemiwaveError> {
    if !(mu > 0.0) || !(opts.relax > 0.0 && opts.relax <= 1.0) {
        return Err(SemiwaveError::InvalidInput("need mu > 0 and relax in (0, 1]"));
    }
    let bound = speed_bound(a, d, period);
    if !(bound > 0.0) {
        return Err(SemiwaveError::InvalidInput("time mean of a must be positive"));
    }
    let m = opts.profile.phases;
    let mut k = PeriodicSeries::constant(period, m, 0.0);
    let mut warm: Option<SemiwaveProfile> = None;
    let mut residual = f64::INFINITY;
    for iterations in 1..=opts.max_iter {
        let slope = match semiwave_profile(&k, a, b, d, period, &opts.profile, warm.as_ref())? {
            Semiwave::Profile(p) => {
                let s = p.slope_at_origin.clone();
                warm = Some(p);
                s
            }
            Semiwave::Zero => PeriodicSeries::constant(period, m, 0.0),
        };
        let next: Vec<f64> = k
            .values
            .iter()
            .zip(&slope.values)
            .map(|(&km, &s)| (1.0 - opts.relax) * km + opts.relax * mu * s.max(0.0))
            .collect();
        residual = sup_distance(&next, &k.values);
        k.values = next;
        if residual <= opts.tol * (1.0 + k.max()) {
            let profile = match semiwave_profile(&k, a, b, d, period, &opts.profile, warm.as_ref())? {
                Semiwave::Profile(p) => p,
                Semiwave::Zero => return Err(SemiwaveError::BoundViolated { c: k.mean(), bound }),
            };
            let c = k.mean();
            if !(c > 0.0 && c < bound) {
                return Err(SemiwaveError::BoundViolated { c, bound });
            }
            return Ok(SpeedResult {
                k0: k,
                c,
                profile,
                iterations,
                residual,
            });
        }
    }
    Err(SemiwaveError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeOptions {
    pub eps: f64,
    /// Far-field radius `R_*`; envelopes are sampled on `[R_*, 10 R_*]`.
    pub far_radius: f64,
    pub radial_samples: usize,
    pub speed: SpeedOptions,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            far_radius: 10.0,
            radial_samples: 64,
            speed: SpeedOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSpeeds {
    pub c_upper: f64,
    pub c_lower: f64,
    /// `eta^* + eps`.
    pub eta_upper: PeriodicSeries,
    /// `eta_* - eps`.
    pub eta_lower: PeriodicSeries,
    /// `beta_1 - eps`.
    pub beta_lower: PeriodicSeries,
    /// `beta_2 + eps`.
    pub beta_upper: PeriodicSeries,
    pub upper: SpeedResult,
    pub lower: SpeedResult,
}

/// Far-field envelopes of `alpha - gamma` as phase-wise max and min over
/// `r` in `[R_*, 10 R_*]`.
pub fn far_field_envelopes(field: &CoefficientField, far_radius: f64, radial_samples: usize, phases: usize) -> (PeriodicSeries, PeriodicSeries) {
    let period = field.period;
    let radii: Vec<f64> = (0..radial_samples.max(2))
        .map(|i| far_radius * (1.0 + 9.0 * i as f64 / (radial_samples.max(2) - 1) as f64))
        .collect();
    let sample = |t: f64| radii.iter().map(move |&r| field.growth(t, r));
    let upper = PeriodicSeries::from_fn(period, phases, |t| sample(t).fold(f64::NEG_INFINITY, f64::max));
    let lower = PeriodicSeries::from_fn(period, phases, |t| sample(t).fold(f64::INFINITY, f64::min));
    (upper, lower)
}

/// Speeds `c_upper` for `(eta^* + eps, beta_1 - eps)` and `c_lower` for
/// `(eta_* - eps, beta_2 + eps)`.
pub fn envelope_speeds(field: &CoefficientField, mu: f64, d: f64, opts: &EnvelopeOptions) -> Result<EnvelopeSpeeds, SemiwaveError> {
    let period = field.period;
    let m = opts.speed.profile.phases;
    let (eta_star, eta_sub) = far_field_envelopes(field, opts.far_radius, opts.radial_samples, m);
    if eta_sub.mean() <= 0.0 {
        return Err(SemiwaveError::HypothesisHFailed { mean: eta_sub.mean() });
    }
    let eta_upper = eta_star.map(|v| v + opts.eps);
    let eta_lower = eta_sub.map(|v| v - opts.eps);
    if eta_lower.mean() <= 0.0 {
        return Err(SemiwaveError::HypothesisHFailed { mean: eta_lower.mean() });
    }
    let beta_lower = PeriodicSeries::from_fn(period, m, |t| field.beta_env.lower_at(t) - opts.eps);
    let beta_upper = PeriodicSeries::from_fn(period, m, |t| field.beta_env.upper_at(t) + opts.eps);
    if beta_lower.min() <= 0.0 {
        return Err(SemiwaveError::InvalidInput("eps must be below the lower beta envelope"));
    }

    let (upper, lower) = std::thread::scope(|scope| {
        let up = scope.spawn(|| {
            k0_fixed_point(mu, &|t| eta_upper.at(t), &|t| beta_lower.at(t), d, period, &opts.speed)
        });
        let low = k0_fixed_point(mu, &|t| eta_lower.at(t), &|t| beta_upper.at(t), d, period, &opts.speed);
        (up.join().expect("envelope solve panicked"), low)
    });
    let (upper, lower) = (upper?, lower?);
    Ok(EnvelopeSpeeds {
        c_upper: upper.c,
        c_lower: lower.c,
        eta_upper,
        eta_lower,
        beta_lower,
        beta_upper,
        upper,
        lower,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontSpeed {
    /// Least-squares slope of `h(t)` over the window.
    pub slope: f64,
    /// `h(t_final) / t_final`.
    pub ratio: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Least-squares slope of `h(t)` over the trailing `window_fraction` of the
/// recorded span.
pub fn measure_front_speed(traj: &Trajectory, window_fraction: f64) -> Result<FrontSpeed, SemiwaveError> {
    if !(window_fraction > 0.0 && window_fraction <= 0.5) {
        return Err(SemiwaveError::InvalidInput("window fraction must lie in (0, 0.5]"));
    }
    let points: Vec<(f64, f64)> = traj.tail(window_fraction).collect();
    if points.len() < 2 {
        return Err(SemiwaveError::NotSpreading);
    }
    let (first, last) = (points[0], points[points.len() - 1]);
    if last.1 - first.1 <= 1e-8 * (1.0 + last.1) {
        return Err(SemiwaveError::NotSpreading);
    }
    let count = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / count;
    let h_mean = points.iter().map(|p| p.1).sum::<f64>() / count;
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(sxy, sxx), &(t, h)| {
        (sxy + (t - t_mean) * (h - h_mean), sxx + (t - t_mean) * (t - t_mean))
    });
    Ok(FrontSpeed {
        slope: sxy / sxx,
        ratio: last.1 / last.0,
        window: (first.0, last.0),
        samples: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_logistic_is_the_equilibrium() {
        let v = periodic_logistic(&|_| 2.0, &|_| 4.0, 1.0).unwrap();
        assert!(v.values.iter().all(|x| (x - 0.5).abs() < 1e-12));
    }

    #[test]
    fn negative_mean_growth_is_rejected() {
        assert!(matches!(
            periodic_logistic(&|_| -0.5, &|_| 1.0, 1.0),
            Err(SemiwaveError::NonPositive { .. })
        ));
    }

    #[test]
    fn series_interpolates_periodically() {
        let s = PeriodicSeries::from_fn(2.0, 4, |t| t);
        assert_eq!(s.at(0.5), 0.5);
        assert_eq!(s.at(2.5), 0.5);
        assert!((s.at(1.75) - 0.75).abs() < 1e-12);
        assert_eq!(s.mean(), 0.75);
    }

    #[test]
    fn critical_drift_gives_zero() {
        let k = PeriodicSeries::constant(1.0, 8, 2.0);
        let w = semiwave_profile(&k, &|_| 1.0, &|_| 1.0, 1.0, 1.0, &SemiwaveOptions::default(), None).unwrap();
        assert_eq!(w, Semiwave::Zero);
    }

    #[test]
    fn front_speed_of_affine_front() {
        let mut traj = Trajectory::default();
        for i in 0..=100 {
            let t = i as f64;
            traj.times.push(t);
            traj.h.push(2.0 * t + 5.0);
        }
        let s = measure_front_speed(&traj, 0.5).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-12);
        assert_eq!(s.window, (50.0, 100.0));
    }

    #[test]
    fn stalled_front_is_not_spreading() {
        let mut traj = Trajectory::default();
        for i in 0..=10 {
            traj.times.push(i as f64);
            traj.h.push(1.0);
        }
        assert_eq!(measure_front_speed(&traj, 0.5), Err(SemiwaveError::NotSpreading));
    }

    #[test]
    fn far_field_envelopes_of_decaying_perturbation() {
        let field = CoefficientField::with_sampled_envelopes(
            crate::coeff::Coefficient::custom(|t, r| 1.1 + (-r).exp() * (2.0 * PI * t).sin()),
            0.1.into(),
            1.0.into(),
            1.0,
            10.0,
        );
        let (up, low) = far_field_envelopes(&field, 10.0, 32, 16);
        assert!(up.values.iter().all(|v| (v - 1.0).abs() < 5e-5));
        assert!(low.values.iter().all(|v| (v - 1.0).abs() < 5e-5));
    }
}
