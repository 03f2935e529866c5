//! The radially symmetric Stefan problem solved on the front-fixed interval
//! `xi = r / h(t)`, trajectory recording and the spreading/vanishing
//! classifier.

use serde::Serialize;
use thiserror::Error;

use crate::coeff::{ProblemSpec, ValidationError};
use crate::eigen::{principal_eigenvalue, EigenError, EigenOptions, HStar, Potential};
use crate::radial::{
    clip_negatives, interpolate, sup_norm, ImplicitDiffusion, RadialError, RadialGrid,
    RightBoundary, VANISH_THRESHOLD,
};

/// Front speeds below this are treated as a retreating front.
pub const RETREAT_TOL: f64 = -1e-10;

/// Largest fraction of a cell the front may move per step.
pub const FRONT_CFL: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontError {
    #[error("front retreats (h' = {h_prime:e}) at t = {t}")]
    FrontRetreat { t: f64, h_prime: f64 },
    #[error("time step {dt} exceeds the stability limit {limit} at t = {t}")]
    StepSizeTooLarge { t: f64, dt: f64, limit: f64 },
    #[error("non-finite density at t = {t}")]
    NonFinite { t: f64 },
    #[error("at t = {t}: {source}")]
    Radial { t: f64, source: RadialError },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Density on the unit `xi` grid together with the front radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreeBoundaryState {
    pub values: Vec<f64>,
    pub h: f64,
    pub t: f64,
}

impl FreeBoundaryState {
    pub fn initial(spec: &ProblemSpec) -> Self {
        let n = spec.numerics.n;
        let mut values: Vec<f64> = (0..=n)
            .map(|j| spec.u0.eval(spec.h0 * j as f64 / n as f64).max(0.0))
            .collect();
        values[n] = 0.0;
        Self {
            values,
            h: spec.h0,
            t: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// `u_r(t, h)` from the one-sided three-point stencil.
    pub fn front_gradient(&self) -> f64 {
        let n = self.n();
        let u = &self.values;
        let dxi = 1.0 / n as f64;
        (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * dxi) / self.h
    }

    /// Stefan condition `h' = -mu u_r(t, h)`.
    pub fn front_speed(&self, mu: f64) -> f64 {
        -mu * self.front_gradient()
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Density at physical radius `r`; zero beyond the front.
    pub fn value_at(&self, r: f64) -> f64 {
        interpolate(&self.values, self.h, r)
    }
}

/// Reusable buffers for repeated [`step_free`] calls on one problem.
pub struct FrontStepper<'a> {
    spec: &'a ProblemSpec,
    grid: RadialGrid,
    reaction_limit: f64,
    growth: Vec<f64>,
    beta: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> FrontStepper<'a> {
    pub fn new(spec: &'a ProblemSpec) -> Self {
        let n = spec.numerics.n;
        Self {
            spec,
            grid: RadialGrid::unit(n, spec.dim),
            reaction_limit: crate::radial::reaction_step_limit(&spec.field),
            growth: vec![0.0; n + 1],
            beta: vec![0.0; n + 1],
            next: vec![0.0; n + 1],
        }
    }

    /// Largest step allowed from `state` by the front CFL bound and the
    /// positivity bounds of the explicit reaction.
    pub fn max_step(&self, state: &FreeBoundaryState) -> f64 {
        let dxi = self.grid.spacing();
        let hp = state.front_speed(self.spec.mu);
        let cfl = if hp > 0.0 {
            0.9 * FRONT_CFL * dxi * state.h / hp
        } else {
            f64::INFINITY
        };
        let crowding = self.spec.field.max_beta_upper() * state.sup();
        let monotone = if crowding > 0.0 { 0.5 / crowding } else { f64::INFINITY };
        cfl.min(0.9 * self.reaction_limit).min(monotone)
    }

    /// Advance `state` by `dt` in place.
    pub fn step(&mut self, state: &mut FreeBoundaryState, dt: f64) -> Result<(), FrontError> {
        let spec = self.spec;
        let t = state.t;
        let n = self.grid.n;
        let dxi = self.grid.spacing();
        let h = state.h;
        let hp = state.front_speed(spec.mu);
        if hp < RETREAT_TOL {
            return Err(FrontError::FrontRetreat { t, h_prime: hp });
        }
        if dt >= self.reaction_limit {
            return Err(FrontError::StepSizeTooLarge {
                t,
                dt,
                limit: self.reaction_limit,
            });
        }
        let front_limit = FRONT_CFL * dxi * h / hp.max(0.0);
        if dt > front_limit {
            return Err(FrontError::StepSizeTooLarge {
                t,
                dt,
                limit: front_limit,
            });
        }

        let field = &spec.field;
        let radii = (0..n + 1).map(|j| j as f64 * dxi * h);
        if field.growth_depends_on_r() {
            for (slot, r) in self.growth.iter_mut().zip(radii.clone()) {
                *slot = field.growth(t, r);
            }
        } else {
            self.growth.fill(field.growth(t, 0.0));
        }
        field.beta.sample_row(t, radii, &mut self.beta);

        // explicit central advection + reaction; the drift vanishes at xi = 0
        let u = &state.values;
        let drift = 0.5 * hp / h / dxi;
        self.next[0] = u[0] + dt * u[0] * (self.growth[0] - self.beta[0] * u[0]);
        for j in 1..n {
            let xi = j as f64 * dxi;
            let advect = xi * drift * (u[j + 1] - u[j - 1]);
            let react = u[j] * (self.growth[j] - self.beta[j] * u[j]);
            self.next[j] = u[j] + dt * (advect + react);
        }
        self.next[n] = 0.0;

        let h_new = h + dt * hp;
        let kappa = dt * spec.diffusion / (h_new * h_new);
        let diffusion = ImplicitDiffusion::new(&self.grid, kappa, RightBoundary::Dirichlet(0.0))
            .map_err(|source| FrontError::Radial { t, source })?;
        diffusion.apply(&mut self.next);
        clip_negatives(&mut self.next);
        if self.next.iter().any(|v| !v.is_finite()) {
            return Err(FrontError::NonFinite { t: t + dt });
        }
        std::mem::swap(&mut state.values, &mut self.next);
        state.h = h_new;
        state.t = t + dt;
        Ok(())
    }
}

/// One step of the front-fixed scheme.
pub fn step_free(
    state: &FreeBoundaryState,
    spec: &ProblemSpec,
    dt: f64,
) -> Result<FreeBoundaryState, FrontError> {
    let mut next = state.clone();
    FrontStepper::new(spec).step(&mut next, dt)?;
    Ok(next)
}

/// Full density profile at one recorded time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub h: f64,
    /// Values on the unit `xi` grid.
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn value_at(&self, r: f64) -> f64 {
        interpolate(&self.values, self.h, r)
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.values.len() - 1;
        (0..=n).map(move |j| self.h * j as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub h_prime: Vec<f64>,
    pub u_sup: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    fn record(&mut self, state: &FreeBoundaryState, mu: f64) {
        self.times.push(state.t);
        self.h.push(state.h);
        self.h_prime.push(state.front_speed(mu).max(0.0));
        self.u_sup.push(state.sup());
    }

    /// Front positions over the last `fraction` of the recorded time span.
    pub fn tail(&self, fraction: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let t0 = self.times.first().copied().unwrap_or(0.0);
        let cut = self.final_time() - fraction * (self.final_time() - t0);
        self.times
            .iter()
            .zip(&self.h)
            .filter(move |(t, _)| **t >= cut - 1e-12)
            .map(|(t, h)| (*t, *h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SnapshotPolicy {
    None,
    /// Every `k`-th period boundary.
    Periods(usize),
    /// Every recorded sample.
    EverySample,
}

/// Early termination at recorded samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopRule {
    /// Stop once `h` exceeds this radius (spreading certified).
    pub spread_radius: Option<f64>,
    /// Stop once the density and front speed fall below
    /// [`VANISH_THRESHOLD`] with `h` below this radius.
    pub vanish_radius: Option<f64>,
}

impl StopRule {
    pub const NEVER: StopRule = StopRule {
        spread_radius: None,
        vanish_radius: None,
    };

    fn fires(&self, state: &FreeBoundaryState, mu: f64) -> bool {
        if self.spread_radius.is_some_and(|r| state.h > r) {
            return true;
        }
        self.vanish_radius.is_some_and(|r| {
            state.h < r && state.sup() < VANISH_THRESHOLD && state.front_speed(mu) < VANISH_THRESHOLD
        })
    }
}

/// A resumable free-boundary run.
pub struct Simulation<'a> {
    spec: &'a ProblemSpec,
    stepper: FrontStepper<'a>,
    state: FreeBoundaryState,
    trajectory: Trajectory,
    sample_every: f64,
    samples_taken: usize,
    periods_taken: usize,
    snapshots: SnapshotPolicy,
    stop: StopRule,
    stopped: bool,
}

impl<'a> Simulation<'a> {
    pub fn new(
        spec: &'a ProblemSpec,
        sample_every: f64,
        snapshots: SnapshotPolicy,
        stop: StopRule,
    ) -> Self {
        let state = FreeBoundaryState::initial(spec);
        let mut sim = Self {
            spec,
            stepper: FrontStepper::new(spec),
            state,
            trajectory: Trajectory::default(),
            sample_every,
            samples_taken: 0,
            periods_taken: 0,
            snapshots,
            stop,
            stopped: false,
        };
        sim.record(true);
        sim
    }

    pub fn state(&self) -> &FreeBoundaryState {
        &self.state
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Trajectory {
        self.trajectory
    }

    /// Whether the stop rule fired.
    pub fn stopped(&self) -> bool {
        self.stopped
    }

    fn record(&mut self, period_boundary: bool) {
        self.trajectory.record(&self.state, self.spec.mu);
        let snap = match self.snapshots {
            SnapshotPolicy::None => false,
            SnapshotPolicy::EverySample => true,
            SnapshotPolicy::Periods(k) => period_boundary && self.periods_taken.is_multiple_of(k.max(1)),
        };
        if snap {
            self.trajectory.snapshots.push(Snapshot {
                t: self.state.t,
                h: self.state.h,
                values: self.state.values.clone(),
            });
        }
        if self.stop.fires(&self.state, self.spec.mu) {
            self.stopped = true;
        }
    }

    /// Run until `t_end` or until the stop rule fires.
    pub fn advance_to(&mut self, t_end: f64) -> Result<(), FrontError> {
        let period = self.spec.period();
        let eps = 1e-12 * period.max(self.sample_every);
        while !self.stopped && self.state.t < t_end - eps {
            let next_sample = (self.samples_taken + 1) as f64 * self.sample_every;
            let next_period = (self.periods_taken + 1) as f64 * period;
            let target = next_sample.min(next_period).min(t_end);
            while self.state.t < target - eps {
                let dt = self
                    .spec
                    .numerics
                    .dt
                    .min(self.stepper.max_step(&self.state))
                    .min(target - self.state.t);
                self.stepper.step(&mut self.state, dt)?;
            }
            self.state.t = target;
            let at_sample = (target - next_sample).abs() <= eps;
            let at_period = (target - next_period).abs() <= eps;
            if at_sample {
                self.samples_taken += 1;
            }
            if at_period {
                self.periods_taken += 1;
            }
            if at_sample || at_period || target >= t_end - eps {
                self.record(at_period);
            }
        }
        Ok(())
    }
}

/// Settings for [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulateOptions {
    pub sample_every: f64,
    pub snapshots: SnapshotPolicy,
    pub stop: StopRule,
}

/// Run the free-boundary problem from `(u0, h0)` up to `t_max`.
pub fn simulate(spec: &ProblemSpec, t_max: f64, opts: &SimulateOptions) -> Result<Trajectory, FrontError> {
    crate::coeff::validate(spec).into_result()?;
    let mut sim = Simulation::new(spec, opts.sample_every, opts.snapshots, opts.stop);
    sim.advance_to(t_max)?;
    Ok(sim.into_trajectory())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Spreading,
    Vanishing,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Criterion {
    /// `lambda1(d, alpha - gamma, h(t), T) <= -tol`.
    EigenvalueSign,
    /// `h(t) > h* + tol`.
    ExceededHStar,
    /// Density and front speed decayed with `h < h* - tol`.
    Decay,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub criterion: Criterion,
    /// `None` when the eigen solve was skipped or did not converge.
    pub lambda1_final: Option<f64>,
    pub h_final: f64,
    pub h_star: Option<f64>,
    pub u_sup_final: f64,
    pub h_prime_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub verdict: Verdict,
    pub evidence: Evidence,
    pub t_decided: Option<f64>,
}

/// Thresholds and eigen settings used by [`classify_outcome`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classifier {
    pub h_star: HStar,
    pub eigen: EigenOptions,
    pub tol_eig: f64,
    pub tol_h: f64,
}

impl Classifier {
    /// Eigen settings coarse enough to be cheap inside sweeps.
    pub fn default_eigen(dim: usize) -> EigenOptions {
        EigenOptions {
            n: 256,
            dim,
            dt_max: 1e-3,
            tol: 1e-9,
            ..EigenOptions::default()
        }
    }

    /// Build a classifier, locating `h*` for the problem's diffusion.
    pub fn for_spec(spec: &ProblemSpec) -> Result<Self, FrontError> {
        let eigen = Self::default_eigen(spec.dim);
        let potential = Potential::growth(&spec.field);
        let h_star = locate_h_star(spec.diffusion, &potential, spec.period(), &eigen)?;
        Ok(Self {
            h_star,
            eigen,
            tol_eig: 1e-6,
            tol_h: 1e-3,
        })
    }

    pub fn stop_rule(&self) -> StopRule {
        let h = self.h_star.value();
        StopRule {
            spread_radius: h.map(|h| h + self.tol_h),
            vanish_radius: Some(h.map_or(f64::INFINITY, |h| h - self.tol_h)),
        }
    }
}

/// Largest radius searched for `h*`.
pub const H_STAR_SEARCH_LIMIT: f64 = 1e3;

/// `h*` with a bracket grown outward from a radius small enough that
/// `lambda1 > 0` by the Dirichlet bound `d (j/R)^2 - sup |k|`.
pub fn locate_h_star(
    d: f64,
    potential: &Potential,
    period: f64,
    eigen: &EigenOptions,
) -> Result<HStar, EigenError> {
    let samples: Vec<f64> = (0..64)
        .flat_map(|i| (0..=32).map(move |j| (period * i as f64 / 64.0, H_STAR_SEARCH_LIMIT * j as f64 / 32.0)))
        .map(|(t, r)| potential.eval(t, r))
        .collect();
    if samples.iter().all(|&k| k <= 0.0) {
        return Ok(HStar::InfiniteWithinBracket(H_STAR_SEARCH_LIMIT));
    }
    let k_bound = samples.iter().map(|k| k.abs()).fold(0.0_f64, f64::max);
    let mut r_lo: f64 = 1.0;
    while d * (2.4 / r_lo).powi(2) <= 2.0 * k_bound + 1.0 {
        r_lo *= 0.5;
    }
    loop {
        match crate::eigen::h_star(d, potential, period, r_lo, 4.0 * r_lo, 1e-4, eigen)? {
            HStar::InfiniteWithinBracket(top) if top < H_STAR_SEARCH_LIMIT => r_lo = top,
            found => return Ok(found),
        }
    }
}

/// Beyond this multiple of `h*` the eigen check is skipped.
const EIGEN_SKIP_FACTOR: f64 = 4.0;

/// Apply the spreading and vanishing criteria to a recorded trajectory.
pub fn classify_outcome(
    traj: &Trajectory,
    spec: &ProblemSpec,
    classifier: &Classifier,
) -> Result<Outcome, FrontError> {
    let last = traj.len() - 1;
    let h_final = traj.h[last];
    let h_star = classifier.h_star.value();
    let far_beyond = h_star.is_some_and(|hs| h_final > EIGEN_SKIP_FACTOR * hs);
    let lambda1_final = if far_beyond {
        None
    } else {
        match principal_eigenvalue(
            spec.diffusion,
            &Potential::growth(&spec.field),
            h_final,
            spec.period(),
            &classifier.eigen,
        ) {
            Ok(e) => Some(e.lambda1),
            Err(EigenError::NoConvergence { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    };
    let mut evidence = Evidence {
        criterion: Criterion::None,
        lambda1_final,
        h_final,
        h_star,
        u_sup_final: traj.u_sup[last],
        h_prime_final: traj.h_prime[last],
    };
    let first_above = |hs: f64| {
        traj.h
            .iter()
            .position(|&h| h > hs + classifier.tol_h)
            .map(|i| traj.times[i])
    };
    if lambda1_final.is_some_and(|l| l <= -classifier.tol_eig) {
        evidence.criterion = Criterion::EigenvalueSign;
        let t_decided = h_star.and_then(first_above).unwrap_or(traj.final_time());
        return Ok(Outcome {
            verdict: Verdict::Spreading,
            evidence,
            t_decided: Some(t_decided),
        });
    }
    if let Some(hs) = h_star.filter(|hs| h_final > hs + classifier.tol_h) {
        evidence.criterion = Criterion::ExceededHStar;
        return Ok(Outcome {
            verdict: Verdict::Spreading,
            evidence,
            t_decided: first_above(hs),
        });
    }
    let below = h_star.is_none_or(|hs| h_final < hs - classifier.tol_h);
    let decayed = |i: usize| traj.u_sup[i] < VANISH_THRESHOLD && traj.h_prime[i] < VANISH_THRESHOLD;
    if below && decayed(last) {
        evidence.criterion = Criterion::Decay;
        let first = (0..=last).find(|&i| decayed(i));
        return Ok(Outcome {
            verdict: Verdict::Vanishing,
            evidence,
            t_decided: first.map(|i| traj.times[i]),
        });
    }
    Ok(Outcome {
        verdict: Verdict::Undecided,
        evidence,
        t_decided: None,
    })
}

/// Horizon policy for [`decide`]: start at `base` and double up to `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Horizon {
    pub base: f64,
    pub cap: f64,
}

impl Horizon {
    pub fn periods(period: f64, base: usize, cap: usize) -> Self {
        Self {
            base: base as f64 * period,
            cap: cap as f64 * period,
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            base: self.base * factor,
            cap: self.cap * factor,
        }
    }
}

/// Simulate with early stopping and escalate the horizon while the outcome
/// stays undecided. Returns the outcome, trajectory and escalation count.
pub fn decide(
    spec: &ProblemSpec,
    classifier: &Classifier,
    horizon: Horizon,
    sample_every: f64,
) -> Result<(Outcome, Trajectory, usize), FrontError> {
    crate::coeff::validate(spec).into_result()?;
    let mut sim = Simulation::new(spec, sample_every, SnapshotPolicy::None, classifier.stop_rule());
    let mut t_end = horizon.base;
    let mut escalations = 0;
    loop {
        sim.advance_to(t_end)?;
        let outcome = classify_outcome(sim.trajectory(), spec, classifier)?;
        if outcome.verdict != Verdict::Undecided || t_end >= horizon.cap * (1.0 - 1e-12) {
            return Ok((outcome, sim.into_trajectory(), escalations));
        }
        t_end = (2.0 * t_end).min(horizon.cap);
        escalations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{CoefficientField, Numerics, Profile};
    use std::sync::Arc;

    fn favorable(h0: f64, mu: f64) -> ProblemSpec {
        ProblemSpec {
            field: Arc::new(CoefficientField::constant(1.1, 0.1, 1.0, 1.0)),
            dim: 2,
            diffusion: 1.0,
            mu,
            h0,
            u0: Profile::cosine_bump(h0, 0.5),
            numerics: Numerics {
                n: 128,
                dt: 0.01,
                t_max: 10.0,
                tol: 1e-6,
            },
        }
    }

    #[test]
    fn zero_density_keeps_front_fixed() {
        let spec = favorable(2.0, 1.0);
        let state = FreeBoundaryState {
            values: vec![0.0; 129],
            h: 2.0,
            t: 0.0,
        };
        let next = step_free(&state, &spec, 0.01).unwrap();
        assert_eq!(next.h, 2.0);
        assert!(next.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_stencil_is_exact_for_quadratics() {
        // u = 1 - (r/h)^2 has u_r(h) = -2/h
        let n = 64;
        let h = 3.0;
        let values = (0..=n)
            .map(|j| {
                let xi = j as f64 / n as f64;
                1.0 - xi * xi
            })
            .collect();
        let state = FreeBoundaryState { values, h, t: 0.0 };
        assert!((state.front_gradient() + 2.0 / h).abs() < 1e-12);
    }

    #[test]
    fn front_advances_monotonically() {
        let spec = favorable(3.0, 1.0);
        let mut state = FreeBoundaryState::initial(&spec);
        let mut stepper = FrontStepper::new(&spec);
        for _ in 0..200 {
            let h = state.h;
            let dt = 0.01_f64.min(stepper.max_step(&state));
            stepper.step(&mut state, dt).unwrap();
            assert!(state.h > h);
            assert!(state.values.iter().all(|&v| v >= 0.0));
            assert_eq!(state.values[128], 0.0);
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let spec = favorable(3.0, 50.0);
        let state = FreeBoundaryState::initial(&spec);
        assert!(matches!(
            step_free(&state, &spec, 0.5),
            Err(FrontError::StepSizeTooLarge { .. })
        ));
    }

    #[test]
    fn retreat_is_an_error() {
        let spec = favorable(2.0, 1.0);
        let mut state = FreeBoundaryState::initial(&spec);
        // density increasing toward the front gives u_r(h) > 0
        state.values = (0..=128).map(|j| if j == 128 { 0.0 } else { j as f64 }).collect();
        state.values[127] = -1.0;
        assert!(matches!(
            step_free(&state, &spec, 0.01),
            Err(FrontError::FrontRetreat { .. })
        ));
    }

    #[test]
    fn zero_horizon_gives_single_sample() {
        let spec = favorable(1.0, 1.0);
        let opts = SimulateOptions {
            sample_every: 0.5,
            snapshots: SnapshotPolicy::EverySample,
            stop: StopRule::NEVER,
        };
        let traj = simulate(&spec, 0.0, &opts).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.h[0], 1.0);
        assert_eq!(traj.snapshots.len(), 1);
    }

    #[test]
    fn samples_land_on_requested_times() {
        let spec = favorable(1.0, 1.0);
        let opts = SimulateOptions {
            sample_every: 0.25,
            snapshots: SnapshotPolicy::Periods(1),
            stop: StopRule::NEVER,
        };
        let traj = simulate(&spec, 2.0, &opts).unwrap();
        assert_eq!(traj.len(), 9);
        for (k, t) in traj.times.iter().enumerate() {
            assert!((t - 0.25 * k as f64).abs() < 1e-12);
        }
        assert_eq!(traj.snapshots.len(), 3);
        assert!(traj.h.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn larger_mu_moves_front_further() {
        let opts = SimulateOptions {
            sample_every: 0.5,
            snapshots: SnapshotPolicy::None,
            stop: StopRule::NEVER,
        };
        let slow = simulate(&favorable(3.0, 1.0), 5.0, &opts).unwrap();
        let fast = simulate(&favorable(3.0, 2.0), 5.0, &opts).unwrap();
        for (a, b) in slow.h.iter().zip(&fast.h).skip(1) {
            assert!(b > a);
        }
    }
}
