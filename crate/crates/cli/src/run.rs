//! Command dispatch.

use std::fmt::Write as _;
use std::path::PathBuf;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use stefan_core::coeff::{validate, Numerics, ProblemSpec, ValidationError};
use stefan_core::eigen::{d_thresholds, principal_eigenvalue, EigenError, EigenOptions, HStar, Potential};
use stefan_core::front::{
    classify_outcome, decide, locate_h_star, Classifier, FrontError, Outcome, Simulation, SnapshotPolicy, StopRule,
    Trajectory, Verdict,
};
use stefan_core::radial::RadialError;
use stefan_core::semiwave::{
    envelope_speeds, far_field_envelopes, k0_fixed_point, measure_front_speed, speed_bound, EnvelopeOptions,
    PeriodicSeries, SemiwaveError, SemiwaveOptions, SpeedOptions,
};
use stefan_core::thresholds::{
    criteria_experiment, mu_star, sigma0, CriteriaOptions, SearchOptions, ThresholdError, ThresholdResult,
};
use thiserror::Error;

use crate::config::{AxisName, Command, RunConfig};
use crate::output::{real, Artifacts};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Error)]
#[error("{message}")]
pub struct RunError {
    pub code: i32,
    pub message: String,
}

impl RunError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn radial_code(e: &RadialError) -> i32 {
    match e {
        RadialError::NoConvergence { .. } | RadialError::DomainNotLargeEnough { .. } => EXIT_NO_CONVERGENCE,
        RadialError::InvalidInput(_) | RadialError::StepSizeTooLarge { .. } => EXIT_VALIDATION,
        RadialError::SolverSingular { .. } | RadialError::NonFinite { .. } => EXIT_INVARIANT,
    }
}

fn eigen_code(e: &EigenError) -> i32 {
    match e {
        EigenError::Radial(r) => radial_code(r),
        EigenError::NoConvergence { .. } | EigenError::NoSignChange { .. } => EXIT_NO_CONVERGENCE,
        EigenError::NonPositiveIterate { .. } => EXIT_INVARIANT,
        EigenError::BracketInvalid { .. } | EigenError::InvalidInput(_) => EXIT_VALIDATION,
    }
}

fn front_code(e: &FrontError) -> i32 {
    match e {
        FrontError::FrontRetreat { .. } | FrontError::StepSizeTooLarge { .. } | FrontError::NonFinite { .. } => {
            EXIT_INVARIANT
        }
        FrontError::Radial { source, .. } => radial_code(source),
        FrontError::Invalid(_) => EXIT_VALIDATION,
        FrontError::Eigen(e) => eigen_code(e),
    }
}

impl From<ValidationError> for RunError {
    fn from(e: ValidationError) -> Self {
        Self::new(EXIT_VALIDATION, e.to_string())
    }
}

impl From<EigenError> for RunError {
    fn from(e: EigenError) -> Self {
        Self::new(eigen_code(&e), e.to_string())
    }
}

impl From<FrontError> for RunError {
    fn from(e: FrontError) -> Self {
        Self::new(front_code(&e), e.to_string())
    }
}

impl From<SemiwaveError> for RunError {
    fn from(e: SemiwaveError) -> Self {
        let code = match &e {
            SemiwaveError::NoConvergence { .. }
            | SemiwaveError::TruncationTooSmall { .. }
            | SemiwaveError::NotSpreading => EXIT_NO_CONVERGENCE,
            SemiwaveError::BoundViolated { .. } => EXIT_INVARIANT,
            SemiwaveError::NonPositive { .. }
            | SemiwaveError::HypothesisHFailed { .. }
            | SemiwaveError::InvalidInput(_) => EXIT_VALIDATION,
            SemiwaveError::Radial(r) => radial_code(r),
        };
        Self::new(code, e.to_string())
    }
}

impl From<ThresholdError> for RunError {
    fn from(e: ThresholdError) -> Self {
        let code = match &e {
            ThresholdError::BracketInvalid { .. } | ThresholdError::InvalidInput(_) => EXIT_VALIDATION,
            ThresholdError::TooManyUndecided { .. } => EXIT_NO_CONVERGENCE,
            ThresholdError::NonMonotone(_) => EXIT_INVARIANT,
            ThresholdError::Front(f) => front_code(f),
            ThresholdError::Eigen(g) => eigen_code(g),
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_OTHER, format!("i/o error: {e}"))
    }
}

/// Settings from the command line.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub horizon_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            jobs: None,
            horizon_scale: 1.0,
        }
    }
}

/// Run the configured command, writing artifacts under `opts.out`.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<Vec<PathBuf>, RunError> {
    if opts.horizon_scale.is_nan() || opts.horizon_scale <= 0.0 {
        return Err(RunError::new(EXIT_VALIDATION, "--horizon-scale must be positive"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = opts.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = pool.build().map_err(|e| RunError::new(EXIT_OTHER, e.to_string()))?;
    let mut out = Artifacts::new(&opts.out, config)?;
    pool.install(|| match config.command {
        Command::Simulate => simulate(config, opts, &mut out),
        Command::Eigen => eigen(config, &mut out),
        Command::HStar => hstar(config, &mut out),
        Command::Speed => speed(config, opts, &mut out),
        Command::MuStar | Command::Sigma0 => threshold(config, opts, &mut out),
        Command::Sweep => sweep(config, opts, &mut out),
        Command::Criteria => criteria(config, opts, &mut out),
    })?;
    Ok(out.written().to_vec())
}

fn validated(config: &RunConfig) -> Result<ProblemSpec, RunError> {
    let spec = config.problem();
    validate(&spec).into_result()?;
    Ok(spec)
}

fn eigen_options(config: &RunConfig) -> EigenOptions {
    EigenOptions {
        n: config.eigen.n,
        dim: config.model.dim.unwrap_or(2),
        dt_max: config.eigen.dt_max,
        tol: config.eigen.tol,
        ..EigenOptions::default()
    }
}

fn search_options(config: &RunConfig, opts: &RunOptions) -> SearchOptions {
    SearchOptions {
        tol: config.threshold.tol,
        base_periods: config.threshold.base_periods,
        cap_periods: config.threshold.cap_periods,
        horizon_scale: opts.horizon_scale,
        ..SearchOptions::default()
    }
}

fn horizon(spec: &ProblemSpec, opts: &RunOptions) -> f64 {
    Numerics {
        t_max: spec.numerics.t_max * opts.horizon_scale,
        ..spec.numerics
    }
    .horizon(spec.period())
}

fn trajectory_body(traj: &Trajectory) -> String {
    let mut body = String::new();
    for i in 0..traj.len() {
        let _ = writeln!(
            body,
            "{},{},{},{}",
            real(traj.times[i]),
            real(traj.h[i]),
            real(traj.h_prime[i]),
            real(traj.u_sup[i])
        );
    }
    body
}

fn snapshot_body(traj: &Trajectory) -> String {
    let mut body = String::new();
    for snap in &traj.snapshots {
        for (r, u) in snap.radii().zip(&snap.values) {
            let _ = writeln!(body, "{},{},{}", real(snap.t), real(r), real(*u));
        }
    }
    body
}

const TRAJECTORY_COLUMNS: [&str; 4] = ["t", "h", "h_prime", "u_sup"];
const SNAPSHOT_COLUMNS: [&str; 3] = ["t", "r", "u"];

/// Escalation cap relative to the initial horizon.
pub const ESCALATION_CAP: f64 = 8.0;

#[derive(Serialize)]
struct OutcomeReport<'a> {
    outcome: &'a Outcome,
    t_final: f64,
    escalations: usize,
    h_star_search: HStar,
}

fn simulate(config: &RunConfig, opts: &RunOptions, out: &mut Artifacts) -> Result<(), RunError> {
    let spec = validated(config)?;
    let classifier = Classifier::for_spec(&spec)?;
    let t_max = horizon(&spec, opts);
    let policy = SnapshotPolicy::Periods(config.numerics.snapshot_every.max(1));
    let mut sim = Simulation::new(&spec, config.sample_every(), policy, StopRule::NEVER);
    let mut t_end = t_max;
    let mut escalations = 0;
    let outcome = loop {
        info!("simulating to t = {t_end}");
        if let Err(e) = sim.advance_to(t_end) {
            out.csv("trajectory.csv", &TRAJECTORY_COLUMNS, &trajectory_body(sim.trajectory()), true)?;
            out.csv("snapshots.csv", &SNAPSHOT_COLUMNS, &snapshot_body(sim.trajectory()), true)?;
            return Err(e.into());
        }
        let outcome = classify_outcome(sim.trajectory(), &spec, &classifier)?;
        if outcome.verdict != Verdict::Undecided || t_end >= ESCALATION_CAP * t_max * (1.0 - 1e-12) {
            break outcome;
        }
        t_end = (2.0 * t_end).min(ESCALATION_CAP * t_max);
        escalations += 1;
    };
    let traj = sim.trajectory();
    out.csv("trajectory.csv", &TRAJECTORY_COLUMNS, &trajectory_body(traj), false)?;
    out.csv("snapshots.csv", &SNAPSHOT_COLUMNS, &snapshot_body(traj), false)?;
    out.json(
        "outcome.json",
        &OutcomeReport {
            outcome: &outcome,
            t_final: traj.final_time(),
            escalations,
            h_star_search: classifier.h_star,
        },
        false,
    )?;
    info!("verdict {:?}", outcome.verdict);
    Ok(())
}

fn eigen(config: &RunConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let field = config.field();
    let potential = Potential::growth(&field);
    let d = config.model.d.unwrap_or(1.0);
    let opts = eigen_options(config);
    let results: Vec<_> = config
        .eigen
        .radii
        .par_iter()
        .map(|&r| principal_eigenvalue(d, &potential, r, field.period, &opts))
        .collect();
    let mut body = String::new();
    let mut failure = None;
    for (r, res) in config.eigen.radii.iter().zip(results) {
        match res {
            Ok(e) => {
                let _ = writeln!(
                    body,
                    "{},{},{},{},{}",
                    real(*r),
                    real(e.lambda1),
                    real(e.rho),
                    e.iterations,
                    real(e.residual)
                );
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let columns = ["R", "lambda1", "rho", "iterations", "residual"];
    out.csv("eigen_sweep.csv", &columns, &body, failure.is_some())?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(())
}

#[derive(Serialize)]
struct HStarReport {
    d: f64,
    h_star: Option<f64>,
    searched_up_to: Option<f64>,
    d_star: Option<f64>,
    d_upper: Option<f64>,
    d_crossings: Option<usize>,
}

fn hstar(config: &RunConfig, out: &mut Artifacts) -> Result<(), RunError> {
    let field = config.field();
    let potential = Potential::growth(&field);
    let d = config.model.d.unwrap_or(1.0);
    let opts = eigen_options(config);
    let found = locate_h_star(d, &potential, field.period, &opts)?;
    let mut report = HStarReport {
        d,
        h_star: found.value(),
        searched_up_to: match found {
            HStar::InfiniteWithinBracket(top) => Some(top),
            HStar::Finite(_) => None,
        },
        d_star: None,
        d_upper: None,
        d_crossings: None,
    };
    if let (Some(lo), Some(hi), Some(h0)) = (config.eigen.d_lo, config.eigen.d_hi, config.model.h0) {
        let t = d_thresholds(&potential, h0, field.period, lo, hi, 1e-4, &opts)?;
        report.d_star = Some(t.d_star);
        report.d_upper = Some(t.d_upper);
        report.d_crossings = Some(t.crossings.len());
    }
    out.json("hstar.json", &report, false)?;
    Ok(())
}

#[derive(Serialize)]
struct SpeedReport {
    mu: f64,
    c: f64,
    c_upper: f64,
    c_lower: f64,
    measured_slope: Option<f64>,
    bound_2sqrt_da: f64,
    iterations: usize,
    verdict: Verdict,
    ratio_final: Option<f64>,
}

fn speed(config: &RunConfig, opts: &RunOptions, out: &mut Artifacts) -> Result<(), RunError> {
    let spec = validated(config)?;
    let field = &spec.field;
    let period = field.period;
    let d = spec.diffusion;
    let s = &config.speed;
    let speed_opts = SpeedOptions {
        relax: s.relax,
        tol: s.tol,
        profile: SemiwaveOptions {
            n: s.semiwave_n,
            ..SemiwaveOptions::default()
        },
        ..SpeedOptions::default()
    };
    let env_opts = EnvelopeOptions {
        eps: s.eps,
        far_radius: s.far_radius,
        speed: speed_opts,
        ..EnvelopeOptions::default()
    };
    let m = speed_opts.profile.phases;
    let (upper, lower) = far_field_envelopes(field, s.far_radius, env_opts.radial_samples, m);
    let eta = PeriodicSeries {
        period,
        values: upper.values.iter().zip(&lower.values).map(|(a, b)| 0.5 * (a + b)).collect(),
    };
    let beta = PeriodicSeries::from_fn(period, m, |t| 0.5 * (field.beta_env.lower_at(t) + field.beta_env.upper_at(t)));
    let a = |t: f64| eta.at(t);
    let b = |t: f64| beta.at(t);

    let t_max = horizon(&spec, opts);
    let ((central, envelopes), run) = rayon::join(
        || {
            rayon::join(
                || k0_fixed_point(spec.mu, &a, &b, d, period, &speed_opts),
                || envelope_speeds(field, spec.mu, d, &env_opts),
            )
        },
        || -> Result<(Trajectory, Outcome), FrontError> {
            let classifier = Classifier::for_spec(&spec)?;
            let mut sim = Simulation::new(&spec, config.sample_every(), SnapshotPolicy::None, StopRule::NEVER);
            sim.advance_to(t_max)?;
            let outcome = classify_outcome(sim.trajectory(), &spec, &classifier)?;
            Ok((sim.into_trajectory(), outcome))
        },
    );
    let (central, envelopes, (traj, outcome)) = (central?, envelopes?, run?);
    let measured = if outcome.verdict == Verdict::Spreading {
        Some(measure_front_speed(&traj, s.window)?)
    } else {
        warn!("run did not spread; no measured slope");
        None
    };
    out.csv("trajectory.csv", &TRAJECTORY_COLUMNS, &trajectory_body(&traj), false)?;
    out.json(
        "speed.json",
        &SpeedReport {
            mu: spec.mu,
            c: central.c,
            c_upper: envelopes.c_upper,
            c_lower: envelopes.c_lower,
            measured_slope: measured.map(|m| m.slope),
            bound_2sqrt_da: speed_bound(&a, d, period),
            iterations: central.iterations,
            verdict: outcome.verdict,
            ratio_final: measured.map(|m| m.ratio),
        },
        false,
    )?;
    Ok(())
}

fn threshold_body(r: &ThresholdResult) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        r.parameter,
        real(r.value),
        real(r.bracket.0),
        real(r.bracket.1),
        r.evaluations,
        r.undecided_encounters
    )
}

const THRESHOLD_COLUMNS: [&str; 6] = ["parameter", "value", "lo", "hi", "evaluations", "undecided_encounters"];

fn threshold(config: &RunConfig, opts: &RunOptions, out: &mut Artifacts) -> Result<(), RunError> {
    let spec = config.problem();
    let (lo, hi) = (config.threshold.lo.unwrap_or(0.0), config.threshold.hi.unwrap_or(0.0));
    let search = search_options(config, opts);
    let result = match config.command {
        Command::MuStar => mu_star(&spec, lo, hi, &search)?,
        _ => sigma0(&spec, &spec.u0, lo, hi, &search)?,
    };
    out.csv("threshold.csv", &THRESHOLD_COLUMNS, &threshold_body(&result), false)?;
    out.json("threshold.json", &result, false)?;
    Ok(())
}

fn apply_axis(base: &ProblemSpec, axis: AxisName, value: f64) -> ProblemSpec {
    match axis {
        AxisName::D => base.with_diffusion(value),
        AxisName::Mu => base.with_mu(value),
        AxisName::H0 => base.with_h0(value).with_u0(base.u0.rescaled_support(base.h0, value)),
        AxisName::Sigma => base.with_u0(base.u0.scaled(value)),
    }
}

#[derive(Serialize)]
struct Overlay {
    h_star: Option<f64>,
    d_star: Option<f64>,
    d_upper: Option<f64>,
    axis1: &'static str,
    axis2: &'static str,
}

fn sweep(config: &RunConfig, opts: &RunOptions, out: &mut Artifacts) -> Result<(), RunError> {
    let base = validated(config)?;
    let sw = config.sweep.as_ref().ok_or_else(|| RunError::new(EXIT_VALIDATION, "missing [sweep] axes"))?;
    let search = search_options(config, opts);
    let horizon = search.horizon(base.period());
    let cells: Vec<(f64, f64)> = sw
        .axis1
        .values
        .iter()
        .flat_map(|&x| sw.axis2.values.iter().map(move |&y| (x, y)))
        .collect();
    let results: Vec<Result<Outcome, FrontError>> = cells
        .par_iter()
        .map(|&(x, y)| {
            let spec = apply_axis(&apply_axis(&base, sw.axis1.name, x), sw.axis2.name, y);
            validate(&spec).into_result()?;
            let classifier = Classifier::for_spec(&spec)?;
            Ok(decide(&spec, &classifier, horizon, spec.period())?.0)
        })
        .collect();
    let mut body = String::new();
    for ((x, y), res) in cells.iter().zip(&results) {
        let (verdict, t) = match res {
            Ok(o) => (format!("{:?}", o.verdict), o.t_decided.map(real).unwrap_or_default()),
            Err(e) => {
                warn!("cell ({x}, {y}) failed: {e}");
                ("Error".to_string(), String::new())
            }
        };
        let _ = writeln!(body, "{},{},{},{}", real(*x), real(*y), verdict, t);
    }
    out.csv("phase.csv", &["axis1", "axis2", "verdict", "t_decided"], &body, false)?;

    let potential = Potential::growth(&base.field);
    let eigen = Classifier::default_eigen(base.dim);
    let (d_lo, d_hi) = (config.eigen.d_lo.unwrap_or(1e-3), config.eigen.d_hi.unwrap_or(1e3));
    let thresholds = d_thresholds(&potential, base.h0, base.period(), d_lo, d_hi, 1e-4, &eigen).ok();
    let h_star = locate_h_star(base.diffusion, &potential, base.period(), &eigen)
        .ok()
        .and_then(|h| h.value());
    out.json(
        "overlay.json",
        &Overlay {
            h_star,
            d_star: thresholds.as_ref().map(|t| t.d_star),
            d_upper: thresholds.as_ref().map(|t| t.d_upper),
            axis1: sw.axis1.name.name(),
            axis2: sw.axis2.name.name(),
        },
        false,
    )?;
    Ok(())
}

fn criteria(config: &RunConfig, opts: &RunOptions, out: &mut Artifacts) -> Result<(), RunError> {
    let spec = validated(config)?;
    let copts = CriteriaOptions {
        search: search_options(config, opts),
        ..CriteriaOptions::default()
    };
    let reports: Vec<_> = config
        .criteria
        .par_iter()
        .map(|&kind| criteria_experiment(kind, &spec, &copts))
        .collect();
    for r in &reports {
        if !r.all_match() {
            warn!("{}: outcomes differ from the predicted regime", r.kind.name());
        }
    }
    #[derive(Serialize)]
    struct Criteria<'a> {
        reports: &'a [stefan_core::thresholds::CriteriaReport],
    }
    out.json("criteria.json", &Criteria { reports: &reports }, false)?;
    Ok(())
}
