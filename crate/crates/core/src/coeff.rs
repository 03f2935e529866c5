//! Time-periodic environment coefficients, problem instances and their
//! validation, plus favorable/unfavorable habitat classification.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::expr::{Expr, Var};

/// Relative tolerance of the sampled periodicity check.
pub const PERIODICITY_TOL: f64 = 1e-10;

/// A scalar function of `(t, r)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Expr(Arc<Expr>),
    Tabulated(Arc<Table>),
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(v) => write!(f, "Constant({v})"),
            Coefficient::Expr(e) => write!(f, "Expr({e})"),
            Coefficient::Tabulated(t) => {
                write!(f, "Tabulated({}x{})", t.times.len(), t.radii.len())
            }
            Coefficient::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Coefficient {
    pub fn expr(expr: Expr) -> Self {
        Coefficient::Expr(Arc::new(expr))
    }

    pub fn custom(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Custom(Arc::new(f))
    }

    /// Value at `(t, r)`. Expression domain errors surface as NaN, which the
    /// solvers reject as non-finite state.
    #[inline]
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        match self {
            Coefficient::Constant(v) => *v,
            Coefficient::Expr(e) => e.eval_at(t, r).unwrap_or(f64::NAN),
            Coefficient::Tabulated(table) => table.eval(t, r),
            Coefficient::Custom(f) => f(t, r),
        }
    }

    pub fn depends_on_r(&self) -> bool {
        match self {
            Coefficient::Constant(_) => false,
            Coefficient::Expr(e) => e.mentions(Var::R),
            Coefficient::Tabulated(t) => t.radii.len() > 1,
            Coefficient::Custom(_) => true,
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Coefficient::Constant(_) => false,
            Coefficient::Expr(e) => e.mentions(Var::T),
            Coefficient::Tabulated(t) => t.times.len() > 1,
            Coefficient::Custom(_) => true,
        }
    }

    /// Fill `out[j]` with the value at `(t, radii[j])`, evaluating once when
    /// the coefficient has no radial dependence.
    pub fn sample_row(&self, t: f64, radii: impl ExactSizeIterator<Item = f64>, out: &mut [f64]) {
        if !self.depends_on_r() {
            out.fill(self.eval(t, 0.0));
            return;
        }
        for (slot, r) in out.iter_mut().zip(radii) {
            *slot = self.eval(t, r);
        }
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Constant(v)
    }
}

/// Tabulated coefficient: piecewise linear in `t` with periodic wrap and in
/// `r` with clamping beyond the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    period: f64,
    times: Vec<f64>,
    radii: Vec<f64>,
    /// Row-major, one row per time node.
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("table needs at least one time and one radius node")]
    Empty,
    #[error("table has {got} values, expected {expected}")]
    Shape { got: usize, expected: usize },
    #[error("table nodes must be strictly increasing and times must lie in [0, period)")]
    Nodes,
}

impl Table {
    pub fn new(
        period: f64,
        times: Vec<f64>,
        radii: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, TableError> {
        if times.is_empty() || radii.is_empty() {
            return Err(TableError::Empty);
        }
        let expected = times.len() * radii.len();
        if values.len() != expected {
            return Err(TableError::Shape {
                got: values.len(),
                expected,
            });
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&times)
            || !increasing(&radii)
            || times[0] < 0.0
            || *times.last().unwrap() >= period
        {
            return Err(TableError::Nodes);
        }
        Ok(Self {
            period,
            times,
            radii,
            values,
        })
    }

    fn row_value(&self, row: usize, r: f64) -> f64 {
        let vals = &self.values[row * self.radii.len()..(row + 1) * self.radii.len()];
        let radii = &self.radii;
        if r <= radii[0] {
            return vals[0];
        }
        if r >= radii[radii.len() - 1] {
            return vals[vals.len() - 1];
        }
        let k = radii.partition_point(|&x| x <= r) - 1;
        let w = (r - radii[k]) / (radii[k + 1] - radii[k]);
        vals[k] + w * (vals[k + 1] - vals[k])
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let m = self.times.len();
        if m == 1 {
            return self.row_value(0, r);
        }
        let phase = t.rem_euclid(self.period);
        let (lo, hi, w) = match self.times.partition_point(|&x| x <= phase) {
            0 => {
                // wrap: between the last node (shifted back a period) and the first
                let prev = self.times[m - 1] - self.period;
                (m - 1, 0, (phase - prev) / (self.times[0] - prev))
            }
            k if k == m => {
                let next = self.times[0] + self.period;
                (m - 1, 0, (phase - self.times[m - 1]) / (next - self.times[m - 1]))
            }
            k => (
                k - 1,
                k,
                (phase - self.times[k - 1]) / (self.times[k] - self.times[k - 1]),
            ),
        };
        let a = self.row_value(lo, r);
        let b = self.row_value(hi, r);
        a + w * (b - a)
    }
}

/// Lower and upper bounds that hold for every radius.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub lower: Coefficient,
    pub upper: Coefficient,
}

impl Envelope {
    pub fn constant(lower: f64, upper: f64) -> Self {
        Self {
            lower: lower.into(),
            upper: upper.into(),
        }
    }

    pub fn lower_at(&self, t: f64) -> f64 {
        self.lower.eval(t, 0.0)
    }

    pub fn upper_at(&self, t: f64) -> f64 {
        self.upper.eval(t, 0.0)
    }
}

/// Birth rate `alpha`, death rate `gamma` and crowding `beta`, all
/// T-periodic in time, together with their declared envelopes.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub alpha: Coefficient,
    pub gamma: Coefficient,
    pub beta: Coefficient,
    pub period: f64,
    pub alpha_env: Envelope,
    pub gamma_env: Envelope,
    pub beta_env: Envelope,
}

impl CoefficientField {
    pub fn new(
        alpha: Coefficient,
        gamma: Coefficient,
        beta: Coefficient,
        period: f64,
        envelopes: [Envelope; 3],
    ) -> Self {
        let [alpha_env, gamma_env, beta_env] = envelopes;
        Self {
            alpha,
            gamma,
            beta,
            period,
            alpha_env,
            gamma_env,
            beta_env,
        }
    }

    /// Space-time constant coefficients with tight envelopes.
    pub fn constant(alpha: f64, gamma: f64, beta: f64, period: f64) -> Self {
        Self::new(
            alpha.into(),
            gamma.into(),
            beta.into(),
            period,
            [
                Envelope::constant(alpha, alpha),
                Envelope::constant(gamma, gamma),
                Envelope::constant(beta, beta),
            ],
        )
    }

    /// Build a field whose envelopes are the constant min/max of each
    /// coefficient over a `(t, r)` lattice covering `[0, T) x [0, r_max]`.
    pub fn with_sampled_envelopes(
        alpha: Coefficient,
        gamma: Coefficient,
        beta: Coefficient,
        period: f64,
        r_max: f64,
    ) -> Self {
        let bounds = |c: &Coefficient| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (t, r) in Lattice::new(period, r_max, 64, 256, 0.0).points() {
                let v = c.eval(t, r);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            Envelope::constant(lo, hi)
        };
        let envs = [bounds(&alpha), bounds(&gamma), bounds(&beta)];
        Self::new(alpha, gamma, beta, period, envs)
    }

    /// Net growth rate `alpha - gamma`.
    #[inline]
    pub fn growth(&self, t: f64, r: f64) -> f64 {
        self.alpha.eval(t, r) - self.gamma.eval(t, r)
    }

    pub fn growth_depends_on_r(&self) -> bool {
        self.alpha.depends_on_r() || self.gamma.depends_on_r()
    }

    pub fn depends_on_r(&self) -> bool {
        self.growth_depends_on_r() || self.beta.depends_on_r()
    }

    /// Maximum over a period of `alpha_2(t)`.
    pub fn max_alpha_upper(&self) -> f64 {
        self.phase_extreme(|t| self.alpha_env.upper_at(t), f64::max)
    }

    /// Maximum over a period of `beta_2(t)`.
    pub fn max_beta_upper(&self) -> f64 {
        self.phase_extreme(|t| self.beta_env.upper_at(t), f64::max)
    }

    /// Minimum over a period of `beta_1(t)`.
    pub fn min_beta_lower(&self) -> f64 {
        self.phase_extreme(|t| self.beta_env.lower_at(t), f64::min)
    }

    /// The a-priori density bound `max{max alpha_2 / min beta_1, |u0|}`.
    pub fn density_bound(&self, u0_sup: f64) -> f64 {
        (self.max_alpha_upper() / self.min_beta_lower()).max(u0_sup)
    }

    fn phase_extreme(&self, f: impl Fn(f64) -> f64, pick: fn(f64, f64) -> f64) -> f64 {
        (0..256)
            .map(|k| f(self.period * k as f64 / 256.0))
            .reduce(pick)
            .unwrap()
    }

    /// A copy with `c` added to both birth and death rates.
    pub fn shifted_rates(&self, c: f64) -> Self {
        let shift = |coef: &Coefficient| match coef {
            Coefficient::Constant(v) => Coefficient::Constant(v + c),
            other => {
                let other = other.clone();
                Coefficient::custom(move |t, r| other.eval(t, r) + c)
            }
        };
        let shift_env = |env: &Envelope| Envelope {
            lower: shift(&env.lower),
            upper: shift(&env.upper),
        };
        Self {
            alpha: shift(&self.alpha),
            gamma: shift(&self.gamma),
            beta: self.beta.clone(),
            period: self.period,
            alpha_env: shift_env(&self.alpha_env),
            gamma_env: shift_env(&self.gamma_env),
            beta_env: self.beta_env.clone(),
        }
    }
}

/// Regular `(t, r)` sampling lattice; `phase` shifts the time nodes by a
/// fraction of the period.
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    pub period: f64,
    pub r_max: f64,
    pub nt: usize,
    pub nr: usize,
    pub phase: f64,
}

impl Lattice {
    pub fn new(period: f64, r_max: f64, nt: usize, nr: usize, phase: f64) -> Self {
        Self {
            period,
            r_max,
            nt,
            nr,
            phase,
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.nt).flat_map(move |i| {
            let t = self.period * (i as f64 + self.phase) / self.nt as f64;
            (0..self.nr).map(move |j| (t, self.r_max * j as f64 / (self.nr - 1) as f64))
        })
    }
}

/// Initial density on `[0, h0]`.
#[derive(Debug, Clone)]
pub struct Profile(pub Coefficient);

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        self.0.eval(0.0, r)
    }

    /// `cos(pi r / (2 h0))`, the standard admissible bump.
    pub fn cosine_bump(h0: f64, amplitude: f64) -> Self {
        Profile(Coefficient::custom(move |_, r| {
            amplitude * (std::f64::consts::FRAC_PI_2 * r / h0).cos()
        }))
    }

    pub fn scaled(&self, sigma: f64) -> Self {
        match &self.0 {
            Coefficient::Constant(v) => Profile(Coefficient::Constant(v * sigma)),
            other => {
                let inner = other.clone();
                Profile(Coefficient::custom(move |t, r| sigma * inner.eval(t, r)))
            }
        }
    }

    /// Stretch a profile on `[0, from]` to `[0, to]`.
    pub fn rescaled_support(&self, from: f64, to: f64) -> Self {
        let inner = self.0.clone();
        let ratio = from / to;
        Profile(Coefficient::custom(move |t, r| inner.eval(t, r * ratio)))
    }

    pub fn sup_on(&self, h0: f64) -> f64 {
        (0..=512)
            .map(|j| self.eval(h0 * j as f64 / 512.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Discretization and horizon settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Numerics {
    /// Interval count of the radial grid.
    pub n: usize,
    /// Largest time step.
    pub dt: f64,
    /// Simulation horizon; rounded to the nearest multiple of the period.
    pub t_max: f64,
    /// Tolerance for periodic attractors and eigen solves.
    pub tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n: 256,
            dt: 1e-2,
            t_max: 50.0,
            tol: 1e-6,
        }
    }
}

impl Numerics {
    /// `t_max` rounded to the nearest whole number of periods (at least one).
    pub fn horizon(&self, period: f64) -> f64 {
        let periods = (self.t_max / period).round().max(1.0);
        periods * period
    }
}

/// A complete free-boundary problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub field: Arc<CoefficientField>,
    pub dim: usize,
    pub diffusion: f64,
    pub mu: f64,
    pub h0: f64,
    pub u0: Profile,
    pub numerics: Numerics,
}

impl ProblemSpec {
    pub fn period(&self) -> f64 {
        self.field.period
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self {
            mu,
            ..self.clone()
        }
    }

    pub fn with_diffusion(&self, diffusion: f64) -> Self {
        Self {
            diffusion,
            ..self.clone()
        }
    }

    pub fn with_u0(&self, u0: Profile) -> Self {
        Self { u0, ..self.clone() }
    }

    pub fn with_h0(&self, h0: f64) -> Self {
        Self { h0, ..self.clone() }
    }
}

/// One failed check in a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    NonFiniteCoefficient {
        name: &'static str,
        t: f64,
        r: f64,
    },
    EnvelopeViolation {
        name: &'static str,
        t: f64,
        r: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },
    NonPositiveEnvelope {
        name: &'static str,
        t: f64,
        value: f64,
    },
    PeriodicityViolation {
        name: &'static str,
        t: f64,
        r: f64,
        deviation: f64,
    },
    BoundaryMismatch {
        value: f64,
    },
    NonPositiveProfile {
        r: f64,
        value: f64,
    },
    NonzeroSlopeAtOrigin {
        slope: f64,
    },
    InvalidParameter {
        name: &'static str,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteCoefficient { name, t, r } => {
                write!(f, "{name} is not finite at (t={t}, r={r})")
            }
            Violation::EnvelopeViolation {
                name,
                t,
                r,
                value,
                lower,
                upper,
            } => write!(
                f,
                "{name}({t}, {r}) = {value} outside its envelope [{lower}, {upper}]"
            ),
            Violation::NonPositiveEnvelope { name, t, value } => {
                write!(f, "envelope of {name} is {value} <= 0 at t={t}")
            }
            Violation::PeriodicityViolation {
                name,
                t,
                r,
                deviation,
            } => write!(f, "{name} is not periodic: deviation {deviation} at (t={t}, r={r})"),
            Violation::BoundaryMismatch { value } => {
                write!(f, "u0(h0) = {value}, expected 0")
            }
            Violation::NonPositiveProfile { r, value } => {
                write!(f, "u0({r}) = {value} is not positive")
            }
            Violation::NonzeroSlopeAtOrigin { slope } => {
                write!(f, "u0'(0) = {slope}, expected 0")
            }
            Violation::InvalidParameter { name, value } => {
                write!(f, "parameter {name} = {value} is out of range")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Envelope and periodicity checks only cover radii up to this value.
    pub checked_up_to: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<(), ValidationError> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(ValidationError(self))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid problem: {}", .0.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct ValidationError(pub ValidationReport);

/// Options for [`validate_with`].
#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub nt: usize,
    pub nr: usize,
    /// Lattice phase offset as a fraction of one time cell.
    pub phase: f64,
    /// Far-field radius added to `4 h0` (the semi-wave truncation length).
    pub far_radius: Option<f64>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            nt: 64,
            nr: 64,
            phase: 0.0,
            far_radius: None,
        }
    }
}

pub fn validate(spec: &ProblemSpec) -> ValidationReport {
    validate_with(spec, &ValidationOptions::default())
}

pub fn validate_with(spec: &ProblemSpec, opts: &ValidationOptions) -> ValidationReport {
    let mut violations = Vec::new();
    let positive = [
        ("d", spec.diffusion),
        ("mu", spec.mu),
        ("h0", spec.h0),
        ("T", spec.period()),
        ("dt", spec.numerics.dt),
    ];
    for (name, value) in positive {
        if !(value > 0.0 && value.is_finite()) {
            violations.push(Violation::InvalidParameter { name, value });
        }
    }
    if spec.dim < 2 {
        violations.push(Violation::InvalidParameter {
            name: "N",
            value: spec.dim as f64,
        });
    }
    if spec.numerics.n < 16 {
        violations.push(Violation::InvalidParameter {
            name: "n",
            value: spec.numerics.n as f64,
        });
    }
    if !violations.is_empty() {
        return ValidationReport {
            violations,
            checked_up_to: 0.0,
        };
    }

    let far = opts
        .far_radius
        .unwrap_or_else(|| crate::semiwave::default_length(spec.diffusion));
    let r_check = 4.0 * spec.h0 + far;
    let lattice = Lattice::new(spec.period(), r_check, opts.nt, opts.nr, opts.phase);
    check_field(&spec.field, &lattice, &mut violations);
    check_profile(&spec.u0, spec.h0, &mut violations);
    ValidationReport {
        violations,
        checked_up_to: r_check,
    }
}

/// Periodicity, finiteness and envelope checks of a field on a lattice.
pub fn check_field(field: &CoefficientField, lattice: &Lattice, out: &mut Vec<Violation>) {
    let period = field.period;
    let entries: [(&'static str, &Coefficient, &Envelope); 3] = [
        ("alpha", &field.alpha, &field.alpha_env),
        ("gamma", &field.gamma, &field.gamma_env),
        ("beta", &field.beta, &field.beta_env),
    ];
    for (name, coef, env) in entries {
        let mut worst: Option<(f64, f64, f64)> = None;
        let mut first_env: Option<Violation> = None;
        let mut non_finite: Option<Violation> = None;
        for (t, r) in lattice.points() {
            let v = coef.eval(t, r);
            let shifted = coef.eval(t + period, r);
            if !v.is_finite() || !shifted.is_finite() {
                non_finite.get_or_insert(Violation::NonFiniteCoefficient { name, t, r });
                continue;
            }
            let dev = (shifted - v).abs() / (1.0 + v.abs());
            if dev > PERIODICITY_TOL && worst.is_none_or(|w| dev > w.2) {
                worst = Some((t, r, dev));
            }
            let (lo, hi) = (env.lower_at(t), env.upper_at(t));
            if (v < lo || v > hi) && first_env.is_none() {
                first_env = Some(Violation::EnvelopeViolation {
                    name,
                    t,
                    r,
                    value: v,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        out.extend(non_finite);
        if let Some((t, r, deviation)) = worst {
            out.push(Violation::PeriodicityViolation {
                name,
                t,
                r,
                deviation,
            });
        }
        out.extend(first_env);
        for i in 0..lattice.nt {
            let t = period * (i as f64 + lattice.phase) / lattice.nt as f64;
            let lo = env.lower_at(t);
            if !(lo > 0.0) {
                out.push(Violation::NonPositiveEnvelope { name, t, value: lo });
                break;
            }
        }
    }
}

fn check_profile(u0: &Profile, h0: f64, out: &mut Vec<Violation>) {
    let scale = u0.sup_on(h0).max(f64::MIN_POSITIVE);
    let at_front = u0.eval(h0);
    if !(at_front.abs() <= 1e-12 * scale.max(1.0)) {
        out.push(Violation::BoundaryMismatch { value: at_front });
    }
    for j in 1..512 {
        let r = h0 * j as f64 / 512.0;
        let v = u0.eval(r);
        if !(v > 0.0) {
            out.push(Violation::NonPositiveProfile { r, value: v });
            break;
        }
    }
    let delta = 1e-7 * h0;
    let slope = (u0.eval(delta) - u0.eval(0.0)) / delta;
    if !(slope.abs() <= 1e-6 * scale / h0) {
        out.push(Violation::NonzeroSlopeAtOrigin { slope });
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HabitatClass {
    Favorable,
    Unfavorable,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HabitatReport {
    pub favorable_fraction: f64,
    pub unfavorable_fraction: f64,
    pub mean_birth: f64,
    pub mean_death: f64,
    pub classification: HabitatClass,
    /// Radii where the period integral of `alpha - gamma` is positive.
    pub favorable_radii: Vec<f64>,
}

impl HabitatReport {
    pub fn has_favorable_site(&self) -> bool {
        !self.favorable_radii.is_empty()
    }
}

const HABITAT_TIME_NODES: usize = 256;

/// Classify the ball `B_R` in dimension `dim` from `samples` radii.
///
/// The per-radius period integral uses the periodic trapezoid rule; the
/// space-time means weight radii by `r^(N-1)`.
pub fn classify_habitat(
    field: &CoefficientField,
    radius: f64,
    samples: usize,
    dim: usize,
) -> HabitatReport {
    let samples = samples.max(16);
    let period = field.period;
    let dt = period / HABITAT_TIME_NODES as f64;
    let zero_tol = 1e-8 * period;

    let mut favorable_radii = Vec::new();
    let mut unfavorable = 0usize;
    let (mut birth, mut death, mut weight) = (0.0, 0.0, 0.0);
    for j in 0..samples {
        let r = radius * j as f64 / (samples - 1) as f64;
        let (mut net, mut a_sum, mut g_sum) = (0.0, 0.0, 0.0);
        for k in 0..HABITAT_TIME_NODES {
            let t = k as f64 * dt;
            let a = field.alpha.eval(t, r);
            let g = field.gamma.eval(t, r);
            net += (a - g) * dt;
            a_sum += a * dt;
            g_sum += g * dt;
        }
        if net > zero_tol {
            favorable_radii.push(r);
        } else if net < -zero_tol {
            unfavorable += 1;
        }
        let end = if j == 0 || j == samples - 1 { 0.5 } else { 1.0 };
        let w = end * r.powi(dim as i32 - 1);
        birth += w * a_sum;
        death += w * g_sum;
        weight += w * period;
    }
    let mean_birth = birth / weight;
    let mean_death = death / weight;
    let scale = 1.0 + mean_birth.abs().max(mean_death.abs());
    let classification = if mean_birth - mean_death > 1e-9 * scale {
        HabitatClass::Favorable
    } else if mean_death - mean_birth > 1e-9 * scale {
        HabitatClass::Unfavorable
    } else {
        HabitatClass::Neutral
    };
    HabitatReport {
        favorable_fraction: favorable_radii.len() as f64 / samples as f64,
        unfavorable_fraction: unfavorable as f64 / samples as f64,
        mean_birth,
        mean_death,
        classification,
        favorable_radii,
    }
}
