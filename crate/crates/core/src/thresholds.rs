//! Simulation-driven sharp thresholds in the expansion coefficient `mu` and
//! the initial amplitude `sigma`, and the qualitative regime experiments.

use serde::Serialize;
use thiserror::Error;

use crate::coeff::{classify_habitat, ProblemSpec, Profile};
use crate::eigen::{d_thresholds, principal_eigenvalue, EigenError, EigenOptions, HStar, Potential};
use crate::front::{decide, locate_h_star, Classifier, FrontError, Horizon, Outcome, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("{parameter} = {value} gave {verdict:?}, expected {expected:?}")]
    BracketInvalid {
        parameter: &'static str,
        value: f64,
        verdict: Verdict,
        expected: Verdict,
    },
    #[error("{encounters} undecided probes between {lo} and {hi}")]
    TooManyUndecided { lo: f64, hi: f64, encounters: usize },
    #[error("verdicts are not monotone along the ladder: {0:?}")]
    NonMonotone(Vec<(f64, Verdict)>),
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// Bisection and horizon settings shared by the threshold searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    /// Stop once `hi - lo <= tol (1 + value)`.
    pub tol: f64,
    pub base_periods: usize,
    pub cap_periods: usize,
    /// Multiplies both ends of the horizon.
    pub horizon_scale: f64,
    /// Undecided probes tolerated within one bisection step.
    pub max_undecided: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            tol: 0.01,
            base_periods: 50,
            cap_periods: 400,
            horizon_scale: 1.0,
            max_undecided: 5,
        }
    }
}

impl SearchOptions {
    pub fn horizon(&self, period: f64) -> Horizon {
        Horizon::periods(period, self.base_periods, self.cap_periods).scaled(self.horizon_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ThresholdEvidence {
    /// Bracket endpoints certified by simulation.
    Bisection,
    /// `lambda1(h0) <= 0`: spreading for every value of the parameter.
    EigenvalueNonpositive { lambda1: f64 },
    /// The spreading endpoint could not be certified; `value` is a lower
    /// bound.
    LowerBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub parameter: &'static str,
    pub value: f64,
    pub bracket: (f64, f64),
    pub verdict_lo: Option<Verdict>,
    pub verdict_hi: Option<Verdict>,
    pub evaluations: usize,
    pub undecided_encounters: usize,
    pub evidence: ThresholdEvidence,
    pub lambda1_h0: f64,
}

/// Runs outcome probes with a fixed classifier and horizon policy.
pub struct Prober {
    pub classifier: Classifier,
    pub horizon: Horizon,
    pub sample_every: f64,
    pub evaluations: usize,
}

impl Prober {
    pub fn new(spec: &ProblemSpec, opts: &SearchOptions) -> Result<Self, FrontError> {
        Ok(Self {
            classifier: Classifier::for_spec(spec)?,
            horizon: opts.horizon(spec.period()),
            sample_every: spec.period(),
            evaluations: 0,
        })
    }

    pub fn outcome(&mut self, spec: &ProblemSpec) -> Result<Outcome, FrontError> {
        self.evaluations += 1;
        let (outcome, _, _) = decide(spec, &self.classifier, self.horizon, self.sample_every)?;
        Ok(outcome)
    }

    pub fn verdict(&mut self, spec: &ProblemSpec) -> Result<Verdict, FrontError> {
        Ok(self.outcome(spec)?.verdict)
    }
}

/// Eigenvalue settings for the `lambda1(h0)` branch test.
pub fn branch_eigen(dim: usize) -> EigenOptions {
    EigenOptions::default().with_dim(dim)
}

/// `lambda1(d, alpha - gamma, h0, T)`.
pub fn lambda1_at_h0(spec: &ProblemSpec) -> Result<f64, EigenError> {
    Ok(principal_eigenvalue(
        spec.diffusion,
        &Potential::growth(&spec.field),
        spec.h0,
        spec.period(),
        &branch_eigen(spec.dim),
    )?
    .lambda1)
}

const PROBE_FRACTIONS: [f64; 7] = [0.5, 0.25, 0.75, 0.375, 0.625, 0.125, 0.875];

/// Bisection on a parameter whose verdict switches from Vanishing at `lo`
/// to Spreading at `hi`.
#[allow(clippy::too_many_arguments)]
fn bisect(
    parameter: &'static str,
    lo: f64,
    hi: f64,
    make: impl Fn(f64) -> ProblemSpec,
    prober: &mut Prober,
    opts: &SearchOptions,
    allow_lower_bound: bool,
    lambda1_h0: f64,
) -> Result<ThresholdResult, ThresholdError> {
    if !(0.0 < lo && lo < hi) {
        return Err(ThresholdError::InvalidInput("need 0 < lo < hi"));
    }
    let mut undecided = 0;
    let verdict_lo = prober.verdict(&make(lo))?;
    if verdict_lo == Verdict::Undecided {
        undecided += 1;
    }
    if verdict_lo != Verdict::Vanishing {
        return Err(ThresholdError::BracketInvalid {
            parameter,
            value: lo,
            verdict: verdict_lo,
            expected: Verdict::Vanishing,
        });
    }
    let verdict_hi = prober.verdict(&make(hi))?;
    if verdict_hi == Verdict::Undecided {
        undecided += 1;
        if allow_lower_bound {
            return Ok(ThresholdResult {
                parameter,
                value: lo,
                bracket: (lo, hi),
                verdict_lo: Some(verdict_lo),
                verdict_hi: Some(verdict_hi),
                evaluations: prober.evaluations,
                undecided_encounters: undecided,
                evidence: ThresholdEvidence::LowerBound,
                lambda1_h0,
            });
        }
    }
    if verdict_hi != Verdict::Spreading {
        return Err(ThresholdError::BracketInvalid {
            parameter,
            value: hi,
            verdict: verdict_hi,
            expected: Verdict::Spreading,
        });
    }

    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > opts.tol * (1.0 + 0.5 * (lo + hi)) {
        let mut step_undecided = 0;
        let mut moved = false;
        for frac in PROBE_FRACTIONS {
            let p = lo + frac * (hi - lo);
            match prober.verdict(&make(p))? {
                Verdict::Spreading => hi = p,
                Verdict::Vanishing => lo = p,
                Verdict::Undecided => {
                    undecided += 1;
                    step_undecided += 1;
                    if step_undecided > opts.max_undecided {
                        return Err(ThresholdError::TooManyUndecided {
                            lo,
                            hi,
                            encounters: undecided,
                        });
                    }
                    continue;
                }
            }
            moved = true;
            break;
        }
        if !moved {
            return Err(ThresholdError::TooManyUndecided {
                lo,
                hi,
                encounters: undecided,
            });
        }
    }
    Ok(ThresholdResult {
        parameter,
        value: 0.5 * (lo + hi),
        bracket: (lo, hi),
        verdict_lo: Some(Verdict::Vanishing),
        verdict_hi: Some(Verdict::Spreading),
        evaluations: prober.evaluations,
        undecided_encounters: undecided,
        evidence: ThresholdEvidence::Bisection,
        lambda1_h0,
    })
}

fn unconditional(parameter: &'static str, lambda1: f64) -> ThresholdResult {
    ThresholdResult {
        parameter,
        value: 0.0,
        bracket: (0.0, 0.0),
        verdict_lo: None,
        verdict_hi: None,
        evaluations: 0,
        undecided_encounters: 0,
        evidence: ThresholdEvidence::EigenvalueNonpositive { lambda1 },
        lambda1_h0: lambda1,
    }
}

/// Sharp threshold in the expansion coefficient.
pub fn mu_star(spec: &ProblemSpec, mu_lo: f64, mu_hi: f64, opts: &SearchOptions) -> Result<ThresholdResult, ThresholdError> {
    crate::coeff::validate(spec).into_result().map_err(FrontError::from)?;
    let lambda1 = lambda1_at_h0(spec)?;
    if lambda1 <= 0.0 {
        return Ok(unconditional("mu", lambda1));
    }
    let mut prober = Prober::new(spec, opts)?;
    bisect("mu", mu_lo, mu_hi, |mu| spec.with_mu(mu), &mut prober, opts, false, lambda1)
}

/// Sharp threshold in the amplitude of `u0 = sigma * zeta`.
pub fn sigma0(
    template: &ProblemSpec,
    zeta: &Profile,
    sigma_lo: f64,
    sigma_hi: f64,
    opts: &SearchOptions,
) -> Result<ThresholdResult, ThresholdError> {
    let spec = template.with_u0(zeta.clone());
    crate::coeff::validate(&spec).into_result().map_err(FrontError::from)?;
    let lambda1 = lambda1_at_h0(&spec)?;
    if lambda1 <= 0.0 {
        return Ok(unconditional("sigma", lambda1));
    }
    let mut prober = Prober::new(&spec, opts)?;
    bisect(
        "sigma",
        sigma_lo,
        sigma_hi,
        |s| spec.with_u0(zeta.scaled(s)),
        &mut prober,
        opts,
        true,
        lambda1,
    )
}

/// Verdicts at each parameter value, in order.
pub fn verdict_ladder(
    values: &[f64],
    make: impl Fn(f64) -> ProblemSpec,
    prober: &mut Prober,
) -> Result<Vec<(f64, Verdict)>, ThresholdError> {
    values
        .iter()
        .map(|&v| Ok((v, prober.verdict(&make(v))?)))
        .collect()
}

/// Fails unless the ladder reads Vanishing... then Spreading...
/// Undecided rungs are allowed only at the switch.
pub fn check_sorted(ladder: &[(f64, Verdict)]) -> Result<(), ThresholdError> {
    let rank = |v: Verdict| match v {
        Verdict::Vanishing => 0,
        Verdict::Undecided => 1,
        Verdict::Spreading => 2,
    };
    if ladder.windows(2).all(|w| rank(w[0].1) <= rank(w[1].1)) {
        Ok(())
    } else {
        Err(ThresholdError::NonMonotone(ladder.to_vec()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriteriaKind {
    SlowDiffusion,
    FastDiffusion,
    LargeHabitat,
    SmallHabitat,
}

impl CriteriaKind {
    pub const ALL: [CriteriaKind; 4] = [
        CriteriaKind::SlowDiffusion,
        CriteriaKind::FastDiffusion,
        CriteriaKind::LargeHabitat,
        CriteriaKind::SmallHabitat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CriteriaKind::SlowDiffusion => "slow-diffusion",
            CriteriaKind::FastDiffusion => "fast-diffusion",
            CriteriaKind::LargeHabitat => "large-habitat",
            CriteriaKind::SmallHabitat => "small-habitat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriteriaOptions {
    pub search: SearchOptions,
    /// Amplitude multipliers of the small, medium and large profiles.
    pub amplitudes: [f64; 3],
    pub d_range: (f64, f64),
}

impl Default for CriteriaOptions {
    fn default() -> Self {
        Self {
            search: SearchOptions::default(),
            amplitudes: [1e-3, 1.0, 100.0],
            d_range: (1e-3, 1e3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaRun {
    pub amplitude: f64,
    pub expected: Option<Verdict>,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

impl CriteriaRun {
    pub fn matches(&self) -> bool {
        match (self.expected, self.verdict) {
            (Some(e), Some(v)) => e == v,
            (None, _) => self.error.is_none(),
            (Some(_), None) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    pub kind: CriteriaKind,
    /// Whether the regime could be set up for this field.
    pub applicable: bool,
    pub note: Option<String>,
    pub d: f64,
    pub h0: f64,
    pub h_star: Option<f64>,
    pub d_star: Option<f64>,
    pub d_upper: Option<f64>,
    pub runs: Vec<CriteriaRun>,
}

impl CriteriaReport {
    pub fn all_match(&self) -> bool {
        self.applicable && self.runs.iter().all(CriteriaRun::matches)
    }
}

/// Pick parameters inside one of the four regimes and compare three
/// simulated outcomes with the predicted ones.
pub fn criteria_experiment(kind: CriteriaKind, spec: &ProblemSpec, opts: &CriteriaOptions) -> CriteriaReport {
    let mut report = CriteriaReport {
        kind,
        applicable: false,
        note: None,
        d: spec.diffusion,
        h0: spec.h0,
        h_star: None,
        d_star: None,
        d_upper: None,
        runs: Vec::new(),
    };
    let potential = Potential::growth(&spec.field);
    let period = spec.period();
    let eigen = Classifier::default_eigen(spec.dim);

    let thresholds = d_thresholds(&potential, spec.h0, period, opts.d_range.0, opts.d_range.1, 1e-4, &eigen);
    if let Ok(t) = &thresholds {
        report.d_star = Some(t.d_star);
        report.d_upper = Some(t.d_upper);
    }
    let h_star_at = |d: f64| locate_h_star(d, &potential, period, &eigen);

    let tuned = match kind {
        CriteriaKind::SlowDiffusion => {
            let favorable = classify_habitat(&spec.field, spec.h0, 64, spec.dim).has_favorable_site();
            match (&thresholds, favorable) {
                (_, false) => Err("no favorable site inside the initial habitat".to_string()),
                (Ok(t), true) => Ok(spec.with_diffusion(0.5 * t.d_star)),
                (Err(e), true) => Err(e.to_string()),
            }
        }
        CriteriaKind::FastDiffusion => match &thresholds {
            Ok(t) => Ok(spec.with_diffusion(2.0 * t.d_upper)),
            Err(EigenError::NoSignChange { sign: "positive" }) => Ok(spec.clone()),
            Err(e) => Err(e.to_string()),
        },
        CriteriaKind::LargeHabitat | CriteriaKind::SmallHabitat => match h_star_at(spec.diffusion) {
            Ok(HStar::Finite(h)) => {
                let factor = if kind == CriteriaKind::LargeHabitat { 1.2 } else { 0.5 };
                let h0 = factor * h;
                Ok(spec.with_h0(h0).with_u0(spec.u0.rescaled_support(spec.h0, h0)))
            }
            Ok(HStar::InfiniteWithinBracket(top)) => Err(format!("h* exceeds {top}")),
            Err(e) => Err(e.to_string()),
        },
    };
    let tuned = match tuned {
        Ok(s) => s,
        Err(note) => {
            report.note = Some(note);
            return report;
        }
    };
    report.applicable = true;
    report.d = tuned.diffusion;
    report.h0 = tuned.h0;
    let expected: [Option<Verdict>; 3] = match kind {
        CriteriaKind::SlowDiffusion | CriteriaKind::LargeHabitat => [Some(Verdict::Spreading); 3],
        CriteriaKind::FastDiffusion | CriteriaKind::SmallHabitat => {
            [Some(Verdict::Vanishing), None, Some(Verdict::Spreading)]
        }
    };
    let mut prober = match Prober::new(&tuned, &opts.search) {
        Ok(p) => p,
        Err(e) => {
            report.applicable = false;
            report.note = Some(e.to_string());
            return report;
        }
    };
    report.h_star = prober.classifier.h_star.value();
    for (amplitude, expected) in opts.amplitudes.iter().zip(expected) {
        let run_spec = tuned.with_u0(tuned.u0.scaled(*amplitude));
        let (verdict, error) = match prober.verdict(&run_spec) {
            Ok(v) => (Some(v), None),
            Err(e) => (None, Some(e.to_string())),
        };
        report.runs.push(CriteriaRun {
            amplitude: *amplitude,
            expected,
            verdict,
            error,
        });
    }
    report
}
