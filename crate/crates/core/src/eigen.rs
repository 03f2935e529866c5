//! Principal eigenvalue of the T-periodic parabolic Dirichlet problem on a
//! ball, computed from the dominant Floquet multiplier of the period map,
//! and the radius and diffusion thresholds derived from its sign.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::coeff::{Coefficient, CoefficientField};
use crate::radial::{
    sup_distance, sup_norm, FieldOnGrid, ImplicitDiffusion, RadialError, RadialGrid, RightBoundary,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error("power iteration did not converge in {iterations} periods (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("iterate lost positivity (min {min:e})")]
    NonPositiveIterate { min: f64 },
    #[error("lambda1 at the lower radius {r_lo} is already {lambda1} <= 0")]
    BracketInvalid { r_lo: f64, lambda1: f64 },
    #[error("lambda1 keeps one sign ({sign}) across the diffusion scan")]
    NoSignChange { sign: &'static str },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// The potential `alpha - gamma` (plus optional extra terms and a constant
/// shift) appearing in the periodic eigenvalue problem.
#[derive(Debug, Clone)]
pub struct Potential {
    terms: Vec<(f64, Coefficient)>,
    shift: f64,
}

impl Potential {
    pub fn growth(field: &CoefficientField) -> Self {
        Self {
            terms: vec![(1.0, field.alpha.clone()), (-1.0, field.gamma.clone())],
            shift: 0.0,
        }
    }

    pub fn from_coefficient(c: Coefficient) -> Self {
        Self {
            terms: vec![(1.0, c)],
            shift: 0.0,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            shift: value,
        }
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            terms: self.terms.clone(),
            shift: self.shift + c,
        }
    }

    /// `self + weight * c`.
    pub fn plus(&self, weight: f64, c: Coefficient) -> Self {
        let mut terms = self.terms.clone();
        terms.push((weight, c));
        Self {
            terms,
            shift: self.shift,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        self.terms
            .iter()
            .fold(self.shift, |acc, (w, c)| acc + w * c.eval(t, r))
    }

    pub fn depends_on_r(&self) -> bool {
        self.terms.iter().any(|(_, c)| c.depends_on_r())
    }

    pub fn depends_on_t(&self) -> bool {
        self.terms.iter().any(|(_, c)| c.depends_on_t())
    }

    /// `max_r (1/T) int_0^T k(t, r) dt` over `samples` radii in `[0, R]`.
    pub fn max_time_mean(&self, period: f64, radius: f64, samples: usize) -> f64 {
        let nt = 256;
        (0..samples)
            .map(|j| {
                let r = radius * j as f64 / (samples - 1) as f64;
                (0..nt)
                    .map(|k| self.eval(period * k as f64 / nt as f64, r))
                    .sum::<f64>()
                    / nt as f64
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl From<&CoefficientField> for Potential {
    fn from(field: &CoefficientField) -> Self {
        Self::growth(field)
    }
}

/// Discretization and convergence settings for eigen solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenOptions {
    pub n: usize,
    pub dim: usize,
    /// Largest substep; the substep count is `max(min_substeps, T / dt_max)`.
    pub dt_max: f64,
    pub min_substeps: usize,
    pub phases: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            n: 512,
            dim: 2,
            dt_max: 1e-4,
            min_substeps: 256,
            phases: 32,
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

impl EigenOptions {
    pub fn with_dim(self, dim: usize) -> Self {
        Self { dim, ..self }
    }

    /// Substeps per period, rounded up to a multiple of the phase count.
    pub fn substeps(&self, period: f64) -> usize {
        let raw = ((period / self.dt_max).ceil() as usize).max(self.min_substeps);
        raw.div_ceil(self.phases) * self.phases
    }
}

/// Monodromy of `psi_t = d Lap psi + k(t, r) psi` on `B_R` with Dirichlet
/// data, discretized by an exact exponential factor for the potential and
/// implicit diffusion.
pub struct PeriodMap {
    grid: RadialGrid,
    period: f64,
    substeps: usize,
    diffusion: ImplicitDiffusion,
    potential: Potential,
    /// `exp(dt * k)` per substep and node, when it fits in memory.
    factors: Option<Arc<Vec<f64>>>,
    /// Constant-in-time factors.
    static_factors: Option<Vec<f64>>,
}

const FACTOR_CACHE_LIMIT: usize = 1 << 22;

impl PeriodMap {
    pub fn new(
        grid: RadialGrid,
        d: f64,
        potential: Potential,
        period: f64,
        substeps: usize,
    ) -> Result<Self, EigenError> {
        if !(d > 0.0) || !(period > 0.0) || substeps == 0 {
            return Err(EigenError::InvalidInput("need d > 0, T > 0 and substeps > 0"));
        }
        let dt = period / substeps as f64;
        let diffusion = ImplicitDiffusion::new(&grid, dt * d, RightBoundary::Dirichlet(0.0))?;
        let len = grid.len();
        let row = |t: f64| -> Vec<f64> {
            if potential.depends_on_r() {
                grid.nodes().map(|r| (dt * potential.eval(t, r)).exp()).collect()
            } else {
                vec![(dt * potential.eval(t, 0.0)).exp(); len]
            }
        };
        let (factors, static_factors) = if !potential.depends_on_t() {
            (None, Some(row(0.0)))
        } else if substeps * len <= FACTOR_CACHE_LIMIT {
            let mut all = Vec::with_capacity(substeps * len);
            for s in 0..substeps {
                all.extend(row(s as f64 * dt));
            }
            (Some(Arc::new(all)), None)
        } else {
            (None, None)
        };
        Ok(Self {
            grid,
            period,
            substeps,
            diffusion,
            potential,
            factors,
            static_factors,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    fn dt(&self) -> f64 {
        self.period / self.substeps as f64
    }

    fn apply_factors(&self, s: usize, values: &mut [f64]) {
        let len = values.len();
        if let Some(f) = &self.static_factors {
            values.iter_mut().zip(f).for_each(|(v, f)| *v *= f);
        } else if let Some(all) = &self.factors {
            let f = &all[s * len..(s + 1) * len];
            values.iter_mut().zip(f).for_each(|(v, f)| *v *= f);
        } else {
            let t = s as f64 * self.dt();
            let dt = self.dt();
            for (j, v) in values.iter_mut().enumerate() {
                *v *= (dt * self.potential.eval(t, self.grid.node(j))).exp();
            }
        }
    }

    /// Advance one period in place, renormalizing when the magnitude drifts
    /// far from 1. Returns the natural log of the accumulated scale, and
    /// optionally records `(values, log_scale)` at `every` substeps.
    fn advance(
        &self,
        values: &mut [f64],
        mut record: Option<(usize, &mut Vec<(Vec<f64>, f64)>)>,
    ) -> f64 {
        let mut log_scale = 0.0;
        for s in 0..self.substeps {
            if let Some((every, out)) = record.as_mut() {
                if s % *every == 0 {
                    out.push((values.to_vec(), log_scale));
                }
            }
            self.apply_factors(s, values);
            self.diffusion.apply(values);
            let sup = sup_norm(values);
            if sup > 1e100 || (sup < 1e-100 && sup > 0.0) {
                values.iter_mut().for_each(|v| *v /= sup);
                log_scale += sup.ln();
            }
        }
        log_scale
    }

    /// Apply the period map, returning the image (unnormalized).
    pub fn apply(&self, psi: &FieldOnGrid) -> FieldOnGrid {
        let mut values = psi.values.clone();
        let log_scale = self.advance(&mut values, None);
        let factor = log_scale.exp();
        values.iter_mut().for_each(|v| *v *= factor);
        FieldOnGrid::new(values, psi.t + self.period)
    }
}

/// One application of the period map of the linearized problem.
pub fn period_map(
    psi: &FieldOnGrid,
    d: f64,
    potential: &Potential,
    radius: f64,
    period: f64,
    substeps: usize,
    dim: usize,
) -> Result<FieldOnGrid, EigenError> {
    let grid = RadialGrid::new(psi.values.len() - 1, radius, dim);
    Ok(PeriodMap::new(grid, d, potential.clone(), period, substeps)?.apply(psi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda1: f64,
    /// Floquet multiplier `exp(-lambda1 T)`; may over/underflow, see `log_rho`.
    pub rho: f64,
    pub log_rho: f64,
    /// Eigenfunction at equally spaced phases, sup over all phases equal to 1.
    pub phi: Vec<FieldOnGrid>,
    pub grid: RadialGrid,
    pub iterations: usize,
    /// `|P psi - rho psi| / rho` for the final normalized iterate.
    pub residual: f64,
}

/// Positive power iteration on the period map.
pub fn principal_eigenvalue(
    d: f64,
    potential: &Potential,
    radius: f64,
    period: f64,
    opts: &EigenOptions,
) -> Result<EigenResult, EigenError> {
    if !(radius > 0.0) {
        return Err(EigenError::InvalidInput("radius must be positive"));
    }
    let grid = RadialGrid::new(opts.n, radius, opts.dim);
    let map = PeriodMap::new(grid, d, potential.clone(), period, opts.substeps(period))?;
    let mut psi: Vec<f64> = grid
        .nodes()
        .map(|r| (std::f64::consts::FRAC_PI_2 * r / radius).cos().max(0.0))
        .collect();
    psi[grid.n] = 0.0;

    let every = map.substeps() / opts.phases;
    let mut prev_log_rho = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mut image = psi.clone();
        let mut phases = Vec::new();
        let log_scale = map.advance(&mut image, Some((every, &mut phases)));
        let min = image.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = sup_norm(&image);
        if !(sup > 0.0) || min < -1e-10 * sup {
            return Err(EigenError::NonPositiveIterate { min: min / sup });
        }
        let log_rho = log_scale + sup.ln();
        image.iter_mut().for_each(|v| *v = (*v / sup).max(0.0));
        residual = sup_distance(&image, &psi);
        let rho_change = (log_rho - prev_log_rho).abs();
        psi = image;
        // |rho_k - rho_{k-1}| <= tol rho_k, expressed on logs
        if rho_change <= opts.tol && residual <= opts.tol {
            let phi = normalize_phases(phases, period);
            return Ok(EigenResult {
                lambda1: -log_rho / period,
                rho: log_rho.exp(),
                log_rho,
                phi,
                grid,
                iterations: it,
                residual,
            });
        }
        prev_log_rho = log_rho;
    }
    Err(EigenError::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

fn normalize_phases(phases: Vec<(Vec<f64>, f64)>, period: f64) -> Vec<FieldOnGrid> {
    let top = phases
        .iter()
        .map(|(v, s)| s + sup_norm(v).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let n = phases.len();
    phases
        .into_iter()
        .enumerate()
        .map(|(k, (v, s))| {
            let factor = (s - top).exp();
            FieldOnGrid::new(
                v.into_iter().map(|x| x * factor).collect(),
                period * k as f64 / n as f64,
            )
        })
        .collect()
}

/// Result of a threshold-radius search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HStar {
    Finite(f64),
    /// `lambda1 > 0` up to this radius.
    InfiniteWithinBracket(f64),
}

impl HStar {
    pub fn value(&self) -> Option<f64> {
        match self {
            HStar::Finite(h) => Some(*h),
            HStar::InfiniteWithinBracket(_) => None,
        }
    }
}

/// Bisection on `R` for `lambda1(d, k, R, T) = 0`, using that `lambda1`
/// strictly decreases in `R`. The upper end expands once by 4x.
pub fn h_star(
    d: f64,
    potential: &Potential,
    period: f64,
    r_lo: f64,
    r_hi: f64,
    tol: f64,
    opts: &EigenOptions,
) -> Result<HStar, EigenError> {
    if !(0.0 < r_lo && r_lo < r_hi) {
        return Err(EigenError::InvalidInput("need 0 < r_lo < r_hi"));
    }
    let lambda = |r: f64| principal_eigenvalue(d, potential, r, period, opts).map(|e| e.lambda1);
    let at_lo = lambda(r_lo)?;
    if at_lo <= 0.0 {
        return Err(EigenError::BracketInvalid {
            r_lo,
            lambda1: at_lo,
        });
    }
    let mut hi = r_hi;
    if lambda(hi)? > 0.0 {
        hi *= 4.0;
        if lambda(hi)? > 0.0 {
            return Ok(HStar::InfiniteWithinBracket(hi));
        }
    }
    let mut lo = r_lo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if lambda(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(HStar::Finite(0.5 * (lo + hi)))
}

/// Diffusion thresholds found by a geometric scan followed by bisection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DThresholds {
    /// Refined root of the first sign change of the scan.
    pub d_star: f64,
    /// Refined root of the last sign change of the scan.
    pub d_upper: f64,
    /// Scan brackets `(d_i, d_{i+1})` where the sign of `lambda1` flips.
    pub crossings: Vec<(f64, f64)>,
    pub scan: Vec<(f64, f64)>,
}

impl DThresholds {
    pub fn multiple_crossings(&self) -> bool {
        self.crossings.len() > 1
    }
}

pub const D_SCAN_POINTS: usize = 32;

pub fn d_thresholds(
    potential: &Potential,
    radius: f64,
    period: f64,
    d_lo: f64,
    d_hi: f64,
    tol: f64,
    opts: &EigenOptions,
) -> Result<DThresholds, EigenError> {
    if !(0.0 < d_lo && d_lo < d_hi) {
        return Err(EigenError::InvalidInput("need 0 < d_lo < d_hi"));
    }
    let lambda = |d: f64| principal_eigenvalue(d, potential, radius, period, opts).map(|e| e.lambda1);
    let ratio = (d_hi / d_lo).powf(1.0 / (D_SCAN_POINTS - 1) as f64);
    let mut scan = Vec::with_capacity(D_SCAN_POINTS);
    for i in 0..D_SCAN_POINTS {
        let d = if i == D_SCAN_POINTS - 1 {
            d_hi
        } else {
            d_lo * ratio.powi(i as i32)
        };
        scan.push((d, lambda(d)?));
    }
    let crossings: Vec<(f64, f64)> = scan
        .windows(2)
        .filter(|w| (w[0].1 <= 0.0) != (w[1].1 <= 0.0))
        .map(|w| (w[0].0, w[1].0))
        .collect();
    if crossings.is_empty() {
        let sign = if scan[0].1 > 0.0 { "positive" } else { "nonpositive" };
        return Err(EigenError::NoSignChange { sign });
    }
    let refine = |(mut lo, mut hi): (f64, f64)| -> Result<f64, EigenError> {
        let lo_sign = lambda(lo)? <= 0.0;
        while hi - lo > tol * lo.max(tol) {
            let mid = (lo * hi).sqrt();
            if (lambda(mid)? <= 0.0) == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    };
    let d_star = refine(crossings[0])?;
    let d_upper = if crossings.len() == 1 {
        d_star
    } else {
        refine(*crossings.last().unwrap())?
    };
    Ok(DThresholds {
        d_star,
        d_upper,
        crossings,
        scan,
    })
}
