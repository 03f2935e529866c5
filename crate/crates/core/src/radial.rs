//! Radial grids, the N-dimensional radial Laplacian, semi-implicit
//! reaction-diffusion stepping and fixed-domain periodic attractors.

use serde::Serialize;
use thiserror::Error;

use crate::coeff::CoefficientField;

/// Pivot magnitude below which a tridiagonal solve is declared singular.
pub const PIVOT_TOL: f64 = 1e-14;

/// Sup-norm below which a periodic attractor is the zero solution.
pub const VANISH_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("time step {dt} exceeds the positivity limit {limit}")]
    StepSizeTooLarge { dt: f64, limit: f64 },
    #[error("tridiagonal pivot {pivot:e} at row {row} is singular")]
    SolverSingular { row: usize, pivot: f64 },
    #[error("non-finite value produced at t = {t}")]
    NonFinite { t: f64 },
    #[error("no convergence after {periods} periods (residual {residual:e})")]
    NoConvergence { periods: usize, residual: f64 },
    #[error("successive domains still differ by {difference:e} at R = {radius}")]
    DomainNotLargeEnough { radius: f64, difference: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

/// Uniform grid `r_j = j * dr`, `j = 0..=n`, on `[0, radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialGrid {
    pub n: usize,
    pub radius: f64,
    pub dim: usize,
}

impl RadialGrid {
    pub fn new(n: usize, radius: f64, dim: usize) -> Self {
        assert!(n >= 2, "grid needs at least two intervals");
        assert!(radius > 0.0, "grid radius must be positive");
        Self { n, radius, dim }
    }

    /// The front-fixed unit interval `xi in [0, 1]`.
    pub fn unit(n: usize, dim: usize) -> Self {
        Self::new(n, 1.0, dim)
    }

    pub fn spacing(&self) -> f64 {
        self.radius / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n {
            self.radius
        } else {
            j as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n + 1).map(|j| self.node(j))
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stencil weights `(lower, diag, upper)` of the discrete Laplacian at
    /// node `j < n`. Node 0 uses the symmetry limit `N u_rr(0)` with a
    /// reflected ghost node.
    pub fn stencil(&self, j: usize) -> (f64, f64, f64) {
        let inv = 1.0 / (self.spacing() * self.spacing());
        if j == 0 {
            let w = 2.0 * self.dim as f64 * inv;
            return (0.0, -w, w);
        }
        let drift = (self.dim as f64 - 1.0) / (2.0 * j as f64) * inv;
        (inv - drift, -2.0 * inv, inv + drift)
    }
}

/// Samples of a radial function at grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldOnGrid {
    pub values: Vec<f64>,
    pub t: f64,
}

impl FieldOnGrid {
    pub fn new(values: Vec<f64>, t: f64) -> Self {
        Self { values, t }
    }

    pub fn from_fn(grid: &RadialGrid, t: f64, f: impl Fn(f64) -> f64) -> Self {
        Self::new(grid.nodes().map(f).collect(), t)
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Piecewise-linear interpolation at radius `r`; zero beyond the grid.
    pub fn interpolate(&self, grid: &RadialGrid, r: f64) -> f64 {
        interpolate(&self.values, grid.radius, r)
    }
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Linear interpolation of uniform samples over `[0, extent]`, zero outside.
pub fn interpolate(values: &[f64], extent: f64, r: f64) -> f64 {
    let n = values.len() - 1;
    if r < 0.0 || r > extent {
        return 0.0;
    }
    let s = r / extent * n as f64;
    let k = (s.floor() as usize).min(n - 1);
    let w = s - k as f64;
    values[k] + w * (values[k + 1] - values[k])
}

/// Discrete `u_rr + (N-1)/r u_r` at nodes `0..n`; the boundary entry is 0.
pub fn radial_laplacian(grid: &RadialGrid, u: &FieldOnGrid) -> FieldOnGrid {
    let v = &u.values;
    let mut out = vec![0.0; v.len()];
    for (j, slot) in out.iter_mut().enumerate().take(grid.n) {
        let (lo, mid, up) = grid.stencil(j);
        let left = if j == 0 { 0.0 } else { lo * v[j - 1] };
        *slot = left + mid * v[j] + up * v[j + 1];
    }
    FieldOnGrid::new(out, u.t)
}

/// Tridiagonal system with `lower[0]` and `upper[m-1]` ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Forward-eliminated form of a [`Tridiagonal`] ready for repeated solves.
#[derive(Debug, Clone)]
pub struct FactoredTridiagonal {
    lower: Vec<f64>,
    upper_scaled: Vec<f64>,
    pivots: Vec<f64>,
}

impl Tridiagonal {
    pub fn factor(&self) -> Result<FactoredTridiagonal, RadialError> {
        let m = self.diag.len();
        let mut pivots = vec![0.0; m];
        let mut upper_scaled = vec![0.0; m];
        for i in 0..m {
            let pivot = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.lower[i] * upper_scaled[i - 1]
            };
            if pivot.abs() < PIVOT_TOL || !pivot.is_finite() {
                return Err(RadialError::SolverSingular { row: i, pivot });
            }
            pivots[i] = pivot;
            upper_scaled[i] = if i + 1 < m { self.upper[i] / pivot } else { 0.0 };
        }
        Ok(FactoredTridiagonal {
            lower: self.lower.clone(),
            upper_scaled,
            pivots,
        })
    }

    pub fn solve(&self, rhs: &mut [f64]) -> Result<(), RadialError> {
        self.factor()?.solve_in_place(rhs);
        Ok(())
    }
}

impl FactoredTridiagonal {
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let m = self.pivots.len();
        rhs[0] /= self.pivots[0];
        for i in 1..m {
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / self.pivots[i];
        }
        for i in (0..m - 1).rev() {
            rhs[i] -= self.upper_scaled[i] * rhs[i + 1];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RightBoundary {
    /// `u(R) = value`.
    Dirichlet(f64),
    /// `u_r(R) = 0` by ghost reflection.
    Neumann,
}

/// Factored `I - kappa * L` for the radial Laplacian `L` on a grid.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    factored: FactoredTridiagonal,
    boundary: RightBoundary,
    /// Coupling of the last unknown to a Dirichlet boundary value.
    boundary_coupling: f64,
    n: usize,
}

impl ImplicitDiffusion {
    pub fn new(grid: &RadialGrid, kappa: f64, boundary: RightBoundary) -> Result<Self, RadialError> {
        let n = grid.n;
        let m = match boundary {
            RightBoundary::Dirichlet(_) => n,
            RightBoundary::Neumann => n + 1,
        };
        let mut sys = Tridiagonal {
            lower: vec![0.0; m],
            diag: vec![0.0; m],
            upper: vec![0.0; m],
        };
        for j in 0..n {
            let (lo, mid, up) = grid.stencil(j);
            sys.lower[j] = -kappa * lo;
            sys.diag[j] = 1.0 - kappa * mid;
            sys.upper[j] = -kappa * up;
        }
        let boundary_coupling = kappa * grid.stencil(n - 1).2;
        if let RightBoundary::Neumann = boundary {
            let inv = 1.0 / (grid.spacing() * grid.spacing());
            sys.lower[n] = -kappa * 2.0 * inv;
            sys.diag[n] = 1.0 + kappa * 2.0 * inv;
        }
        Ok(Self {
            factored: sys.factor()?,
            boundary,
            boundary_coupling,
            n,
        })
    }

    /// Solve in place on a full-length nodal vector; the Dirichlet node is
    /// overwritten with the boundary value.
    pub fn apply(&self, values: &mut [f64]) {
        match self.boundary {
            RightBoundary::Dirichlet(g) => {
                values[self.n - 1] += self.boundary_coupling * g;
                self.factored.solve_in_place(&mut values[..self.n]);
                values[self.n] = g;
            }
            RightBoundary::Neumann => self.factored.solve_in_place(values),
        }
    }
}

/// Clamp round-off negatives in `(-1e-12, 0)` to zero.
pub fn clip_negatives(values: &mut [f64]) {
    for v in values {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    }
}

/// Largest admissible step for the explicit logistic reaction.
pub fn reaction_step_limit(field: &CoefficientField) -> f64 {
    let a2 = field.max_alpha_upper();
    if a2 > 0.0 {
        1.0 / a2
    } else {
        f64::INFINITY
    }
}

/// Repeated semi-implicit steps of `w_t = d Lap w + w(alpha - gamma - beta w)`
/// on a fixed ball with a fixed step size.
#[derive(Debug, Clone)]
pub struct ReactionDiffusionStepper<'a> {
    grid: RadialGrid,
    field: &'a CoefficientField,
    dt: f64,
    diffusion: ImplicitDiffusion,
    growth: Vec<f64>,
    beta: Vec<f64>,
}

impl<'a> ReactionDiffusionStepper<'a> {
    pub fn new(
        grid: RadialGrid,
        field: &'a CoefficientField,
        d: f64,
        dt: f64,
        boundary: RightBoundary,
    ) -> Result<Self, RadialError> {
        let limit = reaction_step_limit(field);
        if !(dt > 0.0) || dt >= limit {
            return Err(RadialError::StepSizeTooLarge { dt, limit });
        }
        let len = grid.len();
        Ok(Self {
            grid,
            field,
            dt,
            diffusion: ImplicitDiffusion::new(&grid, dt * d, boundary)?,
            growth: vec![0.0; len],
            beta: vec![0.0; len],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advance `values` from time `t` to `t + dt`.
    pub fn step(&mut self, values: &mut [f64], t: f64) -> Result<(), RadialError> {
        let f = self.field;
        if f.growth_depends_on_r() {
            for (j, r) in self.grid.nodes().enumerate() {
                self.growth[j] = f.growth(t, r);
            }
        } else {
            self.growth.fill(f.growth(t, 0.0));
        }
        f.beta.sample_row(t, self.grid.nodes(), &mut self.beta);
        for ((w, g), b) in values.iter_mut().zip(&self.growth).zip(&self.beta) {
            *w += self.dt * *w * (g - b * *w);
        }
        self.diffusion.apply(values);
        clip_negatives(values);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RadialError::NonFinite { t: t + self.dt });
        }
        Ok(())
    }
}

/// One semi-implicit step with Dirichlet data at `r = R`.
pub fn step_reaction_diffusion(
    grid: &RadialGrid,
    u: &FieldOnGrid,
    field: &CoefficientField,
    d: f64,
    dt: f64,
) -> Result<FieldOnGrid, RadialError> {
    let mut stepper =
        ReactionDiffusionStepper::new(*grid, field, d, dt, RightBoundary::Dirichlet(0.0))?;
    let mut values = u.values.clone();
    stepper.step(&mut values, u.t)?;
    Ok(FieldOnGrid::new(values, u.t + dt))
}

/// Settings for [`periodic_attractor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorOptions {
    pub tol: f64,
    pub max_periods: usize,
    /// Largest time step; the actual step divides the period evenly.
    pub dt: f64,
    /// Phase samples recorded per period.
    pub phases: usize,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_periods: 2000,
            dt: 1e-2,
            phases: 32,
        }
    }
}

impl AttractorOptions {
    /// Steps per period, a multiple of `phases`.
    pub fn steps_per_period(&self, period: f64, limit: f64) -> usize {
        let dt = self.dt.min(0.5 * limit);
        let per_phase = (period / (dt * self.phases as f64)).ceil().max(1.0) as usize;
        per_phase * self.phases
    }
}

/// A T-periodic solution sampled at equally spaced phases of one period,
/// starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub grid: RadialGrid,
    pub phases: Vec<FieldOnGrid>,
    pub residual: f64,
    pub periods: usize,
}

impl PeriodicOrbit {
    pub fn at_phase_zero(&self) -> &FieldOnGrid {
        &self.phases[0]
    }

    pub fn sup(&self) -> f64 {
        self.phases.iter().map(FieldOnGrid::sup).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Attractor {
    Zero { periods: usize },
    Periodic(PeriodicOrbit),
}

impl Attractor {
    pub fn orbit(&self) -> Option<&PeriodicOrbit> {
        match self {
            Attractor::Periodic(o) => Some(o),
            Attractor::Zero { .. } => None,
        }
    }
}

/// Evolve the fixed-ball logistic problem period by period until the period
/// map stops moving or the solution decays to zero.
pub fn periodic_attractor(
    grid: &RadialGrid,
    field: &CoefficientField,
    d: f64,
    opts: &AttractorOptions,
    u_init: &FieldOnGrid,
) -> Result<Attractor, RadialError> {
    if u_init.values.len() != grid.len() {
        return Err(RadialError::InvalidInput("initial data does not match the grid"));
    }
    if u_init.values.iter().any(|&v| v < 0.0) || u_init.sup() == 0.0 {
        return Err(RadialError::InvalidInput("initial data must be nonnegative and nonzero"));
    }
    let period = field.period;
    let steps = opts.steps_per_period(period, reaction_step_limit(field));
    let dt = period / steps as f64;
    let per_phase = steps / opts.phases;
    let mut stepper = ReactionDiffusionStepper::new(*grid, field, d, dt, RightBoundary::Dirichlet(0.0))?;

    let mut u = u_init.values.clone();
    u[grid.n] = 0.0;
    let mut residual = f64::INFINITY;
    for k in 1..=opts.max_periods {
        let start = u.clone();
        let mut phases = Vec::with_capacity(opts.phases);
        for s in 0..steps {
            if s % per_phase == 0 {
                phases.push(FieldOnGrid::new(u.clone(), s as f64 * dt));
            }
            stepper.step(&mut u, s as f64 * dt)?;
        }
        let sup = sup_norm(&u);
        if sup < VANISH_THRESHOLD {
            return Ok(Attractor::Zero { periods: k });
        }
        residual = sup_distance(&u, &start);
        if residual < opts.tol * (1.0 + sup) {
            return Ok(Attractor::Periodic(PeriodicOrbit {
                grid: *grid,
                phases,
                residual,
                periods: k,
            }));
        }
    }
    Err(RadialError::NoConvergence {
        periods: opts.max_periods,
        residual,
    })
}

/// Settings for [`entire_space_periodic`].
#[derive(Debug, Clone, PartialEq)]
pub struct EntireSpaceOptions {
    /// Increasing ball radii; the first one is the comparison core.
    pub radii: Vec<f64>,
    /// Grid spacing shared by all balls.
    pub dr: f64,
    pub dim: usize,
    pub attractor: AttractorOptions,
}

impl Default for EntireSpaceOptions {
    fn default() -> Self {
        Self {
            radii: vec![10.0, 20.0, 40.0, 80.0],
            dr: 0.05,
            dim: 2,
            attractor: AttractorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EntireSpace {
    Zero,
    Periodic {
        orbit: PeriodicOrbit,
        /// Sup distance on the core between the last two balls.
        difference: f64,
    },
}

/// Approximate the entire-space positive periodic solution by attractors on
/// growing balls, stopping once two successive balls agree on the core.
pub fn entire_space_periodic(
    field: &CoefficientField,
    d: f64,
    tol: f64,
    opts: &EntireSpaceOptions,
) -> Result<EntireSpace, RadialError> {
    if opts.radii.is_empty() || opts.radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(RadialError::InvalidInput("radii must be nonempty and increasing"));
    }
    let core = opts.radii[0];
    let core_nodes = (core / opts.dr).round() as usize;
    let ceiling = field.density_bound(0.0).max(1e-3);
    let mut previous: Option<PeriodicOrbit> = None;
    let mut difference = f64::INFINITY;
    let mut all_zero = true;
    let mut last_radius = core;
    for &radius in &opts.radii {
        last_radius = radius;
        let n = (radius / opts.dr).round() as usize;
        let grid = RadialGrid::new(n, radius, opts.dim);
        let init = FieldOnGrid::from_fn(&grid, 0.0, |r| ceiling * (1.0 - (r / radius).powi(2)));
        let orbit = match periodic_attractor(&grid, field, d, &opts.attractor, &init)? {
            Attractor::Zero { .. } => {
                previous = None;
                continue;
            }
            Attractor::Periodic(orbit) => orbit,
        };
        all_zero = false;
        if let Some(prev) = &previous {
            difference = core_difference(prev, &orbit, core_nodes);
            if difference < tol {
                return Ok(EntireSpace::Periodic { orbit, difference });
            }
        }
        previous = Some(orbit);
    }
    if all_zero {
        return Ok(EntireSpace::Zero);
    }
    Err(RadialError::DomainNotLargeEnough {
        radius: last_radius,
        difference,
    })
}

fn core_difference(a: &PeriodicOrbit, b: &PeriodicOrbit, core_nodes: usize) -> f64 {
    a.phases
        .iter()
        .zip(&b.phases)
        .map(|(x, y)| sup_distance(&x.values[..=core_nodes], &y.values[..=core_nodes]))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_constant_vanishes() {
        let grid = RadialGrid::new(40, 2.0, 3);
        let u = FieldOnGrid::from_fn(&grid, 0.0, |_| 3.7);
        let lap = radial_laplacian(&grid, &u);
        assert!(lap.values.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn laplacian_of_square() {
        // u = r^2: u_rr + (N-1)/r u_r = 2N, and the central stencils are exact
        for (dim, expected) in [(2usize, 4.0), (3, 6.0)] {
            let grid = RadialGrid::new(50, 1.5, dim);
            let u = FieldOnGrid::from_fn(&grid, 0.0, |r| r * r);
            let lap = radial_laplacian(&grid, &u);
            for v in &lap.values[..grid.n] {
                assert!((v - expected).abs() < 1e-9, "dim {dim}: {v}");
            }
        }
    }

    #[test]
    fn tridiagonal_matches_dense_solution() {
        let sys = Tridiagonal {
            lower: vec![0.0, -1.0, -1.0, -1.0],
            diag: vec![4.0, 4.0, 4.0, 4.0],
            upper: vec![-1.0, -1.0, -1.0, 0.0],
        };
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut rhs: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = sys.diag[i] * x[i];
                if i > 0 {
                    s += sys.lower[i] * x[i - 1];
                }
                if i < 3 {
                    s += sys.upper[i] * x[i + 1];
                }
                s
            })
            .collect();
        sys.solve(&mut rhs).unwrap();
        for (a, b) in rhs.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_pivot_is_reported() {
        let sys = Tridiagonal {
            lower: vec![0.0, 1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0, 0.0],
        };
        assert!(matches!(
            sys.factor(),
            Err(RadialError::SolverSingular { row: 1, .. })
        ));
    }

    #[test]
    fn zero_stays_zero() {
        let field = CoefficientField::constant(1.0, 0.0, 1.0, 1.0);
        let grid = RadialGrid::new(32, 5.0, 2);
        let u = FieldOnGrid::new(vec![0.0; 33], 0.0);
        let next = step_reaction_diffusion(&grid, &u, &field, 1.0, 0.1).unwrap();
        assert!(next.values.iter().all(|&v| v == 0.0));
        assert_eq!(next.t, 0.1);
    }

    #[test]
    fn positivity_limit_enforced() {
        let field = CoefficientField::constant(4.0, 0.0, 1.0, 1.0);
        let grid = RadialGrid::new(32, 5.0, 2);
        let u = FieldOnGrid::new(vec![0.0; 33], 0.0);
        assert!(matches!(
            step_reaction_diffusion(&grid, &u, &field, 1.0, 0.3),
            Err(RadialError::StepSizeTooLarge { .. })
        ));
    }

    #[test]
    fn flat_state_with_neumann_matches_scalar_logistic() {
        let (a, b, dt) = (1.3, 0.7, 0.05);
        let field = CoefficientField::constant(a, 0.0, b, 1.0);
        let grid = RadialGrid::new(64, 3.0, 2);
        let mut stepper =
            ReactionDiffusionStepper::new(grid, &field, 1.0, dt, RightBoundary::Neumann).unwrap();
        let mut values = vec![0.2; grid.len()];
        let mut scalar: f64 = 0.2;
        for s in 0..200 {
            stepper.step(&mut values, s as f64 * dt).unwrap();
            scalar += dt * scalar * (a - b * scalar);
            for v in &values {
                assert!((v - scalar).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn logistic_long_run_reaches_carrying_capacity() {
        let field = CoefficientField::constant(1.0, 0.0, 1.0, 1.0);
        let grid = RadialGrid::new(200, 10.0, 2);
        let mut u = FieldOnGrid::from_fn(&grid, 0.0, |r| 0.5 * (1.0 - (r / 10.0).powi(2)));
        for _ in 0..5000 {
            u = step_reaction_diffusion(&grid, &u, &field, 1.0, 0.01).unwrap();
        }
        let mid = u.values[100];
        assert!((mid - 1.0).abs() < 0.02, "midpoint {mid}");
    }

    #[test]
    fn interpolation_is_linear_between_nodes() {
        let vals = [0.0, 1.0, 4.0];
        assert_eq!(interpolate(&vals, 2.0, 1.5), 2.5);
        assert_eq!(interpolate(&vals, 2.0, 2.0), 4.0);
        assert_eq!(interpolate(&vals, 2.0, 2.5), 0.0);
    }
}
