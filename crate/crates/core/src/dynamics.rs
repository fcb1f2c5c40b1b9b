//! Time integration of the discrete and continuous master equations.
//!
//! Discrete: `dP_n/dt = mu_{n-1} P_{n-1} - mu_n P_n - gamma_n P_n + delta_{n,0} <gamma>`
//! with `<gamma> = sum_j gamma_j P_j`.
//!
//! Continuous: `d rho/dt = -d(mu rho)/dx - gamma rho + <gamma> delta(x)`, solved by
//! a first-order upwind finite-volume scheme whose first cell touches `x = 0`
//! and receives the `delta(x)` feeding term.
//!
//! Both use explicit Euler steps and conserve total probability up to
//! rounding. The default [`FeedRule::Literal`] applies the equation as
//! written: negative reset rates are local sources and a negative `<gamma>` is
//! a sink in the first cell. [`FeedRule::PairedEntries`] is the mean field of
//! the agent simulator, where every entry replaces one removal: cloning
//! sources are scaled down whenever they would outnumber removals, and the
//! first cell only ever receives `max(<gamma>, 0)`. The two agree whenever
//! `<gamma> >= 0`.
//!
//! With `mu(0) = 0` and `gamma(0) < 0`, as for the constrained kernels, mass
//! near zero grows along characteristics faster than it drifts out, so the
//! stationary density only attracts initial data that vanish at zero and never
//! feed it. Runs from generic initial data leave it under either rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityGrid, Spacing};
use crate::kernels::{Growth, KernelParams, RateKernel, Reset};
use crate::par::Exec;

const MODULE: &str = "dynamics";

/// Largest admissible probability in the last discrete state.
pub const DISCRETE_TAIL_GUARD: f64 = 1e-9;
/// Largest admissible mass fraction in the last finite-volume cell.
pub const CONTINUOUS_TAIL_GUARD: f64 = 1e-7;
/// Negative cell densities smaller than this after a step are clipped to zero.
pub const CLIP_TOL: f64 = 1e-14;
/// Stability factor applied to the explicit Euler step bounds.
pub const STABILITY_FACTOR: f64 = 0.5;

/// How the `<gamma>` feeding term and the negative-rate sources are applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedRule {
    #[default]
    Literal,
    PairedEntries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteState {
    pub probs: Vec<f64>,
    /// Income quantum.
    pub dx: f64,
    /// Time in years.
    pub t: f64,
}

impl DiscreteState {
    pub fn new(probs: Vec<f64>, dx: f64) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid(MODULE, "discrete state needs at least two levels"));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::invalid(MODULE, format!("quantum must be positive, got {dx}")));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(MODULE, "probabilities must be finite and non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(MODULE, format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscreteState { probs, dx, t: 0.0 })
    }

    /// All probability on level `n`, with levels `0..=n_max`.
    pub fn point_mass(n: usize, n_max: usize, dx: f64) -> Result<Self> {
        if n > n_max {
            return Err(Error::invalid(MODULE, "point mass outside the state range"));
        }
        let mut probs = vec![0.0; n_max + 1];
        probs[n] = 1.0;
        Self::new(probs, dx)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    /// Density on income points `n * dx`, `rho = P_n / dx`.
    pub fn to_density(&self) -> Result<DensityGrid> {
        let x = (0..self.probs.len()).map(|n| n as f64 * self.dx).collect();
        let d = self.probs.iter().map(|p| p / self.dx).collect();
        DensityGrid::sampled(x, d)
    }
}

/// Per-level rates for the discrete equation from continuous kernels:
/// `mu_n = mu(n dx) / dx`, `gamma_n = gamma(n dx)`.
pub fn discrete_rates(p: &KernelParams, dx: f64, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mu = (0..=n_max).map(|n| p.growth_unchecked(n as f64 * dx) / dx).collect();
    let gamma = (0..=n_max).map(|n| p.reset_unchecked(n as f64 * dx)).collect();
    (mu, gamma)
}

/// `STABILITY_FACTOR / max_n (mu_n + max(gamma_n, 0))`.
pub fn discrete_stability_bound(mu_n: &[f64], gamma_n: &[f64]) -> f64 {
    let worst = mu_n
        .iter()
        .zip(gamma_n)
        .map(|(m, g)| m + g.max(0.0))
        .fold(0.0, f64::max);
    if worst == 0.0 {
        f64::INFINITY
    } else {
        STABILITY_FACTOR / worst
    }
}

fn check_discrete_rates(state: &DiscreteState, mu_n: &[f64], gamma_n: &[f64], dt: f64) -> Result<()> {
    let n = state.probs.len();
    if mu_n.len() != n || gamma_n.len() != n {
        return Err(Error::invalid(MODULE, "rate vectors must match the number of levels"));
    }
    if mu_n.iter().chain(gamma_n).any(|r| !r.is_finite()) || mu_n.iter().any(|m| *m < 0.0) {
        return Err(Error::invalid(MODULE, "rates must be finite with non-negative growth"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid(MODULE, format!("time step must be positive, got {dt}")));
    }
    let bound = discrete_stability_bound(mu_n, gamma_n);
    if dt > bound {
        return Err(Error::invalid(MODULE, format!("time step {dt} exceeds stability bound {bound}")));
    }
    Ok(())
}

/// The feed deposited in the first cell and the factor applied to the
/// cloning sources.
fn reset_balance(weights: &[f64], gamma: &[f64], rule: FeedRule) -> (f64, f64) {
    let (mut plus, mut minus) = (0.0, 0.0);
    for (w, g) in weights.iter().zip(gamma) {
        if *g > 0.0 {
            plus += w * g;
        } else {
            minus -= w * g;
        }
    }
    match rule {
        FeedRule::Literal => (plus - minus, 1.0),
        FeedRule::PairedEntries if minus > plus => (0.0, plus / minus),
        FeedRule::PairedEntries => (plus - minus, 1.0),
    }
}

/// Net reset contribution `-gamma m` with the cloning part scaled.
fn reset_term(gamma: f64, m: f64, clone_scale: f64) -> f64 {
    if gamma > 0.0 {
        -gamma * m
    } else {
        -gamma * m * clone_scale
    }
}

fn discrete_euler(
    probs: &[f64],
    mu_n: &[f64],
    gamma_n: &[f64],
    dt: f64,
    rule: FeedRule,
    out: &mut Vec<f64>,
) {
    let n = probs.len();
    let (feed, clone_scale) = reset_balance(probs, gamma_n, rule);
    out.clear();
    out.extend((0..n).map(|i| {
        let inflow = if i > 0 { mu_n[i - 1] * probs[i - 1] } else { feed };
        // The top level keeps what reaches it.
        let outflow = if i + 1 < n { mu_n[i] * probs[i] } else { 0.0 };
        probs[i] + dt * (inflow - outflow + reset_term(gamma_n[i], probs[i], clone_scale))
    }));
}

fn guard_discrete(probs: &mut [f64]) -> Result<()> {
    for p in probs.iter_mut() {
        if *p < 0.0 {
            if *p > -CLIP_TOL {
                *p = 0.0;
            } else {
                return Err(Error::numerical(MODULE, format!("negative probability {p} after step")));
            }
        }
    }
    let top = *probs.last().unwrap();
    if top >= DISCRETE_TAIL_GUARD {
        return Err(Error::numerical(
            MODULE,
            format!("truncation guard tripped: P_Nmax = {top:e}; enlarge the state range"),
        ));
    }
    Ok(())
}

/// One explicit Euler step of the discrete master equation.
pub fn step_discrete(
    state: &DiscreteState,
    mu_n: &[f64],
    gamma_n: &[f64],
    dt: f64,
) -> Result<DiscreteState> {
    check_discrete_rates(state, mu_n, gamma_n, dt)?;
    let mut next = Vec::with_capacity(state.probs.len());
    discrete_euler(&state.probs, mu_n, gamma_n, dt, FeedRule::Literal, &mut next);
    guard_discrete(&mut next)?;
    Ok(DiscreteState {
        probs: next,
        dx: state.dx,
        t: state.t + dt,
    })
}

/// Something that can be stepped forward in time by a fixed `dt`.
pub trait Evolution {
    type State: Clone;

    fn dt(&self) -> f64;

    fn step(&self, state: &Self::State) -> Result<Self::State>;

    /// L1 distance between two states of this system.
    fn l1(&self, a: &Self::State, b: &Self::State) -> f64;
}

/// The discrete equation with fixed rates.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    mu_n: Vec<f64>,
    gamma_n: Vec<f64>,
    dt: f64,
    rule: FeedRule,
}

impl DiscreteSystem {
    pub fn new(mu_n: Vec<f64>, gamma_n: Vec<f64>, dt: f64) -> Result<Self> {
        let probe = DiscreteState {
            probs: vec![0.0; mu_n.len().max(2)],
            dx: 1.0,
            t: 0.0,
        };
        if mu_n.len() < 2 {
            return Err(Error::invalid(MODULE, "discrete system needs at least two levels"));
        }
        check_discrete_rates(&probe, &mu_n, &gamma_n, dt)?;
        Ok(DiscreteSystem {
            mu_n,
            gamma_n,
            dt,
            rule: FeedRule::Literal,
        })
    }

    /// Uses the largest stable step.
    pub fn with_stable_step(mu_n: Vec<f64>, gamma_n: Vec<f64>) -> Result<Self> {
        let dt = discrete_stability_bound(&mu_n, &gamma_n);
        if !dt.is_finite() {
            return Err(Error::invalid(MODULE, "all rates vanish; choose dt explicitly"));
        }
        Self::new(mu_n, gamma_n, dt)
    }

    pub fn with_feed_rule(mut self, rule: FeedRule) -> Self {
        self.rule = rule;
        self
    }
}

impl Evolution for DiscreteSystem {
    type State = DiscreteState;

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, state: &DiscreteState) -> Result<DiscreteState> {
        if state.probs.len() != self.mu_n.len() {
            return Err(Error::invalid(MODULE, "state size does not match the system"));
        }
        let mut next = Vec::with_capacity(state.probs.len());
        discrete_euler(&state.probs, &self.mu_n, &self.gamma_n, self.dt, self.rule, &mut next);
        guard_discrete(&mut next)?;
        Ok(DiscreteState {
            probs: next,
            dx: state.dx,
            t: state.t + self.dt,
        })
    }

    fn l1(&self, a: &DiscreteState, b: &DiscreteState) -> f64 {
        a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum()
    }
}

/// Finite-volume cell layout over a set of income nodes.
///
/// Node `i` is the center of cell `i`. Interior faces sit at the geometric
/// mean of neighbouring nodes on geometric grids and at the midpoint
/// otherwise; the outer faces mirror their inner neighbours, clamped at zero.
/// The last cell's outer face is closed.
///
/// The feeding term lands in the first cell, not at zero itself: with
/// `mu(0) = 0` a cell reaching down to zero cannot empty, and where
/// `gamma(0) < 0` its mass grows without bound.
#[derive(Debug, Clone)]
pub struct FiniteVolume {
    centers: Vec<f64>,
    widths: Vec<f64>,
    /// Growth rate at the right face of each cell (zero for the last).
    face_mu: Vec<f64>,
    gamma: Vec<f64>,
}

impl FiniteVolume {
    pub fn new(x: &[f64], p: &KernelParams) -> Result<Self> {
        p.validate()?;
        Self::from_rates(x, &Growth(*p), &Reset(*p))
    }

    /// Cells for arbitrary rate functions; growth must be finite and non-negative.
    pub fn from_rates(x: &[f64], mu: &impl RateKernel, gamma: &impl RateKernel) -> Result<Self> {
        let n = x.len();
        if n < 3 {
            return Err(Error::invalid(MODULE, "finite-volume grid needs at least three cells"));
        }
        if x.iter().any(|v| !v.is_finite() || *v < 0.0) || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(MODULE, "cell centers must be finite, non-negative and increasing"));
        }
        let geometric = x[0] > 0.0 && {
            let r0 = (x[1] / x[0]).ln();
            x.windows(2).all(|w| ((w[1] / w[0]).ln() - r0).abs() <= 1e-9 * r0)
        };
        let faces: Vec<f64> = x
            .windows(2)
            .map(|w| if geometric { (w[0] * w[1]).sqrt() } else { 0.5 * (w[0] + w[1]) })
            .collect();
        let lower = if geometric {
            x[0] * x[0] / faces[0]
        } else {
            (2.0 * x[0] - faces[0]).max(0.0)
        };
        let upper = if geometric {
            x[n - 1] * x[n - 1] / faces[n - 2]
        } else {
            2.0 * x[n - 1] - faces[n - 2]
        };
        let mut widths = Vec::with_capacity(n);
        widths.push(faces[0] - lower);
        for i in 1..n - 1 {
            widths.push(faces[i] - faces[i - 1]);
        }
        widths.push(upper - faces[n - 2]);
        let mut face_mu: Vec<f64> = faces.iter().map(|&f| mu.rate(f)).collect();
        face_mu.push(0.0);
        let gamma: Vec<f64> = x.iter().map(|&c| gamma.rate(c)).collect();
        if face_mu.iter().any(|m| !(m.is_finite() && *m >= 0.0)) || gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid(MODULE, "rates must be finite with non-negative growth"));
        }
        Ok(FiniteVolume {
            centers: x.to_vec(),
            widths,
            face_mu,
            gamma,
        })
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Largest stable explicit step: `STABILITY_FACTOR * min_i w_i / (mu_{i+1/2} + max(gamma_i, 0) w_i)`.
    pub fn cfl_bound(&self) -> f64 {
        let worst = (0..self.centers.len())
            .map(|i| (self.face_mu[i] + self.gamma[i].max(0.0) * self.widths[i]) / self.widths[i])
            .fold(0.0, f64::max);
        if worst == 0.0 {
            f64::INFINITY
        } else {
            STABILITY_FACTOR / worst
        }
    }

    /// Cell masses `rho_i * w_i` from a density sampled at the cell centers.
    pub fn masses_from(&self, density: &DensityGrid) -> Result<Vec<f64>> {
        if density.x() != self.centers.as_slice() {
            return Err(Error::invalid(MODULE, "density grid does not match the cell centers"));
        }
        Ok(density.density().iter().zip(&self.widths).map(|(r, w)| r * w).collect())
    }

    pub fn density_from(&self, masses: &[f64]) -> Result<DensityGrid> {
        let d = masses.iter().zip(&self.widths).map(|(m, w)| m / w).collect();
        DensityGrid::sampled(self.centers.clone(), d)
    }

    fn euler(&self, m: &[f64], dt: f64, rule: FeedRule, out: &mut Vec<f64>) {
        let n = m.len();
        let (feed, clone_scale) = reset_balance(m, &self.gamma, rule);
        out.clear();
        out.extend((0..n).map(|i| {
            let inflow = if i > 0 {
                self.face_mu[i - 1] * m[i - 1] / self.widths[i - 1]
            } else {
                feed
            };
            let outflow = self.face_mu[i] * m[i] / self.widths[i];
            m[i] + dt * (inflow - outflow + reset_term(self.gamma[i], m[i], clone_scale))
        }));
    }

    fn guard(&self, m: &mut [f64]) -> Result<()> {
        for (i, v) in m.iter_mut().enumerate() {
            if *v < 0.0 {
                if -*v / self.widths[i] < CLIP_TOL {
                    *v = 0.0;
                } else {
                    return Err(Error::numerical(
                        MODULE,
                        format!("negative density {} at x = {}", *v / self.widths[i], self.centers[i]),
                    ));
                }
            }
        }
        let total: f64 = m.iter().sum();
        let last = *m.last().unwrap();
        if last > CONTINUOUS_TAIL_GUARD * total {
            return Err(Error::numerical(
                MODULE,
                format!("truncation guard tripped: last cell holds {:e} of the mass", last / total),
            ));
        }
        Ok(())
    }
}

/// One upwind step of the continuous master equation on the density's own grid.
pub fn step_continuous(density: &DensityGrid, p: &KernelParams, dt: f64) -> Result<DensityGrid> {
    if density.spacing() == Spacing::Histogram {
        return Err(Error::invalid(MODULE, "integrators need a sampled density, not a histogram"));
    }
    let fv = FiniteVolume::new(density.x(), p)?;
    let bound = fv.cfl_bound();
    if !(dt > 0.0) || dt > bound {
        return Err(Error::invalid(MODULE, format!("time step {dt} violates the CFL bound {bound}")));
    }
    let m = fv.masses_from(density)?;
    let mut next = Vec::with_capacity(m.len());
    fv.euler(&m, dt, FeedRule::Literal, &mut next);
    fv.guard(&mut next)?;
    fv.density_from(&next)
}

/// Cell masses of a finite-volume solution at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FvState {
    pub masses: Vec<f64>,
    pub t: f64,
}

/// The continuous equation on a fixed grid with fixed kernels.
#[derive(Debug, Clone)]
pub struct ContinuousSystem {
    fv: FiniteVolume,
    dt: f64,
    rule: FeedRule,
}

impl ContinuousSystem {
    pub fn new(grid: &[f64], p: &KernelParams, dt: f64) -> Result<Self> {
        let fv = FiniteVolume::new(grid, p)?;
        let bound = fv.cfl_bound();
        if !(dt > 0.0) || dt > bound {
            return Err(Error::invalid(MODULE, format!("time step {dt} violates the CFL bound {bound}")));
        }
        Ok(ContinuousSystem {
            fv,
            dt,
            rule: FeedRule::Literal,
        })
    }

    /// Uses the largest stable step.
    pub fn with_stable_step(grid: &[f64], p: &KernelParams) -> Result<Self> {
        Self::stable_on(FiniteVolume::new(grid, p)?)
    }

    /// Arbitrary rate functions, largest stable step.
    pub fn from_rates(grid: &[f64], mu: &impl RateKernel, gamma: &impl RateKernel) -> Result<Self> {
        Self::stable_on(FiniteVolume::from_rates(grid, mu, gamma)?)
    }

    /// Shrinks the step; a larger one than the current is rejected.
    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || dt > self.fv.cfl_bound() {
            return Err(Error::invalid(MODULE, format!("time step {dt} violates the CFL bound {}", self.fv.cfl_bound())));
        }
        self.dt = dt;
        Ok(self)
    }

    fn stable_on(fv: FiniteVolume) -> Result<Self> {
        let dt = fv.cfl_bound();
        if !dt.is_finite() {
            return Err(Error::invalid(MODULE, "all rates vanish; choose dt explicitly"));
        }
        Ok(ContinuousSystem {
            fv,
            dt,
            rule: FeedRule::Literal,
        })
    }

    pub fn with_feed_rule(mut self, rule: FeedRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn cells(&self) -> &FiniteVolume {
        &self.fv
    }

    pub fn state_from(&self, density: &DensityGrid) -> Result<FvState> {
        Ok(FvState {
            masses: self.fv.masses_from(density)?,
            t: 0.0,
        })
    }

    pub fn density(&self, state: &FvState) -> Result<DensityGrid> {
        self.fv.density_from(&state.masses)
    }
}

impl Evolution for ContinuousSystem {
    type State = FvState;

    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, state: &FvState) -> Result<FvState> {
        let mut next = Vec::with_capacity(state.masses.len());
        self.fv.euler(&state.masses, self.dt, self.rule, &mut next);
        self.fv.guard(&mut next)?;
        Ok(FvState {
            masses: next,
            t: state.t + self.dt,
        })
    }

    fn l1(&self, a: &FvState, b: &FvState) -> f64 {
        a.masses.iter().zip(&b.masses).map(|(x, y)| (x - y).abs()).sum()
    }
}

/// Result of [`run_to_steady`].
#[derive(Debug, Clone)]
pub struct SteadyOutcome<S> {
    pub state: S,
    pub elapsed: f64,
    pub steps: usize,
    pub converged: bool,
    /// `||rho(t + dt) - rho(t)||_1 / dt` at the last check.
    pub l1_rate: f64,
}

/// Serializable summary of an integration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub dt: f64,
    pub steps: usize,
    pub elapsed: f64,
    pub converged: bool,
    pub l1_rate: f64,
    pub tol: f64,
}

impl<S> SteadyOutcome<S> {
    pub fn metadata(&self, dt: f64, tol: f64) -> RunMetadata {
        RunMetadata {
            dt,
            steps: self.steps,
            elapsed: self.elapsed,
            converged: self.converged,
            l1_rate: self.l1_rate,
            tol,
        }
    }
}

/// Step until the L1 change per unit time drops below `tol` or `max_time`
/// elapses. Running out of time is reported through `converged = false`.
///
/// The returned state is the last one whose successor moved less than `tol`,
/// so an already stationary input comes back unchanged with `elapsed = 0`.
pub fn run_to_steady<E: Evolution>(
    sys: &E,
    init: E::State,
    tol: f64,
    max_time: f64,
) -> Result<SteadyOutcome<E::State>> {
    run_to_steady_with(sys, init, tol, max_time, 0, |_, _| Ok(()))
}

/// As [`run_to_steady`], calling `on_snapshot(step, state)` every
/// `snapshot_every` steps (never when zero), starting with the initial state.
pub fn run_to_steady_with<E, F>(
    sys: &E,
    init: E::State,
    tol: f64,
    max_time: f64,
    snapshot_every: usize,
    mut on_snapshot: F,
) -> Result<SteadyOutcome<E::State>>
where
    E: Evolution,
    F: FnMut(usize, &E::State) -> Result<()>,
{
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::invalid(MODULE, format!("tolerance must be positive, got {tol}")));
    }
    if !(max_time >= 0.0) {
        return Err(Error::invalid(MODULE, format!("max_time must be non-negative, got {max_time}")));
    }
    let dt = sys.dt();
    let max_steps = (max_time / dt).floor() as usize;
    let mut state = init;
    let mut l1_rate = f64::INFINITY;
    for step in 0..=max_steps {
        if snapshot_every > 0 && step % snapshot_every == 0 {
            on_snapshot(step, &state)?;
        }
        let next = sys.step(&state)?;
        l1_rate = sys.l1(&state, &next) / dt;
        if l1_rate < tol {
            return Ok(SteadyOutcome {
                state,
                elapsed: step as f64 * dt,
                steps: step,
                converged: true,
                l1_rate,
            });
        }
        if step == max_steps {
            break;
        }
        state = next;
    }
    Ok(SteadyOutcome {
        state,
        elapsed: max_steps as f64 * dt,
        steps: max_steps,
        converged: false,
        l1_rate,
    })
}

/// Advance exactly `steps` steps.
pub fn advance<E: Evolution>(sys: &E, init: E::State, steps: usize) -> Result<E::State> {
    let mut state = init;
    for _ in 0..steps {
        state = sys.step(&state)?;
    }
    Ok(state)
}

/// Independent runs to steady state, one per system, on the given policy.
pub fn sweep_to_steady<E>(
    systems: &[(E, E::State)],
    tol: f64,
    max_time: f64,
    exec: Exec,
) -> Vec<Result<SteadyOutcome<E::State>>>
where
    E: Evolution + Sync,
    E::State: Send + Sync,
{
    exec.map_slice(systems, |(sys, init)| run_to_steady(sys, init.clone(), tol, max_time))
}
