//! Stochastic realizations of the growth-and-reset process.
//!
//! [`simulate_ensemble`] is an exact event-driven simulation of a fixed-size
//! population on the income lattice `n * dx`. An agent on level `n` stands
//! for the interval `[n dx, (n + 1) dx)`: it moves up one level at rate
//! `mu((n + 1) dx) / dx` and is removed at rate `max(gamma, 0)`, with `gamma`
//! evaluated at the level midpoint. Each removal is paired with one entry,
//! which clones an agent chosen in proportion to `max(-gamma, 0)` with
//! probability `min(G-/G+, 1)` and otherwise starts on level 0, where `G+`
//! and `G-` are the population totals of the positive and negative parts of
//! `gamma`.
//!
//! [`generate_panel`] produces yearly employee records for the estimators.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analytic::BetaPrimeShape;
use crate::error::{Error, Result};
use crate::estimation::{PanelDataset, PanelRecord};
use crate::kernels::{Growth, KernelParams, RateKernel, Reset};
use crate::par::Exec;
use crate::rng::{domain, mix, stream};

const MODULE: &str = "montecarlo";

/// Smallest population accepted by [`simulate_ensemble`].
pub const MIN_AGENTS: usize = 1000;
/// Default number of income quanta per mean income.
pub const QUANTA_PER_MEAN: f64 = 200.0;
/// Samples per random stream in bulk sampling.
const CHUNK: usize = 4096;
/// Events between exact rebuilds of the rate sums.
const REBUILD_EVERY: u64 = 1 << 20;

/// Prefix sums over non-negative weights with sampling by cumulative weight.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn from_weights(w: &[f64]) -> Self {
        let size = w.len().next_power_of_two().max(1);
        let mut tree = vec![0.0; size + 1];
        tree[1..=w.len()].copy_from_slice(w);
        for i in 1..=size {
            let parent = i + (i & i.wrapping_neg());
            if parent <= size {
                tree[parent] += tree[i];
            }
        }
        Fenwick { tree }
    }

    fn capacity(&self) -> usize {
        self.tree.len() - 1
    }

    fn add(&mut self, idx: usize, delta: f64) {
        let mut i = idx + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        self.tree[self.capacity()]
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: f64) -> usize {
        let mut pos = 0;
        let mut step = self.capacity();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}

/// Starting incomes of a simulated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialIncomes {
    Zero,
    Exponential { mean: f64 },
    BetaPrime { a: f64, s: f64, mean: f64 },
}

impl InitialIncomes {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        Ok(match *self {
            InitialIncomes::Zero => 0.0,
            InitialIncomes::Exponential { mean } => -mean * (1.0 - rng.random::<f64>()).ln(),
            InitialIncomes::BetaPrime { a, s, mean } => {
                beta_prime_draw(&BetaPrimeShape::new(a, s, mean)?, rng)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub agents: usize,
    pub t_end: f64,
    /// Income quantum `dx`.
    pub quantum: f64,
    /// Number of equally spaced snapshots after the initial one.
    pub snapshots: usize,
    pub initial: InitialIncomes,
    pub seed: u64,
}

impl EnsembleConfig {
    /// Quantum `mean / 200`, exponential start at the kernel mean, one final snapshot.
    pub fn new(p: &KernelParams, agents: usize, t_end: f64, seed: u64) -> Self {
        EnsembleConfig {
            agents,
            t_end,
            quantum: p.mean_income / QUANTA_PER_MEAN,
            snapshots: 1,
            initial: InitialIncomes::Exponential { mean: p.mean_income },
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.agents < MIN_AGENTS {
            return Err(Error::invalid(
                MODULE,
                format!("need at least {MIN_AGENTS} agents, got {}", self.agents),
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid(MODULE, format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.quantum > 0.0 && self.quantum.is_finite()) {
            return Err(Error::invalid(MODULE, format!("quantum must be positive, got {}", self.quantum)));
        }
        if self.snapshots == 0 {
            return Err(Error::invalid(MODULE, "at least one snapshot is required"));
        }
        Ok(())
    }
}

/// Population state: number of agents on each income level.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEnsemble {
    pub counts: Vec<u64>,
    pub dx: f64,
    pub t: f64,
    pub seed: u64,
    /// Events processed so far; the position in the event stream.
    pub events: u64,
}

impl AgentEnsemble {
    pub fn agents(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Level-midpoint incomes, ascending.
    pub fn incomes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.agents() as usize);
        for (n, &c) in self.counts.iter().enumerate() {
            out.extend(std::iter::repeat_n((n as f64 + 0.5) * self.dx, c as usize));
        }
        out
    }

    pub fn mean_income(&self) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(n, &c)| c as f64 * (n as f64 + 0.5) * self.dx)
            .sum();
        total / self.agents() as f64
    }

    /// One `income` column, ascending.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_samples_csv(path, &self.incomes())
    }
}

/// Snapshots at `t = 0` and at `t_end * i / snapshots`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleHistory {
    pub snapshots: Vec<AgentEnsemble>,
}

impl EnsembleHistory {
    pub fn last(&self) -> &AgentEnsemble {
        self.snapshots.last().expect("history always holds the initial state")
    }
}

/// Run description written next to ensemble snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub seed: u64,
    pub params: KernelParams,
    pub config: EnsembleConfig,
    pub clock: f64,
    pub events: u64,
    pub snapshot_times: Vec<f64>,
}

impl EnsembleManifest {
    pub fn new(p: &KernelParams, cfg: &EnsembleConfig, history: &EnsembleHistory) -> Self {
        EnsembleManifest {
            seed: cfg.seed,
            params: *p,
            config: cfg.clone(),
            clock: history.last().t,
            events: history.last().events,
            snapshot_times: history.snapshots.iter().map(|s| s.t).collect(),
        }
    }
}

/// Per-level rates, extended on demand.
struct LevelRates<'a, M, G> {
    mu: &'a M,
    gamma: &'a G,
    dx: f64,
    up: Vec<f64>,
    remove: Vec<f64>,
    clone: Vec<f64>,
}

impl<M: RateKernel, G: RateKernel> LevelRates<'_, M, G> {
    fn ensure(&mut self, len: usize) -> Result<()> {
        while self.up.len() < len {
            let n = self.up.len() as f64;
            let up = self.mu.rate((n + 1.0) * self.dx) / self.dx;
            let g = self.gamma.rate((n + 0.5) * self.dx);
            if !(up.is_finite() && up >= 0.0 && g.is_finite()) {
                return Err(Error::invalid(
                    MODULE,
                    format!("non-finite or negative rate at x = {}", (n + 0.5) * self.dx),
                ));
            }
            self.up.push(up);
            self.remove.push(g.max(0.0));
            self.clone.push((-g).max(0.0));
        }
        Ok(())
    }
}

struct Gillespie<'a, M, G> {
    rates: LevelRates<'a, M, G>,
    counts: Vec<u64>,
    /// Weight `counts[n] * (up[n] + remove[n])`.
    out: Fenwick,
    /// Weight `counts[n] * clone[n]`.
    clones: Fenwick,
    removal_total: f64,
}

impl<M: RateKernel, G: RateKernel> Gillespie<'_, M, G> {
    fn rebuild(&mut self) -> Result<()> {
        let cap = self.counts.len().next_power_of_two().max(2);
        self.counts.resize(cap, 0);
        self.rates.ensure(cap)?;
        let r = &self.rates;
        let out: Vec<f64> = (0..cap).map(|n| self.counts[n] as f64 * (r.up[n] + r.remove[n])).collect();
        let cl: Vec<f64> = (0..cap).map(|n| self.counts[n] as f64 * r.clone[n]).collect();
        self.out = Fenwick::from_weights(&out);
        self.clones = Fenwick::from_weights(&cl);
        self.removal_total = (0..cap).map(|n| self.counts[n] as f64 * r.remove[n]).sum();
        Ok(())
    }

    fn change(&mut self, n: usize, delta: i64) -> Result<()> {
        if n + 1 >= self.counts.len() {
            self.counts.resize(2 * (n + 1), 0);
            self.rebuild()?;
        }
        self.counts[n] = (self.counts[n] as i64 + delta) as u64;
        let d = delta as f64;
        let r = &self.rates;
        self.out.add(n, d * (r.up[n] + r.remove[n]));
        if r.clone[n] > 0.0 {
            self.clones.add(n, d * r.clone[n]);
        }
        self.removal_total += d * r.remove[n];
        Ok(())
    }

    fn clamp_find(tree: &Fenwick, target: f64, counts: &[u64]) -> usize {
        let mut n = tree.find(target).min(counts.len() - 1);
        // Rounding in the partial sums can land on an empty level.
        while counts[n] == 0 && n > 0 {
            n -= 1;
        }
        while counts[n] == 0 {
            n += 1;
        }
        n
    }

    /// One event; returns the waiting time, or `None` if nothing can happen.
    fn event(&mut self, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
        let total = self.out.total();
        if !(total > 0.0) {
            return Ok(None);
        }
        let wait = -(1.0 - rng.random::<f64>()).ln() / total;
        let n = Self::clamp_find(&self.out, rng.random::<f64>() * total, &self.counts);
        let (up, remove) = (self.rates.up[n], self.rates.remove[n]);
        if rng.random::<f64>() * (up + remove) < up {
            self.change(n, -1)?;
            self.change(n + 1, 1)?;
        } else {
            let clone_total = self.clones.total().max(0.0);
            let p_clone = if self.removal_total > 0.0 {
                (clone_total / self.removal_total).min(1.0)
            } else {
                1.0
            };
            self.change(n, -1)?;
            let target = if rng.random::<f64>() < p_clone && self.clones.total() > 0.0 {
                Self::clamp_find(&self.clones, rng.random::<f64>() * self.clones.total(), &self.counts)
            } else {
                0
            };
            self.change(target, 1)?;
        }
        Ok(Some(wait))
    }
}

fn initial_levels(cfg: &EnsembleConfig, exec: Exec) -> Result<Vec<u64>> {
    let chunks = cfg.agents.div_ceil(CHUNK);
    let drawn: Vec<Result<Vec<f64>>> = exec.map_range(chunks, |c| {
        let mut rng = stream(cfg.seed, domain::ENSEMBLE_INIT, c as u64);
        let len = CHUNK.min(cfg.agents - c * CHUNK);
        (0..len).map(|_| cfg.initial.sample(&mut rng)).collect()
    });
    let mut counts = vec![0u64; 2];
    for chunk in drawn {
        for x in chunk? {
            let n = (x / cfg.quantum).floor();
            if !(0.0..1e9).contains(&n) {
                return Err(Error::invalid(MODULE, format!("initial income {x} is off the lattice")));
            }
            let n = n as usize;
            if n >= counts.len() {
                counts.resize(n + 1, 0);
            }
            counts[n] += 1;
        }
    }
    Ok(counts)
}

/// Simulate a population under arbitrary rate functions.
pub fn simulate_rates(
    mu: &impl RateKernel,
    gamma: &impl RateKernel,
    cfg: &EnsembleConfig,
) -> Result<EnsembleHistory> {
    cfg.validate()?;
    let counts = initial_levels(cfg, Exec::default())?;
    let mut sim = Gillespie {
        rates: LevelRates {
            mu,
            gamma,
            dx: cfg.quantum,
            up: Vec::new(),
            remove: Vec::new(),
            clone: Vec::new(),
        },
        counts,
        out: Fenwick::from_weights(&[]),
        clones: Fenwick::from_weights(&[]),
        removal_total: 0.0,
    };
    sim.rebuild()?;
    let snapshot = |sim: &Gillespie<_, _>, t: f64, events: u64| {
        let mut counts = sim.counts.clone();
        while counts.len() > 1 && counts.last() == Some(&0) {
            counts.pop();
        }
        AgentEnsemble {
            counts,
            dx: cfg.quantum,
            t,
            seed: cfg.seed,
            events,
        }
    };
    let mut rng = stream(cfg.seed, domain::ENSEMBLE, 0);
    let mut snapshots = vec![snapshot(&sim, 0.0, 0)];
    let mut t = 0.0;
    let mut events = 0u64;
    let mut next = 1;
    let time_of = |i: usize| cfg.t_end * i as f64 / cfg.snapshots as f64;
    while next <= cfg.snapshots {
        match sim.event(&mut rng)? {
            Some(wait) => {
                // The state just before the event is the state at every time in [t, t + wait).
                while next <= cfg.snapshots && t + wait > time_of(next) {
                    let mut s = snapshot(&sim, time_of(next), events);
                    if next == cfg.snapshots {
                        s.t = cfg.t_end;
                    }
                    snapshots.push(s);
                    next += 1;
                }
                t += wait;
                events += 1;
                if events.is_multiple_of(REBUILD_EVERY) {
                    sim.rebuild()?;
                }
            }
            None => {
                while next <= cfg.snapshots {
                    snapshots.push(snapshot(&sim, time_of(next), events));
                    next += 1;
                }
            }
        }
    }
    Ok(EnsembleHistory { snapshots })
}

/// Simulate `agents` agents under the kernels of `p` up to `t_end` years.
pub fn simulate_ensemble(p: &KernelParams, agents: usize, t_end: f64, seed: u64) -> Result<EnsembleHistory> {
    simulate_ensemble_with(p, &EnsembleConfig::new(p, agents, t_end, seed))
}

pub fn simulate_ensemble_with(p: &KernelParams, cfg: &EnsembleConfig) -> Result<EnsembleHistory> {
    p.validate()?;
    simulate_rates(&Growth(*p), &Reset(*p), cfg)
}

/// Independent replicas; replica `r` runs with seed `mix(seed, r)`.
pub fn simulate_replicas(
    p: &KernelParams,
    cfg: &EnsembleConfig,
    replicas: usize,
    exec: Exec,
) -> Result<Vec<EnsembleHistory>> {
    exec.map_range(replicas, |r| {
        let mut c = cfg.clone();
        c.seed = mix(&[cfg.seed, domain::REPLICA, r as u64]);
        simulate_ensemble_with(p, &c)
    })
    .into_iter()
    .collect()
}

fn beta_prime_draw(shape: &BetaPrimeShape, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (a, s) = (shape.a, shape.s);
    let num = Gamma::new(a - s, 1.0).map_err(|e| Error::invalid(MODULE, e.to_string()))?;
    let den = Gamma::new(s, 1.0).map_err(|e| Error::invalid(MODULE, e.to_string()))?;
    let c = (a - s) / (s - 1.0);
    let (g1, g2): (f64, f64) = (num.sample(rng), den.sample(rng));
    Ok(shape.mean * g1 / (g2 * c))
}

/// `n` independent Beta prime draws, as a ratio of Gamma variates.
pub fn sample_beta_prime(shape: &BetaPrimeShape, n: usize, seed: u64, exec: Exec) -> Result<Vec<f64>> {
    shape.validate()?;
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<Vec<f64>>> = exec.map_range(chunks, |c| {
        let mut rng = stream(seed, domain::SAMPLES, c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        (0..len).map(|_| beta_prime_draw(shape, &mut rng)).collect()
    });
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// One `income` column.
pub fn write_samples_csv(path: &Path, samples: &[f64]) -> Result<()> {
    let mut buf = String::with_capacity(samples.len() * 20 + 8);
    buf.push_str("income\n");
    for x in samples {
        buf.push_str(&format!("{x}\n"));
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Reads a file written by [`write_samples_csv`].
pub fn read_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.iter().map(str::trim).collect::<Vec<_>>() != ["income"] {
        return Err(Error::invalid(MODULE, format!("{}: expected header `income`", path.display())));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            rec[0]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(MODULE, format!("{}: line {line}: bad income", path.display())))
        })
        .collect()
}

/// Where entrants' first incomes come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EntryDistribution {
    /// Resample the current year's incomes with weight `max(-gamma(w), 0)`.
    ResetWeighted,
    LogNormal { median: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPanelConfig {
    pub years: usize,
    pub first_year: i32,
    pub population: usize,
    /// Yearly growth coefficient `u` in `dw = u (w + g)`.
    pub growth_u: f64,
    pub growth_g: f64,
    /// Relative standard deviation of the yearly increment.
    pub noise: f64,
    /// Exit and entry kernels; `mean_income` also sets the first-year scale.
    pub kernels: KernelParams,
    pub entry: EntryDistribution,
    /// Shape `a` of the first-year Beta prime incomes, with `s = a - 2`.
    pub initial_shape: f64,
    pub seed: u64,
}

impl SyntheticPanelConfig {
    pub fn new(kernels: KernelParams, years: usize, population: usize, growth_u: f64, noise: f64, seed: u64) -> Self {
        SyntheticPanelConfig {
            years,
            first_year: 2000,
            population,
            growth_u,
            growth_g: 0.0,
            noise,
            kernels,
            entry: EntryDistribution::ResetWeighted,
            initial_shape: 5.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.years < 2 {
            return Err(Error::invalid(MODULE, format!("need at least 2 years, got {}", self.years)));
        }
        if self.population < 1 {
            return Err(Error::invalid(MODULE, "population must be at least 1"));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::invalid(MODULE, format!("noise must be non-negative, got {}", self.noise)));
        }
        if !self.growth_u.is_finite() || !(self.growth_g >= 0.0 && self.growth_g.is_finite()) {
            return Err(Error::invalid(MODULE, "growth coefficient must be finite and offset non-negative"));
        }
        if let EntryDistribution::LogNormal { median, sigma } = self.entry {
            if !(median > 0.0 && sigma >= 0.0 && median.is_finite() && sigma.is_finite()) {
                return Err(Error::invalid(MODULE, "lognormal entry needs median > 0 and sigma >= 0"));
            }
        }
        self.kernels.validate()?;
        BetaPrimeShape::constrained(self.initial_shape, self.kernels.mean_income)?;
        Ok(())
    }
}

/// Employee ids are zero-padded so that lexical and numeric order agree.
fn employee_id(n: u64) -> String {
    format!("E{n:09}")
}

enum Fate {
    Leaves,
    Stays(f64),
}

/// Yearly panel: continuing employees grow by `u (w + g) (1 + noise xi)`,
/// leave with probability `min(max(gamma(w), 0), 1)`, and are replaced by a
/// Poisson number of entrants with mean equal to the shortfall from the
/// configured population.
pub fn generate_panel(cfg: &SyntheticPanelConfig) -> Result<PanelDataset> {
    generate_panel_with(cfg, Exec::default())
}

pub fn generate_panel_with(cfg: &SyntheticPanelConfig, exec: Exec) -> Result<PanelDataset> {
    cfg.validate()?;
    let p = cfg.kernels;
    let shape = BetaPrimeShape::constrained(cfg.initial_shape, p.mean_income)?;
    let ids: Vec<u64> = (0..cfg.population as u64).collect();
    let first: Vec<Result<f64>> = exec.map_slice(&ids, |&id| {
        beta_prime_draw(&shape, &mut stream(cfg.seed, domain::PANEL_INIT, id))
    });
    let mut active: Vec<(u64, f64)> = ids.iter().copied().zip(first.into_iter().collect::<Result<Vec<_>>>()?).collect();
    let mut next_id = cfg.population as u64;
    let mut records = Vec::new();
    for y in 0..cfg.years {
        let year = cfg.first_year + y as i32;
        records.extend(active.iter().map(|&(id, income)| PanelRecord {
            employee_id: employee_id(id),
            year,
            income,
        }));
        if y + 1 == cfg.years {
            break;
        }
        let fates: Vec<Fate> = exec.map_slice(&active, |&(id, w)| {
            let mut rng = stream(cfg.seed, domain::PANEL_STEP, mix(&[id, year as u64]));
            let exit = p.reset_unchecked(w).clamp(0.0, 1.0);
            if rng.random::<f64>() < exit {
                return Fate::Leaves;
            }
            let xi: f64 = rng.sample(StandardNormal);
            let next = w + cfg.growth_u * (w + cfg.growth_g) * (1.0 + cfg.noise * xi);
            Fate::Stays(next.max(f64::MIN_POSITIVE))
        });
        let mut rng = stream(cfg.seed, domain::PANEL_ENTRY, year as u64);
        let mut survivors: Vec<(u64, f64)> = active
            .iter()
            .zip(&fates)
            .filter_map(|(&(id, _), f)| match f {
                Fate::Stays(w) => Some((id, *w)),
                Fate::Leaves => None,
            })
            .collect();
        let shortfall = cfg.population.saturating_sub(survivors.len());
        let entrants = if shortfall > 0 {
            Poisson::new(shortfall as f64)
                .map_err(|e| Error::numerical(MODULE, e.to_string()))?
                .sample(&mut rng) as usize
        } else {
            0
        };
        let incomes = entry_incomes(cfg, &active, entrants, &mut rng)?;
        for w in incomes {
            survivors.push((next_id, w));
            next_id += 1;
        }
        active = survivors;
    }
    PanelDataset::new(records)
}

fn entry_incomes(cfg: &SyntheticPanelConfig, current: &[(u64, f64)], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    match cfg.entry {
        EntryDistribution::LogNormal { median, sigma } => Ok((0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                median * (sigma * z).exp()
            })
            .collect()),
        EntryDistribution::ResetWeighted => {
            let mut cum = Vec::with_capacity(current.len());
            let mut acc = 0.0;
            for &(_, w) in current {
                acc += (-cfg.kernels.reset_unchecked(w)).max(0.0);
                cum.push(acc);
            }
            if !(acc > 0.0) {
                return Err(Error::invalid(
                    MODULE,
                    "no income has a negative reset rate to resample entrants from; use a lognormal entry",
                ));
            }
            Ok((0..n)
                .map(|_| {
                    let target = rng.random::<f64>() * acc;
                    let i = cum.partition_point(|&c| c <= target).min(current.len() - 1);
                    current[i].1
                })
                .collect())
        }
    }
}
