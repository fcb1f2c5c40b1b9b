//! JSON run configuration. Every field has a default; command-line flags
//! override whatever the file sets.

use std::fs;
use std::path::{Path, PathBuf};

use income_dynamics::dynamics::FeedRule;
use income_dynamics::estimation::Binning;
use income_dynamics::fitting::ShapeConstraint;
use income_dynamics::kernels::{constrain, KernelParams};
use income_dynamics::montecarlo::{EntryDistribution, InitialIncomes};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 20_100_531;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub kernels: KernelSpec,
    pub synth: SynthSection,
    pub estimate: EstimateSection,
    pub fit: FitSection,
    pub collapse: CollapseSection,
    pub simulate: SimulateSection,
    pub integrate: IntegrateSection,
    pub stationary: StationarySection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Kernel parameters. With only `beta` and `mean_income` set, the constrained
/// kernels are used; otherwise all of `g`, `K`, `b`, `q` must be given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSpec {
    pub beta: f64,
    pub mean_income: f64,
    pub g: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub b: Option<f64>,
    pub q: Option<f64>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            beta: 0.057,
            mean_income: 767.0,
            g: None,
            k: None,
            b: None,
            q: None,
        }
    }
}

impl KernelSpec {
    pub fn params(&self) -> Result<KernelParams, CliError> {
        Ok(match (self.g, self.k, self.b, self.q) {
            (None, None, None, None) => constrain(self.beta, self.mean_income)?,
            (Some(g), Some(k), Some(b), Some(q)) => KernelParams::new(self.beta, g, k, b, q, self.mean_income)?,
            _ => {
                return Err(CliError::Usage(
                    "kernels: set all of g, K, b, q or none of them".into(),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub years: usize,
    pub first_year: i32,
    pub population: usize,
    pub growth_u: f64,
    pub growth_g: f64,
    pub noise: f64,
    pub entry: EntryDistribution,
    pub initial_shape: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            years: 5,
            first_year: 2000,
            population: 50_000,
            growth_u: 0.21,
            growth_g: 0.0,
            noise: 0.3,
            entry: EntryDistribution::ResetWeighted,
            initial_shape: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateSection {
    pub input: Option<PathBuf>,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
    pub min_count: u64,
    pub binning: Binning,
    /// Year of the income histogram; the last year of the range by default.
    pub histogram_year: Option<i32>,
    pub max_malformed_fraction: f64,
}

impl Default for EstimateSection {
    fn default() -> Self {
        EstimateSection {
            input: None,
            first_year: None,
            last_year: None,
            min_count: 50,
            binning: Binning::Log2,
            histogram_year: None,
            max_malformed_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    #[default]
    Shape,
    Growth,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub kind: FitKind,
    pub input: Option<PathBuf>,
    /// Mean income of the reset kernel; the kernel mean by default.
    pub mean_income: Option<f64>,
    pub constraint: ShapeConstraint,
    /// Binning applied when the shape input is raw income samples.
    pub binning: Binning,
    /// Window of the tail slope reported with shape fits.
    pub tail_window: [f64; 2],
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            kind: FitKind::Shape,
            input: None,
            mean_income: None,
            constraint: ShapeConstraint::Constrained,
            binning: Binning::Log2,
            tail_window: [10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollapseSection {
    /// Income-sample or density CSVs, one curve each.
    pub inputs: Vec<PathBuf>,
    /// Panel CSV contributing one curve per year.
    pub panel: Option<PathBuf>,
    pub binning: Binning,
}

impl Default for CollapseSection {
    fn default() -> Self {
        CollapseSection {
            inputs: Vec::new(),
            panel: None,
            binning: Binning::Log2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SimulateMode {
    /// Agent simulation under the kernels.
    #[default]
    Ensemble,
    /// Independent draws from a Beta prime shape.
    BetaPrime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub mode: SimulateMode,
    pub agents: usize,
    pub t_end: f64,
    pub snapshots: usize,
    /// Income quantum; the kernel mean over 200 by default.
    pub quantum: Option<f64>,
    /// Starting incomes; exponential at the kernel mean by default.
    pub initial: Option<InitialIncomes>,
    pub samples: usize,
    pub a: f64,
    /// `a - 2` by default.
    pub s: Option<f64>,
    /// The kernel mean by default.
    pub mean: Option<f64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            mode: SimulateMode::Ensemble,
            agents: 10_000,
            t_end: 40.0,
            snapshots: 1,
            quantum: None,
            initial: None,
            samples: 100_000,
            a: 5.0,
            s: None,
            mean: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IntegrateModel {
    #[default]
    Continuous,
    Discrete,
}

/// Geometric grid `[lower, upper] * mean` with `points` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 4096,
            lower: 1e-3,
            upper: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateSection {
    pub model: IntegrateModel,
    pub feed_rule: FeedRule,
    pub tol: f64,
    /// Simulated years; `200 / beta` by default.
    pub max_time: Option<f64>,
    /// Fixed step; the stability bound by default.
    pub dt: Option<f64>,
    pub grid: GridSpec,
    /// Lattice spacing of the discrete model; the kernel mean over 200 by default.
    pub dx: Option<f64>,
    /// Top level of the discrete model; `200 * mean / dx` by default.
    pub n_max: Option<usize>,
    /// Write a density snapshot every this many steps; never when zero.
    pub snapshot_every: usize,
}

impl Default for IntegrateSection {
    fn default() -> Self {
        IntegrateSection {
            model: IntegrateModel::Continuous,
            feed_rule: FeedRule::Literal,
            tol: 1e-6,
            max_time: None,
            dt: None,
            grid: GridSpec::default(),
            dx: None,
            n_max: None,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarySection {
    pub grid: GridSpec,
}

/// Parse `log2` or `linear:WIDTH`.
pub fn parse_binning(s: &str) -> Result<Binning, String> {
    match s.split_once(':') {
        None if s == "log2" => Ok(Binning::Log2),
        Some(("linear", w)) => w
            .parse::<f64>()
            .map(|width| Binning::Linear { width })
            .map_err(|_| format!("bad bin width `{w}`")),
        _ => Err(format!("expected `log2` or `linear:WIDTH`, got `{s}`")),
    }
}
