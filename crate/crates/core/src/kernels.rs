//! Growth and reset rate kernels.
//!
//! Growth is linear preferential, `mu(x) = beta * (x + g)`. The reset kernel
//! `gamma(x) = K - b / (x + q)` is negative at low income (net entry) and
//! saturates at `K` for high income (net exit).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DensityGrid;

const MODULE: &str = "kernels";

/// Tolerance on the total mass of a density handed to [`conservation_checks`].
pub const NORMALIZATION_TOL: f64 = 1e-6;
/// Largest admissible extrapolated mass beyond the upper end of the grid.
pub const TAIL_MASS_TOL: f64 = 1e-6;

/// The five kernel constants plus the population mean they were built for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Growth-rate constant (1/year).
    pub beta: f64,
    /// Additive growth offset (income).
    pub g: f64,
    /// Reset-rate saturation level (1/year).
    #[serde(rename = "K")]
    pub k: f64,
    /// Reset numerator (income/year).
    pub b: f64,
    /// Reset shift (income).
    pub q: f64,
    pub mean_income: f64,
}

impl KernelParams {
    pub fn new(beta: f64, g: f64, k: f64, b: f64, q: f64, mean_income: f64) -> Result<Self> {
        let p = KernelParams {
            beta,
            g,
            k,
            b,
            q,
            mean_income,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.beta, self.g, self.k, self.b, self.q, self.mean_income]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid(MODULE, "kernel parameters must be finite"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid(MODULE, format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.q > 0.0) {
            return Err(Error::invalid(MODULE, format!("q must be positive, got {}", self.q)));
        }
        if !(self.mean_income > 0.0) {
            return Err(Error::invalid(
                MODULE,
                format!("mean_income must be positive, got {}", self.mean_income),
            ));
        }
        if !(self.g >= 0.0) {
            return Err(Error::invalid(MODULE, format!("g must be non-negative, got {}", self.g)));
        }
        Ok(())
    }

    /// True when `q = mean`, `K = 3 beta`, `b = 5 beta mean` and `g = 0` hold exactly.
    pub fn is_constrained(&self) -> bool {
        self.g == 0.0
            && self.q == self.mean_income
            && self.k == 3.0 * self.beta
            && self.b == 5.0 * self.beta * self.mean_income
    }

    #[inline]
    pub(crate) fn growth_unchecked(&self, x: f64) -> f64 {
        self.beta * (x + self.g)
    }

    #[inline]
    pub(crate) fn reset_unchecked(&self, x: f64) -> f64 {
        self.k - self.b / (x + self.q)
    }
}

fn check_income(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(MODULE, format!("income must be finite and non-negative, got {x}")));
    }
    Ok(())
}

/// `mu(x) = beta * (x + g)`.
pub fn eval_growth(x: f64, p: &KernelParams) -> Result<f64> {
    check_income(x)?;
    Ok(p.growth_unchecked(x))
}

/// `gamma(x) = K - b / (x + q)`.
pub fn eval_reset(x: f64, p: &KernelParams) -> Result<f64> {
    check_income(x)?;
    Ok(p.reset_unchecked(x))
}

/// Kernel constants fixed by requiring the population and total income to be
/// stationary under the `a = 5, s = 3` stationary density: `g = 0`,
/// `q = mean`, `K = 3 beta`, `b = 5 beta mean`.
pub fn constrain(beta: f64, mean_income: f64) -> Result<KernelParams> {
    if !(beta > 0.0 && beta.is_finite()) || !(mean_income > 0.0 && mean_income.is_finite()) {
        return Err(Error::invalid(
            MODULE,
            format!("constrain needs beta > 0 and mean_income > 0 (got {beta}, {mean_income})"),
        ));
    }
    KernelParams::new(
        beta,
        0.0,
        3.0 * beta,
        5.0 * beta * mean_income,
        mean_income,
        mean_income,
    )
}

/// Uniform evaluation interface used by the integrators.
pub trait RateKernel: Sync {
    fn rate(&self, x: f64) -> f64;
}

impl<F> RateKernel for F
where
    F: Fn(f64) -> f64 + Sync,
{
    fn rate(&self, x: f64) -> f64 {
        self(x)
    }
}

/// The growth kernel of a parameter record.
#[derive(Debug, Clone, Copy)]
pub struct Growth(pub KernelParams);

/// The reset kernel of a parameter record.
#[derive(Debug, Clone, Copy)]
pub struct Reset(pub KernelParams);

impl RateKernel for Growth {
    fn rate(&self, x: f64) -> f64 {
        self.0.growth_unchecked(x)
    }
}

impl RateKernel for Reset {
    fn rate(&self, x: f64) -> f64 {
        self.0.reset_unchecked(x)
    }
}

/// Net population and income flows under a stationary density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    /// `int gamma(x) rho(x) dx` (1/year).
    pub delta_n: f64,
    /// `int (mu(x) - x gamma(x)) rho(x) dx` (income/year).
    pub delta_w: f64,
}

/// Quadrature of the population and income balance integrals over `[0, inf)`.
///
/// The density must carry unit total mass and its upper tail beyond the grid
/// must be below [`TAIL_MASS_TOL`]. Contributions outside the grid are added by
/// power-law extrapolation.
pub fn conservation_checks(p: &KernelParams, density: &DensityGrid) -> Result<Conservation> {
    p.validate()?;
    let total = density.total_mass();
    if !((total - 1.0).abs() <= NORMALIZATION_TOL) {
        return Err(Error::invalid(
            MODULE,
            format!("density is not normalized: total mass {total}"),
        ));
    }
    let tail = density.upper_tail_mass();
    if !(tail.abs() <= TAIL_MASS_TOL * total) {
        return Err(Error::invalid(
            MODULE,
            format!(
                "grid truncates too much of the density: extrapolated tail mass {tail:e} above {:.1}",
                density.meta().upper
            ),
        ));
    }
    let delta_n = density.integrate_against(|x| p.reset_unchecked(x)).total();
    let delta_w = density
        .integrate_against(|x| p.growth_unchecked(x) - x * p.reset_unchecked(x))
        .total();
    if !delta_n.is_finite() || !delta_w.is_finite() {
        return Err(Error::numerical(MODULE, "balance integrals do not converge on this density"));
    }
    Ok(Conservation { delta_n, delta_w })
}
