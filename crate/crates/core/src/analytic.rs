//! Closed-form and quadrature stationary densities.
//!
//! For `mu(x) = beta x` and `gamma(x) = K - b/(x + q)` the stationary density is
//! Beta prime. In terms of `u = x / <x>` and the shape parameters
//! `a = b / (beta q)`, `s = K / beta`:
//!
//! ```text
//! <x> rho(x) = c^(a-s) Gamma(a) / (Gamma(a-s) Gamma(s)) (1 + c u)^(-a) u^(a-s-1),
//!     c = (a - s) / (s - 1)
//! ```
//!
//! With `a = 5, s = 3` this is the master curve `12 u (1 + u)^-5`.

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::grid::DensityGrid;
use crate::kernels::{KernelParams, RateKernel};

const MODULE: &str = "analytic";

/// Rescaled stationary-density shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrimeShape {
    pub a: f64,
    pub s: f64,
    pub mean: f64,
}

impl BetaPrimeShape {
    pub fn new(a: f64, s: f64, mean: f64) -> Result<Self> {
        let shape = BetaPrimeShape { a, s, mean };
        shape.validate()?;
        Ok(shape)
    }

    /// Shape with the small-income power fixed to one (`s = a - 2`).
    pub fn constrained(a: f64, mean: f64) -> Result<Self> {
        Self::new(a, a - 2.0, mean)
    }

    /// The master curve shape `a = 5, s = 3`.
    pub fn master(mean: f64) -> Result<Self> {
        Self::new(5.0, 3.0, mean)
    }

    /// Shape implied by kernels with `g = 0`.
    pub fn from_kernels(p: &KernelParams) -> Result<Self> {
        p.validate()?;
        if p.g != 0.0 {
            return Err(Error::invalid(
                MODULE,
                "Beta prime shape needs g = 0; use the Pearson type I density otherwise",
            ));
        }
        let a = p.b / (p.beta * p.q);
        let s = p.k / p.beta;
        let mean = beta_prime_mean(a, s, p.q)?;
        Self::new(a, s, mean)
    }

    pub fn validate(&self) -> Result<()> {
        let BetaPrimeShape { a, s, mean } = *self;
        if !(a.is_finite() && s.is_finite() && mean.is_finite()) {
            return Err(Error::invalid(MODULE, "shape parameters must be finite"));
        }
        if !(s > 1.0) {
            return Err(Error::invalid(MODULE, format!("shape needs s > 1 for a finite mean, got s={s}")));
        }
        if !(a > s + 1.0) {
            return Err(Error::invalid(MODULE, format!("shape needs a > s + 1, got a={a}, s={s}")));
        }
        if !(mean > 0.0) {
            return Err(Error::invalid(MODULE, format!("mean must be positive, got {mean}")));
        }
        Ok(())
    }

    fn scale(&self) -> f64 {
        (self.a - self.s) / (self.s - 1.0)
    }

    fn ln_norm(&self) -> f64 {
        let (a, s) = (self.a, self.s);
        (a - s) * self.scale().ln() + ln_gamma(a) - ln_gamma(a - s) - ln_gamma(s) - self.mean.ln()
    }

    /// Density at `x` without re-validating the shape. `x` must be non-negative.
    pub(crate) fn pdf_unchecked(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let u = x / self.mean;
        let ln = self.ln_norm() - self.a * (self.scale() * u).ln_1p() + (self.a - self.s - 1.0) * u.ln();
        ln.exp()
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = self.scale() * x / self.mean;
        if z.is_infinite() {
            return 1.0;
        }
        beta_reg(self.a - self.s, self.s, z / (1.0 + z))
    }

    /// Density sampled on `x`, as a grid. Not renormalized.
    pub fn on_grid(&self, x: &[f64]) -> Result<DensityGrid> {
        self.validate()?;
        let d = x.iter().map(|&v| self.pdf_unchecked(v.max(0.0))).collect();
        let mut grid = DensityGrid::sampled(x.to_vec(), d)?;
        grid.set_mean(Some(self.mean));
        Ok(grid)
    }
}

fn check_x(x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(MODULE, format!("income must be finite and non-negative, got {x}")));
    }
    Ok(())
}

/// Rescaled Beta prime density at income `x`.
pub fn beta_prime_pdf(x: f64, shape: &BetaPrimeShape) -> Result<f64> {
    check_x(x)?;
    shape.validate()?;
    Ok(shape.pdf_unchecked(x))
}

/// Cumulative distribution of the rescaled Beta prime density.
pub fn beta_prime_cdf(x: f64, shape: &BetaPrimeShape) -> Result<f64> {
    check_x(x)?;
    shape.validate()?;
    Ok(shape.cdf_unchecked(x))
}

/// First moment `q (a - s) / (s - 1)`.
pub fn beta_prime_mean(a: f64, s: f64, q: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::invalid(MODULE, format!("mean diverges for s <= 1 (s={s})")));
    }
    if !(q > 0.0) {
        return Err(Error::invalid(MODULE, format!("q must be positive, got {q}")));
    }
    Ok(q * (a - s) / (s - 1.0))
}

/// `12 u (1 + u)^-5`, the `a = 5, s = 3` density at unit mean. Zero for `u <= 0`.
pub fn master_curve(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    12.0 * u * (1.0 + u).powi(-5)
}

/// Stationary density for `mu = beta (x + g)` and `gamma = K - b/(x + q)`:
/// `rho ~ (x + q)^(-A) (x + g)^(A - S - 1)` with `A = b / (beta (q - g))`,
/// `S = K / beta`, normalized on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearsonType1 {
    q: f64,
    g: f64,
    big_a: f64,
    big_s: f64,
    ln_z: f64,
}

impl PearsonType1 {
    pub fn new(p: &KernelParams) -> Result<Self> {
        p.validate()?;
        if p.q == p.g {
            return Err(Error::invalid(MODULE, "Pearson type I is degenerate for q = g"));
        }
        let big_a = p.b / (p.beta * (p.q - p.g));
        let big_s = p.k / p.beta;
        if !(big_s > 1.0) {
            return Err(Error::invalid(
                MODULE,
                format!("non-integrable kernels: K/beta = {big_s} must exceed 1 for a finite-mean density"),
            ));
        }
        let ln_z = if p.g == 0.0 {
            if !(big_a > big_s) {
                return Err(Error::invalid(
                    MODULE,
                    format!("non-integrable kernels: density ~ x^{} at zero", big_a - big_s - 1.0),
                ));
            }
            -big_s * p.q.ln() + ln_beta(big_a - big_s, big_s)
        } else {
            ln_normalizer(p.q, p.g, big_a, big_s)
        };
        if !ln_z.is_finite() {
            return Err(Error::numerical(MODULE, "Pearson type I normalization failed"));
        }
        Ok(PearsonType1 {
            q: p.q,
            g: p.g,
            big_a,
            big_s,
            ln_z,
        })
    }

    fn ln_unnormalized(&self, x: f64) -> f64 {
        -self.big_a * (x + self.q).ln() + (self.big_a - self.big_s - 1.0) * (x + self.g).ln()
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        if x == 0.0 && self.g == 0.0 {
            let power = self.big_a - self.big_s - 1.0;
            return Ok(if power > 0.0 {
                0.0
            } else if power == 0.0 {
                (-self.big_a * self.q.ln() - self.ln_z).exp()
            } else {
                f64::INFINITY
            });
        }
        Ok((self.ln_unnormalized(x) - self.ln_z).exp())
    }
}

/// `ln int_0^inf (x+q)^(-A) (x+g)^(A-S-1) dx` for `g > 0`, by the trapezoid rule
/// in `t = ln x`. The integrand is analytic in a strip of half-width pi around
/// the real `t` axis, so the rule converges geometrically in the step.
fn ln_normalizer(q: f64, g: f64, big_a: f64, big_s: f64) -> f64 {
    let lo = (q.min(g) * 1e-14).ln();
    // Tail ~ x^-S: stop where it has fallen below 1e-17 of the scale.
    let hi = (q.max(g)).ln() + 17.0 * std::f64::consts::LN_10 / big_s.min(1.0e3);
    let h = 0.02;
    let n = ((hi - lo) / h).ceil() as usize;
    let h = (hi - lo) / n as f64;
    let ln_f = |t: f64| {
        let x = t.exp();
        t - big_a * (x + q).ln() + (big_a - big_s - 1.0) * (x + g).ln()
    };
    let vals: Vec<f64> = (0..=n).map(|i| ln_f(lo + h * i as f64)).collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for (i, v) in vals.iter().enumerate() {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * (v - m).exp();
    }
    // Head [0, x_lo]: the integrand is flat there since x << g.
    let x_lo = lo.exp();
    let head = x_lo * (-big_a * q.ln() + (big_a - big_s - 1.0) * g.ln() - m).exp();
    m + (acc * h + head).ln()
}

/// Pearson type I stationary density at `x` for the given kernels.
pub fn pearson_type1_pdf(x: f64, p: &KernelParams) -> Result<f64> {
    PearsonType1::new(p)?.pdf(x)
}

/// Stationary density `rho ~ exp(-int gamma/mu) / mu` evaluated on `grid`,
/// anchored at the first positive grid point and normalized.
pub fn stationary_from_kernels(
    mu: &impl RateKernel,
    gamma: &impl RateKernel,
    grid: &[f64],
) -> Result<DensityGrid> {
    let anchor = grid
        .iter()
        .position(|&x| x > 0.0)
        .ok_or_else(|| Error::invalid(MODULE, "grid has no positive point"))?;
    stationary_from_kernels_anchored(mu, gamma, grid, anchor)
}

/// As [`stationary_from_kernels`], with the exponent integral anchored at
/// `grid[anchor]`. The result is independent of the anchor up to rounding.
pub fn stationary_from_kernels_anchored(
    mu: &impl RateKernel,
    gamma: &impl RateKernel,
    grid: &[f64],
    anchor: usize,
) -> Result<DensityGrid> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::invalid(MODULE, "stationary grid needs at least three points"));
    }
    if grid.iter().any(|x| !x.is_finite() || *x < 0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(MODULE, "grid must be finite, non-negative and strictly increasing"));
    }
    if anchor >= n || grid[anchor] <= 0.0 {
        return Err(Error::invalid(MODULE, "anchor must be a positive grid point"));
    }
    let first = if grid[0] == 0.0 { 1 } else { 0 };
    let ratio = |x: f64| -> Result<f64> {
        let m = mu.rate(x);
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::invalid(
                MODULE,
                format!("growth kernel must be positive inside the grid, mu({x}) = {m}"),
            ));
        }
        Ok(gamma.rate(x) / m)
    };
    // Simpson's rule on each interval.
    let segment = |i: usize| -> Result<f64> {
        let (a, b) = (grid[i], grid[i + 1]);
        let mid = 0.5 * (a + b);
        Ok((b - a) / 6.0 * (ratio(a)? + 4.0 * ratio(mid)? + ratio(b)?))
    };
    let mut exponent = vec![0.0; n];
    for i in anchor..n - 1 {
        exponent[i + 1] = exponent[i] + segment(i)?;
    }
    for i in (first..anchor).rev() {
        exponent[i] = exponent[i + 1] - segment(i)?;
    }
    let mut ln_rho = vec![f64::NEG_INFINITY; n];
    for i in first..n {
        ln_rho[i] = -exponent[i] - mu.rate(grid[i]).ln();
        if !ln_rho[i].is_finite() {
            return Err(Error::numerical(MODULE, format!("exponent integral diverges near x = {}", grid[i])));
        }
    }
    let peak = ln_rho[first..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut density: Vec<f64> = ln_rho.iter().map(|v| (v - peak).exp()).collect();
    if first == 1 {
        // x = 0: continue the power law of the next two points.
        let p = (density[2] / density[1]).ln() / (grid[2] / grid[1]).ln();
        density[0] = if mu.rate(0.0) > 0.0 {
            (-(exponent[1] - segment(0)?) - mu.rate(0.0).ln() - peak).exp()
        } else if p > 0.0 {
            0.0
        } else {
            return Err(Error::numerical(MODULE, "stationary density is unbounded at x = 0"));
        };
    }
    let mut out = DensityGrid::sampled(grid.to_vec(), density)?;
    out.normalize()?;
    Ok(out)
}

/// Density-tail and cumulative (Pareto) exponents: `(-(s + 1), s)`.
pub fn tail_exponent(shape: &BetaPrimeShape) -> (f64, f64) {
    (-(shape.s + 1.0), shape.s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{default_grid, geometric_grid};
    use crate::kernels::{constrain, Growth, Reset};

    /// Trapezoid in `t = ln x` on a wide window; independent of the closed forms.
    fn log_quad(f: impl Fn(f64) -> f64, t_lo: f64, t_hi: f64, h: f64) -> f64 {
        let n = ((t_hi - t_lo) / h).ceil() as usize;
        let h = (t_hi - t_lo) / n as f64;
        (0..=n)
            .map(|i| {
                let t = t_lo + h * i as f64;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let x = t.exp();
                w * x * f(x)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn pdf_examples() {
        let s = BetaPrimeShape::master(1.0).unwrap();
        assert!((beta_prime_pdf(1.0, &s).unwrap() - 0.375).abs() < 1e-14);
        for m in [0.5, 1.0, 767.0] {
            let s = BetaPrimeShape::master(m).unwrap();
            assert_eq!(beta_prime_pdf(0.0, &s).unwrap(), 0.0);
        }
        let mass = log_quad(|x| beta_prime_pdf(x, &s).unwrap(), -40.0, 40.0, 0.01);
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(BetaPrimeShape::new(4.0, 3.0, 1.0).is_err());
        assert!(BetaPrimeShape::new(3.0, 1.0, 1.0).is_err());
        assert!(BetaPrimeShape::new(5.0, 3.0, 0.0).is_err());
        let bad = BetaPrimeShape { a: 2.0, s: 3.0, mean: 1.0 };
        assert!(beta_prime_pdf(1.0, &bad).is_err());
        let ok = BetaPrimeShape::master(1.0).unwrap();
        assert!(beta_prime_pdf(-1.0, &ok).is_err());
    }

    #[test]
    fn mean_examples() {
        assert!((beta_prime_mean(5.0, 3.0, 767.0).unwrap() - 767.0).abs() < 1e-12);
        assert!((beta_prime_mean(4.0, 3.0, 10.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(beta_prime_mean(5.0, 1.0, 1.0).is_err());
        assert!(beta_prime_mean(5.0, 1.0 - 1e-12, 1.0).is_err());
    }

    #[test]
    fn quadrature_mean_matches_closed_form() {
        for i in 0..6 {
            let a = 3.5 + 0.5 * i as f64;
            let s = BetaPrimeShape::constrained(a, 2.3).unwrap();
            // Tail of x rho ~ x^-s; s >= 1.5 needs t up to ~ 80 for 1e-17.
            let m = log_quad(|x| x * beta_prime_pdf(x, &s).unwrap(), -40.0, 90.0, 0.01);
            let want = beta_prime_mean(a, a - 2.0, 2.3 * (a - 2.0 - 1.0) / 2.0).unwrap();
            assert!((m - 2.3).abs() / 2.3 < 1e-6, "a={a}: {m}");
            assert!((want - 2.3).abs() < 1e-12);
        }
    }

    #[test]
    fn master_curve_examples() {
        assert!((master_curve(1.0) - 0.375).abs() < 1e-15);
        assert_eq!(master_curve(0.0), 0.0);
        let want = 120.0 / 11f64.powi(5);
        assert!((master_curve(10.0) - want).abs() < 1e-18);
        assert!((want - 7.451e-4).abs() < 1e-7);
    }

    #[test]
    fn master_curve_equals_rescaled_beta_prime() {
        let s = BetaPrimeShape::master(3.7).unwrap();
        for i in 1..200 {
            let u = i as f64 * 0.173;
            let lhs = 3.7 * beta_prime_pdf(u * 3.7, &s).unwrap();
            assert!((lhs - master_curve(u)).abs() <= 1e-13 * master_curve(u));
        }
    }

    #[test]
    fn cdf_matches_quadrature_of_pdf() {
        let s = BetaPrimeShape::constrained(3.8, 2.0).unwrap();
        for x in [0.1f64, 0.7, 2.0, 9.0, 55.0] {
            let num = log_quad(|v| beta_prime_pdf(v, &s).unwrap(), -40.0, x.ln(), 1e-4);
            assert!((num - beta_prime_cdf(x, &s).unwrap()).abs() < 1e-6, "x={x} {num} {}", beta_prime_cdf(x, &s).unwrap());
        }
    }

    #[test]
    fn shape_from_constrained_kernels_is_master() {
        let s = BetaPrimeShape::from_kernels(&constrain(0.057, 767.0).unwrap()).unwrap();
        assert!((s.a - 5.0).abs() < 1e-12 && (s.s - 3.0).abs() < 1e-12 && (s.mean - 767.0).abs() < 1e-9);
    }

    #[test]
    fn pearson_reduces_to_beta_prime_as_g_vanishes() {
        let mut p = constrain(1.0, 2.0).unwrap();
        p.g = 1e-9 * p.q;
        let shape = BetaPrimeShape::master(2.0).unwrap();
        for x in [0.02, 0.3, 1.0, 2.0, 7.0, 40.0] {
            let a = pearson_type1_pdf(x, &p).unwrap();
            let b = beta_prime_pdf(x, &shape).unwrap();
            assert!((a - b).abs() / b < 1e-6, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn pearson_normalizes_with_offset() {
        let q = 2.0;
        let p = KernelParams::new(1.0, q / 2.0, 3.0, 5.0 * q, q, q).unwrap();
        let pt = PearsonType1::new(&p).unwrap();
        let mass = log_quad(|x| pt.pdf(x).unwrap(), -40.0, 40.0, 0.005);
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
    }

    #[test]
    fn pearson_rejects_bad_exponents() {
        let p = KernelParams::new(1.0, 0.0, 1.0, 5.0, 1.0, 1.0).unwrap();
        assert!(pearson_type1_pdf(1.0, &p).unwrap_err().is_validation());
        let p = KernelParams::new(1.0, 1.0, 3.0, 5.0, 1.0, 1.0).unwrap();
        assert!(pearson_type1_pdf(1.0, &p).is_err());
    }

    #[test]
    fn pearson_converges_monotonically_in_g() {
        let base = constrain(1.0, 1.0).unwrap();
        let shape = BetaPrimeShape::master(1.0).unwrap();
        let xs = geometric_grid(1e-3, 1e2, 400).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..7 {
            let mut p = base;
            p.g = 10f64.powi(-k);
            let pt = PearsonType1::new(&p).unwrap();
            let sup = xs
                .iter()
                .map(|&x| (pt.pdf(x).unwrap() - beta_prime_pdf(x, &shape).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(sup < last, "g=1e-{k}: {sup} !< {last}");
            last = sup;
        }
    }

    #[test]
    fn stationary_constant_rates_is_exponential() {
        let (m0, g0) = (1.3, 0.4);
        let mu = |_x: f64| m0;
        let gamma = |_x: f64| g0;
        let grid = crate::grid::linear_grid(0.0, 120.0, 24001).unwrap();
        let d = stationary_from_kernels(&mu, &gamma, &grid).unwrap();
        let lam = g0 / m0;
        for (x, r) in d.x().iter().zip(d.density()) {
            let want = lam * (-lam * x).exp();
            assert!((r - want).abs() <= 1e-6 * want, "x={x} {r} {want}");
        }
        assert!((d.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_linear_growth_gives_master_curve() {
        let p = constrain(0.057, 767.0).unwrap();
        let grid = default_grid(767.0).unwrap();
        let d = stationary_from_kernels(&Growth(p), &Reset(p), &grid).unwrap();
        let shape = BetaPrimeShape::master(767.0).unwrap();
        for (x, r) in d.x().iter().zip(d.density()) {
            let u = x / 767.0;
            if (0.01..=20.0).contains(&u) {
                let want = beta_prime_pdf(*x, &shape).unwrap();
                assert!((r - want).abs() <= 1e-6 * want, "u={u}: {}", (r - want) / want);
            }
        }
    }

    #[test]
    fn stationary_is_anchor_invariant() {
        let p = constrain(0.3, 2.0).unwrap();
        let grid = default_grid(2.0).unwrap();
        let base = stationary_from_kernels(&Growth(p), &Reset(p), &grid).unwrap();
        for anchor in [1, 700, 2048, 4000, 4095] {
            let other = stationary_from_kernels_anchored(&Growth(p), &Reset(p), &grid, anchor).unwrap();
            for (a, b) in base.density().iter().zip(other.density()) {
                assert!((a - b).abs() <= 1e-8 * a.max(1e-300), "anchor {anchor}");
            }
        }
    }

    #[test]
    fn stationary_rejects_vanishing_growth() {
        let mu = |x: f64| x - 1.0;
        let gamma = |_x: f64| 1.0;
        let grid = crate::grid::linear_grid(0.5, 3.0, 11).unwrap();
        assert!(stationary_from_kernels(&mu, &gamma, &grid).is_err());
    }

    #[test]
    fn tail_exponent_examples() {
        let cases = [(5.0, 3.0, -4.0, 3.0), (4.7, 2.7, -3.7, 2.7), (3.8, 1.8, -2.8, 1.8)];
        for (a, s, d, p) in cases {
            let (dd, pp) = tail_exponent(&BetaPrimeShape::new(a, s, 1.0).unwrap());
            assert!((dd - d).abs() < 1e-12 && (pp - p).abs() < 1e-12);
        }
    }
}
