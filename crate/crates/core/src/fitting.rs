//! Parameter fits and goodness-of-fit diagnostics.
//!
//! Regressions ([`fit_growth_c`], [`fit_reset_beta`]) are closed-form
//! weighted least squares through the origin. Shape fits ([`fit_beta_prime`])
//! minimize count-weighted squared residuals of log density with a
//! golden-section search; histogram bins are compared with the model
//! averaged over the bin.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analytic::BetaPrimeShape;
use crate::error::{Error, Result};
use crate::estimation::LogBinnedSeries;
use crate::grid::{geometric_grid, DensityGrid};

const MODULE: &str = "fitting";

/// Golden-section tolerance on the fitted parameter.
pub const SEARCH_TOL: f64 = 1e-6;
/// Upper end of the shape search.
pub const A_MAX: f64 = 10.0;
/// Lower end of the free shape search.
pub const A_MIN_FREE: f64 = 2.5;
/// Lower end of the constrained shape search: `s = a - 2 > 1` for a finite mean.
pub const A_MIN_CONSTRAINED: f64 = 3.0;
/// Relative tolerance on the unit-mean precondition.
pub const UNIT_MEAN_TOL: f64 = 0.02;
/// Smallest upper support edge accepted by shape fits.
pub const MIN_SUPPORT: f64 = 3.0;
/// Points on the common grid of [`collapse_metric`].
pub const COLLAPSE_POINTS: usize = 256;
/// Two-sided coverage of reported half-widths.
pub const CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    /// Half-width of the `CONFIDENCE` interval; `None` when undefined.
    pub half_width: Option<f64>,
    /// Search bounds; `None` is unbounded.
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub x: f64,
    pub observed: f64,
    pub fitted: f64,
    pub weight: f64,
}

impl Residual {
    pub fn residual(&self) -> f64 {
        self.observed - self.fitted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub estimates: Vec<Estimate>,
    /// Name of the goodness metric, e.g. `r_squared`.
    pub goodness_metric: String,
    pub goodness: f64,
    pub objective: String,
    pub weighting: String,
    /// Residuals in the space of the objective (log density for shape fits).
    pub residuals: Vec<Residual>,
    pub provenance: String,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// CSV `x,observed,fitted,residual,weight`.
    pub fn write_residuals_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "observed", "fitted", "residual", "weight"])?;
        for r in &self.residuals {
            w.write_record([
                r.x.to_string(),
                r.observed.to_string(),
                r.fitted.to_string(),
                r.residual().to_string(),
                r.weight.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn t_quantile(dof: usize) -> f64 {
    if dof == 0 {
        return f64::NAN;
    }
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|t| t.inverse_cdf(0.5 + CONFIDENCE / 2.0))
        .unwrap_or(f64::NAN)
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// `1 / spread^2` when every spread is positive and finite, uniform otherwise.
fn series_weights(series: &LogBinnedSeries) -> (Vec<f64>, &'static str) {
    if series.bins.iter().all(|b| b.spread > 0.0 && b.spread.is_finite()) {
        (series.bins.iter().map(|b| b.spread.powi(-2)).collect(), "inverse_variance")
    } else {
        (vec![1.0; series.bins.len()], "uniform")
    }
}

struct OriginFit {
    slope: f64,
    half_width: Option<f64>,
    r_squared: f64,
}

/// Weighted least squares for `y = c * h` with `x` kept for residuals.
fn origin_fit(h: &[f64], y: &[f64], w: &[f64]) -> Option<OriginFit> {
    let shh: f64 = h.iter().zip(w).map(|(h, w)| w * h * h).sum();
    if !(shh > 0.0) {
        return None;
    }
    let shy: f64 = h.iter().zip(y).zip(w).map(|((h, y), w)| w * h * y).sum();
    let slope = shy / shh;
    let sw: f64 = w.iter().sum();
    let ybar = y.iter().zip(w).map(|(y, w)| w * y).sum::<f64>() / sw;
    let ss_res: f64 = h.iter().zip(y).zip(w).map(|((h, y), w)| w * (y - slope * h).powi(2)).sum();
    let ss_tot: f64 = y.iter().zip(w).map(|(y, w)| w * (y - ybar).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    let dof = h.len() - 1;
    let se = (ss_res / dof as f64 / shh).sqrt();
    Some(OriginFit {
        slope,
        half_width: finite_or_none(t_quantile(dof) * se),
        r_squared,
    })
}

fn require_bins(series: &LogBinnedSeries, what: &str) -> Result<()> {
    if series.bins.len() < 3 {
        return Err(Error::invalid(
            MODULE,
            format!("{what} needs at least 3 bins, got {}", series.bins.len()),
        ));
    }
    Ok(())
}

/// Proportionality constant `C` in `<dw>_j = C w_j`, with R².
pub fn fit_growth_c(series: &LogBinnedSeries) -> Result<FitReport> {
    require_bins(series, "growth fit")?;
    let (w, weighting) = series_weights(series);
    let x: Vec<f64> = series.bins.iter().map(|b| b.w_j).collect();
    let y: Vec<f64> = series.bins.iter().map(|b| b.value).collect();
    let fit = origin_fit(&x, &y, &w).ok_or_else(|| Error::invalid(MODULE, "bin representatives are all zero"))?;
    Ok(FitReport {
        model: "growth_linear".into(),
        estimates: vec![Estimate {
            name: "C".into(),
            value: fit.slope,
            half_width: fit.half_width,
            lower_bound: None,
            upper_bound: None,
        }],
        goodness_metric: "r_squared".into(),
        goodness: fit.r_squared,
        objective: "weighted least squares through the origin on (w_j, value)".into(),
        weighting: weighting.into(),
        residuals: residuals(&x, &y, &w, |v| fit.slope * v),
        provenance: String::new(),
        warnings: Vec::new(),
    })
}

/// Constrained reset shape `h(x) = 3 - 5 m / (x + m)`, so that `gamma = beta h`.
pub fn reset_shape(x: f64, mean_income: f64) -> f64 {
    3.0 - 5.0 * mean_income / (x + mean_income)
}

/// Rate `beta` of the constrained reset kernel fitted to per-bin reset rates.
pub fn fit_reset_beta(series: &LogBinnedSeries, mean_income: f64) -> Result<FitReport> {
    require_bins(series, "reset fit")?;
    if !(mean_income > 0.0 && mean_income.is_finite()) {
        return Err(Error::invalid(MODULE, format!("mean income must be positive, got {mean_income}")));
    }
    let (w, weighting) = series_weights(series);
    let x: Vec<f64> = series.bins.iter().map(|b| b.w_j).collect();
    let h: Vec<f64> = x.iter().map(|&v| reset_shape(v, mean_income)).collect();
    let y: Vec<f64> = series.bins.iter().map(|b| b.value).collect();
    let mut warnings = Vec::new();
    let fit = match origin_fit(&h, &y, &w) {
        Some(f) => f,
        None => {
            warnings.push("reset shape vanishes on every bin; beta is unidentified".to_string());
            OriginFit {
                slope: 0.0,
                half_width: None,
                r_squared: 0.0,
            }
        }
    };
    if y.iter().all(|&v| v == 0.0) {
        warnings.push("all reset rates are zero; degenerate fit".to_string());
    }
    Ok(FitReport {
        model: "reset_constrained".into(),
        estimates: vec![Estimate {
            name: "beta".into(),
            value: fit.slope,
            half_width: fit.half_width,
            lower_bound: None,
            upper_bound: None,
        }],
        goodness_metric: "r_squared".into(),
        goodness: fit.r_squared,
        objective: "weighted least squares of gamma_j against beta * (3 - 5 m / (w_j + m))".into(),
        weighting: weighting.into(),
        residuals: residuals(&x, &y, &w, |v| fit.slope * reset_shape(v, mean_income)),
        provenance: String::new(),
        warnings,
    })
}

fn residuals(x: &[f64], y: &[f64], w: &[f64], model: impl Fn(f64) -> f64) -> Vec<Residual> {
    x.iter()
        .zip(y)
        .zip(w)
        .map(|((&x, &y), &w)| Residual {
            x,
            observed: y,
            fitted: model(x),
            weight: w,
        })
        .collect()
}

/// Shape family searched by [`fit_beta_prime`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeConstraint {
    /// `s = a - 2`.
    #[default]
    Constrained,
    Free,
}

/// Minimizer of a unimodal function on `[lo, hi]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// One observation of log density.
struct LogPoint {
    x: f64,
    ln_obs: f64,
    weight: f64,
    /// Bin edges for histograms; the model is averaged over them.
    edges: Option<(f64, f64)>,
}

fn log_points(density: &DensityGrid) -> Vec<LogPoint> {
    let x = density.x();
    let d = density.density();
    match &density.meta().histogram {
        Some(h) => (0..x.len())
            .filter(|&i| h.counts[i] > 0)
            .map(|i| LogPoint {
                x: x[i],
                ln_obs: d[i].ln(),
                weight: h.counts[i] as f64,
                edges: Some((h.edges[i], h.edges[i + 1])),
            })
            .collect(),
        None => (0..x.len())
            .filter(|&i| d[i] > 0.0 && x[i] > 0.0)
            .map(|i| LogPoint {
                x: x[i],
                ln_obs: d[i].ln(),
                weight: 1.0,
                edges: None,
            })
            .collect(),
    }
}

fn ln_model(shape: &BetaPrimeShape, p: &LogPoint) -> f64 {
    match p.edges {
        Some((lo, hi)) => ((shape.cdf_unchecked(hi) - shape.cdf_unchecked(lo)) / (hi - lo)).ln(),
        None => shape.pdf_unchecked(p.x).ln(),
    }
}

fn shape_sse(shape: &BetaPrimeShape, points: &[LogPoint]) -> f64 {
    points
        .iter()
        .map(|p| {
            let r = p.ln_obs - ln_model(shape, p);
            // An empty model bin under an occupied data bin is an infinitely bad fit.
            if r.is_finite() {
                p.weight * r * r
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

fn shape_of(a: f64, s: f64) -> BetaPrimeShape {
    BetaPrimeShape { a, s, mean: 1.0 }
}

/// Beta prime shape fitted to a density rescaled to unit mean.
pub fn fit_beta_prime(density: &DensityGrid, constraint: ShapeConstraint) -> Result<FitReport> {
    let mean = density.mean();
    if !((mean - 1.0).abs() <= UNIT_MEAN_TOL) {
        return Err(Error::invalid(
            MODULE,
            format!("density must be rescaled to unit mean (within {UNIT_MEAN_TOL}), mean is {mean}"),
        ));
    }
    if density.meta().upper < MIN_SUPPORT {
        return Err(Error::invalid(
            MODULE,
            format!("support must reach u = {MIN_SUPPORT}, ends at {}", density.meta().upper),
        ));
    }
    let points = log_points(density);
    let n_params = match constraint {
        ShapeConstraint::Constrained => 1,
        ShapeConstraint::Free => 2,
    };
    if points.len() <= n_params {
        return Err(Error::invalid(MODULE, format!("only {} occupied bins", points.len())));
    }
    // Open lower ends: the interval is shrunk by the search tolerance.
    let eps = SEARCH_TOL;
    let (a, s) = match constraint {
        ShapeConstraint::Constrained => {
            let a = golden_section(|a| shape_sse(&shape_of(a, a - 2.0), &points), A_MIN_CONSTRAINED + eps, A_MAX, SEARCH_TOL);
            (a, a - 2.0)
        }
        ShapeConstraint::Free => {
            let best_s = |a: f64| golden_section(|s| shape_sse(&shape_of(a, s), &points), 1.0 + eps, a - 1.0 - eps, SEARCH_TOL);
            let a = golden_section(|a| shape_sse(&shape_of(a, best_s(a)), &points), A_MIN_FREE + eps, A_MAX, SEARCH_TOL);
            (a, best_s(a))
        }
    };
    let shape = shape_of(a, s);
    let sse = shape_sse(&shape, &points);
    if !sse.is_finite() {
        return Err(Error::numerical(MODULE, "shape objective is not finite at the optimum"));
    }
    let dof = points.len() - n_params;
    let sigma2 = sse / dof as f64;
    let t = t_quantile(dof);
    let sensitivity = |f: &dyn Fn(f64) -> BetaPrimeShape, v: f64| -> Option<f64> {
        let h = 1e-5 * v.max(1.0);
        let (lo, hi) = (f(v - h), f(v + h));
        if lo.validate().is_err() || hi.validate().is_err() {
            return None;
        }
        let info: f64 = points
            .iter()
            .map(|p| p.weight * ((ln_model(&hi, p) - ln_model(&lo, p)) / (2.0 * h)).powi(2))
            .sum();
        finite_or_none(t * (sigma2 / info).sqrt())
    };
    let mut estimates = Vec::new();
    let (a_lo, objective) = match constraint {
        ShapeConstraint::Constrained => (A_MIN_CONSTRAINED, "count-weighted squared log-density residuals, s = a - 2"),
        ShapeConstraint::Free => (A_MIN_FREE, "count-weighted squared log-density residuals, free (a, s)"),
    };
    let a_hw = match constraint {
        ShapeConstraint::Constrained => sensitivity(&|a| shape_of(a, a - 2.0), a),
        ShapeConstraint::Free => sensitivity(&|a| shape_of(a, s), a),
    };
    estimates.push(Estimate {
        name: "a".into(),
        value: a,
        half_width: a_hw,
        lower_bound: Some(a_lo),
        upper_bound: Some(A_MAX),
    });
    estimates.push(Estimate {
        name: "s".into(),
        value: s,
        half_width: match constraint {
            ShapeConstraint::Constrained => a_hw,
            ShapeConstraint::Free => sensitivity(&|s| shape_of(a, s), s),
        },
        lower_bound: Some(1.0),
        upper_bound: Some(a - 1.0),
    });
    let mut warnings = Vec::new();
    if A_MAX - a < 10.0 * SEARCH_TOL || a - a_lo < 10.0 * SEARCH_TOL {
        warnings.push(format!("a = {a} is at the edge of the search interval"));
    }
    Ok(FitReport {
        model: "beta_prime".into(),
        estimates,
        goodness_metric: "weighted_sse_log_density".into(),
        goodness: sse,
        objective: objective.into(),
        weighting: if density.is_histogram() { "bin_count" } else { "uniform" }.into(),
        residuals: points
            .iter()
            .map(|p| Residual {
                x: p.x,
                observed: p.ln_obs,
                fitted: ln_model(&shape, p),
                weight: p.weight,
            })
            .collect(),
        provenance: String::new(),
        warnings,
    })
}

/// Fitted shape from a [`fit_beta_prime`] report, at unit mean.
pub fn fitted_shape(report: &FitReport) -> Result<BetaPrimeShape> {
    match (report.estimate("a"), report.estimate("s")) {
        (Some(a), Some(s)) => BetaPrimeShape::new(a, s, 1.0),
        _ => Err(Error::invalid(MODULE, "report has no Beta prime shape")),
    }
}

/// Occupied `(ln u, ln rho)` points, ascending in `u`.
fn log_curve(d: &DensityGrid) -> Vec<(f64, f64)> {
    let x = d.x();
    let rho = d.density();
    let occupied = |i: usize| match &d.meta().histogram {
        Some(h) => h.counts[i] > 0,
        None => rho[i] > 0.0,
    };
    (0..x.len())
        .filter(|&i| occupied(i) && x[i] > 0.0)
        .map(|i| (x[i].ln(), rho[i].ln()))
        .collect()
}

fn interp(curve: &[(f64, f64)], t: f64) -> f64 {
    let i = curve.partition_point(|p| p.0 < t);
    if i == 0 {
        return curve[0].1;
    }
    if i == curve.len() {
        return curve[i - 1].1;
    }
    let (x0, y0) = curve[i - 1];
    let (x1, y1) = curve[i];
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}

/// Spread of rescaled curves: the mean over a common log-spaced grid of
/// `(max - min) / median` across curves. Curves are interpolated linearly
/// in log-log space between occupied points; zero is a perfect collapse.
pub fn collapse_metric(curves: &[DensityGrid]) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::invalid(MODULE, format!("collapse needs at least 2 curves, got {}", curves.len())));
    }
    let logs: Vec<Vec<(f64, f64)>> = curves.iter().map(log_curve).collect();
    if logs.iter().any(|c| c.len() < 2) {
        return Err(Error::invalid(MODULE, "every curve needs at least 2 occupied points"));
    }
    let lo = logs.iter().map(|c| c[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = logs.iter().map(|c| c[c.len() - 1].0).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::invalid(MODULE, "curves have no overlapping support"));
    }
    let grid = geometric_grid(lo.exp(), hi.exp(), COLLAPSE_POINTS)?;
    let mut vals = vec![0.0; curves.len()];
    let mut total = 0.0;
    for u in &grid {
        let t = u.ln().clamp(lo, hi);
        for (v, c) in vals.iter_mut().zip(&logs) {
            *v = interp(c, t).exp();
        }
        vals.sort_by(f64::total_cmp);
        let n = vals.len();
        let median = if n % 2 == 1 {
            vals[n / 2]
        } else {
            0.5 * (vals[n / 2 - 1] + vals[n / 2])
        };
        total += (vals[n - 1] - vals[0]) / median;
    }
    Ok(total / grid.len() as f64)
}

/// Log-log regression slope of the density over `[u_min, u_max]`.
pub fn tail_slope(density: &DensityGrid, u_min: f64, u_max: f64) -> Result<f64> {
    if !(u_min > 0.0 && u_max > u_min && u_max.is_finite()) {
        return Err(Error::invalid(MODULE, format!("bad window [{u_min}, {u_max}]")));
    }
    let pts: Vec<(f64, f64)> = log_curve(density)
        .into_iter()
        .filter(|&(t, _)| t >= u_min.ln() && t <= u_max.ln())
        .collect();
    if pts.len() < 5 {
        return Err(Error::invalid(
            MODULE,
            format!("tail window [{u_min}, {u_max}] holds {} points, need 5", pts.len()),
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid(MODULE, "no samples"));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid(MODULE, "samples contain NaN"));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}
