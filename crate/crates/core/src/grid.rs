//! Discretized probability densities over income.
//!
//! A [`DensityGrid`] is either a pointwise-sampled density (from closed forms
//! or integrators) or a histogram (piecewise-constant over bins). Quadrature is
//! done in the grid's natural coordinate: trapezoid in `ln x` for geometric
//! grids, trapezoid in `x` otherwise, exact bin sums for histograms. Mass that
//! falls outside the sampled range is estimated by power-law extrapolation
//! from the two outermost points at each end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "grid";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Geometric,
    Irregular,
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBins {
    /// `edges.len() == counts.len() + 1`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl HistogramBins {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }
}

/// Normalization and provenance metadata, written as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub spacing: Spacing,
    /// Mass captured by quadrature over the grid itself.
    pub mass: f64,
    /// Extrapolated mass below the first and above the last grid point;
    /// infinite when an end of the density is not integrable.
    #[serde(with = "extended_f64")]
    pub outside_mass: f64,
    /// Truncation bounds: the income range the grid (or its bins) covers.
    pub lower: f64,
    pub upper: f64,
    /// Mean income of the underlying data when known (sample mean for histograms).
    pub mean: Option<f64>,
    /// Set once the grid has been rescaled to `x / mean`.
    pub rescaled_by: Option<f64>,
    pub histogram: Option<HistogramBins>,
}

/// JSON has no infinities: non-finite values travel as `"inf"`, `"-inf"`, `"nan"`.
mod extended_f64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            v if v.is_finite() => s.serialize_f64(v),
            v if v.is_nan() => s.serialize_str("nan"),
            v if v > 0.0 => s.serialize_str("inf"),
            _ => s.serialize_str("-inf"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                _ => Err(D::Error::custom(format!("expected a number, got `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    x: Vec<f64>,
    density: Vec<f64>,
    meta: GridMeta,
}

fn detect_spacing(x: &[f64]) -> Spacing {
    const TOL: f64 = 1e-9;
    if x.len() < 3 {
        return Spacing::Linear;
    }
    let d0 = x[1] - x[0];
    if x.windows(2).all(|w| ((w[1] - w[0]) - d0).abs() <= TOL * d0.abs().max(f64::MIN_POSITIVE)) {
        return Spacing::Linear;
    }
    if x[0] > 0.0 {
        let r0 = (x[1] / x[0]).ln();
        if x.windows(2).all(|w| ((w[1] / w[0]).ln() - r0).abs() <= TOL * r0.abs()) {
            return Spacing::Geometric;
        }
    }
    Spacing::Irregular
}

/// `n` geometrically spaced points on `[lo, hi]`, endpoints exact.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) || !hi.is_finite() {
        return Err(Error::invalid(
            MODULE,
            format!("geometric grid needs 0 < lo < hi and n >= 2 (lo={lo}, hi={hi}, n={n})"),
        ));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    let mut x: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
    x[0] = lo;
    x[n - 1] = hi;
    Ok(x)
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo >= 0.0 && hi > lo && n >= 2) || !hi.is_finite() {
        return Err(Error::invalid(
            MODULE,
            format!("linear grid needs 0 <= lo < hi and n >= 2 (lo={lo}, hi={hi}, n={n})"),
        ));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let mut x: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    x[n - 1] = hi;
    Ok(x)
}

/// Default income grid: 4096 geometric points on `[1e-3, 1e3] * mean`.
pub fn default_grid(mean: f64) -> Result<Vec<f64>> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::invalid(MODULE, format!("mean must be positive, got {mean}")));
    }
    geometric_grid(1e-3 * mean, 1e3 * mean, 4096)
}

/// Contribution of a power law through the two given points, integrated from
/// `0` to `x0` (head) where the pair is the first two points.
fn head_extrapolation(x0: f64, f0: f64, x1: f64, f1: f64) -> f64 {
    if x0 <= 0.0 || f0 == 0.0 || f1 == 0.0 || f0.signum() != f1.signum() {
        return 0.0;
    }
    let p = (f1 / f0).ln() / (x1 / x0).ln();
    if p <= -1.0 || !p.is_finite() {
        return f64::INFINITY * f0.signum();
    }
    f0 * x0 / (p + 1.0)
}

/// Same, integrated from `xn` to infinity, with `(xm, fm)` the second-to-last point.
fn tail_extrapolation(xm: f64, fm: f64, xn: f64, fn_: f64) -> f64 {
    if fn_ == 0.0 || fm == 0.0 || fn_.signum() != fm.signum() {
        return 0.0;
    }
    let alpha = -(fn_ / fm).ln() / (xn / xm).ln();
    if alpha <= 1.0 || !alpha.is_finite() {
        return f64::INFINITY * fn_.signum();
    }
    fn_ * xn / (alpha - 1.0)
}

/// Quadrature pieces of an integrand sampled on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub interior: f64,
    pub head: f64,
    pub tail: f64,
}

impl Quadrature {
    pub fn total(&self) -> f64 {
        self.interior + self.head + self.tail
    }
}

impl DensityGrid {
    /// Pointwise-sampled density. Metadata is computed; no normalization.
    pub fn sampled(x: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        validate_points(&x, &density)?;
        let spacing = detect_spacing(&x);
        let meta = GridMeta {
            spacing,
            mass: 0.0,
            outside_mass: 0.0,
            lower: x[0],
            upper: *x.last().unwrap(),
            mean: None,
            rescaled_by: None,
            histogram: None,
        };
        let mut grid = DensityGrid { x, density, meta };
        grid.refresh_mass();
        Ok(grid)
    }

    /// Histogram with density `count / (total * width)` in each bin, located
    /// at the given representative points.
    pub fn histogram(
        representatives: Vec<f64>,
        bins: HistogramBins,
        sample_mean: Option<f64>,
    ) -> Result<Self> {
        let n = bins.counts.len();
        if n == 0 || bins.edges.len() != n + 1 || representatives.len() != n {
            return Err(Error::invalid(MODULE, "histogram needs matching edges, counts and representatives"));
        }
        if bins.edges.windows(2).any(|w| !(w[1] > w[0])) || bins.edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::invalid(MODULE, "histogram edges must be finite and strictly increasing"));
        }
        let total = bins.total();
        if total == 0 {
            return Err(Error::invalid(MODULE, "histogram is empty"));
        }
        let density: Vec<f64> = (0..n)
            .map(|i| bins.counts[i] as f64 / (total as f64 * bins.width(i)))
            .collect();
        validate_values(&representatives, &density)?;
        let meta = GridMeta {
            spacing: Spacing::Histogram,
            mass: 0.0,
            outside_mass: 0.0,
            lower: bins.edges[0],
            upper: bins.edges[n],
            mean: sample_mean,
            rescaled_by: None,
            histogram: Some(bins),
        };
        let mut grid = DensityGrid {
            x: representatives,
            density,
            meta,
        };
        grid.refresh_mass();
        Ok(grid)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn meta(&self) -> &GridMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.meta.spacing
    }

    pub fn is_histogram(&self) -> bool {
        self.meta.histogram.is_some()
    }

    pub fn set_mean(&mut self, mean: Option<f64>) {
        self.meta.mean = mean;
    }

    fn refresh_mass(&mut self) {
        let q = self.quadrature(&self.density.clone());
        self.meta.mass = q.interior;
        self.meta.outside_mass = q.head + q.tail;
    }

    /// Quadrature of integrand values `f[i]` sampled at the grid points.
    ///
    /// Histograms integrate as piecewise constants with nothing outside the bins.
    pub fn quadrature(&self, f: &[f64]) -> Quadrature {
        assert_eq!(f.len(), self.x.len(), "integrand length must match grid");
        if let Some(h) = &self.meta.histogram {
            let interior = f.iter().enumerate().map(|(i, v)| v * h.width(i)).sum();
            return Quadrature {
                interior,
                head: 0.0,
                tail: 0.0,
            };
        }
        let x = &self.x;
        let n = x.len();
        let interior = match self.meta.spacing {
            Spacing::Geometric => x
                .windows(2)
                .zip(f.windows(2))
                .map(|(xw, fw)| 0.5 * (xw[1] / xw[0]).ln() * (xw[0] * fw[0] + xw[1] * fw[1]))
                .sum(),
            _ => x
                .windows(2)
                .zip(f.windows(2))
                .map(|(xw, fw)| 0.5 * (xw[1] - xw[0]) * (fw[0] + fw[1]))
                .sum(),
        };
        let head = head_extrapolation(x[0], f[0], x[1], f[1]);
        let tail = tail_extrapolation(x[n - 2], f[n - 2], x[n - 1], f[n - 1]);
        Quadrature {
            interior,
            head,
            tail,
        }
    }

    /// Quadrature of `g(x) * density(x)`.
    pub fn integrate_against(&self, g: impl Fn(f64) -> f64) -> Quadrature {
        let f: Vec<f64> = self.x.iter().zip(&self.density).map(|(&x, &r)| g(x) * r).collect();
        self.quadrature(&f)
    }

    /// Mass captured on the grid.
    pub fn mass(&self) -> f64 {
        self.meta.mass
    }

    /// Grid mass plus the extrapolated mass outside the grid.
    pub fn total_mass(&self) -> f64 {
        self.meta.mass + self.meta.outside_mass
    }

    /// Estimated mass above the last grid point.
    pub fn upper_tail_mass(&self) -> f64 {
        self.quadrature(&self.density).tail
    }

    /// Scale the density so that total mass (grid plus extrapolated ends) is one.
    pub fn normalize(&mut self) -> Result<()> {
        let total = self.total_mass();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::numerical(MODULE, format!("cannot normalize: total mass is {total}")));
        }
        for d in &mut self.density {
            *d /= total;
        }
        self.refresh_mass();
        Ok(())
    }

    /// Mean income: the stored sample mean when present, quadrature otherwise.
    pub fn mean(&self) -> f64 {
        if let Some(m) = self.meta.mean {
            return m;
        }
        let q = self.integrate_against(|x| x);
        q.total() / self.total_mass()
    }

    /// Change variables to `u = x / scale`, `rho_u = scale * rho_x`. Mass is preserved.
    pub fn rescaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(MODULE, format!("rescale factor must be positive, got {scale}")));
        }
        let x = self.x.iter().map(|v| v / scale).collect();
        let density = self.density.iter().map(|v| v * scale).collect();
        let mut meta = self.meta.clone();
        meta.lower /= scale;
        meta.upper /= scale;
        meta.mean = meta.mean.map(|m| m / scale);
        meta.rescaled_by = Some(meta.rescaled_by.unwrap_or(1.0) * scale);
        if let Some(h) = &mut meta.histogram {
            for e in &mut h.edges {
                *e /= scale;
            }
        }
        let mut grid = DensityGrid { x, density, meta };
        grid.refresh_mass();
        Ok(grid)
    }

    /// Cumulative distribution evaluated at the histogram edges (histograms only).
    pub fn histogram_cdf(&self) -> Option<Vec<(f64, f64)>> {
        let h = self.meta.histogram.as_ref()?;
        let total = h.total() as f64;
        let mut acc = 0u64;
        let mut out = Vec::with_capacity(h.edges.len());
        out.push((h.edges[0], 0.0));
        for (i, c) in h.counts.iter().enumerate() {
            acc += c;
            out.push((h.edges[i + 1], acc as f64 / total));
        }
        Some(out)
    }

    /// Write `x,density` CSV at `path` and the metadata sidecar next to it.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        let mut buf = String::with_capacity(self.x.len() * 40);
        buf.push_str("x,density\n");
        for (x, d) in self.x.iter().zip(&self.density) {
            buf.push_str(&format!("{x},{d}\n"));
        }
        out.write_all(buf.as_bytes())?;
        let sidecar = sidecar_path(path);
        fs::write(sidecar, serde_json::to_string_pretty(&self.meta)? + "\n")?;
        Ok(())
    }

    /// Read a grid written by [`write_csv`](Self::write_csv). Without a sidecar,
    /// the file is treated as a sampled density.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "density" {
            return Err(Error::invalid(MODULE, format!("{}: expected header `x,density`", path.display())));
        }
        let mut x = Vec::new();
        let mut density = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::invalid(MODULE, format!("{}: line {}: bad number `{s}`", path.display(), i + 2))
                })
            };
            x.push(parse(&rec[0])?);
            density.push(parse(&rec[1])?);
        }
        let sidecar = sidecar_path(path);
        if sidecar.exists() {
            let meta: GridMeta = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
            if meta.histogram.is_some() {
                validate_values(&x, &density)?;
            } else {
                validate_points(&x, &density)?;
            }
            if let Some(h) = &meta.histogram {
                if h.counts.len() != x.len() || h.edges.len() != x.len() + 1 {
                    return Err(Error::invalid(MODULE, "sidecar histogram does not match CSV rows"));
                }
            }
            Ok(DensityGrid { x, density, meta })
        } else {
            DensityGrid::sampled(x, density)
        }
    }
}

/// `foo.csv` -> `foo.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn validate_points(x: &[f64], density: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::invalid(MODULE, "grid needs at least two points"));
    }
    validate_values(x, density)
}

fn validate_values(x: &[f64], density: &[f64]) -> Result<()> {
    if x.is_empty() || x.len() != density.len() {
        return Err(Error::invalid(MODULE, "grid points and density values must be non-empty and match"));
    }
    if x.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(MODULE, "grid points must be finite and non-negative"));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(MODULE, "grid points must be strictly increasing"));
    }
    if density.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid(MODULE, "density values must be finite and non-negative"));
    }
    Ok(())
}
