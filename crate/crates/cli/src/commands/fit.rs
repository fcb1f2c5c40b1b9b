use std::path::PathBuf;

use income_dynamics::analytic::tail_exponent;
use income_dynamics::estimation::LogBinnedSeries;
use income_dynamics::fitting::{
    fit_beta_prime, fit_growth_c, fit_reset_beta, fitted_shape, tail_slope, FitReport, ShapeConstraint,
};
use income_dynamics::grid::geometric_grid;
use serde::Serialize;

use crate::commands::load_curve;
use crate::config::FitKind;
use crate::error::CliError;
use crate::{require_input, Ctx, FitArgs};

/// Points of the written fitted curve on `[1e-2, 1e2]`.
const CURVE_POINTS: usize = 512;

#[derive(Serialize)]
struct Tail {
    window: [f64; 2],
    /// Log-log slope of the fitted density over the window.
    slope: f64,
    /// Asymptotic density exponent `-(s + 1)`.
    asymptotic_density_exponent: f64,
    /// Asymptotic exponent `s` of the cumulative tail.
    pareto_exponent: f64,
}

#[derive(Serialize)]
struct Manifest {
    kind: FitKind,
    input: PathBuf,
    /// Mean the input was divided by (shape fits only).
    input_mean: Option<f64>,
    tail: Option<Tail>,
}

pub fn run(ctx: &Ctx, args: &FitArgs) -> Result<(), CliError> {
    let s = &ctx.cfg.fit;
    let kind = args.kind.unwrap_or(s.kind);
    let input = require_input(args.input.clone().or_else(|| s.input.clone()), "fit input (--input)")?;
    let provenance = format!("{}", input.display());
    let mut manifest = Manifest {
        kind,
        input: input.clone(),
        input_mean: None,
        tail: None,
    };
    let report: FitReport = match kind {
        FitKind::Growth => fit_growth_c(&LogBinnedSeries::read_csv(&input)?)?,
        FitKind::Reset => {
            let mean = args
                .mean_income
                .or(s.mean_income)
                .unwrap_or(ctx.cfg.kernels.mean_income);
            fit_reset_beta(&LogBinnedSeries::read_csv(&input)?, mean)?
        }
        FitKind::Shape => {
            let constraint = if args.free { ShapeConstraint::Free } else { s.constraint };
            let curve = load_curve(&input, s.binning)?;
            let report = fit_beta_prime(&curve.density, constraint)?;
            let shape = fitted_shape(&report)?;
            let fitted = shape.on_grid(&geometric_grid(1e-2, 1e2, CURVE_POINTS)?)?;
            let path = ctx.path("fit_curve.csv");
            fitted.write_csv(&path)?;
            ctx.wrote(&path);
            let [lo, hi] = s.tail_window;
            let (density_exp, pareto) = tail_exponent(&shape);
            manifest.tail = Some(Tail {
                window: s.tail_window,
                slope: tail_slope(&shape.on_grid(&geometric_grid(lo, hi, 256)?)?, lo, hi)?,
                asymptotic_density_exponent: density_exp,
                pareto_exponent: pareto,
            });
            manifest.input_mean = Some(curve.mean);
            report
        }
    }
    .with_provenance(provenance);
    let path = ctx.path("fit.json");
    report.write_json(&path)?;
    ctx.wrote(&path);
    let path = ctx.path("fit_residuals.csv");
    report.write_residuals_csv(&path)?;
    ctx.wrote(&path);
    ctx.write_json("fit_manifest.json", &manifest)?;
    for e in &report.estimates {
        ctx.note(format!("{} = {}", e.name, e.value));
    }
    for w in &report.warnings {
        ctx.warn(w);
    }
    Ok(())
}
