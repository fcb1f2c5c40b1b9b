use income_dynamics::analytic::{stationary_from_kernels, BetaPrimeShape, PearsonType1};
use income_dynamics::grid::DensityGrid;
use income_dynamics::kernels::{Growth, Reset};
use serde::Serialize;

use crate::commands::grid_of;
use crate::error::CliError;
use crate::{Ctx, StationaryArgs};

#[derive(Serialize)]
struct Manifest {
    params: income_dynamics::kernels::KernelParams,
    closed_form: &'static str,
    /// Beta prime shape when `g = 0`.
    shape: Option<BetaPrimeShape>,
    /// Largest relative difference between the two files where the closed form exceeds 1e-300.
    max_rel_diff: f64,
}

pub fn run(ctx: &Ctx, args: &StationaryArgs) -> Result<(), CliError> {
    let p = ctx.cfg.kernels.params()?;
    let mut spec = ctx.cfg.stationary.grid;
    spec.points = args.points.unwrap_or(spec.points);
    let grid = grid_of(&spec, p.mean_income)?;
    let numeric = stationary_from_kernels(&Growth(p), &Reset(p), &grid)?;
    let (closed_form, shape, analytic) = if p.g == 0.0 {
        let shape = BetaPrimeShape::from_kernels(&p)?;
        ("beta_prime", Some(shape), shape.on_grid(&grid)?)
    } else {
        let pearson = PearsonType1::new(&p)?;
        let d = grid.iter().map(|&x| pearson.pdf(x)).collect::<Result<Vec<_>, _>>()?;
        ("pearson_type1", None, DensityGrid::sampled(grid.clone(), d)?)
    };
    let max_rel_diff = numeric
        .density()
        .iter()
        .zip(analytic.density())
        .filter(|(_, a)| **a > 1e-300)
        .map(|(n, a)| ((n - a) / a).abs())
        .fold(0.0, f64::max);
    let path = ctx.path("stationary.csv");
    numeric.write_csv(&path)?;
    ctx.wrote(&path);
    let path = ctx.path("stationary_analytic.csv");
    analytic.write_csv(&path)?;
    ctx.wrote(&path);
    ctx.write_json(
        "stationary_manifest.json",
        &Manifest {
            params: p,
            closed_form,
            shape,
            max_rel_diff,
        },
    )?;
    Ok(())
}
