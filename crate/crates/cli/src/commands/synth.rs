use income_dynamics::montecarlo::{generate_panel, SyntheticPanelConfig};
use serde::Serialize;

use crate::error::CliError;
use crate::{Ctx, SynthArgs};

#[derive(Serialize)]
struct YearCount {
    year: i32,
    population: usize,
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    config: SyntheticPanelConfig,
    records: usize,
    employees: usize,
    years: Vec<YearCount>,
}

pub fn run(ctx: &Ctx, args: &SynthArgs) -> Result<(), CliError> {
    let s = &ctx.cfg.synth;
    let cfg = SyntheticPanelConfig {
        years: args.years.unwrap_or(s.years),
        first_year: s.first_year,
        population: args.population.unwrap_or(s.population),
        growth_u: args.growth_u.unwrap_or(s.growth_u),
        growth_g: s.growth_g,
        noise: args.noise.unwrap_or(s.noise),
        kernels: ctx.cfg.kernels.params()?,
        entry: s.entry,
        initial_shape: s.initial_shape,
        seed: ctx.seed,
    };
    let panel = generate_panel(&cfg)?;
    let path = ctx.path("panel.csv");
    panel.write_csv(&path)?;
    ctx.wrote(&path);
    ctx.write_json(
        "synth_manifest.json",
        &Manifest {
            seed: ctx.seed,
            records: panel.len(),
            employees: panel.employee_count(),
            years: panel
                .years()
                .map(|year| YearCount {
                    year,
                    population: panel.population(year),
                })
                .collect(),
            config: cfg,
        },
    )?;
    Ok(())
}
