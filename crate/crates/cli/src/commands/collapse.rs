use std::fmt::Write as _;
use std::fs;

use income_dynamics::estimation::{income_histogram, PanelDataset};
use income_dynamics::fitting::collapse_metric;
use serde::Serialize;

use crate::commands::{load_curve, rescaled_curve, Curve};
use crate::error::CliError;
use crate::{require_input, CollapseArgs, Ctx};

#[derive(Serialize)]
struct CurveSummary {
    label: String,
    mean: f64,
    points: usize,
}

#[derive(Serialize)]
struct Manifest {
    score: f64,
    curves: Vec<CurveSummary>,
}

pub fn run(ctx: &Ctx, args: &CollapseArgs) -> Result<(), CliError> {
    let s = &ctx.cfg.collapse;
    let binning = args.binning.unwrap_or(s.binning);
    let inputs = if args.inputs.is_empty() { &s.inputs } else { &args.inputs };
    let mut curves: Vec<Curve> = Vec::new();
    for path in inputs {
        curves.push(load_curve(&require_input(Some(path.clone()), "curve CSV")?, binning)?);
    }
    if let Some(panel) = args.panel.clone().or_else(|| s.panel.clone()) {
        let ingest = PanelDataset::read_csv(&require_input(Some(panel), "panel CSV (--panel)")?)?;
        if !ingest.malformed.is_empty() {
            return Err(CliError::Invalid(format!(
                "panel has malformed lines, first at line {}",
                ingest.malformed[0].line
            )));
        }
        for year in ingest.panel.years() {
            let hist = income_histogram(&ingest.panel, year, binning)?;
            curves.push(rescaled_curve(format!("year:{year}"), hist)?);
        }
    }
    if curves.len() < 2 {
        return Err(CliError::Usage(format!(
            "collapse needs at least two curves, got {}",
            curves.len()
        )));
    }
    let grids: Vec<_> = curves.iter().map(|c| c.density.clone()).collect();
    let score = collapse_metric(&grids)?;

    let mut csv = String::from("curve,u,density\n");
    for c in &curves {
        for (u, d) in c.density.x().iter().zip(c.density.density()) {
            writeln!(csv, "{},{u},{d}", c.label).expect("writing to a String");
        }
    }
    let path = ctx.path("collapsed.csv");
    fs::write(&path, csv)?;
    ctx.wrote(&path);
    ctx.write_json(
        "collapse.json",
        &Manifest {
            score,
            curves: curves
                .iter()
                .map(|c| CurveSummary {
                    label: c.label.clone(),
                    mean: c.mean,
                    points: c.density.len(),
                })
                .collect(),
        },
    )?;
    ctx.note(format!("collapse score = {score}"));
    Ok(())
}
