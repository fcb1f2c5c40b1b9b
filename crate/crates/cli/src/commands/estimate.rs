use std::path::PathBuf;

use income_dynamics::estimation::{
    growth_increments, income_histogram, reset_rates, Binning, BinOptions, MalformedLine, PanelDataset,
    ResetDiagnostics, YearRange,
};
use serde::Serialize;

use crate::commands::rescaled_curve;
use crate::error::CliError;
use crate::{require_input, Ctx, EstimateArgs};

#[derive(Serialize)]
struct ResetSummary {
    bins: usize,
    diagnostics: ResetDiagnostics,
}

#[derive(Serialize)]
struct HistogramSummary {
    year: i32,
    binning: Binning,
    incomes: usize,
    mean: f64,
}

#[derive(Serialize)]
struct Manifest {
    input: PathBuf,
    lines: u64,
    malformed: Vec<MalformedLine>,
    year_range: YearRange,
    min_count: u64,
    spread_kind: String,
    growth_bins: usize,
    /// Absent when the range is too short for entry and exit classification.
    reset: Option<ResetSummary>,
    histogram: HistogramSummary,
}

pub fn run(ctx: &Ctx, args: &EstimateArgs) -> Result<(), CliError> {
    let s = &ctx.cfg.estimate;
    let input = require_input(args.input.clone().or_else(|| s.input.clone()), "panel CSV (--input)")?;
    let ingest = PanelDataset::read_csv(&input)?;
    for m in &ingest.malformed {
        eprintln!("{}:{}: {}", input.display(), m.line, m.reason);
    }
    if ingest.malformed_fraction() > s.max_malformed_fraction {
        return Err(CliError::Invalid(format!(
            "{}: {} of {} data lines are malformed, above the {} limit",
            input.display(),
            ingest.malformed.len(),
            ingest.lines,
            s.max_malformed_fraction
        )));
    }
    let panel = &ingest.panel;
    if panel.is_empty() {
        return Err(CliError::Invalid(format!("{}: panel has no records", input.display())));
    }
    let full = YearRange::of(panel)?;
    let range = YearRange::new(
        args.first_year.or(s.first_year).unwrap_or(full.first),
        args.last_year.or(s.last_year).unwrap_or(full.last),
    )?;
    let opts = BinOptions::with_min_count(args.min_count.unwrap_or(s.min_count));

    let growth = growth_increments(panel, range, opts)?;
    let path = ctx.path("growth.csv");
    growth.write_csv(&path)?;
    ctx.wrote(&path);

    let reset = if range.last - range.first >= 2 {
        let (series, diagnostics) = reset_rates(panel, range, opts)?;
        let path = ctx.path("reset.csv");
        series.write_csv(&path)?;
        ctx.wrote(&path);
        Some(ResetSummary {
            bins: series.len(),
            diagnostics,
        })
    } else {
        ctx.warn("reset rates need at least three years; reset.csv not written");
        None
    };

    let year = args.histogram_year.or(s.histogram_year).unwrap_or(range.last);
    let binning = args.binning.unwrap_or(s.binning);
    let hist = income_histogram(panel, year, binning)?;
    let path = ctx.path("histogram.csv");
    hist.write_csv(&path)?;
    ctx.wrote(&path);
    let curve = rescaled_curve(format!("year:{year}"), hist)?;
    let path = ctx.path("histogram_rescaled.csv");
    curve.density.write_csv(&path)?;
    ctx.wrote(&path);

    ctx.write_json(
        "estimate_manifest.json",
        &Manifest {
            input,
            lines: ingest.lines,
            malformed: ingest.malformed.clone(),
            year_range: range,
            min_count: opts.min_count,
            spread_kind: growth.spread_kind.clone(),
            growth_bins: growth.len(),
            reset,
            histogram: HistogramSummary {
                year,
                binning,
                incomes: panel.population(year),
                mean: curve.mean,
            },
        },
    )?;
    Ok(())
}
