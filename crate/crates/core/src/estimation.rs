//! Panel-data estimators: log-binned growth increments, entry/exit reset
//! rates and income histograms.
//!
//! Bins are `[2^j, 2^(j+1))` with representative `w_j = 1.5 * 2^j`. Each
//! statistic is computed per (bin, year), suppressed below a minimum count,
//! then averaged across years; the reported spread is the sample standard
//! deviation across those years.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityGrid, HistogramBins};
use crate::par::Exec;

const MODULE: &str = "estimation";

/// Default minimum number of observations per (bin, year).
pub const DEFAULT_MIN_COUNT: u64 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub employee_id: String,
    pub year: i32,
    pub income: f64,
}

/// Employee-year incomes, indexed by employee with years ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PanelDataset {
    employees: BTreeMap<String, Vec<(i32, f64)>>,
    years: BTreeSet<i32>,
    records: usize,
}

/// A CSV line that could not be ingested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MalformedLine {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct PanelIngest {
    pub panel: PanelDataset,
    pub malformed: Vec<MalformedLine>,
    pub lines: u64,
}

impl PanelIngest {
    pub fn malformed_fraction(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.malformed.len() as f64 / self.lines as f64
        }
    }
}

impl PanelDataset {
    pub fn new(records: impl IntoIterator<Item = PanelRecord>) -> Result<Self> {
        let mut panel = PanelDataset::default();
        for r in records {
            panel.insert(r)?;
        }
        Ok(panel)
    }

    fn insert(&mut self, r: PanelRecord) -> Result<()> {
        if !(r.income > 0.0 && r.income.is_finite()) {
            return Err(Error::invalid(
                MODULE,
                format!("income must be positive, got {} for {} in {}", r.income, r.employee_id, r.year),
            ));
        }
        let obs = self.employees.entry(r.employee_id.clone()).or_default();
        match obs.binary_search_by_key(&r.year, |o| o.0) {
            Ok(_) => {
                return Err(Error::invalid(
                    MODULE,
                    format!("duplicate record for {} in {}", r.employee_id, r.year),
                ))
            }
            Err(pos) => obs.insert(pos, (r.year, r.income)),
        }
        self.years.insert(r.year);
        self.records += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records == 0
    }

    pub fn employee_count(&self) -> usize {
        self.employees.len()
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.years.iter().copied()
    }

    pub fn employees(&self) -> impl Iterator<Item = (&str, &[(i32, f64)])> {
        self.employees.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Records ordered by employee id, then year.
    pub fn records(&self) -> impl Iterator<Item = PanelRecord> + '_ {
        self.employees.iter().flat_map(|(id, obs)| {
            obs.iter().map(move |&(year, income)| PanelRecord {
                employee_id: id.clone(),
                year,
                income,
            })
        })
    }

    pub fn incomes_in(&self, year: i32) -> Vec<f64> {
        self.employees.values().filter_map(|obs| income_at(obs, year)).collect()
    }

    pub fn population(&self, year: i32) -> usize {
        self.employees.values().filter(|obs| income_at(obs, year).is_some()).count()
    }

    pub fn read_csv(path: &Path) -> Result<PanelIngest> {
        let text = fs::read_to_string(path)?;
        Self::parse_csv(&text)
    }

    /// Parses `employee_id,year,income` text. Unparseable rows, non-positive
    /// incomes and duplicates are reported and skipped; a missing header is
    /// an error.
    pub fn parse_csv(text: &str) -> Result<PanelIngest> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let names: Vec<&str> = headers.iter().map(str::trim).collect();
        if names != ["employee_id", "year", "income"] {
            return Err(Error::invalid(MODULE, "expected header `employee_id,year,income`"));
        }
        let mut panel = PanelDataset::default();
        let mut malformed = Vec::new();
        let mut lines = 0;
        for rec in rdr.records() {
            lines += 1;
            let rec = match rec {
                Ok(r) => r,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    malformed.push(MalformedLine {
                        line,
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let line = rec.position().map_or(0, |p| p.line());
            let parsed = (|| -> std::result::Result<PanelRecord, String> {
                if rec.len() != 3 {
                    return Err(format!("expected 3 fields, found {}", rec.len()));
                }
                let employee_id = rec[0].trim().to_string();
                if employee_id.is_empty() {
                    return Err("empty employee_id".into());
                }
                let year = rec[1].trim().parse::<i32>().map_err(|_| format!("bad year `{}`", &rec[1]))?;
                let income = rec[2].trim().parse::<f64>().map_err(|_| format!("bad income `{}`", &rec[2]))?;
                Ok(PanelRecord {
                    employee_id,
                    year,
                    income,
                })
            })();
            match parsed.map_err(|reason| MalformedLine { line, reason }) {
                Ok(r) => {
                    if let Err(e) = panel.insert(r) {
                        malformed.push(MalformedLine {
                            line,
                            reason: e.to_string(),
                        });
                    }
                }
                Err(m) => malformed.push(m),
            }
        }
        Ok(PanelIngest {
            panel,
            malformed,
            lines,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = String::with_capacity(self.records * 24 + 32);
        buf.push_str("employee_id,year,income\n");
        for (id, obs) in &self.employees {
            for (year, income) in obs {
                buf.push_str(&format!("{id},{year},{income}\n"));
            }
        }
        fs::File::create(path)?.write_all(buf.as_bytes())?;
        Ok(())
    }
}

fn income_at(obs: &[(i32, f64)], year: i32) -> Option<f64> {
    obs.binary_search_by_key(&year, |o| o.0).ok().map(|i| obs[i].1)
}

/// Index `j` with `2^j <= w < 2^(j+1)`.
pub fn log2_bin(w: f64) -> i32 {
    let mut j = w.log2().floor() as i32;
    if 2f64.powi(j) > w {
        j -= 1;
    } else if 2f64.powi(j + 1) <= w {
        j += 1;
    }
    j
}

/// Arithmetic bin midpoint `1.5 * 2^j`.
pub fn bin_representative(j: i32) -> f64 {
    1.5 * 2f64.powi(j)
}

/// Inclusive range of years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub first: i32,
    pub last: i32,
}

impl YearRange {
    pub fn new(first: i32, last: i32) -> Result<Self> {
        if first > last {
            return Err(Error::invalid(MODULE, format!("empty year range {first}..={last}")));
        }
        Ok(YearRange { first, last })
    }

    /// The span of years present in `panel`.
    pub fn of(panel: &PanelDataset) -> Result<Self> {
        let first = panel.years.first().copied();
        let last = panel.years.last().copied();
        match (first, last) {
            (Some(a), Some(b)) => Ok(YearRange { first: a, last: b }),
            _ => Err(Error::invalid(MODULE, "panel has no records")),
        }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.first..=self.last).contains(&year)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BinOptions {
    pub min_count: u64,
    pub exec: Exec,
}

impl Default for BinOptions {
    fn default() -> Self {
        BinOptions {
            min_count: DEFAULT_MIN_COUNT,
            exec: Exec::default(),
        }
    }
}

impl BinOptions {
    pub fn with_min_count(min_count: u64) -> Self {
        BinOptions {
            min_count,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStat {
    pub j: i32,
    pub w_j: f64,
    pub value: f64,
    pub spread: f64,
    pub count: u64,
}

/// Per-bin statistic averaged over years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogBinnedSeries {
    pub bins: Vec<BinStat>,
    /// Years that contributed to at least one bin.
    pub years: Vec<i32>,
    /// Always `"std_dev_across_years"`.
    pub spread_kind: String,
}

pub const SPREAD_KIND: &str = "std_dev_across_years";

impl LogBinnedSeries {
    pub fn from_bins(bins: Vec<BinStat>) -> Self {
        LogBinnedSeries {
            bins,
            years: Vec::new(),
            spread_kind: SPREAD_KIND.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn get(&self, j: i32) -> Option<&BinStat> {
        self.bins.iter().find(|b| b.j == j)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = String::from("j,w_j,value,spread,count\n");
        for b in &self.bins {
            buf.push_str(&format!("{},{},{},{},{}\n", b.j, b.w_j, b.value, b.spread, b.count));
        }
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if headers != ["j", "w_j", "value", "spread", "count"] {
            return Err(Error::invalid(
                MODULE,
                format!("{}: expected header `j,w_j,value,spread,count`", path.display()),
            ));
        }
        let mut bins = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |what: &str| Error::invalid(MODULE, format!("{}: line {line}: bad {what}", path.display()));
            bins.push(BinStat {
                j: rec[0].trim().parse().map_err(|_| bad("j"))?,
                w_j: rec[1].trim().parse().map_err(|_| bad("w_j"))?,
                value: rec[2].trim().parse().map_err(|_| bad("value"))?,
                spread: rec[3].trim().parse().map_err(|_| bad("spread"))?,
                count: rec[4].trim().parse().map_err(|_| bad("count"))?,
            });
        }
        Ok(Self::from_bins(bins))
    }
}

/// Per-year (bin -> (statistic, count)) maps, combined across years.
/// Per-bin `(sum, count)` of one year.
type BinSums = BTreeMap<i32, (f64, u64)>;

fn combine_years(per_year: Vec<(i32, BinSums)>) -> LogBinnedSeries {
    let mut by_bin: BTreeMap<i32, Vec<(f64, u64)>> = BTreeMap::new();
    let mut years = BTreeSet::new();
    for (year, bins) in per_year {
        for (j, v) in bins {
            by_bin.entry(j).or_default().push(v);
            years.insert(year);
        }
    }
    let bins = by_bin
        .into_iter()
        .map(|(j, vals)| {
            let n = vals.len() as f64;
            let mean = vals.iter().map(|v| v.0).sum::<f64>() / n;
            let spread = if vals.len() > 1 {
                (vals.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            BinStat {
                j,
                w_j: bin_representative(j),
                value: mean,
                spread,
                count: vals.iter().map(|v| v.1).sum(),
            }
        })
        .collect();
    LogBinnedSeries {
        bins,
        years: years.into_iter().collect(),
        spread_kind: SPREAD_KIND.to_string(),
    }
}

/// Mean one-year income change per bin of the starting income, averaged over
/// the year pairs `(k, k + 1)` inside `range`.
pub fn growth_increments(panel: &PanelDataset, range: YearRange, opts: BinOptions) -> Result<LogBinnedSeries> {
    let starts: Vec<i32> = (range.first..range.last)
        .filter(|k| panel.years.contains(k) && panel.years.contains(&(k + 1)))
        .collect();
    if starts.is_empty() {
        return Err(Error::invalid(
            MODULE,
            format!("year range {}..={} has no two consecutive panel years", range.first, range.last),
        ));
    }
    let per_year: Vec<(i32, BinSums, u64)> = opts.exec.map_slice(&starts, |&k| {
        let mut acc = BinSums::new();
        let mut pairs = 0;
        for obs in panel.employees.values() {
            if let (Some(w0), Some(w1)) = (income_at(obs, k), income_at(obs, k + 1)) {
                let e = acc.entry(log2_bin(w0)).or_insert((0.0, 0));
                e.0 += w1 - w0;
                e.1 += 1;
                pairs += 1;
            }
        }
        let kept = acc
            .into_iter()
            .filter(|(_, (_, c))| *c >= opts.min_count)
            .map(|(j, (s, c))| (j, (s / c as f64, c)))
            .collect();
        (k, kept, pairs)
    });
    if per_year.iter().all(|y| y.2 == 0) {
        return Err(Error::invalid(MODULE, "no employee is observed in two consecutive years"));
    }
    Ok(combine_years(per_year.into_iter().map(|(k, b, _)| (k, b)).collect()))
}

/// Raw counts behind one year of [`reset_rates`], over all bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetYear {
    pub year: i32,
    pub entrants: u64,
    pub leavers: u64,
    /// Employees present in the previous year.
    pub previous_population: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetDiagnostics {
    pub years: Vec<ResetYear>,
    /// Employees with gaps in their presence, left out of entry/exit counts.
    pub excluded_employees: u64,
}

/// Net exit rate per bin, `(N_out(k) - N_in(k)) / N(k - 1)`, averaged over
/// the years `k` in `range` that have both a previous and a next panel year.
///
/// Leavers are binned by their last income and entrants by their first.
pub fn reset_rates(
    panel: &PanelDataset,
    range: YearRange,
    opts: BinOptions,
) -> Result<(LogBinnedSeries, ResetDiagnostics)> {
    if range.last - range.first < 2 {
        return Err(Error::invalid(MODULE, "reset rates need a range of at least three years"));
    }
    let ks: Vec<i32> = (range.first..=range.last)
        .filter(|k| panel.years.contains(&(k - 1)) && panel.years.contains(k) && panel.years.contains(&(k + 1)))
        .collect();
    if ks.is_empty() {
        return Err(Error::invalid(
            MODULE,
            "no year in range has both a previous and a next year in the panel",
        ));
    }
    let clean = |obs: &[(i32, f64)]| obs.windows(2).all(|w| w[1].0 == w[0].0 + 1);
    let excluded = panel.employees.values().filter(|obs| !clean(obs)).count() as u64;

    type Counts = BTreeMap<i32, (u64, u64, u64)>;
    let per_year: Vec<(i32, Counts, ResetYear)> = opts.exec.map_slice(&ks, |&k| {
        // (out, in, previous population) per bin.
        let mut acc: Counts = BTreeMap::new();
        let mut row = ResetYear {
            year: k,
            entrants: 0,
            leavers: 0,
            previous_population: 0,
        };
        for obs in panel.employees.values() {
            if let Some(w) = income_at(obs, k - 1) {
                acc.entry(log2_bin(w)).or_default().2 += 1;
                row.previous_population += 1;
            }
            if !clean(obs) {
                continue;
            }
            let (first, last) = (obs[0], obs[obs.len() - 1]);
            if last.0 == k {
                acc.entry(log2_bin(last.1)).or_default().0 += 1;
                row.leavers += 1;
            }
            if first.0 == k {
                acc.entry(log2_bin(first.1)).or_default().1 += 1;
                row.entrants += 1;
            }
        }
        (k, acc, row)
    });
    let mut rows = Vec::with_capacity(per_year.len());
    let combined = per_year
        .into_iter()
        .map(|(k, acc, row)| {
            rows.push(row);
            let kept = acc
                .into_iter()
                .filter(|(_, c)| c.2 > 0 && c.2 >= opts.min_count)
                .map(|(j, (out, inn, prev))| (j, ((out as f64 - inn as f64) / prev as f64, prev)))
                .collect();
            (k, kept)
        })
        .collect();
    Ok((
        combine_years(combined),
        ResetDiagnostics {
            years: rows,
            excluded_employees: excluded,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Binning {
    /// Bins `[2^j, 2^(j+1))`.
    Log2,
    /// Bins of fixed width aligned to multiples of `width`.
    Linear { width: f64 },
}

/// Normalized histogram density of one year's incomes.
pub fn income_histogram(panel: &PanelDataset, year: i32, binning: Binning) -> Result<DensityGrid> {
    let incomes = panel.incomes_in(year);
    if incomes.is_empty() {
        return Err(Error::invalid(MODULE, format!("no incomes recorded in {year}")));
    }
    histogram_of(&incomes, binning)
}

/// Normalized histogram of positive samples; stores the sample mean.
pub fn histogram_of(samples: &[f64], binning: Binning) -> Result<DensityGrid> {
    if samples.is_empty() {
        return Err(Error::invalid(MODULE, "no samples to bin"));
    }
    if samples.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(MODULE, "samples must be positive and finite"));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let (edges, counts, reps) = match binning {
        Binning::Log2 => {
            let mut counts: BTreeMap<i32, u64> = BTreeMap::new();
            for &w in samples {
                *counts.entry(log2_bin(w)).or_default() += 1;
            }
            let lo = *counts.keys().next().unwrap();
            let hi = *counts.keys().next_back().unwrap();
            let edges: Vec<f64> = (lo..=hi + 1).map(|j| 2f64.powi(j)).collect();
            let reps = (lo..=hi).map(bin_representative).collect();
            let c = (lo..=hi).map(|j| counts.get(&j).copied().unwrap_or(0)).collect();
            (edges, c, reps)
        }
        Binning::Linear { width } => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::invalid(MODULE, format!("bin width must be positive, got {width}")));
            }
            let idx = |w: f64| (w / width).floor() as i64;
            let lo = samples.iter().map(|&w| idx(w)).min().unwrap();
            let hi = samples.iter().map(|&w| idx(w)).max().unwrap();
            let n = (hi - lo + 1) as usize;
            let mut c = vec![0u64; n];
            for &w in samples {
                c[(idx(w) - lo) as usize] += 1;
            }
            let edges: Vec<f64> = (lo..=hi + 1).map(|i| i as f64 * width).collect();
            let reps = (0..n).map(|i| 0.5 * (edges[i] + edges[i + 1])).collect();
            (edges, c, reps)
        }
    };
    DensityGrid::histogram(reps, HistogramBins { edges, counts }, Some(mean))
}

/// `x -> x / mean`, `rho -> mean * rho`.
pub fn rescale(density: &DensityGrid, mean: f64) -> Result<DensityGrid> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::invalid(MODULE, format!("mean must be positive, got {mean}")));
    }
    density.rescaled(mean)
}
