//! End-to-end runs of every subcommand through `run`, in temporary directories.

use std::fs;
use std::path::Path;

use clap::Parser;
use income_dynamics::estimation::{LogBinnedSeries, PanelDataset};
use income_dynamics::fitting::FitReport;
use income_dynamics::grid::DensityGrid;

use crate::{run, Cli};

/// Run the CLI with `args`; `@name` expands to `dir/name`. Returns the exit code.
fn cli(dir: &Path, args: &[&str]) -> Result<(), (u8, String)> {
    let expanded: Vec<String> = std::iter::once("income-dynamics".to_string())
        .chain(args.iter().map(|a| match a.strip_prefix('@') {
            Some(rest) => dir.join(rest).display().to_string(),
            None => a.to_string(),
        }))
        .collect();
    let parsed = Cli::try_parse_from(&expanded).map_err(|e| (e.exit_code() as u8, e.to_string()))?;
    run(parsed).map_err(|e| (e.code(), e.to_string()))
}

fn code(r: Result<(), (u8, String)>) -> u8 {
    r.map_or_else(|(c, _)| c, |_| 0)
}

fn ok(dir: &Path, args: &[&str]) {
    if let Err((c, msg)) = cli(dir, args) {
        panic!("{args:?} exited {c}: {msg}");
    }
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_output_dir_is_a_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let (c, msg) = cli(t.path(), &["synth", "--quiet"]).unwrap_err();
    assert_eq!(c, 2);
    assert!(msg.contains("--out"), "{msg}");
}

#[test]
fn bad_flags_and_configs_exit_2() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(code(cli(t.path(), &["frobnicate"])), 2);
    assert_eq!(code(cli(t.path(), &["synth", "--years", "many"])), 2);
    fs::write(t.path().join("bad.json"), r#"{"synth": {"yeras": 3}}"#).unwrap();
    assert_eq!(code(cli(t.path(), &["synth", "--config", "@bad.json", "--out", "@o"])), 2);
    assert_eq!(code(cli(t.path(), &["synth", "--config", "@missing.json", "--out", "@o"])), 2);
    assert_eq!(code(cli(t.path(), &["estimate", "--out", "@o", "--quiet"])), 2);
    assert_eq!(code(cli(t.path(), &["estimate", "--input", "@none.csv", "--out", "@o", "--quiet"])), 2);
}

#[test]
fn invalid_parameters_exit_2() {
    let t = tempfile::tempdir().unwrap();
    assert_eq!(code(cli(t.path(), &["synth", "--years", "0", "--out", "@o", "--quiet"])), 2);
    fs::write(t.path().join("k.json"), r#"{"kernels": {"beta": -1.0}}"#).unwrap();
    assert_eq!(code(cli(t.path(), &["stationary", "--config", "@k.json", "--out", "@o", "--quiet"])), 2);
}

#[test]
fn minimal_synth_grows_exactly() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["synth", "--years", "2", "--population", "100", "--noise", "0", "--growth-u", "0.2", "--out", "@o", "--quiet"]);
    let text = fs::read_to_string(t.path().join("o/panel.csv")).unwrap();
    assert!(text.starts_with("employee_id,year,income\n"));
    let panel = PanelDataset::read_csv(&t.path().join("o/panel.csv")).unwrap().panel;
    assert_eq!(panel.population(2000), 100);
    let mut pairs = 0;
    for (_, obs) in panel.employees() {
        for w in obs.windows(2) {
            assert!((w[1].1 - 1.2 * w[0].1).abs() <= 1e-12 * w[1].1);
            pairs += 1;
        }
    }
    assert!(pairs > 50, "{pairs}");
}

#[test]
fn seed_flag_overrides_config() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("c.json"), r#"{"seed": 1, "synth": {"years": 2, "population": 200}}"#).unwrap();
    ok(t.path(), &["synth", "--config", "@c.json", "--seed", "99", "--out", "@a", "--quiet"]);
    let manifest = json(&t.path().join("a/synth_manifest.json"));
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["config"]["population"], 200);
}

#[test]
fn estimate_hand_panel() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("p.csv"),
        "employee_id,year,income\nA,2000,100\nA,2001,121\nB,2000,90\nB,2001,108\nC,2000,500\nC,2001,610\n",
    )
    .unwrap();
    fs::write(t.path().join("c.json"), r#"{"estimate": {"min_count": 1}}"#).unwrap();
    ok(t.path(), &["estimate", "--config", "@c.json", "--input", "@p.csv", "--out", "@o", "--quiet"]);
    let g = LogBinnedSeries::read_csv(&t.path().join("o/growth.csv")).unwrap();
    assert_eq!(g.get(6).unwrap().value, 19.5);
    assert_eq!(g.get(8).unwrap().value, 110.0);
    assert!(!t.path().join("o/reset.csv").exists());
}

#[test]
fn estimate_empty_panel_fails() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("p.csv"), "employee_id,year,income\n").unwrap();
    assert_eq!(code(cli(t.path(), &["estimate", "--input", "@p.csv", "--out", "@o", "--quiet"])), 2);
}

fn panel_with_bad_lines(bad: &[&str]) -> String {
    let mut csv = String::from("employee_id,year,income\n");
    for i in 0..50 {
        csv.push_str(&format!("E{i},2000,{}\nE{i},2001,{}\n", 100 + i, 120 + i));
    }
    for line in bad {
        csv.push_str(line);
        csv.push('\n');
    }
    csv
}

#[test]
fn estimate_aborts_above_malformed_limit() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("p.csv"), panel_with_bad_lines(&["X,2000,abc", "Y,20x1,5"])).unwrap();
    let (c, msg) = cli(t.path(), &["estimate", "--input", "@p.csv", "--out", "@o", "--quiet"]).unwrap_err();
    assert_eq!(c, 2);
    assert!(msg.contains("2 of 102"), "{msg}");
}

#[test]
fn estimate_records_malformed_lines_below_limit() {
    let t = tempfile::tempdir().unwrap();
    fs::write(t.path().join("p.csv"), panel_with_bad_lines(&["X,2000,abc"])).unwrap();
    fs::write(t.path().join("c.json"), r#"{"estimate": {"min_count": 1}}"#).unwrap();
    ok(t.path(), &["estimate", "--config", "@c.json", "--input", "@p.csv", "--out", "@o", "--quiet"]);
    let m = json(&t.path().join("o/estimate_manifest.json"));
    assert_eq!(m["malformed"][0]["line"], 102);
}

#[test]
fn synthetic_default_pipeline() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["synth", "--population", "20000", "--out", "@s", "--quiet"]);
    ok(t.path(), &["estimate", "--input", "@s/panel.csv", "--out", "@e", "--quiet"]);
    for (file, header) in [
        ("growth.csv", "j,w_j,value,spread,count"),
        ("reset.csv", "j,w_j,value,spread,count"),
        ("histogram.csv", "x,density"),
    ] {
        let text = fs::read_to_string(t.path().join("e").join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{file}");
    }
    let path = t.path().join("e/growth.csv");
    let series = LogBinnedSeries::read_csv(&path).unwrap();
    series.write_csv(&t.path().join("again.csv")).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(t.path().join("again.csv")).unwrap());
    let h = DensityGrid::read_csv(&t.path().join("e/histogram.csv")).unwrap();
    assert!(h.is_histogram());
    assert!((h.total_mass() - 1.0).abs() < 1e-12);

    ok(t.path(), &["fit", "--kind", "growth", "--input", "@e/growth.csv", "--out", "@g", "--quiet"]);
    let c = FitReport::read_json(&t.path().join("g/fit.json")).unwrap().estimate("C").unwrap();
    assert!((0.18..=0.23).contains(&c), "{c}");
    ok(t.path(), &["fit", "--kind", "reset", "--input", "@e/reset.csv", "--out", "@r", "--quiet"]);
    let b = FitReport::read_json(&t.path().join("r/fit.json")).unwrap().estimate("beta").unwrap();
    assert!((0.057 * 0.8..=0.057 * 1.2).contains(&b), "{b}");
}

#[test]
fn stationary_matches_closed_form() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["stationary", "--out", "@o", "--quiet"]);
    let num = DensityGrid::read_csv(&t.path().join("o/stationary.csv")).unwrap();
    let exact = DensityGrid::read_csv(&t.path().join("o/stationary_analytic.csv")).unwrap();
    assert_eq!(num.x(), exact.x());
    for (a, b) in num.density().iter().zip(exact.density()) {
        if *b > 1e-300 {
            assert!(((a - b) / b).abs() < 1e-6);
        }
    }
}

#[test]
fn fit_on_master_curve_samples() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["simulate", "--mode", "beta-prime", "--samples", "100000", "--out", "@s", "--quiet"]);
    ok(t.path(), &["fit", "--input", "@s/samples.csv", "--out", "@f", "--quiet"]);
    let r = FitReport::read_json(&t.path().join("f/fit.json")).unwrap();
    assert!((r.estimate("a").unwrap() - 5.0).abs() < 0.2);
    let residuals = fs::read_to_string(t.path().join("f/fit_residuals.csv")).unwrap();
    assert!(residuals.starts_with("x,observed,fitted,residual,weight\n"));
    assert!(t.path().join("f/fit_curve.csv").exists());
}

#[test]
fn collapse_separates_shapes() {
    let t = tempfile::tempdir().unwrap();
    let score = |name: &str, shapes: &[f64]| -> f64 {
        let mut files = Vec::new();
        for (i, a) in shapes.iter().enumerate() {
            let mean = 767.0 * [1.0, 1.3, 1.7, 2.1, 2.8][i];
            let dir = format!("{name}{i}");
            let cfg = format!(r#"{{"simulate": {{"a": {a}, "mean": {mean}, "samples": 50000}}}}"#);
            fs::write(t.path().join(format!("{dir}.json")), cfg).unwrap();
            let seed = i.to_string();
            let (cfg_arg, out_arg) = (format!("@{dir}.json"), format!("@{dir}"));
            ok(
                t.path(),
                &["simulate", "--mode", "beta-prime", "--seed", &seed, "--config", &cfg_arg, "--out", &out_arg, "--quiet"],
            );
            files.push(format!("@{dir}/samples.csv"));
        }
        let out = format!("{name}_collapse");
        let out_arg = format!("@{out}");
        let mut args = vec!["collapse", "--out", out_arg.as_str(), "--quiet"];
        args.extend(files.iter().map(String::as_str));
        ok(t.path(), &args);
        json(&t.path().join(&out).join("collapse.json"))["score"].as_f64().unwrap()
    };
    let same = score("same", &[5.0; 5]);
    let mixed = score("mixed", &[5.0, 3.8, 5.0, 3.8, 5.0]);
    assert!(same < mixed, "{same} {mixed}");
}

#[test]
fn collapse_needs_two_curves() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["simulate", "--mode", "beta-prime", "--samples", "2000", "--out", "@s", "--quiet"]);
    assert_eq!(code(cli(t.path(), &["collapse", "@s/samples.csv", "--out", "@c", "--quiet"])), 2);
}

#[test]
fn simulate_writes_snapshots_and_manifest() {
    let t = tempfile::tempdir().unwrap();
    ok(t.path(), &["simulate", "--agents", "2000", "--t-end", "2", "--snapshots", "2", "--out", "@o", "--quiet"]);
    for i in 0..3 {
        let text = fs::read_to_string(t.path().join(format!("o/ensemble_{i:03}.csv"))).unwrap();
        assert_eq!(text.lines().count(), 2001);
    }
    let m = json(&t.path().join("o/simulate_manifest.json"));
    assert_eq!(m["clock"], 2.0);
    assert_eq!(m["snapshot_times"].as_array().unwrap().len(), 3);
    assert!(m["params"]["beta"].is_number());
}

#[test]
fn integrate_constrained_literal_stops_with_runtime_error() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("c.json"),
        r#"{"kernels": {"beta": 0.5, "mean_income": 1.0}, "integrate": {"grid": {"points": 512}}}"#,
    )
    .unwrap();
    let (c, msg) = cli(t.path(), &["integrate", "--config", "@c.json", "--out", "@o", "--quiet"]).unwrap_err();
    assert_eq!(c, 1);
    assert!(msg.contains("negative density"), "{msg}");
}

#[test]
fn integrate_relaxes_with_positive_resets() {
    let t = tempfile::tempdir().unwrap();
    fs::write(
        t.path().join("c.json"),
        r#"{"kernels": {"beta": 1.0, "mean_income": 1.0, "g": 1.0, "K": 3.0, "b": 0.5, "q": 1.0},
            "integrate": {"tol": 1e-3, "max_time": 50.0, "snapshot_every": 100, "grid": {"points": 256}}}"#,
    )
    .unwrap();
    ok(t.path(), &["integrate", "--config", "@c.json", "--out", "@o", "--quiet"]);
    let m = json(&t.path().join("o/integrate_manifest.json"));
    assert_eq!(m["run"]["converged"], true);
    let d = DensityGrid::read_csv(&t.path().join("o/density.csv")).unwrap();
    assert!((d.mass() - 1.0).abs() < 1e-2, "{}", d.mass());
    assert!(d.density().iter().all(|&v| v >= 0.0));
    assert!(t.path().join("o/snapshot_000000000.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    for out in ["@a", "@b"] {
        ok(t.path(), &["synth", "--years", "3", "--population", "3000", "--seed", "5", "--out", out, "--quiet"]);
    }
    for file in ["panel.csv", "synth_manifest.json"] {
        assert_eq!(
            fs::read(t.path().join("a").join(file)).unwrap(),
            fs::read(t.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
}
