//! Acceptance criteria AC-1 to AC-12. Runs every criterion, prints one
//! PASS/FAIL line each, and exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use income_dynamics::analytic::{beta_prime_cdf, beta_prime_pdf, stationary_from_kernels, BetaPrimeShape};
use income_dynamics::dynamics::{run_to_steady, step_continuous, DiscreteState, DiscreteSystem, FiniteVolume};
use income_dynamics::estimation::{
    growth_increments, histogram_of, rescale, reset_rates, BinOptions, Binning, YearRange,
};
use income_dynamics::fitting::{
    collapse_metric, fit_beta_prime, fit_growth_c, fit_reset_beta, fitted_shape, ks_distance, tail_slope,
    ShapeConstraint,
};
use income_dynamics::grid::{default_grid, geometric_grid, linear_grid, DensityGrid};
use income_dynamics::kernels::{conservation_checks, constrain, Reset};
use income_dynamics::montecarlo::{generate_panel, sample_beta_prime, simulate_ensemble, SyntheticPanelConfig};
use income_dynamics::par::Exec;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac1() -> Outcome {
    let shape = BetaPrimeShape::master(1.0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for u in linear_grid(0.0, 100.0, 1000).unwrap() {
        let got = beta_prime_pdf(u, &shape).map_err(|e| e.to_string())?;
        let want = 12.0 * u / (1.0 + u).powi(5);
        let err = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
        worst = worst.max(err);
    }
    check(worst < 1e-12, format!("max rel err {worst:.3e} (< 1e-12)"))
}

fn ac2() -> Outcome {
    let beta = 0.057;
    let p = constrain(beta, 1.0).map_err(|e| e.to_string())?;
    let grid = default_grid(1.0).unwrap();
    let rho = stationary_from_kernels(&|x: f64| beta * x, &Reset(p), &grid).map_err(|e| e.to_string())?;
    let shape = BetaPrimeShape::master(1.0).unwrap();
    let mut worst = 0.0f64;
    for (&u, &r) in rho.x().iter().zip(rho.density()) {
        if (0.01..=20.0).contains(&u) {
            let want = beta_prime_pdf(u, &shape).unwrap();
            worst = worst.max(((r - want) / want).abs());
        }
    }
    check(worst < 1e-6, format!("max rel err {worst:.3e} on u in [0.01, 20] (< 1e-6)"))
}

fn ac3() -> Outcome {
    let n_max = 120;
    let sys = DiscreteSystem::with_stable_step(vec![1.0; n_max + 1], vec![0.25; n_max + 1]).map_err(|e| e.to_string())?;
    let init = DiscreteState::point_mass(0, n_max, 1.0).unwrap();
    let out = run_to_steady(&sys, init, 1e-9, 1e4).map_err(|e| e.to_string())?;
    let l1: f64 = out
        .state
        .probs
        .iter()
        .enumerate()
        .map(|(n, p)| (p - 0.2 * 0.8f64.powi(n as i32)).abs())
        .sum();
    check(
        out.converged && l1 < 1e-6,
        format!("L1 {l1:.3e} (< 1e-6) after t = {:.1}, converged = {}", out.elapsed, out.converged),
    )
}

fn ac4() -> Outcome {
    let beta = 0.5;
    let p = constrain(beta, 1.0).map_err(|e| e.to_string())?;
    let grid = default_grid(1.0).unwrap();
    let shape = BetaPrimeShape::master(1.0).unwrap();
    let exact = shape.on_grid(&grid).unwrap();
    let dt = FiniteVolume::new(&grid, &p).map_err(|e| e.to_string())?.cfl_bound();
    let mut rho = DensityGrid::sampled(grid.clone(), grid.iter().map(|x| (-x).exp()).collect()).unwrap();
    let t_end = 200.0 / beta;
    let l1 = |d: &DensityGrid| {
        let diff: Vec<f64> = d.density().iter().zip(exact.density()).map(|(a, b)| (a - b).abs()).collect();
        d.quadrature(&diff).interior
    };
    let mut t = 0.0;
    while t < t_end {
        rho = match step_continuous(&rho, &p, dt) {
            Ok(next) => next,
            Err(e) => return Err(format!("integration stopped at t = {t:.3}: {e}")),
        };
        t += dt;
    }
    let d = l1(&rho);
    check(d < 1e-2, format!("L1 {d:.3e} (< 1e-2) at t = {t:.1} on {} points", grid.len()))
}

fn ac5() -> Outcome {
    let p = constrain(0.5, 1.0).map_err(|e| e.to_string())?;
    let history = simulate_ensemble(&p, 100_000, 40.0, 5).map_err(|e| e.to_string())?;
    let shape = BetaPrimeShape::master(1.0).unwrap();
    let incomes = history.last().incomes();
    let ks = ks_distance(&incomes, |x| beta_prime_cdf(x, &shape).unwrap()).map_err(|e| e.to_string())?;
    check(
        ks < 0.01,
        format!("KS {ks:.4} (< 0.01), N = 1e5, t = 40, mean income {:.4}", history.last().mean_income()),
    )
}

fn round_trip_panel() -> Result<income_dynamics::estimation::PanelDataset, String> {
    let p = constrain(0.057, 767.0).map_err(|e| e.to_string())?;
    let cfg = SyntheticPanelConfig::new(p, 5, 50_000, 0.21, 0.3, 2010);
    generate_panel(&cfg).map_err(|e| e.to_string())
}

fn ac6() -> Outcome {
    let panel = round_trip_panel()?;
    let range = YearRange::of(&panel).unwrap();
    let series = growth_increments(&panel, range, BinOptions::default()).map_err(|e| e.to_string())?;
    let fit = fit_growth_c(&series).map_err(|e| e.to_string())?;
    let c = fit.estimate("C").unwrap();
    check(
        (0.19..=0.23).contains(&c) && fit.goodness > 0.95,
        format!("C = {c:.4} (in [0.19, 0.23]), R2 = {:.4} (> 0.95)", fit.goodness),
    )
}

fn ac7() -> Outcome {
    let panel = round_trip_panel()?;
    let range = YearRange::of(&panel).unwrap();
    let (series, _) = reset_rates(&panel, range, BinOptions::default()).map_err(|e| e.to_string())?;
    let fit = fit_reset_beta(&series, 767.0).map_err(|e| e.to_string())?;
    let b = fit.estimate("beta").unwrap();
    check((0.046..=0.068).contains(&b), format!("beta = {b:.4} (in [0.046, 0.068])"))
}

fn ac8() -> Outcome {
    let mean = 767.0;
    let p = constrain(0.057, mean).map_err(|e| e.to_string())?;
    let rho = BetaPrimeShape::master(mean).unwrap().on_grid(&default_grid(mean).unwrap()).unwrap();
    let c = conservation_checks(&p, &rho).map_err(|e| e.to_string())?;
    check(
        c.delta_n.abs() < 1e-8 && c.delta_w.abs() < 1e-8 * mean,
        format!("|dN| = {:.2e} (< 1e-8), |dW| / mean = {:.2e} (< 1e-8)", c.delta_n.abs(), c.delta_w.abs() / mean),
    )
}

fn fit_samples(a: f64, n: usize, seed: u64) -> Result<f64, String> {
    let shape = BetaPrimeShape::constrained(a, 1.0).map_err(|e| e.to_string())?;
    let xs = sample_beta_prime(&shape, n, seed, Exec::default()).map_err(|e| e.to_string())?;
    let h = histogram_of(&xs, Binning::Log2).map_err(|e| e.to_string())?;
    let m = h.mean();
    let fit = fit_beta_prime(&rescale(&h, m).unwrap(), ShapeConstraint::Constrained).map_err(|e| e.to_string())?;
    Ok(fit.estimate("a").unwrap())
}

fn ac9() -> Outcome {
    let a5 = fit_samples(5.0, 100_000, 9)?;
    let a38 = fit_samples(3.8, 100_000, 10)?;
    check(
        (4.8..=5.2).contains(&a5) && (3.6..=4.0).contains(&a38),
        format!("a(5) = {a5:.4} (in [4.8, 5.2]), a(3.8) = {a38:.4} (in [3.6, 4.0])"),
    )
}

fn rescaled_year(a: f64, mean: f64, n: usize, seed: u64) -> DensityGrid {
    let shape = BetaPrimeShape::constrained(a, mean).unwrap();
    let xs = sample_beta_prime(&shape, n, seed, Exec::default()).unwrap();
    let h = histogram_of(&xs, Binning::Log2).unwrap();
    let m = h.mean();
    rescale(&h, m).unwrap()
}

fn ac10() -> Outcome {
    let means = [1.0, 1.3, 1.7, 2.1, 2.8];
    let n = 100_000;
    let same: Vec<DensityGrid> = means
        .iter()
        .enumerate()
        .map(|(i, &m)| rescaled_year(5.0, 767.0 * m, n, 100 + i as u64))
        .collect();
    let mixed: Vec<DensityGrid> = means
        .iter()
        .enumerate()
        .map(|(i, &m)| rescaled_year(if i % 2 == 0 { 5.0 } else { 3.8 }, 767.0 * m, n, 200 + i as u64))
        .collect();
    let s = collapse_metric(&same).map_err(|e| e.to_string())?;
    let x = collapse_metric(&mixed).map_err(|e| e.to_string())?;
    check(x >= 3.0 * s, format!("same shape {s:.4}, mixed {x:.4}, ratio {:.2} (>= 3)", x / s))
}

fn ac11() -> Outcome {
    let u = geometric_grid(1e-2, 50.0, 400).unwrap();
    let exact = BetaPrimeShape::master(1.0).unwrap().on_grid(&u).unwrap();
    let fit = fit_beta_prime(&exact, ShapeConstraint::Constrained).map_err(|e| e.to_string())?;
    let shape = fitted_shape(&fit).map_err(|e| e.to_string())?;
    let window = shape.on_grid(&geometric_grid(10.0, 100.0, 256).unwrap()).unwrap();
    let slope = tail_slope(&window, 10.0, 100.0).map_err(|e| e.to_string())?;
    check(
        (-4.2..=-3.8).contains(&slope),
        format!("slope {slope:.4} (in [-4.2, -3.8]) of fitted a = {:.6}", shape.a),
    )
}

fn run_cli(root: &Path, threads: &str, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_income-dynamics"))
        .current_dir(root)
        .env("RAYON_NUM_THREADS", threads)
        .args(args)
        .arg("--quiet")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(())
}

fn collect_files(dir: &Path, base: &Path, into: &mut BTreeMap<String, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, base, into);
        } else {
            let rel = path.strip_prefix(base).unwrap().display().to_string();
            into.insert(rel, fs::read(&path).unwrap());
        }
    }
}

const AC12_CONFIG: &str = r#"{
  "seed": 77,
  "synth": {"years": 4, "population": 4000},
  "simulate": {"agents": 2000, "t_end": 3.0, "snapshots": 2, "samples": 20000}
}"#;

const AC12_INTEGRATE: &str = r#"{
  "seed": 77,
  "kernels": {"beta": 1.0, "mean_income": 1.0, "g": 0.0, "K": 3.0, "b": 0.5, "q": 1.0},
  "integrate": {"tol": 1e-4, "max_time": 2.0, "dx": 0.05, "n_max": 4000, "grid": {"points": 256, "lower": 0.001, "upper": 1000.0}}
}"#;

fn cli_pipeline(root: &Path, threads: &str) -> Result<BTreeMap<String, Vec<u8>>, String> {
    fs::create_dir_all(root).unwrap();
    fs::write(root.join("run.json"), AC12_CONFIG).unwrap();
    fs::write(root.join("integrate.json"), AC12_INTEGRATE).unwrap();
    let steps: [&[&str]; 11] = [
        &["synth", "--config", "run.json", "--out", "out/synth"],
        &["estimate", "--config", "run.json", "--input", "out/synth/panel.csv", "--out", "out/estimate"],
        &["fit", "--config", "run.json", "--kind", "growth", "--input", "out/estimate/growth.csv", "--out", "out/fit_growth"],
        &["fit", "--config", "run.json", "--kind", "reset", "--input", "out/estimate/reset.csv", "--out", "out/fit_reset"],
        &["simulate", "--config", "run.json", "--mode", "beta-prime", "--out", "out/samples"],
        &["fit", "--config", "run.json", "--input", "out/samples/samples.csv", "--out", "out/fit_shape"],
        &["collapse", "--config", "run.json", "--panel", "out/synth/panel.csv", "--out", "out/collapse"],
        &["simulate", "--config", "run.json", "--out", "out/ensemble"],
        &["integrate", "--config", "integrate.json", "--out", "out/integrate"],
        &["integrate", "--config", "integrate.json", "--model", "discrete", "--max-time", "0.5", "--out", "out/integrate_discrete"],
        &["stationary", "--config", "run.json", "--points", "512", "--out", "out/stationary"],
    ];
    for args in steps {
        run_cli(root, threads, args)?;
    }
    let mut files = BTreeMap::new();
    collect_files(&root.join("out"), &root.join("out"), &mut files);
    Ok(files)
}

fn ac12() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = cli_pipeline(&tmp.path().join("a"), "1")?;
    let b = cli_pipeline(&tmp.path().join("b"), "4")?;
    let c = cli_pipeline(&tmp.path().join("c"), "4")?;
    let differing: Vec<&String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k) || b.get(*k) != c.get(*k))
        .collect();
    check(
        differing.is_empty() && a.len() == c.len(),
        format!("{} files across 7 subcommands, 3 runs at 1/4/4 threads, differing: {differing:?}", a.len()),
    )
}

/// Name, check, runtime budget in seconds.
type Criterion = (&'static str, fn() -> Outcome, Option<u64>);

fn main() {
    let criteria: [Criterion; 12] = [
        ("AC-1 master-curve identity", ac1, Some(1)),
        ("AC-2 stationary-solution chain", ac2, Some(1)),
        ("AC-3 discrete oracle", ac3, Some(10)),
        ("AC-4 PDE convergence", ac4, Some(60)),
        ("AC-5 Monte Carlo agreement", ac5, Some(120)),
        ("AC-6 growth estimator round trip", ac6, Some(60)),
        ("AC-7 reset estimator round trip", ac7, Some(60)),
        ("AC-8 conservation", ac8, Some(1)),
        ("AC-9 shape-fit recovery", ac9, Some(30)),
        ("AC-10 collapse discrimination", ac10, Some(60)),
        ("AC-11 tail exponent", ac11, Some(1)),
        ("AC-12 determinism", ac12, None),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, budget) {
            (Ok(d), Some(s)) if elapsed > Duration::from_secs(s) => Err(format!("{d}; took {elapsed:.2?}, budget {s} s")),
            (o, _) => o,
        };
        match outcome {
            Ok(d) => println!("PASS {name}: {d} [{elapsed:.2?}]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{elapsed:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
