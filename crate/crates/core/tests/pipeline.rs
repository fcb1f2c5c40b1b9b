use income_dynamics::analytic::{beta_prime_cdf, BetaPrimeShape};
use income_dynamics::estimation::{
    growth_increments, histogram_of, reset_rates, BinOptions, Binning, LogBinnedSeries, PanelDataset, YearRange,
};
use income_dynamics::fitting::{fit_beta_prime, fit_growth_c, fit_reset_beta, fitted_shape, ks_distance, ShapeConstraint};
use income_dynamics::kernels::constrain;
use income_dynamics::montecarlo::{generate_panel_with, sample_beta_prime, SyntheticPanelConfig};
use income_dynamics::par::Exec;

fn panel(exec: Exec) -> PanelDataset {
    let kernels = constrain(0.057, 767.0).unwrap();
    let cfg = SyntheticPanelConfig::new(kernels, 5, 40_000, 0.2, 0.3, 11);
    generate_panel_with(&cfg, exec).unwrap()
}

#[test]
fn synthetic_panel_recovers_growth_and_reset() {
    let p = panel(Exec::default());
    let range = YearRange::of(&p).unwrap();
    let growth = growth_increments(&p, range, BinOptions::default()).unwrap();
    let c = fit_growth_c(&growth).unwrap().estimate("C").unwrap();
    assert!((0.18..=0.22).contains(&c), "C = {c}");
    let (reset, _) = reset_rates(&p, range, BinOptions::default()).unwrap();
    let beta = fit_reset_beta(&reset, 767.0).unwrap().estimate("beta").unwrap();
    assert!((beta / 0.057 - 1.0).abs() < 0.2, "beta = {beta}");
}

#[test]
fn panel_generation_ignores_execution_policy() {
    assert_eq!(panel(Exec::Sequential), panel(Exec::Parallel));
}

#[test]
fn panel_and_series_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = panel(Exec::default());
    let path = dir.path().join("panel.csv");
    p.write_csv(&path).unwrap();
    let ingest = PanelDataset::read_csv(&path).unwrap();
    assert!(ingest.malformed.is_empty());
    assert_eq!(ingest.panel, p);

    let growth = growth_increments(&p, YearRange::of(&p).unwrap(), BinOptions::default()).unwrap();
    let gpath = dir.path().join("growth.csv");
    growth.write_csv(&gpath).unwrap();
    assert_eq!(LogBinnedSeries::read_csv(&gpath).unwrap().bins, growth.bins);
}

#[test]
fn master_curve_samples_fit_and_match() {
    let shape = BetaPrimeShape::master(1.0).unwrap();
    let samples = sample_beta_prime(&shape, 200_000, 3, Exec::default()).unwrap();
    let ks = ks_distance(&samples, |x| beta_prime_cdf(x, &shape).unwrap()).unwrap();
    assert!(ks < 0.02, "KS = {ks}");
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    assert!((mean - 1.0).abs() < 0.01, "mean = {mean}");

    let h = histogram_of(&samples, Binning::Log2).unwrap();
    let rescaled = income_dynamics::estimation::rescale(&h, mean).unwrap();
    let a = fitted_shape(&fit_beta_prime(&rescaled, ShapeConstraint::Constrained).unwrap()).unwrap().a;
    assert!((a - 5.0).abs() < 0.2, "a = {a}");
}

#[test]
fn sampling_ignores_execution_policy() {
    let shape = BetaPrimeShape::master(767.0).unwrap();
    let s = sample_beta_prime(&shape, 50_000, 9, Exec::Sequential).unwrap();
    let p = sample_beta_prime(&shape, 50_000, 9, Exec::Parallel).unwrap();
    assert_eq!(s, p);
}
