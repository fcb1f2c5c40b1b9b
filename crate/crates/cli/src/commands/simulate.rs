use income_dynamics::analytic::BetaPrimeShape;
use income_dynamics::montecarlo::{
    sample_beta_prime, simulate_ensemble_with, write_samples_csv, EnsembleConfig, EnsembleManifest, InitialIncomes,
};
use income_dynamics::par::Exec;
use serde::Serialize;

use crate::config::SimulateMode;
use crate::error::CliError;
use crate::{Ctx, SimulateArgs};

#[derive(Serialize)]
struct SamplesManifest {
    seed: u64,
    shape: BetaPrimeShape,
    samples: usize,
}

pub fn run(ctx: &Ctx, args: &SimulateArgs) -> Result<(), CliError> {
    let s = &ctx.cfg.simulate;
    let p = ctx.cfg.kernels.params()?;
    match args.mode.unwrap_or(s.mode) {
        SimulateMode::Ensemble => {
            let cfg = EnsembleConfig {
                agents: args.agents.unwrap_or(s.agents),
                t_end: args.t_end.unwrap_or(s.t_end),
                quantum: s.quantum.unwrap_or(p.mean_income / income_dynamics::montecarlo::QUANTA_PER_MEAN),
                snapshots: args.snapshots.unwrap_or(s.snapshots),
                initial: s.initial.clone().unwrap_or(InitialIncomes::Exponential { mean: p.mean_income }),
                seed: ctx.seed,
            };
            let history = simulate_ensemble_with(&p, &cfg)?;
            for (i, snap) in history.snapshots.iter().enumerate() {
                let path = ctx.path(&format!("ensemble_{i:03}.csv"));
                snap.write_csv(&path)?;
                ctx.wrote(&path);
            }
            ctx.write_json("simulate_manifest.json", &EnsembleManifest::new(&p, &cfg, &history))?;
        }
        SimulateMode::BetaPrime => {
            let a = args.a.unwrap_or(s.a);
            let shape = BetaPrimeShape::new(a, s.s.unwrap_or(a - 2.0), s.mean.unwrap_or(p.mean_income))?;
            let n = args.samples.unwrap_or(s.samples);
            let xs = sample_beta_prime(&shape, n, ctx.seed, Exec::default())?;
            let path = ctx.path("samples.csv");
            write_samples_csv(&path, &xs)?;
            ctx.wrote(&path);
            ctx.write_json(
                "simulate_manifest.json",
                &SamplesManifest {
                    seed: ctx.seed,
                    shape,
                    samples: n,
                },
            )?;
        }
    }
    Ok(())
}
