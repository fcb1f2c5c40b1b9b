use income_dynamics::analytic::BetaPrimeShape;
use income_dynamics::dynamics::{
    discrete_rates, run_to_steady_with, ContinuousSystem, DiscreteState, DiscreteSystem, Evolution, FeedRule,
    RunMetadata,
};
use income_dynamics::grid::DensityGrid;
use income_dynamics::kernels::KernelParams;
use income_dynamics::montecarlo::QUANTA_PER_MEAN;
use serde::Serialize;

use crate::commands::grid_of;
use crate::config::IntegrateModel;
use crate::error::CliError;
use crate::{Ctx, IntegrateArgs};

/// Default top level of the discrete model, in units of the mean income.
const DISCRETE_SPAN: f64 = 20.0;

#[derive(Serialize)]
struct Manifest {
    model: IntegrateModel,
    feed_rule: FeedRule,
    params: KernelParams,
    initial: &'static str,
    run: RunMetadata,
    /// L1 distance of the final density to the Beta prime implied by the kernels, when `g = 0`.
    l1_to_beta_prime: Option<f64>,
}

fn l1_to_beta_prime(p: &KernelParams, density: &DensityGrid) -> Option<f64> {
    let shape = BetaPrimeShape::from_kernels(p).ok()?;
    let exact = shape.on_grid(density.x()).ok()?;
    let diff: Vec<f64> = density
        .density()
        .iter()
        .zip(exact.density())
        .map(|(a, b)| (a - b).abs())
        .collect();
    Some(density.quadrature(&diff).interior)
}

pub fn run(ctx: &Ctx, args: &IntegrateArgs) -> Result<(), CliError> {
    let s = &ctx.cfg.integrate;
    let p = ctx.cfg.kernels.params()?;
    let model = args.model.unwrap_or(s.model);
    let tol = args.tol.unwrap_or(s.tol);
    let max_time = args.max_time.or(s.max_time).unwrap_or(200.0 / p.beta);
    let every = args.snapshot_every.unwrap_or(s.snapshot_every);
    let m = p.mean_income;
    let (run, density) = match model {
        IntegrateModel::Continuous => {
            let grid = grid_of(&s.grid, m)?;
            let mut sys = ContinuousSystem::with_stable_step(&grid, &p)?.with_feed_rule(s.feed_rule);
            if let Some(dt) = s.dt {
                sys = sys.with_dt(dt)?;
            }
            let init = DensityGrid::sampled(grid.clone(), grid.iter().map(|x| (-x / m).exp() / m).collect())?;
            let out = run_to_steady_with(&sys, sys.state_from(&init)?, tol, max_time, every, |step, st| {
                let path = ctx.path(&format!("snapshot_{step:09}.csv"));
                sys.density(st)?.write_csv(&path)
            })?;
            (out.metadata(sys.dt(), tol), sys.density(&out.state)?)
        }
        IntegrateModel::Discrete => {
            let dx = s.dx.unwrap_or(m / QUANTA_PER_MEAN);
            let n_max = s.n_max.unwrap_or((DISCRETE_SPAN * m / dx).round() as usize);
            let (mu, gamma) = discrete_rates(&p, dx, n_max);
            let mut sys = DiscreteSystem::with_stable_step(mu.clone(), gamma.clone())?;
            if let Some(dt) = s.dt {
                sys = DiscreteSystem::new(mu, gamma, dt)?;
            }
            let sys = sys.with_feed_rule(s.feed_rule);
            let weights: Vec<f64> = (0..=n_max).map(|n| (-(n as f64) * dx / m).exp()).collect();
            let total: f64 = weights.iter().sum();
            let init = DiscreteState::new(weights.iter().map(|w| w / total).collect(), dx)?;
            let out = run_to_steady_with(&sys, init, tol, max_time, every, |step, st| {
                let path = ctx.path(&format!("snapshot_{step:09}.csv"));
                st.to_density()?.write_csv(&path)
            })?;
            (out.metadata(sys.dt(), tol), out.state.to_density()?)
        }
    };
    if !run.converged {
        ctx.warn(format!("not converged after {} years (L1 rate {:e})", run.elapsed, run.l1_rate));
    }
    let path = ctx.path("density.csv");
    density.write_csv(&path)?;
    ctx.wrote(&path);
    ctx.write_json(
        "integrate_manifest.json",
        &Manifest {
            model,
            feed_rule: s.feed_rule,
            params: p,
            initial: "exponential",
            l1_to_beta_prime: l1_to_beta_prime(&p, &density),
            run,
        },
    )?;
    Ok(())
}
