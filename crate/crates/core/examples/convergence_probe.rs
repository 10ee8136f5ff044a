//! Convergence diagnostics: loss components and error vs iteration budget.

use pinn_darts::pde::{poisson, Variant};
use pinn_darts::profile::Profile;
use pinn_darts::sampling::{grid_points, sample_training, test_grid};
use pinn_darts::train::{eval_phase, EvalContext, EvalPhaseConfig};
use std::time::Instant;

fn main() {
    let profile = Profile::small();
    let problem = poisson(Variant::Simple);
    let counts = profile.training_counts(problem.kind());
    let train = sample_training(&problem, counts, profile.sampling_seed).unwrap();
    let (nx, ny) = profile.test_resolution(problem.kind());
    let test = test_grid(&problem, nx, ny);
    let reference: Vec<f64> = grid_points(&problem, nx, ny)
        .iter()
        .map(|p| problem.exact_value(p).unwrap())
        .collect();

    for (iters, lr0, lr1) in [
        (2000usize, 5e-4, 1e-5),
        (2000, 2e-3, 5e-5),
        (10000, 5e-4, 1e-5),
        (10000, 2e-3, 1e-5),
    ] {
        let ctx = EvalContext {
            widths: &profile.widths,
            activation: profile.activation(problem.kind()),
            weights: Default::default(),
            config: EvalPhaseConfig {
                iterations: iters,
                lr_initial: lr0,
                lr_final: lr1,
            },
        };
        let spec = "(4,4,4)".parse().unwrap();
        let t0 = Instant::now();
        let out = eval_phase(&spec, &problem, &train, &test, &reference, &ctx, 1).unwrap();
        println!(
            "iters {iters:6} lr {lr0:.0e}->{lr1:.0e}: {:5.1}s  pde {:.2e} bc {:.2e} (train pde {:.2e} bc {:.2e})  rel_l2 {:.3e}",
            t0.elapsed().as_secs_f64(),
            out.test_loss.pde,
            out.test_loss.bc,
            out.train_loss.pde,
            out.train_loss.bc,
            out.relative_l2
        );
    }
}
