//! End-to-end smoke run: small-profile training and search on one problem.

use pinn_darts::pde::{poisson, Variant};
use pinn_darts::profile::Profile;
use pinn_darts::sampling::{grid_points, sample_training, test_grid};
use pinn_darts::search::{darts_search, Bench, DartsVariant};
use pinn_darts::supernet::ArchitectureSpec;
use pinn_darts::train::{eval_phase, EvalContext};
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

    // Evaluation phase on the biggest small-profile architecture.
    let spec: ArchitectureSpec = "(4,4,4,4)".parse().unwrap();
    let ctx = EvalContext {
        widths: &profile.widths,
        activation: profile.activation(problem.kind()),
        weights: Default::default(),
        config: profile.eval_config(),
    };
    let t0 = Instant::now();
    let out = eval_phase(&spec, &problem, &train, &test, &reference, &ctx, 1).unwrap();
    println!(
        "eval {spec}: {:.1}s  test_loss {:.3e}  rel_l2 {:.3e}",
        t0.elapsed().as_secs_f64(),
        out.test_loss.total,
        out.relative_l2
    );

    // Search phase (darts+).
    let bench = Bench {
        problem,
        profile: &profile,
        train_set: &train,
        test_set: &test,
        reference: &reference,
    };
    let t0 = Instant::now();
    let (report, outcomes) = darts_search(&bench, DartsVariant::DartsPlus, &[1]).unwrap();
    println!(
        "darts+ 1 seed: {:.1}s  spec {}  rel_l2 {:.3e}  stop {:?} after {} iters",
        t0.elapsed().as_secs_f64(),
        report.rows[0].spec,
        report.rows[0].relative_l2,
        report.rows[0].stop_reason,
        outcomes[0].1.iterations_run
    );
}
