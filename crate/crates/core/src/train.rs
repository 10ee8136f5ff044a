//! Optimizers and the two training loops.
//!
//! The searching phase updates architecture parameters α on the test loss
//! and network weights w on the training loss, first-order and
//! simultaneous: both gradients are taken at the current (w, α) before
//! either update is applied. The evaluation phase trains a fresh compact
//! network full-batch under a geometric learning-rate decay and reports the
//! test loss and relative L2 error against a reference field.

use crate::autodiff::{AdError, DiffNet, ParameterGradient};
use crate::loss::{pinn_loss, pinn_loss_grad_into, LossBreakdown, LossWeights};
use crate::metrics::relative_l2;
use crate::net::Fnn;
use crate::pde::PdeProblem;
use crate::sampling::{grid_points, SampleSet};
use crate::supernet::{
    alpha_ranking, build_compact_fnn, discretize, ArchitectureSpec, MixedNetwork,
    N_CANDIDATES, N_EDGES,
};
use core::fmt;

/// Errors surfaced by the training loops.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// Loss or gradient went non-finite at an iteration.
    NonFinite { iteration: usize, context: String },
    /// Gradient length does not match the optimizer state.
    ShapeMismatch { expected: usize, got: usize },
    /// Learning-rate schedule queried outside `0..iterations`.
    IterationOutOfRange { iteration: usize, total: usize },
    /// Engine error during loss evaluation.
    Engine(AdError),
    /// Metric error when scoring the trained network.
    Metrics(crate::metrics::MetricsError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::NonFinite { iteration, context } => {
                write!(f, "non-finite {context} at iteration {iteration}")
            }
            TrainError::ShapeMismatch { expected, got } => {
                write!(f, "gradient length {got}, optimizer expects {expected}")
            }
            TrainError::IterationOutOfRange { iteration, total } => {
                write!(f, "iteration {iteration} outside schedule of length {total}")
            }
            TrainError::Engine(e) => write!(f, "{e}"),
            TrainError::Metrics(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for TrainError {}

impl From<AdError> for TrainError {
    fn from(e: AdError) -> Self {
        TrainError::Engine(e)
    }
}

pub type TrainResult<T> = Result<T, TrainError>;

/// Adam optimizer state: bias-corrected first/second moments, one slot per
/// parameter, plus the current learning rate.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    deltas: Vec<f64>,
}

impl AdamState {
    pub fn new(n: usize, lr: f64) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            deltas: vec![0.0; n],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update. Returns the per-parameter deltas to add,
    /// in the same canonical order as the gradient.
    pub fn step(&mut self, grad: &[f64]) -> TrainResult<&[f64]> {
        if grad.len() != self.m.len() {
            return Err(TrainError::ShapeMismatch {
                expected: self.m.len(),
                got: grad.len(),
            });
        }
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(TrainError::NonFinite {
                iteration: self.step as usize,
                context: "gradient".into(),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..grad.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            self.deltas[i] = -self.lr * mhat / (vhat.sqrt() + self.epsilon);
        }
        Ok(&self.deltas)
    }
}

/// Apply one Adam step to a compact network.
pub fn adam_step_fnn(
    net: &mut Fnn,
    state: &mut AdamState,
    grad: &ParameterGradient,
) -> TrainResult<()> {
    let deltas = state.step(grad.as_slice())?.to_vec();
    net.visit_params_mut(|i, p| *p += deltas[i]);
    Ok(())
}

/// Evaluation-phase configuration: iteration count and the geometric
/// learning-rate schedule endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalPhaseConfig {
    pub iterations: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
}

impl Default for EvalPhaseConfig {
    fn default() -> Self {
        EvalPhaseConfig {
            iterations: 10_000,
            lr_initial: 5e-4,
            lr_final: 1e-5,
        }
    }
}

/// Geometric interpolation from `lr_initial` (k = 0) to `lr_final`
/// (k = iterations − 1); monotone nonincreasing and exact at both ends.
pub fn lr_schedule(config: &EvalPhaseConfig, iteration: usize) -> TrainResult<f64> {
    if iteration >= config.iterations {
        return Err(TrainError::IterationOutOfRange {
            iteration,
            total: config.iterations,
        });
    }
    if config.iterations == 1 {
        return Ok(config.lr_initial);
    }
    let frac = iteration as f64 / (config.iterations - 1) as f64;
    Ok(config.lr_initial * (config.lr_final / config.lr_initial).powf(frac))
}

/// Search-phase configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchPhaseConfig {
    pub max_iterations: usize,
    pub alpha_lr: f64,
    pub w_lr: f64,
    /// Enable the early-stopping checks (the "+" variants).
    pub early_stop: bool,
    /// Consecutive iterations the full α ranking must stay unchanged.
    pub stability_window: usize,
    /// Stop when the discretized architecture reaches this many skips.
    pub skip_threshold: usize,
}

impl Default for SearchPhaseConfig {
    fn default() -> Self {
        SearchPhaseConfig {
            max_iterations: 2000,
            alpha_lr: 2e-1,
            w_lr: 1e-4,
            early_stop: false,
            stability_window: 100,
            skip_threshold: 6,
        }
    }
}

/// Why a search loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StopReason {
    MaxIterations,
    RankingStable,
    SkipThreshold,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MaxIterations => "max-iterations",
            StopReason::RankingStable => "ranking-stable",
            StopReason::SkipThreshold => "skip-threshold",
        }
    }
}

/// Early-stop decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCheck {
    Continue,
    Stop(StopReason),
}

/// Pure early-stopping predicate: stop when the discretized architecture
/// holds `skip_threshold` or more skips, or when the per-edge candidate
/// ranking (all edges, all ranks) is identical across the last
/// `stability_window` recorded iterations.
pub fn early_stop_check(
    ranking_history: &[Vec<[u8; N_CANDIDATES]>],
    current_skip_count: usize,
    config: &SearchPhaseConfig,
) -> StopCheck {
    if current_skip_count >= config.skip_threshold {
        return StopCheck::Stop(StopReason::SkipThreshold);
    }
    let w = config.stability_window;
    if ranking_history.len() >= w {
        let last = &ranking_history[ranking_history.len() - 1];
        if ranking_history[ranking_history.len() - w..]
            .iter()
            .all(|r| r == last)
        {
            return StopCheck::Stop(StopReason::RankingStable);
        }
    }
    StopCheck::Continue
}

/// One iteration's α snapshot within a search trajectory.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlphaSnapshot {
    pub iteration: usize,
    pub alpha: Vec<f64>,
    pub train_loss: f64,
    pub test_loss: f64,
}

/// Result of a searching phase.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub spec: ArchitectureSpec,
    pub skip_count: usize,
    pub stop: StopReason,
    pub iterations_run: usize,
    pub trajectory: Vec<AlphaSnapshot>,
}

/// Bilevel searching phase on a mixed network.
///
/// Each iteration computes ∇_w L_train and ∇_α L_test at the current
/// (w, α), then applies both Adam updates; the α gradient never sees the
/// updated w of the same iteration. Rankings are recorded per iteration;
/// with `early_stop` the loop ends as soon as [`early_stop_check`] fires.
/// Returns the discretized architecture.
pub fn search_phase(
    net: &mut MixedNetwork,
    problem: &PdeProblem,
    train_set: &SampleSet,
    test_set: &SampleSet,
    config: &SearchPhaseConfig,
) -> TrainResult<SearchOutcome> {
    let weights = LossWeights::default();
    let mut adam_w = AdamState::new(net.param_count(), config.w_lr);
    let mut adam_a = AdamState::new(N_EDGES * N_CANDIDATES, config.alpha_lr);
    let mut w_grads = net.new_grads();
    let mut a_grads = net.new_grads().alpha_only();
    let mut rankings: Vec<Vec<[u8; N_CANDIDATES]>> = Vec::new();
    let mut trajectory = Vec::new();
    let mut stop = StopReason::MaxIterations;
    let mut iterations_run = 0;

    for it in 0..config.max_iterations {
        let train_bd = pinn_loss_grad_into(net, problem, train_set, weights, &mut w_grads)
            .map_err(|e| at_iteration(e, it))?;
        let test_bd = pinn_loss_grad_into(net, problem, test_set, weights, &mut a_grads)
            .map_err(|e| at_iteration(e, it))?;

        // Simultaneous first-order update.
        let w_flat = w_grads.flatten_weights();
        let dw = adam_w.step(w_flat.as_slice())?.to_vec();
        let da = adam_a.step(&a_grads.alpha)?.to_vec();
        net.visit_params_mut(|i, p| *p += dw[i]);
        for (a, d) in net.alpha_mut().iter_mut().zip(&da) {
            *a += d;
        }
        iterations_run = it + 1;

        rankings.push(alpha_ranking(net.alpha()));
        trajectory.push(AlphaSnapshot {
            iteration: it,
            alpha: net.alpha().to_vec(),
            train_loss: train_bd.total,
            test_loss: test_bd.total,
        });

        if config.early_stop {
            let (_, skips) = discretize(net.alpha());
            if let StopCheck::Stop(reason) = early_stop_check(&rankings, skips, config) {
                stop = reason;
                break;
            }
        }
    }

    let (spec, skip_count) = discretize(net.alpha());
    Ok(SearchOutcome {
        spec,
        skip_count,
        stop,
        iterations_run,
        trajectory,
    })
}

fn at_iteration(e: AdError, it: usize) -> TrainError {
    match e {
        AdError::NonFinite { context } => TrainError::NonFinite {
            iteration: it,
            context: context.into(),
        },
        other => TrainError::Engine(other),
    }
}

/// Result of an evaluation phase.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub network: Fnn,
    pub train_loss: LossBreakdown,
    pub test_loss: LossBreakdown,
    pub relative_l2: f64,
}

/// Network and training context for the evaluation phase, independent of
/// the architecture being evaluated.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub widths: &'a crate::supernet::WidthTable,
    pub activation: crate::autodiff::Activation,
    pub weights: LossWeights,
    pub config: EvalPhaseConfig,
}

/// Evaluation phase: train a fresh compact network realizing `spec` for
/// `config.iterations` full-batch Adam steps under the learning-rate
/// schedule, then score it on the test set and against `reference` (the
/// reference solution on the full test grid, row-major).
pub fn eval_phase(
    spec: &ArchitectureSpec,
    problem: &PdeProblem,
    train_set: &SampleSet,
    test_set: &SampleSet,
    reference: &[f64],
    ctx: &EvalContext<'_>,
    seed: u64,
) -> TrainResult<EvalOutcome> {
    let mut net = build_compact_fnn(spec, 2, ctx.widths, ctx.activation, seed);
    let mut adam = AdamState::new(net.param_count(), ctx.config.lr_initial);
    let mut grads = net.new_grads();
    let mut flat = Vec::new();
    for it in 0..ctx.config.iterations {
        adam.lr = lr_schedule(&ctx.config, it)?;
        pinn_loss_grad_into(&net, problem, train_set, ctx.weights, &mut grads)
            .map_err(|e| at_iteration(e, it))?;
        grads.flatten_into(&mut flat);
        let deltas = adam.step(&flat)?.to_vec();
        net.visit_params_mut(|i, p| *p += deltas[i]);
    }
    let train_loss = pinn_loss(&net, problem, train_set, ctx.weights)?;
    let test_loss = pinn_loss(&net, problem, test_set, ctx.weights)?;
    let (nx, ny) = test_set
        .grid_shape()
        .expect("evaluation test set is a grid");
    let prediction = net.predict(&grid_points(problem, nx, ny));
    let relative_l2 = relative_l2(&prediction, reference).map_err(TrainError::Metrics)?;
    Ok(EvalOutcome {
        network: net,
        train_loss,
        test_loss,
        relative_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut s = AdamState::new(3, 0.1);
        let d = s.step(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d, &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        // From zero state with gradient g: m̂ = g, v̂ = g², so
        // Δ = −lr·g/(|g| + ε).
        let mut s = AdamState::new(2, 0.01);
        let g = [0.3, -2.0];
        let d = s.step(&g).unwrap().to_vec();
        for (di, gi) in d.iter().zip(&g) {
            let expect = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((di - expect).abs() < 1e-15, "{di} vs {expect}");
        }
    }

    #[test]
    fn constant_gradient_step_approaches_lr() {
        let mut s = AdamState::new(1, 0.05);
        let mut last = 0.0;
        for _ in 0..2000 {
            last = s.step(&[0.7]).unwrap()[0];
        }
        assert!((last.abs() - 0.05).abs() < 1e-6, "step {last}");
    }

    #[test]
    fn adam_rejects_bad_input() {
        let mut s = AdamState::new(2, 0.1);
        assert!(matches!(
            s.step(&[1.0]),
            Err(TrainError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            s.step(&[1.0, f64::NAN]),
            Err(TrainError::NonFinite { .. })
        ));
    }

    #[test]
    fn schedule_hits_endpoints_and_midpoint() {
        let cfg = EvalPhaseConfig {
            iterations: 3,
            lr_initial: 5e-4,
            lr_final: 1e-5,
        };
        assert_eq!(lr_schedule(&cfg, 0).unwrap(), 5e-4);
        assert_eq!(lr_schedule(&cfg, 2).unwrap(), 1e-5);
        let mid = lr_schedule(&cfg, 1).unwrap();
        assert!((mid - (5e-4f64 * 1e-5).sqrt()).abs() < 1e-18);
        assert!((mid - 7.071e-5).abs() < 1e-8);
        assert!(lr_schedule(&cfg, 3).is_err());
    }

    #[test]
    fn schedule_is_monotone_nonincreasing() {
        let cfg = EvalPhaseConfig::default();
        let mut prev = f64::INFINITY;
        for k in 0..cfg.iterations {
            let lr = lr_schedule(&cfg, k).unwrap();
            assert!(lr <= prev);
            prev = lr;
        }
        assert_eq!(prev, 1e-5);
    }

    #[test]
    fn early_stop_skip_threshold() {
        let cfg = SearchPhaseConfig {
            early_stop: true,
            ..Default::default()
        };
        assert_eq!(
            early_stop_check(&[], 6, &cfg),
            StopCheck::Stop(StopReason::SkipThreshold)
        );
        assert_eq!(
            early_stop_check(&[], 8, &cfg),
            StopCheck::Stop(StopReason::SkipThreshold)
        );
        assert_eq!(early_stop_check(&[], 5, &cfg), StopCheck::Continue);
    }

    #[test]
    fn early_stop_ranking_stability_window() {
        let cfg = SearchPhaseConfig {
            early_stop: true,
            ..Default::default()
        };
        let stable = vec![[0u8, 1, 2, 3, 4]; N_EDGES];
        let mut other = stable.clone();
        other[3] = [1, 0, 2, 3, 4];

        // Exactly 100 identical snapshots → stop.
        let hist: Vec<_> = (0..100).map(|_| stable.clone()).collect();
        assert_eq!(
            early_stop_check(&hist, 0, &cfg),
            StopCheck::Stop(StopReason::RankingStable)
        );

        // 99 stable then one change → continue.
        let mut hist: Vec<_> = (0..99).map(|_| stable.clone()).collect();
        hist.push(other.clone());
        assert_eq!(early_stop_check(&hist, 0, &cfg), StopCheck::Continue);

        // A change 100 ago followed by 100 stable → stop.
        let mut hist = vec![other];
        hist.extend((0..100).map(|_| stable.clone()));
        assert_eq!(
            early_stop_check(&hist, 0, &cfg),
            StopCheck::Stop(StopReason::RankingStable)
        );
    }
}
