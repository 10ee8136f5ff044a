//! Experiment profiles.
//!
//! The `paper` profile carries the full-scale settings (widths 100–400,
//! depth up to 8, 10,000 evaluation iterations, thousands of collocation
//! points); the `small` profile is a desk-scale preset (widths 16–64,
//! depth up to 4, 2,000 iterations, 500 interior points) that keeps entire
//! search comparisons in the minutes range. All per-problem settings
//! (learning rates, activations, sampling counts, test grids) are resolved
//! here so drivers stay problem-agnostic.

use crate::autodiff::Activation;
use crate::pde::{PdeProblem, ProblemKind};
use crate::sampling::SampleCounts;
use crate::supernet::{WidthTable, PAPER_WIDTHS};
use crate::train::{EvalPhaseConfig, SearchPhaseConfig};

/// All scale-dependent knobs for one experiment run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Profile {
    pub name: String,
    pub widths: WidthTable,
    /// Even-width baseline space searches depths `1..=max_depth`.
    pub max_depth: usize,
    pub eval_iterations: usize,
    pub search_max_iterations: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    /// Network-parameter learning rate during the searching phase.
    pub search_w_lr: f64,
    pub stability_window: usize,
    pub skip_threshold: usize,
    /// Seed for collocation sampling, independent of network seeds so the
    /// train/test sets stay fixed across initializations.
    pub sampling_seed: u64,
    /// Chebyshev degree and snapshot count for the Burgers reference.
    pub reference_degree: usize,
}

impl Profile {
    /// Full-scale settings.
    pub fn paper() -> Self {
        Profile {
            name: "paper".into(),
            widths: PAPER_WIDTHS,
            max_depth: 8,
            eval_iterations: 10_000,
            search_max_iterations: 2_000,
            lr_initial: 5e-4,
            lr_final: 1e-5,
            search_w_lr: 1e-4,
            stability_window: 100,
            skip_threshold: 6,
            sampling_seed: 7777,
            reference_degree: 256,
        }
    }

    /// Desk-scale settings: minutes, not hours.
    pub fn small() -> Self {
        Profile {
            name: "small".into(),
            widths: [16, 32, 48, 64],
            max_depth: 4,
            eval_iterations: 2_000,
            search_max_iterations: 500,
            lr_initial: 5e-4,
            lr_final: 1e-5,
            search_w_lr: 1e-4,
            stability_window: 100,
            skip_threshold: 6,
            sampling_seed: 7777,
            reference_degree: 128,
        }
    }

    pub fn by_name(name: &str) -> Result<Profile, String> {
        match name {
            "paper" => Ok(Profile::paper()),
            "small" => Ok(Profile::small()),
            other => Err(format!("unknown profile '{other}' (paper|small)")),
        }
    }

    /// Architecture-parameter learning rate per problem.
    pub fn alpha_lr(&self, kind: ProblemKind) -> f64 {
        match kind {
            ProblemKind::Poisson | ProblemKind::Heat => 2e-1,
            ProblemKind::Wave => 5e-2,
            ProblemKind::Burgers => 2e-2,
        }
    }

    /// Activation per problem: tanh for Poisson/heat, swish for wave and
    /// Burgers.
    pub fn activation(&self, kind: ProblemKind) -> Activation {
        match kind {
            ProblemKind::Poisson | ProblemKind::Heat => Activation::Tanh,
            ProblemKind::Wave | ProblemKind::Burgers => Activation::Swish,
        }
    }

    /// Training-set sizes per problem. At full scale: 5,000 interior points
    /// (10,000 for Burgers), 200 boundary, 200 initial; desk scale: 500
    /// interior, 100 boundary, 100 initial.
    pub fn training_counts(&self, kind: ProblemKind) -> SampleCounts {
        if self.name == "paper" {
            SampleCounts {
                interior: if kind == ProblemKind::Burgers {
                    10_000
                } else {
                    5_000
                },
                boundary: 200,
                initial: 200,
            }
        } else {
            SampleCounts {
                interior: 500,
                boundary: 100,
                initial: 100,
            }
        }
    }

    /// Test-grid resolution (nx, ny-or-nt) per problem.
    pub fn test_resolution(&self, kind: ProblemKind) -> (usize, usize) {
        if self.name == "paper" {
            match kind {
                ProblemKind::Poisson | ProblemKind::Wave => (100, 100),
                ProblemKind::Heat => (200, 100),
                ProblemKind::Burgers => (256, 100),
            }
        } else {
            match kind {
                ProblemKind::Burgers => (64, 40),
                _ => (40, 40),
            }
        }
    }

    pub fn eval_config(&self) -> EvalPhaseConfig {
        EvalPhaseConfig {
            iterations: self.eval_iterations,
            lr_initial: self.lr_initial,
            lr_final: self.lr_final,
        }
    }

    pub fn search_config(&self, problem: &PdeProblem, early_stop: bool) -> SearchPhaseConfig {
        SearchPhaseConfig {
            max_iterations: self.search_max_iterations,
            alpha_lr: self.alpha_lr(problem.kind()),
            w_lr: self.search_w_lr,
            early_stop,
            stability_window: self.stability_window,
            skip_threshold: self.skip_threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{burgers, poisson, wave, Variant};

    #[test]
    fn paper_profile_matches_reported_settings() {
        let p = Profile::paper();
        assert_eq!(p.widths, [100, 200, 300, 400]);
        assert_eq!(p.eval_iterations, 10_000);
        assert_eq!(p.search_max_iterations, 2_000);
        assert_eq!(p.alpha_lr(ProblemKind::Poisson), 2e-1);
        assert_eq!(p.alpha_lr(ProblemKind::Wave), 5e-2);
        assert_eq!(p.alpha_lr(ProblemKind::Burgers), 2e-2);
        assert_eq!(p.training_counts(ProblemKind::Burgers).interior, 10_000);
        assert_eq!(p.training_counts(ProblemKind::Heat).interior, 5_000);
        assert_eq!(p.test_resolution(ProblemKind::Heat), (200, 100));
        assert_eq!(p.test_resolution(ProblemKind::Burgers), (256, 100));
        assert_eq!(p.activation(ProblemKind::Poisson), Activation::Tanh);
        assert_eq!(p.activation(ProblemKind::Wave), Activation::Swish);
    }

    #[test]
    fn small_profile_is_desk_scale() {
        let p = Profile::small();
        assert_eq!(p.widths, [16, 32, 48, 64]);
        assert_eq!(p.max_depth, 4);
        assert_eq!(p.eval_iterations, 2_000);
        assert_eq!(p.training_counts(ProblemKind::Poisson).interior, 500);
    }

    #[test]
    fn search_config_wires_per_problem_rates() {
        let p = Profile::paper();
        let cfg = p.search_config(&wave(Variant::Simple), true);
        assert_eq!(cfg.alpha_lr, 5e-2);
        assert!(cfg.early_stop);
        let cfg = p.search_config(&burgers(), false);
        assert_eq!(cfg.alpha_lr, 2e-2);
        assert!(!cfg.early_stop);
        let cfg = p.search_config(&poisson(Variant::Complex), false);
        assert_eq!(cfg.w_lr, 1e-4);
    }
}
