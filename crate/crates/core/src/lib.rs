//! Architecture search for physics-informed neural network (PINN) PDE solvers.
//!
//! The crate trains feedforward networks to minimize PDE residual losses and
//! searches over network architectures (layer count and per-layer widths)
//! with a differentiable supernet as well as grid / random / Parzen-estimator
//! baselines. Four benchmark problems are built in: Poisson, heat, wave, and
//! Burgers' equations, the last with a Chebyshev spectral reference solver.
//!
//! Module map:
//!
//! * [`linalg`] — dense matrix kernels shared by everything below
//! * [`autodiff`] — derivative propagation through networks and analytic
//!   expressions, plus loss-to-parameter gradients
//! * [`net`] — compact feedforward networks with flat parameter storage
//! * [`supernet`] — the mixed search network, discretization, width codes
//! * [`pde`] — the benchmark problems (residuals, boundary/initial data)
//! * [`sampling`] — collocation point generation with seeded streams
//! * [`loss`] — PINN loss assembly from problem + sample set
//! * [`train`] — Adam, learning-rate schedule, search/evaluation loops
//! * [`spectral`] — Chebyshev reference solver for Burgers
//! * [`metrics`] — relative L2 error, Spearman correlation, studies
//! * [`search`] — search-strategy drivers and cross-method reports
//! * [`profile`] — paper-scale and desk-scale experiment profiles

pub mod autodiff;
pub mod linalg;
pub mod loss;
pub mod metrics;
pub mod net;
pub mod pde;
pub mod profile;
pub mod sampling;
pub mod search;
pub mod spectral;
pub mod supernet;
pub mod train;

pub use autodiff::{DerivativeRequest, EvalTable, ParameterGradient};
pub use net::Fnn;
pub use pde::PdeProblem;
pub use profile::Profile;
pub use sampling::SampleSet;
pub use search::SearchReport;
pub use supernet::{ArchitectureSpec, MixedNetwork, WidthCode};

/// Scalar type used throughout: 64-bit IEEE floating point.
///
/// Values crossing public API boundaries must be finite; operations detect
/// and report non-finite results instead of propagating them.
pub type Scalar = f64;

/// Crate version string stamped into emitted artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
