//! Differentiation engine.
//!
//! Networks are evaluated together with first and second derivatives of the
//! output with respect to input coordinates. The forward pass carries, for
//! every requested coordinate axis, value/first/second "lanes" through each
//! layer (diagonal second-order forward mode). The per-layer quantities are
//! retained so a reverse sweep can push a scalar loss back onto every
//! trainable parameter, including paths through the second-derivative lanes
//! (which is why activations provide third derivatives).
//!
//! Scalar closed-form expressions (exact solutions, manufactured forcing)
//! use the same engine through [`jet::Jet`], and pointwise residuals are
//! assembled from [`slot::SlotDual`] values so their partial derivatives
//! with respect to each table entry are available to the reverse sweep.
//!
//! Batch evaluation is defined per point and vectorized; points are
//! processed in fixed-size chunks and all reductions run in chunk order, so
//! results do not depend on thread count.

pub mod activation;
pub mod jet;
pub mod lanes;
pub mod slot;

pub use activation::Activation;
pub use jet::Jet;
pub use lanes::{LaneBatch, LaneLayout};
pub use slot::{SlotDual, SlotValues};

use core::fmt;

/// Maximum input dimension the derivative machinery supports.
pub const MAX_DIM: usize = 4;

/// Fixed batch-chunk size: evaluation over a point set processes this many
/// points at a time and accumulates chunk results in order, giving
/// bit-reproducible sums regardless of parallelism inside each chunk.
pub const CHUNK: usize = 1024;

/// Errors surfaced by the differentiation engine.
#[derive(Debug, Clone, PartialEq)]
pub enum AdError {
    /// Input coordinate count does not match the differentiated object.
    DimensionMismatch { expected: usize, got: usize },
    /// A value, loss, or gradient entry came out NaN or infinite.
    NonFinite { context: &'static str },
    /// A requested derivative axis is outside the input dimension.
    AxisOutOfRange { axis: usize, dim: usize },
    /// A loss term was given an empty point set.
    EmptyPointSet { context: &'static str },
}

impl fmt::Display for AdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            AdError::NonFinite { context } => write!(f, "non-finite value in {context}"),
            AdError::AxisOutOfRange { axis, dim } => {
                write!(f, "derivative axis {axis} out of range for dimension {dim}")
            }
            AdError::EmptyPointSet { context } => write!(f, "empty point set for {context}"),
        }
    }
}

impl std::error::Error for AdError {}

pub type AdResult<T> = Result<T, AdError>;

/// Which partial derivatives of the output to compute, per input axis.
/// The value `u` itself is always produced. Mixed partials are not
/// representable; the maximum order is two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DerivativeRequest {
    dim: usize,
    d1: [bool; MAX_DIM],
    d2: [bool; MAX_DIM],
}

impl DerivativeRequest {
    /// Request only the value `u`.
    pub fn value_only(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM);
        DerivativeRequest {
            dim,
            d1: [false; MAX_DIM],
            d2: [false; MAX_DIM],
        }
    }

    /// Add a first-derivative request for `axis`.
    pub fn with_d1(mut self, axis: usize) -> Self {
        assert!(axis < self.dim);
        self.d1[axis] = true;
        self
    }

    /// Add a second-derivative request for `axis` (the first derivative on
    /// that axis is propagated internally but only reported if requested).
    pub fn with_d2(mut self, axis: usize) -> Self {
        assert!(axis < self.dim);
        self.d2[axis] = true;
        self
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn wants_d1(&self, axis: usize) -> bool {
        self.d1[axis]
    }

    #[inline]
    pub fn wants_d2(&self, axis: usize) -> bool {
        self.d2[axis]
    }

    /// Axes that must be propagated: any axis with a first- or
    /// second-derivative request.
    pub fn active_axes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dim).filter(|&a| self.d1[a] || self.d2[a])
    }

    /// The table slots this request reports, in canonical order:
    /// `u`, then per axis ascending: `d1`, `d2` (requested ones only).
    pub fn slots(&self) -> Vec<Slot> {
        let mut out = vec![Slot::U];
        for a in 0..self.dim {
            if self.d1[a] {
                out.push(Slot::D1(a));
            }
            if self.d2[a] {
                out.push(Slot::D2(a));
            }
        }
        out
    }
}

/// One entry of a derivative table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    /// The value u.
    U,
    /// First partial along an axis.
    D1(usize),
    /// Second partial along an axis (no mixed partials).
    D2(usize),
}

/// Per-point table of requested values: row-major `n_points × n_slots`,
/// slot order given by [`DerivativeRequest::slots`].
#[derive(Debug, Clone)]
pub struct EvalTable {
    slots: Vec<Slot>,
    n_points: usize,
    values: Vec<f64>,
}

impl EvalTable {
    pub(crate) fn new(slots: Vec<Slot>, n_points: usize) -> Self {
        let n = slots.len() * n_points;
        EvalTable {
            slots,
            n_points,
            values: vec![0.0; n],
        }
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    fn slot_index(&self, slot: Slot) -> usize {
        self.slots
            .iter()
            .position(|&s| s == slot)
            .unwrap_or_else(|| panic!("slot {slot:?} not in table"))
    }

    /// Value of `slot` at point `i`.
    pub fn get(&self, i: usize, slot: Slot) -> f64 {
        self.values[i * self.slots.len() + self.slot_index(slot)]
    }

    /// All slot values at point `i`, in slot order.
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.slots.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.slots.len();
        &mut self.values[i * w..(i + 1) * w]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Flat gradient with respect to every trainable parameter of the
/// differentiated object, in the object's canonical parameter order (the
/// same order as its flat parameter storage).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGradient(pub Vec<f64>);

impl ParameterGradient {
    pub fn zeros(n: usize) -> Self {
        ParameterGradient(vec![0.0; n])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean norm, accumulated in index order.
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for v in &self.0 {
            acc += v * v;
        }
        acc.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Anything that can report `u` and requested partials at a point: networks
/// and closed-form expressions both implement this, which lets residual
/// checks run identically against either.
pub trait DerivativeSource {
    /// Input coordinate count.
    fn input_dim(&self) -> usize;

    /// Fill `row` (slot order per `request.slots()`) for a single point.
    fn eval_row(&self, point: &[f64], request: &DerivativeRequest, row: &mut [f64]);

    /// Fill a whole table; networks override this with a batched path that
    /// produces identical values.
    fn eval_batch(&self, points: &[Vec<f64>], request: &DerivativeRequest, table: &mut EvalTable) {
        for (i, p) in points.iter().enumerate() {
            self.eval_row(p, request, table.row_mut(i));
        }
    }
}

/// A differentiable model: forward propagation of derivative lanes with a
/// retained trace, and a reverse sweep from output-lane adjoints to
/// parameter gradients. The two network kinds (compact and mixed) implement
/// this; the loss machinery is generic over it.
pub trait DiffNet {
    /// Per-chunk retained state from the forward pass.
    type Trace;
    /// Gradient accumulator matching the model's parameter layout.
    type Grads;

    fn input_dim(&self) -> usize;

    /// Fresh zeroed gradient accumulator.
    fn new_grads(&self) -> Self::Grads;

    /// Forward pass for one chunk of points; returns the trace and the
    /// output lanes (`width == 1`).
    fn forward_traced(
        &self,
        points: &[&[f64]],
        layout: &LaneLayout,
    ) -> AdResult<(Self::Trace, LaneBatch)>;

    /// Reverse sweep: push output-lane adjoints back through the trace,
    /// accumulating into `grads`.
    fn backward(&self, trace: &Self::Trace, out_adjoint: &LaneBatch, grads: &mut Self::Grads);

    /// Zero an existing gradient accumulator for reuse.
    fn reset_grads(&self, grads: &mut Self::Grads);

    /// Σ p² over trainable network parameters (quadratic regularizers).
    fn param_sq_sum(&self) -> f64;

    /// Accumulate `c · p` into each parameter's gradient slot — the
    /// gradient of `(c/2) · Σ p²`.
    fn add_scaled_params_to_grads(&self, c: f64, grads: &mut Self::Grads);
}

/// Evaluate `source` with the requested derivatives at a batch of points.
///
/// Deterministic for fixed inputs; errors on dimension mismatch and on any
/// non-finite output.
pub fn evaluate_with_derivatives<S: DerivativeSource + ?Sized>(
    source: &S,
    points: &[Vec<f64>],
    request: &DerivativeRequest,
) -> AdResult<EvalTable> {
    if request.dim() != source.input_dim() {
        return Err(AdError::DimensionMismatch {
            expected: source.input_dim(),
            got: request.dim(),
        });
    }
    for p in points {
        if p.len() != source.input_dim() {
            return Err(AdError::DimensionMismatch {
                expected: source.input_dim(),
                got: p.len(),
            });
        }
    }
    let mut table = EvalTable::new(request.slots(), points.len());
    source.eval_batch(points, request, &mut table);
    if !table.is_finite() {
        return Err(AdError::NonFinite {
            context: "evaluate_with_derivatives",
        });
    }
    Ok(table)
}
