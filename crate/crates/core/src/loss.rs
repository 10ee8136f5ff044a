//! Loss assembly.
//!
//! A [`CompositeLoss`] is a list of mean-squared residual terms — each a
//! point set, a derivative request, and a pointwise residual built from
//! slot duals — plus an optional quadratic parameter term. Because every
//! residual is built from engine primitives, one reverse sweep per term
//! yields the exact parameter gradient, including paths through second
//! derivative lanes.
//!
//! [`pinn_loss`]/[`pinn_loss_grad`] assemble the standard PINN loss for a
//! problem and sample set: mean squared PDE residual over interior points,
//! boundary mismatch, initial mismatch, and (wave) initial-velocity
//! mismatch, combined as `λ_f·L_pde + λ_b·L_bc + λ_i·(L_ic + L_ic_v)`.
//!
//! Points are processed in fixed-size chunks and all reductions run in
//! chunk-then-index order (see [`crate::autodiff::CHUNK`]).

use crate::autodiff::{
    AdError, AdResult, DerivativeRequest, DiffNet, LaneBatch, LaneLayout, Slot, SlotDual,
    SlotValues, CHUNK,
};
use crate::net::write_slots;
use crate::pde::PdeProblem;
use crate::sampling::SampleSet;

/// Loss term weights (λ_f, λ_b, λ_i).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossWeights {
    pub pde: f64,
    pub bc: f64,
    pub ic: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            pde: 1.0,
            bc: 1.0,
            ic: 1.0,
        }
    }
}

/// Component values of one PINN loss evaluation. Components are stored
/// unweighted; `total` applies the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub pde: f64,
    pub bc: f64,
    pub ic: Option<f64>,
    pub ic_velocity: Option<f64>,
    pub weights: LossWeights,
    pub total: f64,
}

impl LossBreakdown {
    fn assemble(
        pde: f64,
        bc: f64,
        ic: Option<f64>,
        ic_velocity: Option<f64>,
        weights: LossWeights,
    ) -> Self {
        let total = weights.pde * pde
            + weights.bc * bc
            + weights.ic * (ic.unwrap_or(0.0) + ic_velocity.unwrap_or(0.0));
        LossBreakdown {
            pde,
            bc,
            ic,
            ic_velocity,
            weights,
            total,
        }
    }
}

/// One mean-squared residual term.
pub struct LossTerm<'a> {
    pub points: &'a [Vec<f64>],
    pub request: DerivativeRequest,
    /// Multiplies this term's contribution to the total (the component MSE
    /// itself is reported unweighted).
    pub weight: f64,
    /// Pointwise residual over the derivative table.
    pub residual: Box<dyn Fn(&[f64], &SlotValues) -> SlotDual + 'a>,
    /// For error messages.
    pub label: &'static str,
}

/// A scalar loss built from engine primitives: MSE terms plus an optional
/// `param_l2 · Σ p²` parameter term.
pub struct CompositeLoss<'a> {
    pub terms: Vec<LossTerm<'a>>,
    pub param_l2: f64,
}

impl<'a> CompositeLoss<'a> {
    pub fn new(terms: Vec<LossTerm<'a>>) -> Self {
        CompositeLoss {
            terms,
            param_l2: 0.0,
        }
    }

    pub fn with_param_l2(mut self, weight: f64) -> Self {
        self.param_l2 = weight;
        self
    }
}

/// Evaluate one MSE term, optionally accumulating gradients.
///
/// The adjoint seed of slot s at point i is `scale · r_i · ∂r_i/∂s` with
/// `scale = term.weight · 2/N` — the derivative of the weighted mean of
/// squared residuals.
fn run_term<N: DiffNet>(
    net: &N,
    term: &LossTerm<'_>,
    mut grads: Option<&mut N::Grads>,
) -> AdResult<f64> {
    if term.points.is_empty() {
        return Err(AdError::EmptyPointSet {
            context: term.label,
        });
    }
    let layout = LaneLayout::for_request(&term.request);
    let slots = term.request.slots();
    // slot index -> lane index, for seeding adjoints.
    let lane_of_slot: Vec<usize> = slots
        .iter()
        .map(|s| match *s {
            Slot::U => 0,
            Slot::D1(a) => layout
                .axes()
                .iter()
                .find(|ax| ax.axis == a)
                .unwrap()
                .d1_lane,
            Slot::D2(a) => layout
                .axes()
                .iter()
                .find(|ax| ax.axis == a)
                .unwrap()
                .d2_lane
                .unwrap(),
        })
        .collect();

    let n = term.points.len() as f64;
    let scale = term.weight * 2.0 / n;
    let mut acc = 0.0;
    let mut row = vec![0.0; slots.len()];
    for chunk in term.points.chunks(CHUNK) {
        let refs: Vec<&[f64]> = chunk.iter().map(|p| p.as_slice()).collect();
        let (trace, y) = net.forward_traced(&refs, &layout)?;
        let mut adj = LaneBatch::zeros(layout.n_lanes(), chunk.len(), 1);
        for (r, p) in chunk.iter().enumerate() {
            write_slots(&y, r, &term.request, &layout, &mut row);
            let tv = SlotValues::new(&slots, &row);
            let res = (term.residual)(p, &tv);
            acc += res.v * res.v;
            if grads.is_some() {
                for (si, &lane) in lane_of_slot.iter().enumerate() {
                    adj.lane_row_mut(lane, r)[0] = scale * res.v * res.g[si];
                }
            }
        }
        if let Some(g) = grads.as_deref_mut() {
            net.backward(&trace, &adj, g);
        }
    }
    let mse = acc / n;
    if !mse.is_finite() {
        return Err(AdError::NonFinite {
            context: term.label,
        });
    }
    Ok(mse)
}

/// Value of a composite loss: per-term MSEs and the weighted total.
pub fn composite_value<N: DiffNet>(net: &N, loss: &CompositeLoss<'_>) -> AdResult<Vec<f64>> {
    loss.terms.iter().map(|t| run_term(net, t, None)).collect()
}

/// Value and parameter gradient of a composite loss.
///
/// Returns the per-term MSEs, the weighted total, and the accumulated
/// gradients in the network's canonical parameter order.
pub fn composite_gradient<N: DiffNet>(
    net: &N,
    loss: &CompositeLoss<'_>,
) -> AdResult<(Vec<f64>, f64, N::Grads)> {
    let mut grads = net.new_grads();
    let mut values = Vec::with_capacity(loss.terms.len());
    let mut total = 0.0;
    for term in &loss.terms {
        let v = run_term(net, term, Some(&mut grads))?;
        total += term.weight * v;
        values.push(v);
    }
    if loss.param_l2 != 0.0 {
        total += loss.param_l2 * net.param_sq_sum();
        net.add_scaled_params_to_grads(2.0 * loss.param_l2, &mut grads);
    }
    if !total.is_finite() {
        return Err(AdError::NonFinite {
            context: "composite loss total",
        });
    }
    Ok((values, total, grads))
}

/// Build the PINN loss terms for `(problem, samples)`.
fn pinn_terms<'a>(
    problem: &'a PdeProblem,
    samples: &'a SampleSet,
    weights: LossWeights,
) -> AdResult<CompositeLoss<'a>> {
    let time_dep = problem.domain().time_dependent;
    let mut terms = Vec::new();
    terms.push(LossTerm {
        points: &samples.interior,
        request: problem.request(),
        weight: weights.pde,
        residual: Box::new(move |p, t| problem.residual(p, t)),
        label: "pde residual",
    });
    terms.push(LossTerm {
        points: &samples.boundary,
        request: DerivativeRequest::value_only(2),
        weight: weights.bc,
        residual: Box::new(move |p, t| t.u() - problem.boundary_value(p)),
        label: "boundary",
    });
    if time_dep {
        terms.push(LossTerm {
            points: &samples.initial,
            request: DerivativeRequest::value_only(2),
            weight: weights.ic,
            residual: Box::new(move |p, t| t.u() - problem.initial_value(p[0])),
            label: "initial",
        });
        if problem.has_velocity_ic() {
            // Velocity condition on the same t = 0 points, unit weight
            // within the λ_i group.
            terms.push(LossTerm {
                points: &samples.initial,
                request: DerivativeRequest::value_only(2).with_d1(1),
                weight: weights.ic,
                residual: Box::new(move |p, t| t.d1(1) - problem.initial_velocity(p[0])),
                label: "initial velocity",
            });
        }
    }
    Ok(CompositeLoss::new(terms))
}

fn breakdown_from(problem: &PdeProblem, values: &[f64], weights: LossWeights) -> LossBreakdown {
    let time_dep = problem.domain().time_dependent;
    LossBreakdown::assemble(
        values[0],
        values[1],
        time_dep.then(|| values[2]),
        (time_dep && problem.has_velocity_ic()).then(|| values[3]),
        weights,
    )
}

/// PINN loss of `net` on `samples`.
pub fn pinn_loss<N: DiffNet>(
    net: &N,
    problem: &PdeProblem,
    samples: &SampleSet,
    weights: LossWeights,
) -> AdResult<LossBreakdown> {
    let loss = pinn_terms(problem, samples, weights)?;
    let values = composite_value(net, &loss)?;
    Ok(breakdown_from(problem, &values, weights))
}

/// PINN loss and its gradient with respect to all trainables.
pub fn pinn_loss_grad<N: DiffNet>(
    net: &N,
    problem: &PdeProblem,
    samples: &SampleSet,
    weights: LossWeights,
) -> AdResult<(LossBreakdown, N::Grads)> {
    let mut grads = net.new_grads();
    let breakdown = pinn_loss_grad_into(net, problem, samples, weights, &mut grads)?;
    Ok((breakdown, grads))
}

/// Like [`pinn_loss_grad`] but reusing a caller-owned accumulator (zeroed
/// first) — the training loops call this every iteration.
pub fn pinn_loss_grad_into<N: DiffNet>(
    net: &N,
    problem: &PdeProblem,
    samples: &SampleSet,
    weights: LossWeights,
    grads: &mut N::Grads,
) -> AdResult<LossBreakdown> {
    net.reset_grads(grads);
    let loss = pinn_terms(problem, samples, weights)?;
    let mut values = Vec::with_capacity(loss.terms.len());
    for term in &loss.terms {
        values.push(run_term(net, term, Some(grads))?);
    }
    Ok(breakdown_from(problem, &values, weights))
}
