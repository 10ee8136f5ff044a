//! Batched derivative lanes.
//!
//! A [`LaneBatch`] carries, for a chunk of `batch` points, the network
//! activations together with their first and (where requested) second
//! derivatives along each active input axis. Lanes are stacked row-blocks
//! of one matrix — `(n_lanes · batch) × width` — so a linear layer touches
//! the whole batch with a single GEMM and weight-gradient accumulation sums
//! over lanes with a single transposed GEMM.
//!
//! Lane order: value lane first, then per active axis (ascending) the first
//! derivative lane and, if propagated, the second derivative lane.

use super::activation::Activation;
use super::{AdError, AdResult, DerivativeRequest};
use crate::linalg::{self, Mat};

/// Per-axis lane bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisLanes {
    pub axis: usize,
    pub d1_lane: usize,
    /// Present when second derivatives along this axis are propagated.
    pub d2_lane: Option<usize>,
}

/// Which lanes a propagation carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaneLayout {
    dim: usize,
    axes: Vec<AxisLanes>,
    n_lanes: usize,
}

impl LaneLayout {
    /// Lane set needed to satisfy `request`: a first-derivative lane for any
    /// axis with a d1 or d2 request, and a second-derivative lane where d2
    /// is requested.
    pub fn for_request(request: &DerivativeRequest) -> Self {
        let mut axes = Vec::new();
        let mut next = 1; // lane 0 is the value lane
        for a in request.active_axes() {
            let d1_lane = next;
            next += 1;
            let d2_lane = if request.wants_d2(a) {
                let l = next;
                next += 1;
                Some(l)
            } else {
                None
            };
            axes.push(AxisLanes {
                axis: a,
                d1_lane,
                d2_lane,
            });
        }
        LaneLayout {
            dim: request.dim(),
            axes,
            n_lanes: next,
        }
    }

    /// Value-only layout (plain forward pass).
    pub fn value_only(dim: usize) -> Self {
        LaneLayout {
            dim,
            axes: Vec::new(),
            n_lanes: 1,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n_lanes(&self) -> usize {
        self.n_lanes
    }

    #[inline]
    pub fn axes(&self) -> &[AxisLanes] {
        &self.axes
    }
}

/// Stacked lane data for one chunk of points.
#[derive(Debug, Clone)]
pub struct LaneBatch {
    n_lanes: usize,
    batch: usize,
    width: usize,
    data: Mat,
}

impl LaneBatch {
    pub fn zeros(n_lanes: usize, batch: usize, width: usize) -> Self {
        LaneBatch {
            n_lanes,
            batch,
            width,
            data: Mat::zeros(n_lanes * batch, width),
        }
    }

    /// Seed the input lanes for a chunk of points: the value lane holds the
    /// coordinates, each axis d1 lane holds the matching unit vector, d2
    /// lanes are zero.
    pub fn seed_points(points: &[&[f64]], layout: &LaneLayout) -> AdResult<Self> {
        let batch = points.len();
        let dim = layout.dim();
        let mut lb = LaneBatch::zeros(layout.n_lanes(), batch, dim);
        for (r, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(AdError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            lb.data.row_mut(r).copy_from_slice(p);
        }
        for ax in layout.axes() {
            for r in 0..batch {
                lb.data.row_mut(ax.d1_lane * batch + r)[ax.axis] = 1.0;
            }
        }
        Ok(lb)
    }

    #[inline]
    pub fn batch(&self) -> usize {
        self.batch
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn n_lanes(&self) -> usize {
        self.n_lanes
    }

    /// Row `r` of lane `l`.
    #[inline]
    pub fn lane_row(&self, l: usize, r: usize) -> &[f64] {
        self.data.row(l * self.batch + r)
    }

    #[inline]
    pub fn lane_row_mut(&mut self, l: usize, r: usize) -> &mut [f64] {
        self.data.row_mut(l * self.batch + r)
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.is_finite()
    }

    /// `z = self · wᵀ (+ bias on the value lane)` — the forward linear map,
    /// applied to every lane at once. `w` is `out_width × in_width`.
    pub fn linear(&self, w: &Mat, bias: Option<&[f64]>) -> LaneBatch {
        let mut z = LaneBatch::zeros(self.n_lanes, self.batch, w.rows());
        linalg::gemm_nt(1.0, &self.data, w, 0.0, &mut z.data);
        if let Some(b) = bias {
            for r in 0..self.batch {
                let row = z.data.row_mut(r);
                for (x, bv) in row.iter_mut().zip(b) {
                    *x += bv;
                }
            }
        }
        z
    }

    /// Reverse of [`linear`](Self::linear): propagates adjoints to the layer
    /// input and accumulates weight/bias gradients (`w_grad` is
    /// `out_width × in_width`, `self` holds the adjoints of z).
    pub fn linear_backward(
        &self,
        w: &Mat,
        input: &LaneBatch,
        w_grad: Option<&mut Mat>,
        b_grad: Option<&mut [f64]>,
    ) -> LaneBatch {
        let mut input_bar = LaneBatch::zeros(self.n_lanes, self.batch, w.cols());
        linalg::gemm(1.0, &self.data, w, 0.0, &mut input_bar.data);
        if let Some(wg) = w_grad {
            linalg::gemm_tn(1.0, &self.data, &input.data, 1.0, wg);
        }
        if let Some(bg) = b_grad {
            // Bias enters the value lane only.
            for r in 0..self.batch {
                for (g, z) in bg.iter_mut().zip(self.data.row(r)) {
                    *g += z;
                }
            }
        }
        input_bar
    }

    /// Apply the activation to all lanes via the chain rule:
    /// `a = σ(z)`, `a' = σ'(z)·z'`, `a'' = σ''(z)·z'² + σ'(z)·z''`.
    pub fn activate(&self, act: Activation, layout: &LaneLayout) -> LaneBatch {
        let mut out = LaneBatch::zeros(self.n_lanes, self.batch, self.width);
        let b = self.batch;
        for r in 0..b {
            // Split borrows: compute σ terms from the value lane row.
            for c in 0..self.width {
                let z = self.lane_row(0, r)[c];
                let (v, s1, s2, _) = act.eval3(z);
                out.lane_row_mut(0, r)[c] = v;
                for ax in layout.axes() {
                    let g1 = self.lane_row(ax.d1_lane, r)[c];
                    out.lane_row_mut(ax.d1_lane, r)[c] = s1 * g1;
                    if let Some(l2) = ax.d2_lane {
                        let g2 = self.lane_row(l2, r)[c];
                        out.lane_row_mut(l2, r)[c] = s2 * g1 * g1 + s1 * g2;
                    }
                }
            }
        }
        out
    }

    /// Reverse of [`activate`](Self::activate): converts adjoints of the
    /// post-activation lanes (`self`) into adjoints of the pre-activation
    /// lanes, given the stored pre-activation `z`. Third derivatives of the
    /// activation appear because second-derivative lanes depend on z twice.
    pub fn activate_backward(
        &self,
        act: Activation,
        z: &LaneBatch,
        layout: &LaneLayout,
    ) -> LaneBatch {
        let mut zbar = LaneBatch::zeros(self.n_lanes, self.batch, self.width);
        for r in 0..self.batch {
            for c in 0..self.width {
                let zv = z.lane_row(0, r)[c];
                let (_, s1, s2, s3) = act.eval3(zv);
                let mut zv_bar = self.lane_row(0, r)[c] * s1;
                for ax in layout.axes() {
                    let g1 = z.lane_row(ax.d1_lane, r)[c];
                    let a1_bar = self.lane_row(ax.d1_lane, r)[c];
                    zv_bar += a1_bar * s2 * g1;
                    let mut z1_bar = a1_bar * s1;
                    if let Some(l2) = ax.d2_lane {
                        let g2 = z.lane_row(l2, r)[c];
                        let a2_bar = self.lane_row(l2, r)[c];
                        zv_bar += a2_bar * (s3 * g1 * g1 + s2 * g2);
                        z1_bar += a2_bar * 2.0 * s2 * g1;
                        zbar.lane_row_mut(l2, r)[c] = a2_bar * s1;
                    }
                    zbar.lane_row_mut(ax.d1_lane, r)[c] = z1_bar;
                }
                zbar.lane_row_mut(0, r)[c] = zv_bar;
            }
        }
        zbar
    }

    /// `self[:, ..src.width] += scale · src` — zero-padded accumulation of a
    /// narrower contribution (mixture candidates) into a max-width node.
    pub fn accumulate_padded(&mut self, src: &LaneBatch, scale: f64) {
        debug_assert_eq!(self.n_lanes, src.n_lanes);
        debug_assert_eq!(self.batch, src.batch);
        debug_assert!(src.width <= self.width);
        for r in 0..self.n_lanes * self.batch {
            let dst = &mut self.data.row_mut(r)[..src.width];
            for (d, s) in dst.iter_mut().zip(src.data.row(r)) {
                *d += scale * s;
            }
        }
    }

    /// First `w` columns scaled by `scale` — the reverse of padded
    /// accumulation.
    pub fn scaled_prefix(&self, w: usize, scale: f64) -> LaneBatch {
        debug_assert!(w <= self.width);
        let mut out = LaneBatch::zeros(self.n_lanes, self.batch, w);
        for r in 0..self.n_lanes * self.batch {
            for (d, s) in out.data.row_mut(r).iter_mut().zip(self.data.row(r)) {
                *d = scale * s;
            }
        }
        out
    }

    /// Frobenius inner product of the first `w` columns with `other`
    /// (`other.width == w`), accumulated in row order. Used for mixture
    /// weight adjoints.
    pub fn prefix_dot(&self, other: &LaneBatch) -> f64 {
        debug_assert_eq!(self.n_lanes, other.n_lanes);
        debug_assert_eq!(self.batch, other.batch);
        debug_assert!(other.width <= self.width);
        let mut acc = 0.0;
        for r in 0..self.n_lanes * self.batch {
            acc += linalg::dot(&self.data.row(r)[..other.width], other.data.row(r));
        }
        acc
    }

    pub(crate) fn data(&self) -> &Mat {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut Mat {
        &mut self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout2() -> LaneLayout {
        let req = DerivativeRequest::value_only(2).with_d2(0).with_d2(1);
        LaneLayout::for_request(&req)
    }

    #[test]
    fn layout_orders_lanes_canonically() {
        let l = layout2();
        assert_eq!(l.n_lanes(), 5);
        assert_eq!(l.axes()[0].axis, 0);
        assert_eq!(l.axes()[0].d1_lane, 1);
        assert_eq!(l.axes()[0].d2_lane, Some(2));
        assert_eq!(l.axes()[1].d1_lane, 3);
    }

    #[test]
    fn seeded_points_carry_unit_tangents() {
        let l = layout2();
        let p1 = [0.25, 0.75];
        let p2 = [0.5, 0.1];
        let pts: Vec<&[f64]> = vec![&p1, &p2];
        let lb = LaneBatch::seed_points(&pts, &l).unwrap();
        assert_eq!(lb.lane_row(0, 1), &[0.5, 0.1]);
        assert_eq!(lb.lane_row(1, 0), &[1.0, 0.0]); // d/dx of (x, y)
        assert_eq!(lb.lane_row(3, 0), &[0.0, 1.0]); // d/dy of (x, y)
        assert_eq!(lb.lane_row(2, 0), &[0.0, 0.0]);
    }

    #[test]
    fn linear_applies_bias_to_value_lane_only() {
        let l = layout2();
        let p = [1.0, 2.0];
        let pts: Vec<&[f64]> = vec![&p];
        let lb = LaneBatch::seed_points(&pts, &l).unwrap();
        let w = Mat::from_vec(1, 2, vec![3.0, 4.0]);
        let z = lb.linear(&w, Some(&[10.0]));
        assert_eq!(z.lane_row(0, 0), &[3.0 + 8.0 + 10.0]);
        assert_eq!(z.lane_row(1, 0), &[3.0]); // d/dx: w·e_x
        assert_eq!(z.lane_row(3, 0), &[4.0]);
    }
}
