//! The mixed search network: a linear chain of max-width nodes whose edges
//! each hold five candidate operations — four linear layers of increasing
//! width and a parameter-free skip connection. Candidate outputs are
//! zero-padded to the maximum width and combined with softmax or sigmoid
//! mixture weights derived from per-edge architecture parameters α.
//! Discretization keeps the argmax candidate per edge and deletes
//! skip-selected edges, yielding a compact architecture.

use crate::autodiff::{
    AdError, AdResult, Activation, DerivativeRequest, DerivativeSource, DiffNet, EvalTable,
    LaneBatch, LaneLayout, CHUNK,
};
use crate::linalg::Mat;
use crate::net::{write_slots, Fnn};
use core::fmt;
use core::str::FromStr;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of chain nodes (hidden representations) including the input-layer
/// output; edges sit between consecutive nodes.
pub const N_NODES: usize = 9;
/// Edges in the chain.
pub const N_EDGES: usize = N_NODES - 1;
/// Candidates per edge: four linear widths plus skip.
pub const N_CANDIDATES: usize = 5;
/// Candidate index of the skip connection (linear candidates are 0..=3 in
/// width-code order).
pub const SKIP: usize = N_CANDIDATES - 1;

/// Layer-width code `1..=4`; the concrete neuron counts come from a
/// [`WidthTable`] (100/200/300/400 at paper scale).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct WidthCode(u8);

impl WidthCode {
    pub fn new(code: u8) -> Result<Self, String> {
        if (1..=4).contains(&code) {
            Ok(WidthCode(code))
        } else {
            Err(format!("width code must be 1..=4, got {code}"))
        }
    }

    #[inline]
    pub fn code(self) -> u8 {
        self.0
    }

    /// Candidate index (0-based).
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub const ALL: [WidthCode; 4] = [WidthCode(1), WidthCode(2), WidthCode(3), WidthCode(4)];
}

/// Candidate widths in code order (code 1 → `table[0]`, …).
pub type WidthTable = [usize; 4];

/// Widths used throughout the full-scale experiments.
pub const PAPER_WIDTHS: WidthTable = [100, 200, 300, 400];

/// Discrete architecture: hidden-layer width codes in chain order, after
/// skip-selected edges have been removed. Empty means the input layer feeds
/// the output layer directly.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct ArchitectureSpec {
    codes: Vec<WidthCode>,
}

impl ArchitectureSpec {
    pub fn new(codes: Vec<WidthCode>) -> Self {
        assert!(codes.len() <= N_EDGES, "at most {N_EDGES} layers");
        ArchitectureSpec { codes }
    }

    /// Build from raw codes, e.g. `[4, 2, 3]`.
    pub fn from_codes(raw: &[u8]) -> Result<Self, String> {
        let codes = raw
            .iter()
            .map(|&c| WidthCode::new(c))
            .collect::<Result<Vec<_>, _>>()?;
        if codes.len() > N_EDGES {
            return Err(format!("architecture deeper than {N_EDGES}"));
        }
        Ok(ArchitectureSpec::new(codes))
    }

    pub fn codes(&self) -> &[WidthCode] {
        &self.codes
    }

    pub fn depth(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Concrete layer widths under a width table.
    pub fn widths(&self, table: &WidthTable) -> Vec<usize> {
        self.codes.iter().map(|c| table[c.index()]).collect()
    }

    /// Even-width spec: `depth` layers of one code.
    pub fn even(code: WidthCode, depth: usize) -> Self {
        ArchitectureSpec::new(vec![code; depth])
    }
}

impl fmt::Display for ArchitectureSpec {
    /// Serialized as parenthesized comma-separated codes: `(4,2,3,4,4,4)`;
    /// the empty architecture prints `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.codes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", c.code())?;
        }
        write!(f, ")")
    }
}

impl FromStr for ArchitectureSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| format!("architecture spec must be parenthesized: {s:?}"))?;
        let inner = inner.trim();
        if inner.is_empty() {
            return Ok(ArchitectureSpec::default());
        }
        let mut raw = Vec::new();
        for part in inner.split(',') {
            let c: u8 = part
                .trim()
                .parse()
                .map_err(|e| format!("bad width code {part:?}: {e}"))?;
            raw.push(c);
        }
        ArchitectureSpec::from_codes(&raw)
    }
}

/// How α rows become mixture weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MixtureMode {
    /// Weights sum to one; candidates compete.
    Softmax,
    /// Independent weights in (0,1); no competition.
    Sigmoid,
}

/// Mixture weights for one edge from its α row.
///
/// Softmax rows are computed max-shifted and sum to one; sigmoid entries are
/// independent. Errors on non-finite input.
pub fn mixture_weights(alpha_row: &[f64], mode: MixtureMode) -> AdResult<Vec<f64>> {
    if alpha_row.iter().any(|a| !a.is_finite()) {
        return Err(AdError::NonFinite {
            context: "mixture_weights input",
        });
    }
    match mode {
        MixtureMode::Softmax => {
            let max = alpha_row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = alpha_row.iter().map(|a| (a - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            Ok(exps.into_iter().map(|e| e / sum).collect())
        }
        MixtureMode::Sigmoid => Ok(alpha_row
            .iter()
            .map(|a| 1.0 / (1.0 + (-a).exp()))
            .collect()),
    }
}

/// Adjoint of [`mixture_weights`]: given ∂L/∂m, accumulate ∂L/∂α.
fn mixture_backward(
    alpha_row: &[f64],
    mode: MixtureMode,
    m: &[f64],
    m_bar: &[f64],
    a_bar: &mut [f64],
) {
    match mode {
        MixtureMode::Softmax => {
            // dm_i/dα_j = m_i (δ_ij − m_j)
            let mut dot = 0.0;
            for (mi, bi) in m.iter().zip(m_bar) {
                dot += mi * bi;
            }
            for j in 0..m.len() {
                a_bar[j] += m[j] * (m_bar[j] - dot);
            }
        }
        MixtureMode::Sigmoid => {
            for j in 0..m.len() {
                let s = 1.0 / (1.0 + (-alpha_row[j]).exp());
                a_bar[j] += m_bar[j] * s * (1.0 - s);
            }
        }
    }
}

/// One linear candidate: weight `width × max_width` plus bias.
#[derive(Debug, Clone)]
struct Candidate {
    w: Mat,
    b: Vec<f64>,
}

/// The search network.
#[derive(Debug, Clone)]
pub struct MixedNetwork {
    input_dim: usize,
    widths: WidthTable,
    max_width: usize,
    activation: Activation,
    mixture: MixtureMode,
    input_w: Mat,
    input_b: Vec<f64>,
    /// `edges[e][c]` for c in 0..4; skip has no parameters.
    edges: Vec<Vec<Candidate>>,
    output_w: Mat,
    output_b: Vec<f64>,
    /// α, one row per edge, one column per candidate.
    alpha: Vec<f64>,
}

/// Gradient accumulator for a [`MixedNetwork`]. Weight-gradient
/// accumulation can be disabled for α-only sweeps.
#[derive(Debug, Clone)]
pub struct MixedGrads {
    pub want_weights: bool,
    pub input_w: Mat,
    pub input_b: Vec<f64>,
    pub edges: Vec<Vec<(Mat, Vec<f64>)>>,
    pub output_w: Mat,
    pub output_b: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Retained forward state for one chunk.
pub struct MixedTrace {
    /// Seeded input lanes, then node lanes h_0 … h_8.
    nodes: Vec<LaneBatch>,
    /// Input-layer pre-activation.
    input_z: LaneBatch,
    /// Pre-activations per edge per linear candidate.
    edge_z: Vec<Vec<LaneBatch>>,
    /// Mixture weights per edge at trace time.
    mix: Vec<Vec<f64>>,
    layout: LaneLayout,
}

impl MixedNetwork {
    pub fn new(
        input_dim: usize,
        widths: WidthTable,
        activation: Activation,
        mixture: MixtureMode,
    ) -> Self {
        let max_width = widths[3];
        assert!(widths.windows(2).all(|w| w[0] <= w[1]), "widths nondecreasing");
        let edges = (0..N_EDGES)
            .map(|_| {
                widths
                    .iter()
                    .map(|&w| Candidate {
                        w: Mat::zeros(w, max_width),
                        b: vec![0.0; w],
                    })
                    .collect()
            })
            .collect();
        MixedNetwork {
            input_dim,
            widths,
            max_width,
            activation,
            mixture,
            input_w: Mat::zeros(max_width, input_dim),
            input_b: vec![0.0; max_width],
            edges,
            output_w: Mat::zeros(1, max_width),
            output_b: vec![0.0; 1],
            alpha: vec![0.0; N_EDGES * N_CANDIDATES],
        }
    }

    /// Glorot-uniform network parameters and all-zero α (uniform mixture).
    pub fn seeded(
        input_dim: usize,
        widths: WidthTable,
        activation: Activation,
        mixture: MixtureMode,
        seed: u64,
    ) -> Self {
        let mut net = MixedNetwork::new(input_dim, widths, activation, mixture);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = |m: &mut Mat, rng: &mut ChaCha8Rng| {
            let limit = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
            for v in m.as_mut_slice() {
                *v = rng.gen_range(-limit..=limit);
            }
        };
        init(&mut net.input_w, &mut rng);
        for e in 0..N_EDGES {
            for c in 0..4 {
                init(&mut net.edges[e][c].w, &mut rng);
            }
        }
        init(&mut net.output_w, &mut rng);
        net
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn mixture_mode(&self) -> MixtureMode {
        self.mixture
    }

    pub fn widths(&self) -> &WidthTable {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// α as a flat row-major `N_EDGES × N_CANDIDATES` slice.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn alpha_mut(&mut self) -> &mut [f64] {
        &mut self.alpha
    }

    pub fn alpha_row(&self, edge: usize) -> &[f64] {
        &self.alpha[edge * N_CANDIDATES..(edge + 1) * N_CANDIDATES]
    }

    /// Force α one-hot on `spec`'s candidates (skip on remaining edges).
    /// The magnitudes are large enough that softmax/sigmoid weights come out
    /// exactly one and zero in floating point.
    pub fn set_alpha_one_hot(&mut self, spec: &ArchitectureSpec) {
        const HOT: f64 = 1.0e3;
        self.alpha.iter_mut().for_each(|a| *a = -HOT);
        for e in 0..N_EDGES {
            let hot = if e < spec.depth() {
                spec.codes()[e].index()
            } else {
                SKIP
            };
            self.alpha[e * N_CANDIDATES + hot] = HOT;
        }
    }

    /// Trainable network parameter count (α not included).
    pub fn param_count(&self) -> usize {
        let mut n = self.max_width * self.input_dim + self.max_width;
        for w in self.widths {
            n += (w * self.max_width + w) * N_EDGES;
        }
        n + self.max_width + 1
    }

    /// Visit network parameters mutably in canonical order: input layer,
    /// edges ascending with candidates in width order (weights then bias),
    /// output layer.
    pub fn visit_params_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        for v in self.input_w.as_mut_slice() {
            f(idx, v);
            idx += 1;
        }
        for v in &mut self.input_b {
            f(idx, v);
            idx += 1;
        }
        for e in 0..N_EDGES {
            for c in 0..4 {
                for v in self.edges[e][c].w.as_mut_slice() {
                    f(idx, v);
                    idx += 1;
                }
                for v in &mut self.edges[e][c].b {
                    f(idx, v);
                    idx += 1;
                }
            }
        }
        for v in self.output_w.as_mut_slice() {
            f(idx, v);
            idx += 1;
        }
        for v in &mut self.output_b {
            f(idx, v);
            idx += 1;
        }
    }

    /// Swap two linear candidates (parameters and α entries) within an
    /// edge. Requires equal widths; used to check mixture symmetry.
    pub fn swap_candidates(&mut self, edge: usize, c1: usize, c2: usize) {
        assert!(c1 < 4 && c2 < 4);
        assert_eq!(self.widths[c1], self.widths[c2], "swap needs equal widths");
        self.edges[edge].swap(c1, c2);
        self.alpha
            .swap(edge * N_CANDIDATES + c1, edge * N_CANDIDATES + c2);
    }

    /// Copy a compact network's blocks out of this supernet for `spec`:
    /// input layer, per-layer candidate sub-blocks (columns up to the
    /// incoming width), and the output sub-block.
    pub fn extract_compact(&self, spec: &ArchitectureSpec) -> Fnn {
        let mut fnn = crate::supernet::build_compact_fnn(
            spec,
            self.input_dim,
            &self.widths,
            self.activation,
            0,
        );
        fnn.weight_mut(0).as_mut_slice().copy_from_slice(self.input_w.as_slice());
        fnn.bias_mut(0).copy_from_slice(&self.input_b);
        let mut in_w = self.max_width;
        for (l, code) in spec.codes().iter().enumerate() {
            let cand = &self.edges[l][code.index()];
            let t = l + 1;
            for r in 0..cand.w.rows() {
                for c in 0..in_w {
                    fnn.weight_mut(t).set(r, c, cand.w.get(r, c));
                }
            }
            fnn.bias_mut(t).copy_from_slice(&cand.b);
            in_w = self.widths[code.index()];
        }
        let t = spec.depth() + 1;
        for c in 0..in_w {
            fnn.weight_mut(t).set(0, c, self.output_w.get(0, c));
        }
        fnn.bias_mut(t).copy_from_slice(&self.output_b);
        fnn
    }

    /// Forward pass for one point (value only).
    pub fn forward_mixed(&self, point: &[f64]) -> AdResult<f64> {
        if point.len() != self.input_dim {
            return Err(AdError::DimensionMismatch {
                expected: self.input_dim,
                got: point.len(),
            });
        }
        let layout = LaneLayout::value_only(self.input_dim);
        let (_, y) = self.forward_traced(&[point], &layout)?;
        let v = y.lane_row(0, 0)[0];
        if !v.is_finite() {
            return Err(AdError::NonFinite {
                context: "forward_mixed",
            });
        }
        Ok(v)
    }

    /// Plain forward pass over many points.
    pub fn predict(&self, points: &[Vec<f64>]) -> AdResult<Vec<f64>> {
        let layout = LaneLayout::value_only(self.input_dim);
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(CHUNK) {
            let refs: Vec<&[f64]> = chunk.iter().map(|p| p.as_slice()).collect();
            let (_, y) = self.forward_traced(&refs, &layout)?;
            for r in 0..y.batch() {
                out.push(y.lane_row(0, r)[0]);
            }
        }
        Ok(out)
    }
}

impl DiffNet for MixedNetwork {
    type Trace = MixedTrace;
    type Grads = MixedGrads;

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn new_grads(&self) -> MixedGrads {
        MixedGrads {
            want_weights: true,
            input_w: Mat::zeros(self.max_width, self.input_dim),
            input_b: vec![0.0; self.max_width],
            edges: (0..N_EDGES)
                .map(|_| {
                    self.widths
                        .iter()
                        .map(|&w| (Mat::zeros(w, self.max_width), vec![0.0; w]))
                        .collect()
                })
                .collect(),
            output_w: Mat::zeros(1, self.max_width),
            output_b: vec![0.0; 1],
            alpha: vec![0.0; N_EDGES * N_CANDIDATES],
        }
    }

    fn forward_traced(
        &self,
        points: &[&[f64]],
        layout: &LaneLayout,
    ) -> AdResult<(MixedTrace, LaneBatch)> {
        let x = LaneBatch::seed_points(points, layout)?;
        let input_z = x.linear(&self.input_w, Some(&self.input_b));
        let h0 = input_z.activate(self.activation, layout);
        let batch = h0.batch();

        let mut nodes = Vec::with_capacity(N_NODES + 1);
        let mut edge_z = Vec::with_capacity(N_EDGES);
        let mut mix = Vec::with_capacity(N_EDGES);
        nodes.push(x); // seeded input, kept for the input-layer gradient
        nodes.push(h0);

        for e in 0..N_EDGES {
            let m = mixture_weights(self.alpha_row(e), self.mixture)?;
            let h_in = nodes.last().unwrap();
            let mut h_out = LaneBatch::zeros(layout.n_lanes(), batch, self.max_width);
            let mut zs = Vec::with_capacity(4);
            for c in 0..4 {
                let cand = &self.edges[e][c];
                let z = h_in.linear(&cand.w, Some(&cand.b));
                let a = z.activate(self.activation, layout);
                h_out.accumulate_padded(&a, m[c]);
                zs.push(z);
            }
            h_out.accumulate_padded(h_in, m[SKIP]);
            edge_z.push(zs);
            mix.push(m);
            nodes.push(h_out);
        }

        let y = nodes
            .last()
            .unwrap()
            .linear(&self.output_w, Some(&self.output_b));
        Ok((
            MixedTrace {
                nodes,
                input_z,
                edge_z,
                mix,
                layout: layout.clone(),
            },
            y,
        ))
    }

    fn backward(&self, trace: &MixedTrace, out_adjoint: &LaneBatch, grads: &mut MixedGrads) {
        let layout = &trace.layout;
        // nodes[0] is the seeded input; node h_i lives at nodes[i + 1].
        let h_last = &trace.nodes[N_EDGES + 1];
        let mut hbar = {
            let (wg, bg) = if grads.want_weights {
                (Some(&mut grads.output_w), Some(&mut grads.output_b[..]))
            } else {
                (None, None)
            };
            out_adjoint.linear_backward(&self.output_w, h_last, wg, bg)
        };

        for e in (0..N_EDGES).rev() {
            let h_in = &trace.nodes[e + 1];
            let m = &trace.mix[e];
            let mut m_bar = [0.0; N_CANDIDATES];
            let mut hbar_in = LaneBatch::zeros(layout.n_lanes(), hbar.batch(), self.max_width);
            for c in 0..4 {
                let cand = &self.edges[e][c];
                let z = &trace.edge_z[e][c];
                // Candidate activation is recomputed rather than stored.
                let a = z.activate(self.activation, layout);
                m_bar[c] = hbar.prefix_dot(&a);
                let abar = hbar.scaled_prefix(cand.w.rows(), m[c]);
                let zbar = abar.activate_backward(self.activation, z, layout);
                let ib = {
                    let (wg, bg) = if grads.want_weights {
                        let slot = &mut grads.edges[e][c];
                        (Some(&mut slot.0), Some(&mut slot.1[..]))
                    } else {
                        (None, None)
                    };
                    zbar.linear_backward(&cand.w, h_in, wg, bg)
                };
                hbar_in.accumulate_padded(&ib, 1.0);
            }
            m_bar[SKIP] = hbar.prefix_dot(h_in);
            hbar_in.accumulate_padded(&hbar, m[SKIP]);
            mixture_backward(
                self.alpha_row(e),
                self.mixture,
                m,
                &m_bar,
                &mut grads.alpha[e * N_CANDIDATES..(e + 1) * N_CANDIDATES],
            );
            hbar = hbar_in;
        }

        // Input layer.
        let zbar = hbar.activate_backward(self.activation, &trace.input_z, layout);
        let (wg, bg) = if grads.want_weights {
            (Some(&mut grads.input_w), Some(&mut grads.input_b[..]))
        } else {
            (None, None)
        };
        let _ = zbar.linear_backward(&self.input_w, &trace.nodes[0], wg, bg);
    }

    fn reset_grads(&self, grads: &mut MixedGrads) {
        grads.input_w.fill(0.0);
        grads.input_b.iter_mut().for_each(|v| *v = 0.0);
        for e in &mut grads.edges {
            for (w, b) in e {
                w.fill(0.0);
                b.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        grads.output_w.fill(0.0);
        grads.output_b.iter_mut().for_each(|v| *v = 0.0);
        grads.alpha.iter_mut().for_each(|v| *v = 0.0);
    }

    fn param_sq_sum(&self) -> f64 {
        let mut acc = 0.0;
        let mut add = |m: &Mat, b: &[f64]| {
            for v in m.as_slice() {
                acc += v * v;
            }
            for v in b {
                acc += v * v;
            }
        };
        add(&self.input_w, &self.input_b);
        for e in &self.edges {
            for c in e {
                add(&c.w, &c.b);
            }
        }
        add(&self.output_w, &self.output_b);
        acc
    }

    fn add_scaled_params_to_grads(&self, c: f64, grads: &mut MixedGrads) {
        grads.input_w.add_scaled(&self.input_w, c);
        for (g, p) in grads.input_b.iter_mut().zip(&self.input_b) {
            *g += c * p;
        }
        for e in 0..N_EDGES {
            for cand in 0..4 {
                let (gw, gb) = &mut grads.edges[e][cand];
                gw.add_scaled(&self.edges[e][cand].w, c);
                for (g, p) in gb.iter_mut().zip(&self.edges[e][cand].b) {
                    *g += c * p;
                }
            }
        }
        grads.output_w.add_scaled(&self.output_w, c);
        for (g, p) in grads.output_b.iter_mut().zip(&self.output_b) {
            *g += c * p;
        }
    }
}

impl MixedGrads {
    /// α-only accumulation (skips all weight-gradient GEMMs).
    pub fn alpha_only(mut self) -> Self {
        self.want_weights = false;
        self
    }

    /// Flatten network-weight gradients in canonical parameter order.
    pub fn flatten_weights(&self) -> crate::autodiff::ParameterGradient {
        let mut out = Vec::new();
        out.extend_from_slice(self.input_w.as_slice());
        out.extend_from_slice(&self.input_b);
        for e in &self.edges {
            for (w, b) in e {
                out.extend_from_slice(w.as_slice());
                out.extend_from_slice(b);
            }
        }
        out.extend_from_slice(self.output_w.as_slice());
        out.extend_from_slice(&self.output_b);
        crate::autodiff::ParameterGradient(out)
    }
}

impl DerivativeSource for MixedNetwork {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn eval_row(&self, point: &[f64], request: &DerivativeRequest, row: &mut [f64]) {
        let layout = LaneLayout::for_request(request);
        let pts = [point];
        let (_, y) = self
            .forward_traced(&pts, &layout)
            .expect("caller checks dimensions");
        write_slots(&y, 0, request, &layout, row);
    }

    fn eval_batch(&self, points: &[Vec<f64>], request: &DerivativeRequest, table: &mut EvalTable) {
        let layout = LaneLayout::for_request(request);
        let mut base = 0;
        for chunk in points.chunks(CHUNK) {
            let refs: Vec<&[f64]> = chunk.iter().map(|p| p.as_slice()).collect();
            let (_, y) = self
                .forward_traced(&refs, &layout)
                .expect("caller checks dimensions");
            for r in 0..y.batch() {
                write_slots(&y, r, request, &layout, table.row_mut(base + r));
            }
            base += chunk.len();
        }
    }
}

/// Argmax candidate per edge (ties to the lowest index); skip-selected
/// edges are removed. Returns the spec and the number of skips.
pub fn discretize(alpha: &[f64]) -> (ArchitectureSpec, usize) {
    assert_eq!(alpha.len(), N_EDGES * N_CANDIDATES);
    let mut codes = Vec::new();
    let mut skips = 0;
    for e in 0..N_EDGES {
        let row = &alpha[e * N_CANDIDATES..(e + 1) * N_CANDIDATES];
        let mut best = 0;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        if best == SKIP {
            skips += 1;
        } else {
            codes.push(WidthCode::new(best as u8 + 1).unwrap());
        }
    }
    (ArchitectureSpec::new(codes), skips)
}

/// The per-edge candidate ranking (indices sorted by α descending, ties to
/// the lower index): the quantity whose stability drives early stopping.
pub fn alpha_ranking(alpha: &[f64]) -> Vec<[u8; N_CANDIDATES]> {
    assert_eq!(alpha.len(), N_EDGES * N_CANDIDATES);
    (0..N_EDGES)
        .map(|e| {
            let row = &alpha[e * N_CANDIDATES..(e + 1) * N_CANDIDATES];
            let mut order = [0u8, 1, 2, 3, 4];
            order.sort_by(|&a, &b| {
                row[b as usize]
                    .partial_cmp(&row[a as usize])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order
        })
        .collect()
}

/// Fresh compact network realizing `spec`: input layer to the maximum
/// width, one hidden layer per listed width, linear output layer. Xavier
/// initialization from `seed`.
pub fn build_compact_fnn(
    spec: &ArchitectureSpec,
    input_dim: usize,
    widths: &WidthTable,
    activation: Activation,
    seed: u64,
) -> Fnn {
    let mut dims = Vec::with_capacity(spec.depth() + 3);
    dims.push(input_dim);
    dims.push(widths[3]);
    dims.extend(spec.widths(widths));
    dims.push(1);
    Fnn::seeded(dims, activation, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_uniform_on_zero_alpha() {
        let m = mixture_weights(&[0.0; 5], MixtureMode::Softmax).unwrap();
        for w in &m {
            assert!((w - 0.2).abs() < 1e-15);
        }
        let s = mixture_weights(&[0.0; 5], MixtureMode::Sigmoid).unwrap();
        for w in &s {
            assert!((w - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_one_vs_zeros() {
        // softmax(1,0,0,0,0) = (e/(e+4), 1/(e+4) ×4)
        let m = mixture_weights(&[1.0, 0.0, 0.0, 0.0, 0.0], MixtureMode::Softmax).unwrap();
        let e = core::f64::consts::E;
        assert!((m[0] - e / (e + 4.0)).abs() < 1e-15);
        assert!((m[0] - 0.40460968).abs() < 1e-8);
        for w in &m[1..] {
            assert!((w - 1.0 / (e + 4.0)).abs() < 1e-15);
            assert!((w - 0.14884758).abs() < 1e-8);
        }
        let sum: f64 = m.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_rejects_non_finite() {
        assert!(mixture_weights(&[f64::NAN, 0.0], MixtureMode::Softmax).is_err());
        assert!(mixture_weights(&[f64::INFINITY, 0.0], MixtureMode::Sigmoid).is_err());
    }

    #[test]
    fn discretize_drops_skips_and_breaks_ties_low() {
        let mut alpha = vec![0.0; N_EDGES * N_CANDIDATES];
        // Edges 0..5 select widths 4,2,3,4,4,4; edges 6,7 select skip.
        for (e, &c) in [4u8, 2, 3, 4, 4, 4].iter().enumerate() {
            alpha[e * N_CANDIDATES + (c as usize - 1)] = 5.0;
        }
        alpha[6 * N_CANDIDATES + SKIP] = 5.0;
        alpha[7 * N_CANDIDATES + SKIP] = 5.0;
        let (spec, skips) = discretize(&alpha);
        assert_eq!(spec.to_string(), "(4,2,3,4,4,4)");
        assert_eq!(skips, 2);

        // All-zero alpha ties → candidate 0 everywhere (width code 1).
        let (spec, skips) = discretize(&vec![0.0; N_EDGES * N_CANDIDATES]);
        assert_eq!(spec.to_string(), "(1,1,1,1,1,1,1,1)");
        assert_eq!(skips, 0);

        // All-skip.
        let mut alpha = vec![0.0; N_EDGES * N_CANDIDATES];
        for e in 0..N_EDGES {
            alpha[e * N_CANDIDATES + SKIP] = 1.0;
        }
        let (spec, skips) = discretize(&alpha);
        assert!(spec.is_empty());
        assert_eq!(skips, 8);
    }

    #[test]
    fn discretize_matches_bruteforce_argmax() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let alpha: Vec<f64> = (0..N_EDGES * N_CANDIDATES)
                .map(|_| rng.gen_range(-3.0..3.0))
                .collect();
            let (spec, skips) = discretize(&alpha);
            let mut codes = Vec::new();
            let mut brute_skips = 0;
            for e in 0..N_EDGES {
                let row = &alpha[e * N_CANDIDATES..(e + 1) * N_CANDIDATES];
                let best = row
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                if best == SKIP {
                    brute_skips += 1;
                } else {
                    codes.push(best as u8 + 1);
                }
            }
            assert_eq!(skips, brute_skips);
            assert_eq!(spec, ArchitectureSpec::from_codes(&codes).unwrap());
        }
    }

    #[test]
    fn one_hot_roundtrip() {
        let spec = ArchitectureSpec::from_codes(&[4, 2, 3, 4, 4, 4]).unwrap();
        let mut net = MixedNetwork::new(2, PAPER_WIDTHS, Activation::Tanh, MixtureMode::Softmax);
        net.set_alpha_one_hot(&spec);
        let (round, skips) = discretize(net.alpha());
        assert_eq!(round, spec);
        assert_eq!(skips, 2);
        // One-hot α yields exactly-one/zero mixture weights.
        let m = mixture_weights(net.alpha_row(0), MixtureMode::Softmax).unwrap();
        assert_eq!(m[3], 1.0);
        assert_eq!(m[0], 0.0);
    }

    #[test]
    fn spec_string_roundtrip() {
        for s in ["(4,2,3,4,4,4)", "()", "(1)", "(1,2,3,4,1,2,3,4)"] {
            let spec: ArchitectureSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("(5)".parse::<ArchitectureSpec>().is_err());
        assert!("(1,2,3,4,1,2,3,4,1)".parse::<ArchitectureSpec>().is_err());
        assert!("4,2".parse::<ArchitectureSpec>().is_err());
    }

    #[test]
    fn compact_fnn_shapes_and_param_count() {
        let spec = ArchitectureSpec::from_codes(&[4, 2, 3, 4, 4, 4]).unwrap();
        let net = build_compact_fnn(&spec, 2, &PAPER_WIDTHS, Activation::Tanh, 0);
        assert_eq!(net.dims(), &[2, 400, 400, 200, 300, 400, 400, 400, 1]);
        // Input layer to max width, then one transition per listed layer
        // (the first consumes the 400-wide input representation), then the
        // output layer.
        let expect = (2 * 400 + 400)
            + (400 * 400 + 400)
            + (400 * 200 + 200)
            + (200 * 300 + 300)
            + (300 * 400 + 400)
            + (400 * 400 + 400) * 2
            + (400 * 1 + 1);
        assert_eq!(net.param_count(), expect);

        let empty = build_compact_fnn(
            &ArchitectureSpec::default(),
            2,
            &PAPER_WIDTHS,
            Activation::Tanh,
            0,
        );
        assert_eq!(empty.dims(), &[2, 400, 1]);

        let a = build_compact_fnn(&spec, 2, &PAPER_WIDTHS, Activation::Tanh, 3);
        let b = build_compact_fnn(&spec, 2, &PAPER_WIDTHS, Activation::Tanh, 3);
        assert_eq!(a.params_flat(), b.params_flat());
    }

    #[test]
    fn ranking_sorts_descending_with_low_tie_break() {
        let mut alpha = vec![0.0; N_EDGES * N_CANDIDATES];
        alpha[0] = 3.0; // edge 0: candidate 0 highest
        alpha[2] = 3.0; // tie with candidate 2 → 0 first
        let r = alpha_ranking(&alpha);
        assert_eq!(r[0], [0, 2, 1, 3, 4]);
        assert_eq!(r[1], [0, 1, 2, 3, 4]);
    }
}
