//! Structural oracles for the mixed network: one-hot equivalence with
//! compact networks (which also validates zero-padding), mixture symmetry,
//! and discretization round-trips.

use pinn_darts::autodiff::Activation;
use pinn_darts::supernet::{
    discretize, mixture_weights, ArchitectureSpec, MixedNetwork, MixtureMode, WidthCode,
    N_EDGES, PAPER_WIDTHS,
};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_spec(rng: &mut ChaCha8Rng) -> ArchitectureSpec {
    let depth = rng.gen_range(0..=N_EDGES);
    let codes: Vec<u8> = (0..depth).map(|_| rng.gen_range(1..=4u8)).collect();
    ArchitectureSpec::from_codes(&codes).unwrap()
}

/// One-hot α on a spec makes the mixed network equal the compact network
/// whose blocks are copied from the selected candidates, to 1e-12, for any
/// spec. Padded entries therefore have no downstream influence.
#[test]
fn one_hot_alpha_equals_compact_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    for inst in 0..20 {
        let spec = random_spec(&mut rng);
        let mode = if inst % 2 == 0 {
            MixtureMode::Softmax
        } else {
            MixtureMode::Sigmoid
        };
        let act = if inst % 3 == 0 {
            Activation::Swish
        } else {
            Activation::Tanh
        };
        let mut net = MixedNetwork::seeded(2, PAPER_WIDTHS, act, mode, 9000 + inst);
        net.set_alpha_one_hot(&spec);
        let compact = net.extract_compact(&spec);

        for _ in 0..100 {
            let p = vec![rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)];
            let mixed = net.forward_mixed(&p).unwrap();
            let direct = compact.predict(&[p.clone()])[0];
            assert!(
                (mixed - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "spec {spec} ({mode:?}): {mixed} vs {direct}"
            );
        }

        // Round-trip: discretizing the one-hot α recovers the spec.
        let (round, skips) = discretize(net.alpha());
        assert_eq!(round, spec);
        assert_eq!(skips, N_EDGES - spec.depth());
    }
}

/// Swapping candidates together with their α entries inside an edge leaves
/// the mixed output unchanged (equal widths make the swap representable).
#[test]
fn mixture_is_permutation_equivariant() {
    let widths = [6, 6, 6, 6];
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for mode in [MixtureMode::Softmax, MixtureMode::Sigmoid] {
        let mut net = MixedNetwork::seeded(2, widths, Activation::Tanh, mode, 77);
        for a in net.alpha_mut() {
            *a = rng.gen_range(-1.0..1.0);
        }
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let before = net.predict(&pts).unwrap();
        net.swap_candidates(3, 0, 2);
        net.swap_candidates(3, 1, 3);
        net.swap_candidates(0, 1, 2);
        let after = net.predict(&pts).unwrap();
        for (b, a) in before.iter().zip(&after) {
            assert!((b - a).abs() <= 1e-12 * b.abs().max(1.0), "{mode:?}: {b} vs {a}");
        }
    }
}

/// All-skip one-hot α reduces the chain to input layer → output layer.
#[test]
fn all_skip_is_identity_chain() {
    let mut net = MixedNetwork::seeded(
        2,
        PAPER_WIDTHS,
        Activation::Tanh,
        MixtureMode::Softmax,
        123,
    );
    net.set_alpha_one_hot(&ArchitectureSpec::default());
    let compact = net.extract_compact(&ArchitectureSpec::default());
    assert_eq!(compact.dims(), &[2, 400, 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let p = vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let mixed = net.forward_mixed(&p).unwrap();
        let direct = compact.predict(&[p.clone()])[0];
        assert!((mixed - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}

/// Uniform mixture against a hand-computed two-node miniature: with all-zero
/// α every candidate contributes exactly 1/5 (softmax mode).
#[test]
fn zero_alpha_matches_hand_computed_miniature() {
    let widths = [1, 1, 1, 2];
    let mut net = MixedNetwork::new(1, widths, Activation::Tanh, MixtureMode::Softmax);
    // Hand-set parameters small enough to follow by hand: input layer maps
    // x to (x, 0) via weights [[1],[0]] and zero bias.
    net.visit_params_mut(|_, v| *v = 0.0);
    // input_w is 2x1 (max width 2).
    let mut idx = 0;
    net.visit_params_mut(|i, v| {
        if i == 0 {
            *v = 1.0; // input weight row 0
        }
        idx = idx.max(i);
    });

    // Candidate weights on edge 0: every linear candidate j maps h to
    // w_j · h[0] with w_j = j + 1 (width-1 candidates use only row 0).
    // Parameter layout per candidate: w (width × 2), then b.
    // Offsets: input (2*1 + 2) = 4 params, then edge 0 candidate 0.
    let mut offset = 4;
    let mut weights_set = Vec::new();
    for (j, w) in widths.iter().enumerate() {
        // First row, first column of candidate j's weight.
        weights_set.push((offset, (j + 1) as f64));
        offset += w * 2 + w;
    }
    net.visit_params_mut(|i, v| {
        for (o, val) in &weights_set {
            if i == *o {
                *v = *val;
            }
        }
    });
    // Remaining edges stay zero; output layer reads h_8[0] with weight 1.
    let out_w_offset = net.param_count() - 3; // output w (1×2) then b (1)
    net.visit_params_mut(|i, v| {
        if i == out_w_offset {
            *v = 1.0;
        }
    });

    // Forward by hand for x = 0.7, all-zero α (softmax weight 0.2 each):
    // h0 = (tanh(0.7), tanh(0)) = (t, 0)
    // edge 0: candidates produce tanh(j·t) in their first component;
    //   skip passes (t, 0); mixture: h1[0] = 0.2·(Σ_j tanh(j·t) + t).
    // Edges 1..7 have zero candidate weights: each candidate contributes
    //   tanh(0) = 0, so h_{i+1} = 0.2·h_i (skip only).
    // Output = h8[0].
    let t: f64 = 0.7f64.tanh();
    let h1 = 0.2 * ((1.0 * t).tanh() + (2.0 * t).tanh() + (3.0 * t).tanh() + (4.0 * t).tanh() + t);
    let expect = h1 * 0.2f64.powi(7);
    let got = net.forward_mixed(&[0.7]).unwrap();
    assert!(
        (got - expect).abs() < 1e-14,
        "hand-computed {expect} vs {got}"
    );
}

proptest! {
    /// Softmax mixture rows sum to one for any finite α row.
    #[test]
    fn softmax_rows_sum_to_one(row in proptest::collection::vec(-50.0f64..50.0, 5)) {
        let m = mixture_weights(&row, MixtureMode::Softmax).unwrap();
        let sum: f64 = m.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(m.iter().all(|w| *w > 0.0));
    }

    /// Sigmoid mixture stays in (0,1) elementwise over the range where f64
    /// can represent openness (beyond |α| ≈ 36.7 the weight saturates to
    /// exactly 0 or 1, which the one-hot construction relies on).
    #[test]
    fn sigmoid_rows_in_unit_interval(row in proptest::collection::vec(-30.0f64..30.0, 5)) {
        let m = mixture_weights(&row, MixtureMode::Sigmoid).unwrap();
        prop_assert!(m.iter().all(|w| *w > 0.0 && *w < 1.0));
    }

    /// Discretize round-trips one-hot α for arbitrary specs.
    #[test]
    fn discretize_roundtrips_arbitrary_specs(codes in proptest::collection::vec(1u8..=4, 0..=8)) {
        let spec = ArchitectureSpec::from_codes(&codes).unwrap();
        let mut net = MixedNetwork::new(2, PAPER_WIDTHS, Activation::Tanh, MixtureMode::Softmax);
        net.set_alpha_one_hot(&spec);
        let (round, skips) = discretize(net.alpha());
        prop_assert_eq!(round, spec);
        prop_assert_eq!(skips, N_EDGES - codes.len());
    }

    /// Width-code constructor accepts exactly 1..=4.
    #[test]
    fn width_code_range(c in 0u8..=20) {
        prop_assert_eq!(WidthCode::new(c).is_ok(), (1..=4).contains(&c));
    }
}
