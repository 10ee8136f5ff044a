//! Error and correlation metrics: relative L2 error on grids, Spearman
//! rank correlation with average-rank tie handling, and the loss-vs-error
//! correlation study.

use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    LengthMismatch { a: usize, b: usize },
    ZeroNormReference,
    TooShort { len: usize },
    /// Spearman of a constant sequence is undefined.
    ConstantSequence,
    NonFinite,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { a, b } => write!(f, "length mismatch: {a} vs {b}"),
            MetricsError::ZeroNormReference => write!(f, "reference field has zero norm"),
            MetricsError::TooShort { len } => write!(f, "need at least 2 values, got {len}"),
            MetricsError::ConstantSequence => {
                write!(f, "rank correlation undefined for a constant sequence")
            }
            MetricsError::NonFinite => write!(f, "non-finite value in metric input"),
        }
    }
}

impl std::error::Error for MetricsError {}

/// `‖prediction − reference‖₂ / ‖reference‖₂` over all grid points,
/// unweighted, sums accumulated in index order.
pub fn relative_l2(prediction: &[f64], reference: &[f64]) -> Result<f64, MetricsError> {
    if prediction.len() != reference.len() {
        return Err(MetricsError::LengthMismatch {
            a: prediction.len(),
            b: reference.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, r) in prediction.iter().zip(reference) {
        num += (p - r) * (p - r);
        den += r * r;
    }
    if den == 0.0 {
        return Err(MetricsError::ZeroNormReference);
    }
    let v = (num / den).sqrt();
    if !v.is_finite() {
        return Err(MetricsError::NonFinite);
    }
    Ok(v)
}

/// Ranks with ties receiving the average of the ranks they span (1-based).
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Tied block spans ranks i+1 ..= j+1.
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of the rank vectors,
/// average ranks for ties. Errors on length mismatch, sequences shorter
/// than two, non-finite values, and constant sequences (undefined rather
/// than NaN).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch {
            a: xs.len(),
            b: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(MetricsError::TooShort { len: xs.len() });
    }
    if !xs.iter().chain(ys).all(|v| v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(MetricsError::ConstantSequence);
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut num, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let da = a - mean;
        let db = b - mean;
        num += da * db;
        vx += da * da;
        vy += db * db;
    }
    // (vx·vy).sqrt() keeps identical rank vectors at exactly ±1.
    Ok(num / (vx * vy).sqrt())
}

/// One (architecture, seed) observation of the correlation study.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationPair {
    pub spec: String,
    pub seed: u64,
    pub test_loss: f64,
    pub relative_l2: f64,
}

/// Paired (PINN test loss, relative L2) observations plus their Spearman
/// coefficient.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationSample {
    pub pairs: Vec<CorrelationPair>,
    pub coefficient: f64,
}

/// Train every (width, depth, seed) combination through `evaluate` and
/// correlate test loss against relative L2 error.
///
/// `evaluate(spec, seed)` returns `(test_loss, relative_l2)`; production
/// wires this to the evaluation phase, tests can mock it.
pub fn correlation_study(
    widths: &[crate::supernet::WidthCode],
    depths: impl Iterator<Item = usize> + Clone,
    seeds: &[u64],
    mut evaluate: impl FnMut(&crate::supernet::ArchitectureSpec, u64) -> Result<(f64, f64), String>,
) -> Result<CorrelationSample, String> {
    let mut pairs = Vec::new();
    for &w in widths {
        for d in depths.clone() {
            let spec = crate::supernet::ArchitectureSpec::even(w, d);
            for &seed in seeds {
                let (test_loss, relative_l2) = evaluate(&spec, seed)?;
                pairs.push(CorrelationPair {
                    spec: spec.to_string(),
                    seed,
                    test_loss,
                    relative_l2,
                });
            }
        }
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.test_loss).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.relative_l2).collect();
    let coefficient = spearman(&xs, &ys).map_err(|e| e.to_string())?;
    Ok(CorrelationSample { pairs, coefficient })
}

/// Arithmetic mean, accumulated in index order.
pub fn mean(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for v in values {
        acc += v;
    }
    acc / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::supernet::WidthCode;

    #[test]
    fn relative_l2_basics() {
        let r = vec![1.0, -2.0, 3.0];
        assert_eq!(relative_l2(&r, &r).unwrap(), 0.0);
        let p: Vec<f64> = r.iter().map(|v| 1.1 * v).collect();
        assert!((relative_l2(&p, &r).unwrap() - 0.1).abs() < 1e-12);
        assert!(relative_l2(&[0.0], &[0.0]).is_err());
        assert!(relative_l2(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn relative_l2_matches_brute_force() {
        let mut s = 12345u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a: Vec<f64> = (0..10).map(|_| next()).collect();
        let b: Vec<f64> = (0..10).map(|_| next()).collect();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..10 {
            num += (a[i] - b[i]).powi(2);
            den += b[i].powi(2);
        }
        let expect = num.sqrt() / den.sqrt();
        assert!((relative_l2(&a, &b).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn spearman_perfect_monotone() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [10.0, 20.0, 25.0, 90.0];
        assert_eq!(spearman(&xs, &ys).unwrap(), 1.0);
        let rev: Vec<f64> = ys.iter().rev().cloned().collect();
        assert_eq!(spearman(&xs, &rev).unwrap(), -1.0);
    }

    #[test]
    fn spearman_monotone_transform_invariance() {
        let xs = [0.3, 1.7, -0.4, 2.2, 0.9, -1.5];
        let ys = [2.0, 5.0, 1.0, 3.5, 4.0, 0.5];
        let base = spearman(&xs, &ys).unwrap();
        let ex: Vec<f64> = xs.iter().map(|v| v.exp()).collect();
        let cy: Vec<f64> = ys.iter().map(|v| v.powi(3)).collect();
        assert!((spearman(&ex, &ys).unwrap() - base).abs() < 1e-15);
        assert!((spearman(&xs, &cy).unwrap() - base).abs() < 1e-15);
    }

    #[test]
    fn spearman_tie_handling_average_ranks() {
        // xs has a tie; scipy gives 0.8207826816681233 for these.
        let xs = [1.0, 2.0, 2.0, 3.0, 4.0];
        let ys = [1.0, 3.0, 2.0, 4.0, 5.0];
        let r = spearman(&xs, &ys).unwrap();
        // Hand computation: ranks x = (1, 2.5, 2.5, 4, 5), ranks y = (1,3,2,4,5).
        // Pearson of those rank vectors:
        let rx = [1.0, 2.5, 2.5, 4.0, 5.0];
        let ry = [1.0, 3.0, 2.0, 4.0, 5.0];
        let m = 3.0;
        let num: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - m) * (b - m)).sum();
        let vx: f64 = rx.iter().map(|a| (a - m) * (a - m)).sum();
        let vy: f64 = ry.iter().map(|b| (b - m) * (b - m)).sum();
        let expect = num / (vx.sqrt() * vy.sqrt());
        assert!((r - expect).abs() < 1e-15);
    }

    #[test]
    fn spearman_error_paths() {
        assert!(matches!(
            spearman(&[1.0], &[1.0]),
            Err(MetricsError::TooShort { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(MetricsError::ConstantSequence)
        ));
    }

    #[test]
    fn correlation_study_counts_and_mock_identity() {
        // 2 widths × 2 depths × 1 seed = 4 pairs; with error == loss the
        // coefficient is exactly 1.
        let widths = [WidthCode::new(1).unwrap(), WidthCode::new(3).unwrap()];
        let mut k = 0.0;
        let sample = correlation_study(&widths, 1..=2, &[42], |_, _| {
            k += 1.0;
            Ok((k, k))
        })
        .unwrap();
        assert_eq!(sample.pairs.len(), 4);
        assert_eq!(sample.coefficient, 1.0);
    }

    #[test]
    fn mean_is_exact_arithmetic_mean() {
        let v = [1.0, 2.0, 4.0];
        assert!((mean(&v) - 7.0 / 3.0).abs() < 1e-15);
    }
}
