//! Activation functions with closed-form derivatives.
//!
//! The reverse sweep for losses containing second-derivative lanes needs
//! activation derivatives up to order three, so all of σ, σ', σ'', σ''' are
//! provided in closed form rather than derived numerically.

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Tanh,
    /// `x · sigmoid(x)`.
    Swish,
}

impl Activation {
    /// σ, σ', σ'', σ''' at `x` in one call; the four values share most of
    /// the transcendental work.
    #[inline]
    pub fn eval3(self, x: f64) -> (f64, f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                let s = 1.0 - t * t;
                // σ' = 1-t², σ'' = -2t(1-t²), σ''' = -2(1-t²)(1-3t²)
                (t, s, -2.0 * t * s, -2.0 * s * (1.0 - 3.0 * t * t))
            }
            Activation::Swish => {
                let sig = 1.0 / (1.0 + (-x).exp());
                let s1 = sig * (1.0 - sig);
                let s2 = s1 * (1.0 - 2.0 * sig);
                let s3 = s2 * (1.0 - 2.0 * sig) - 2.0 * s1 * s1;
                (
                    x * sig,
                    sig + x * s1,
                    2.0 * s1 + x * s2,
                    3.0 * s2 + x * s3,
                )
            }
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Swish => x / (1.0 + (-x).exp()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Swish => "swish",
        }
    }
}

impl core::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "swish" => Ok(Activation::Swish),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite difference of f at x.
    fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for act in [Activation::Tanh, Activation::Swish] {
            for &x in &[-2.3, -0.7, 0.0, 0.4, 1.9] {
                let (v, d1, d2, d3) = act.eval3(x);
                assert!((v - act.value(x)).abs() < 1e-15);
                let fd1 = fd(|y| act.value(y), x, h);
                let fd2 = fd(|y| act.eval3(y).1, x, h);
                let fd3 = fd(|y| act.eval3(y).2, x, h);
                assert!((d1 - fd1).abs() < 1e-8, "{act:?} d1 at {x}: {d1} vs {fd1}");
                assert!((d2 - fd2).abs() < 1e-8, "{act:?} d2 at {x}: {d2} vs {fd2}");
                assert!((d3 - fd3).abs() < 1e-7, "{act:?} d3 at {x}: {d3} vs {fd3}");
            }
        }
    }

    #[test]
    fn known_values_at_zero() {
        let (v, d1, _, _) = Activation::Tanh.eval3(0.0);
        assert_eq!(v, 0.0);
        assert_eq!(d1, 1.0);
        let (v, d1, _, _) = Activation::Swish.eval3(0.0);
        assert_eq!(v, 0.0);
        assert!((d1 - 0.5).abs() < 1e-15);
    }
}
