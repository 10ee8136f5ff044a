//! Scalar second-order jets: value plus first and diagonal second
//! derivatives along each input axis. Mixed partials are not carried —
//! diagonal jets are closed under arithmetic and the chain rule, which is
//! all the benchmark residual operators need.
//!
//! Closed-form exact solutions are written once, generically over [`Jet`],
//! and thereby serve both plain evaluation and engine-side differentiation.

use super::MAX_DIM;
use core::ops::{Add, Div, Mul, Neg, Sub};

/// Second-order diagonal jet over up to [`MAX_DIM`] axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: [f64; MAX_DIM],
    pub d2: [f64; MAX_DIM],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet {
            v,
            d1: [0.0; MAX_DIM],
            d2: [0.0; MAX_DIM],
        }
    }

    /// Coordinate variable for `axis`: unit first derivative on that axis.
    pub fn variable(v: f64, axis: usize) -> Self {
        assert!(axis < MAX_DIM);
        let mut j = Jet::constant(v);
        j.d1[axis] = 1.0;
        j
    }

    /// Apply a scalar function given its value and first two derivatives at
    /// `self.v`.
    #[inline]
    fn lift(self, g: f64, dg: f64, d2g: f64) -> Jet {
        let mut out = Jet::constant(g);
        for a in 0..MAX_DIM {
            out.d1[a] = dg * self.d1[a];
            out.d2[a] = d2g * self.d1[a] * self.d1[a] + dg * self.d2[a];
        }
        out
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.lift(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.lift(c, -s, -c)
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.lift(e, e, e)
    }

    pub fn powi(self, n: i32) -> Jet {
        let g = self.v.powi(n);
        let dg = n as f64 * self.v.powi(n - 1);
        let d2g = (n * (n - 1)) as f64 * self.v.powi(n - 2);
        self.lift(g, dg, d2g)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.v + rhs.v);
        for a in 0..MAX_DIM {
            out.d1[a] = self.d1[a] + rhs.d1[a];
            out.d2[a] = self.d2[a] + rhs.d2[a];
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.v - rhs.v);
        for a in 0..MAX_DIM {
            out.d1[a] = self.d1[a] - rhs.d1[a];
            out.d2[a] = self.d2[a] - rhs.d2[a];
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = Jet::constant(self.v * rhs.v);
        for a in 0..MAX_DIM {
            out.d1[a] = self.d1[a] * rhs.v + self.v * rhs.d1[a];
            out.d2[a] =
                self.d2[a] * rhs.v + 2.0 * self.d1[a] * rhs.d1[a] + self.v * rhs.d2[a];
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut out = Jet::constant(-self.v);
        for a in 0..MAX_DIM {
            out.d1[a] = -self.d1[a];
            out.d2[a] = -self.d2[a];
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        let mut out = Jet::constant(self.v * rhs);
        for a in 0..MAX_DIM {
            out.d1[a] = self.d1[a] * rhs;
            out.d2[a] = self.d2[a] * rhs;
        }
        out
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self;
        out.v += rhs;
        out
    }
}
