//! First-order duals over derivative-table slots.
//!
//! A PDE residual is a pointwise function of the table entries
//! (u, ∂u/∂x_k, ∂²u/∂x_k²). Building it from [`SlotDual`] values yields both
//! the residual value and its partial derivative with respect to every table
//! slot — exactly the seeds the reverse sweep needs to turn a mean-squared
//! residual into parameter gradients.

use super::{Slot, MAX_DIM};
use core::ops::{Add, Mul, Neg, Sub};

/// Upper bound on table width: u plus first and second derivative per axis.
pub const MAX_SLOTS: usize = 1 + 2 * MAX_DIM;

/// Value with gradient over the slots of one derivative-table row.
#[derive(Debug, Clone, Copy)]
pub struct SlotDual {
    pub v: f64,
    pub g: [f64; MAX_SLOTS],
    n_slots: usize,
}

impl SlotDual {
    pub fn constant(v: f64, n_slots: usize) -> Self {
        SlotDual {
            v,
            g: [0.0; MAX_SLOTS],
            n_slots,
        }
    }

    fn seeded(v: f64, slot_index: usize, n_slots: usize) -> Self {
        let mut d = SlotDual::constant(v, n_slots);
        d.g[slot_index] = 1.0;
        d
    }

    #[inline]
    pub fn grad(&self) -> &[f64] {
        &self.g[..self.n_slots]
    }
}

impl Add for SlotDual {
    type Output = SlotDual;
    fn add(self, rhs: SlotDual) -> SlotDual {
        let mut out = self;
        out.v += rhs.v;
        for i in 0..out.n_slots {
            out.g[i] += rhs.g[i];
        }
        out
    }
}

impl Sub for SlotDual {
    type Output = SlotDual;
    fn sub(self, rhs: SlotDual) -> SlotDual {
        let mut out = self;
        out.v -= rhs.v;
        for i in 0..out.n_slots {
            out.g[i] -= rhs.g[i];
        }
        out
    }
}

impl Mul for SlotDual {
    type Output = SlotDual;
    fn mul(self, rhs: SlotDual) -> SlotDual {
        let mut out = SlotDual::constant(self.v * rhs.v, self.n_slots);
        for i in 0..out.n_slots {
            out.g[i] = self.g[i] * rhs.v + self.v * rhs.g[i];
        }
        out
    }
}

impl Mul<f64> for SlotDual {
    type Output = SlotDual;
    fn mul(self, rhs: f64) -> SlotDual {
        let mut out = self;
        out.v *= rhs;
        for i in 0..out.n_slots {
            out.g[i] *= rhs;
        }
        out
    }
}

impl Sub<f64> for SlotDual {
    type Output = SlotDual;
    fn sub(self, rhs: f64) -> SlotDual {
        let mut out = self;
        out.v -= rhs;
        out
    }
}

impl Neg for SlotDual {
    type Output = SlotDual;
    fn neg(self) -> SlotDual {
        self * -1.0
    }
}

/// One derivative-table row exposed as seeded duals.
pub struct SlotValues<'a> {
    slots: &'a [Slot],
    row: &'a [f64],
}

impl<'a> SlotValues<'a> {
    pub fn new(slots: &'a [Slot], row: &'a [f64]) -> Self {
        debug_assert_eq!(slots.len(), row.len());
        SlotValues { slots, row }
    }

    fn lookup(&self, slot: Slot) -> SlotDual {
        let idx = self
            .slots
            .iter()
            .position(|&s| s == slot)
            .unwrap_or_else(|| panic!("residual uses {slot:?} but it was not requested"));
        SlotDual::seeded(self.row[idx], idx, self.slots.len())
    }

    /// The value u.
    pub fn u(&self) -> SlotDual {
        self.lookup(Slot::U)
    }

    /// ∂u/∂x_axis.
    pub fn d1(&self, axis: usize) -> SlotDual {
        self.lookup(Slot::D1(axis))
    }

    /// ∂²u/∂x_axis².
    pub fn d2(&self, axis: usize) -> SlotDual {
        self.lookup(Slot::D2(axis))
    }

    /// A constant with matching slot count (forcing terms, targets).
    pub fn constant(&self, v: f64) -> SlotDual {
        SlotDual::constant(v, self.slots.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_over_slots() {
        // r = u·ux - 2·uxx on a row (u=2, ux=3, uxx=0.5):
        // value 2·3 - 1 = 5, dr/du = 3, dr/dux = 2, dr/duxx = -2.
        let slots = [Slot::U, Slot::D1(0), Slot::D2(0)];
        let row = [2.0, 3.0, 0.5];
        let t = SlotValues::new(&slots, &row);
        let r = t.u() * t.d1(0) - t.d2(0) * 2.0;
        assert_eq!(r.v, 5.0);
        assert_eq!(r.grad(), &[3.0, 2.0, -2.0]);
    }
}
