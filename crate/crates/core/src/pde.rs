//! The four benchmark problems.
//!
//! Each problem bundles its domain, the residual operator over a derivative
//! table, boundary/initial targets, and (except Burgers) a closed-form
//! exact solution. Forcing terms are manufactured from the exact solutions;
//! the unit tests verify every closed form by differentiating the exact
//! solution through the engine and checking the residual vanishes.
//!
//! Axis convention: axis 0 is x, axis 1 is y (Poisson) or t.

use crate::autodiff::{DerivativeRequest, DerivativeSource, Jet, SlotDual, SlotValues};
use core::f64::consts::PI;

/// Which benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ProblemKind {
    Poisson,
    Heat,
    Wave,
    Burgers,
}

/// Exact-solution complexity (Burgers has a single form).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Variant {
    Simple,
    Complex,
}

/// Axis-aligned 2D domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x: (f64, f64),
    /// Second coordinate: y for Poisson, t for the time-dependent problems.
    pub y: (f64, f64),
    pub time_dependent: bool,
}

impl Domain {
    /// Strictly inside both open intervals.
    pub fn contains_interior(&self, p: &[f64]) -> bool {
        p[0] > self.x.0 && p[0] < self.x.1 && p[1] > self.y.0 && p[1] < self.y.1
    }
}

/// Burgers viscosity, 0.01/π.
pub const BURGERS_NU: f64 = 0.01 / PI;

/// One benchmark problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeProblem {
    kind: ProblemKind,
    variant: Variant,
}

/// Poisson: −Δu = g on [0,1]², Dirichlet boundary from the exact solution
/// u = cos(kπx)cos(kπy) with k = 1 (simple) or 2 (complex).
pub fn poisson(variant: Variant) -> PdeProblem {
    PdeProblem {
        kind: ProblemKind::Poisson,
        variant,
    }
}

/// Heat: u_t − u_xx = g on x ∈ [−1,1], t ∈ [0,1], exact solution
/// u = e^{−t} sin(kπx).
pub fn heat(variant: Variant) -> PdeProblem {
    PdeProblem {
        kind: ProblemKind::Heat,
        variant,
    }
}

/// Wave: u_tt − u_xx = g on [0,1]², exact solution u = sin(kxt), with both
/// position and velocity initial conditions.
pub fn wave(variant: Variant) -> PdeProblem {
    PdeProblem {
        kind: ProblemKind::Wave,
        variant,
    }
}

/// Burgers: u_t + u·u_x − (0.01/π)·u_xx = 0 on x ∈ [−1,1], t ∈ [0,1],
/// u(x,0) = −sin(πx), u(±1,t) = 0. No closed form; the reference comes from
/// the spectral solver.
pub fn burgers() -> PdeProblem {
    PdeProblem {
        kind: ProblemKind::Burgers,
        variant: Variant::Simple,
    }
}

impl PdeProblem {
    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn name(&self) -> &'static str {
        match (self.kind, self.variant) {
            (ProblemKind::Poisson, Variant::Simple) => "poisson-simple",
            (ProblemKind::Poisson, Variant::Complex) => "poisson-complex",
            (ProblemKind::Heat, Variant::Simple) => "heat-simple",
            (ProblemKind::Heat, Variant::Complex) => "heat-complex",
            (ProblemKind::Wave, Variant::Simple) => "wave-simple",
            (ProblemKind::Wave, Variant::Complex) => "wave-complex",
            (ProblemKind::Burgers, _) => "burgers",
        }
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            ProblemKind::Poisson => Domain {
                x: (0.0, 1.0),
                y: (0.0, 1.0),
                time_dependent: false,
            },
            ProblemKind::Heat | ProblemKind::Burgers => Domain {
                x: (-1.0, 1.0),
                y: (0.0, 1.0),
                time_dependent: true,
            },
            ProblemKind::Wave => Domain {
                x: (0.0, 1.0),
                y: (0.0, 1.0),
                time_dependent: true,
            },
        }
    }

    /// Frequency multiplier distinguishing simple from complex solutions.
    fn k(&self) -> f64 {
        match self.variant {
            Variant::Simple => 1.0,
            Variant::Complex => 2.0,
        }
    }

    /// Derivative table the residual needs (u is always included).
    pub fn request(&self) -> DerivativeRequest {
        match self.kind {
            ProblemKind::Poisson => DerivativeRequest::value_only(2).with_d2(0).with_d2(1),
            ProblemKind::Heat => DerivativeRequest::value_only(2).with_d2(0).with_d1(1),
            ProblemKind::Wave => DerivativeRequest::value_only(2).with_d2(0).with_d2(1),
            ProblemKind::Burgers => DerivativeRequest::value_only(2)
                .with_d1(0)
                .with_d2(0)
                .with_d1(1),
        }
    }

    /// Whether the problem carries a velocity initial condition.
    pub fn has_velocity_ic(&self) -> bool {
        self.kind == ProblemKind::Wave
    }

    /// Manufactured forcing term at a point (zero for Burgers).
    pub fn forcing(&self, p: &[f64]) -> f64 {
        let k = self.k();
        let (a, b) = (p[0], p[1]);
        match self.kind {
            ProblemKind::Poisson => {
                2.0 * k * k * PI * PI * (k * PI * a).cos() * (k * PI * b).cos()
            }
            ProblemKind::Heat => (k * k * PI * PI - 1.0) * (-b).exp() * (k * PI * a).sin(),
            ProblemKind::Wave => k * k * (b * b - a * a) * (k * a * b).sin(),
            ProblemKind::Burgers => 0.0,
        }
    }

    /// Residual as a dual over the derivative-table slots.
    pub fn residual(&self, p: &[f64], t: &SlotValues) -> SlotDual {
        let g = t.constant(self.forcing(p));
        match self.kind {
            ProblemKind::Poisson => -(t.d2(0) + t.d2(1)) - g,
            ProblemKind::Heat => t.d1(1) - t.d2(0) - g,
            ProblemKind::Wave => t.d2(1) - t.d2(0) - g,
            ProblemKind::Burgers => t.d1(1) + t.u() * t.d1(0) - t.d2(0) * BURGERS_NU,
        }
    }

    /// Exact solution as a jet expression; `None` for Burgers.
    pub fn exact_jet(&self, x: Jet, y: Jet) -> Option<Jet> {
        let k = self.k();
        match self.kind {
            ProblemKind::Poisson => Some((x * (k * PI)).cos() * (y * (k * PI)).cos()),
            ProblemKind::Heat => Some((-y).exp() * (x * (k * PI)).sin()),
            ProblemKind::Wave => Some((x * y * k).sin()),
            ProblemKind::Burgers => None,
        }
    }

    /// Exact solution value; `None` for Burgers.
    pub fn exact_value(&self, p: &[f64]) -> Option<f64> {
        self.exact_jet(Jet::constant(p[0]), Jet::constant(p[1]))
            .map(|j| j.v)
    }

    /// Whether a closed-form exact solution exists.
    pub fn has_exact(&self) -> bool {
        self.kind != ProblemKind::Burgers
    }

    /// Dirichlet target on the spatial boundary.
    pub fn boundary_value(&self, p: &[f64]) -> f64 {
        match self.kind {
            ProblemKind::Burgers => 0.0,
            _ => self.exact_value(p).expect("manufactured boundary"),
        }
    }

    /// Initial condition u(x, 0) for time-dependent problems.
    pub fn initial_value(&self, x: f64) -> f64 {
        let k = self.k();
        match self.kind {
            ProblemKind::Heat => (k * PI * x).sin(),
            ProblemKind::Wave => 0.0,
            ProblemKind::Burgers => -(PI * x).sin(),
            ProblemKind::Poisson => panic!("poisson has no initial condition"),
        }
    }

    /// Velocity initial condition ∂u/∂t(x, 0) (wave only).
    pub fn initial_velocity(&self, x: f64) -> f64 {
        debug_assert!(self.has_velocity_ic());
        self.k() * x
    }

    /// The exact solution wrapped as a derivative source (engine-side jets).
    pub fn exact_source(&self) -> Option<ExactSolution> {
        if self.has_exact() {
            Some(ExactSolution { problem: *self })
        } else {
            None
        }
    }

    /// All seven benchmark instances.
    pub fn all() -> Vec<PdeProblem> {
        vec![
            poisson(Variant::Simple),
            poisson(Variant::Complex),
            heat(Variant::Simple),
            heat(Variant::Complex),
            wave(Variant::Simple),
            wave(Variant::Complex),
            burgers(),
        ]
    }

    pub fn from_name(name: &str) -> Result<PdeProblem, String> {
        PdeProblem::all()
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| format!("unknown problem '{name}'"))
    }
}

/// Closed-form exact solution as a [`DerivativeSource`].
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    problem: PdeProblem,
}

impl DerivativeSource for ExactSolution {
    fn input_dim(&self) -> usize {
        2
    }

    fn eval_row(&self, point: &[f64], request: &DerivativeRequest, row: &mut [f64]) {
        let x = Jet::variable(point[0], 0);
        let y = Jet::variable(point[1], 1);
        let u = self
            .problem
            .exact_jet(x, y)
            .expect("exact solution exists");
        let mut i = 0;
        row[i] = u.v;
        i += 1;
        for a in 0..request.dim() {
            if request.wants_d1(a) {
                row[i] = u.d1[a];
                i += 1;
            }
            if request.wants_d2(a) {
                row[i] = u.d2[a];
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::evaluate_with_derivatives;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn residual_at(problem: &PdeProblem, p: &[f64]) -> f64 {
        let req = problem.request();
        let src = problem.exact_source().unwrap();
        let pts = vec![p.to_vec()];
        let table = evaluate_with_derivatives(&src, &pts, &req).unwrap();
        let slots = req.slots();
        let t = SlotValues::new(&slots, table.row(0));
        problem.residual(p, &t).v
    }

    #[test]
    fn residual_of_exact_solution_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for problem in PdeProblem::all() {
            if !problem.has_exact() {
                continue;
            }
            let d = problem.domain();
            for _ in 0..1000 {
                let p = [rng.gen_range(d.x.0..d.x.1), rng.gen_range(d.y.0..d.y.1)];
                let r = residual_at(&problem, &p);
                assert!(r.abs() < 1e-8, "{}: residual {r} at {p:?}", problem.name());
            }
        }
    }

    #[test]
    fn boundary_and_initial_match_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for problem in PdeProblem::all() {
            if !problem.has_exact() {
                continue;
            }
            let d = problem.domain();
            for _ in 0..200 {
                let y = rng.gen_range(d.y.0..d.y.1);
                for x in [d.x.0, d.x.1] {
                    let b = problem.boundary_value(&[x, y]);
                    let e = problem.exact_value(&[x, y]).unwrap();
                    assert!((b - e).abs() < 1e-12);
                }
                if d.time_dependent {
                    let x = rng.gen_range(d.x.0..d.x.1);
                    let u0 = problem.initial_value(x);
                    let e = problem.exact_value(&[x, 0.0]).unwrap();
                    assert!((u0 - e).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn known_forcing_values() {
        // Poisson simple: g = 2π² cos(πx) cos(πy).
        let p = poisson(Variant::Simple);
        let g = p.forcing(&[0.3, 0.7]);
        let expect = 2.0 * PI * PI * (0.3 * PI).cos() * (0.7 * PI).cos();
        assert!((g - expect).abs() < 1e-12);
        // Poisson complex prefactor 8π².
        let p = poisson(Variant::Complex);
        let g0 = p.forcing(&[0.0, 0.0]);
        assert!((g0 - 8.0 * PI * PI).abs() < 1e-12);
        // Heat simple: (π² − 1) e^{-t} sin(πx).
        let h = heat(Variant::Simple);
        let g = h.forcing(&[0.5, 0.25]);
        assert!((g - (PI * PI - 1.0) * (-0.25f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn poisson_boundary_example() {
        let p = poisson(Variant::Simple);
        for y in [0.0, 0.3, 1.0] {
            assert!((p.boundary_value(&[0.0, y]) - (PI * y).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn wave_initial_conditions() {
        let w = wave(Variant::Simple);
        assert_eq!(w.initial_value(0.4), 0.0);
        assert_eq!(w.initial_velocity(0.4), 0.4);
        let wc = wave(Variant::Complex);
        assert_eq!(wc.initial_velocity(0.4), 0.8);
    }

    #[test]
    fn burgers_residual_arithmetic() {
        let b = burgers();
        let req = b.request();
        let slots = req.slots();
        // Table row in slot order (u, ux, uxx, ut) = (2, 3, 0, 1).
        let row = [2.0, 3.0, 0.0, 1.0];
        let t = SlotValues::new(&slots, &row);
        let r = b.residual(&[0.1, 0.1], &t);
        assert!((r.v - 7.0).abs() < 1e-15);

        // u ≡ 0 → residual 0.
        let zero = [0.0, 0.0, 0.0, 0.0];
        let t = SlotValues::new(&slots, &zero);
        assert_eq!(b.residual(&[0.3, 0.6], &t).v, 0.0);

        // IC at x = 0.5 → −1.
        assert!((b.initial_value(0.5) + 1.0).abs() < 1e-15);
    }
}
