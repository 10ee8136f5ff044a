//! Collocation-point generation.
//!
//! Training sets are uniform random draws from the domain interior, the
//! spatial boundary, and (for time-dependent problems) the initial slice;
//! test sets are tensor-product grids partitioned into the same roles. The
//! generator is ChaCha8 with one stream per (seed, role), so any role's
//! points are reproducible bit-for-bit regardless of the other roles.

use crate::pde::PdeProblem;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Role of a collocation point within the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Interior,
    Boundary,
    Initial,
}

impl Role {
    fn stream(self) -> u64 {
        match self {
            Role::Interior => 1,
            Role::Boundary => 2,
            Role::Initial => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::Interior => "interior",
            Role::Boundary => "boundary",
            Role::Initial => "initial",
        }
    }
}

/// Requested point counts for a training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleCounts {
    pub interior: usize,
    pub boundary: usize,
    /// Points on the t = 0 slice; ignored for stationary problems. The wave
    /// velocity condition reuses these same points.
    pub initial: usize,
}

/// How a sample set was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Random { seed: u64 },
    Grid { nx: usize, ny: usize },
}

/// Interior/boundary/initial collocation batches for one problem.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub problem: &'static str,
    pub provenance: Provenance,
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
    pub initial: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn seed(&self) -> Option<u64> {
        match self.provenance {
            Provenance::Random { seed } => Some(seed),
            Provenance::Grid { .. } => None,
        }
    }

    /// Grid dimensions, when this is a test grid.
    pub fn grid_shape(&self) -> Option<(usize, usize)> {
        match self.provenance {
            Provenance::Grid { nx, ny } => Some((nx, ny)),
            Provenance::Random { .. } => None,
        }
    }

    /// All points with their roles, interior then boundary then initial.
    pub fn iter_roles(&self) -> impl Iterator<Item = (Role, &Vec<f64>)> {
        self.interior
            .iter()
            .map(|p| (Role::Interior, p))
            .chain(self.boundary.iter().map(|p| (Role::Boundary, p)))
            .chain(self.initial.iter().map(|p| (Role::Initial, p)))
    }

    pub fn total_points(&self) -> usize {
        self.interior.len() + self.boundary.len() + self.initial.len()
    }
}

/// Error for invalid sampling configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingError(pub String);

impl core::fmt::Display for SamplingError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "sampling error: {}", self.0)
    }
}

impl std::error::Error for SamplingError {}

/// Random training set: `counts.interior` uniform interior points,
/// `counts.boundary` points uniform over the spatial boundary components,
/// and for time-dependent problems `counts.initial` points on t = 0.
///
/// Stationary problems ignore `counts.initial`. Regenerating with the same
/// seed is bit-identical.
pub fn sample_training(
    problem: &PdeProblem,
    counts: SampleCounts,
    seed: u64,
) -> Result<SampleSet, SamplingError> {
    if counts.interior == 0 || counts.boundary == 0 {
        return Err(SamplingError(format!(
            "interior and boundary counts must be positive, got {counts:?}"
        )));
    }
    let d = problem.domain();
    if d.time_dependent && counts.initial == 0 {
        return Err(SamplingError(
            "initial count must be positive for time-dependent problems".into(),
        ));
    }

    let mut rng = stream_rng(seed, Role::Interior);
    let interior = (0..counts.interior)
        .map(|_| {
            vec![
                rng.gen_range(d.x.0..d.x.1),
                rng.gen_range(d.y.0..d.y.1),
            ]
        })
        .collect();

    // Boundary: for Poisson all four sides; for time-dependent problems the
    // two spatial sides x = x_lo and x = x_hi over t (the t = 0 slice is the
    // separate initial role).
    let mut rng = stream_rng(seed, Role::Boundary);
    let boundary = (0..counts.boundary)
        .map(|_| {
            if d.time_dependent {
                let x = if rng.gen::<bool>() { d.x.1 } else { d.x.0 };
                vec![x, rng.gen_range(d.y.0..d.y.1)]
            } else {
                // Pick a side, then a position along it.
                let side = rng.gen_range(0..4u8);
                let u = rng.gen_range(0.0..1.0);
                match side {
                    0 => vec![d.x.0, d.y.0 + u * (d.y.1 - d.y.0)],
                    1 => vec![d.x.1, d.y.0 + u * (d.y.1 - d.y.0)],
                    2 => vec![d.x.0 + u * (d.x.1 - d.x.0), d.y.0],
                    _ => vec![d.x.0 + u * (d.x.1 - d.x.0), d.y.1],
                }
            }
        })
        .collect();

    let initial = if d.time_dependent {
        let mut rng = stream_rng(seed, Role::Initial);
        (0..counts.initial)
            .map(|_| vec![rng.gen_range(d.x.0..d.x.1), 0.0])
            .collect()
    } else {
        Vec::new()
    };

    Ok(SampleSet {
        problem: problem.name(),
        provenance: Provenance::Random { seed },
        interior,
        boundary,
        initial,
    })
}

/// Uniform tensor-product test grid including endpoints, partitioned into
/// interior / boundary / initial roles. A point on both the spatial
/// boundary and the t = 0 slice counts as boundary.
pub fn test_grid(problem: &PdeProblem, nx: usize, ny: usize) -> SampleSet {
    assert!(nx >= 2 && ny >= 2, "grid needs at least 2 points per axis");
    let d = problem.domain();
    let xs = linspace(d.x.0, d.x.1, nx);
    let ys = linspace(d.y.0, d.y.1, ny);
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut initial = Vec::new();
    for (j, &y) in ys.iter().enumerate() {
        for (i, &x) in xs.iter().enumerate() {
            let on_x_edge = i == 0 || i == nx - 1;
            let on_y_edge = j == 0 || j == ny - 1;
            let p = vec![x, y];
            if d.time_dependent {
                if on_x_edge {
                    boundary.push(p);
                } else if j == 0 {
                    initial.push(p);
                } else {
                    interior.push(p);
                }
            } else if on_x_edge || on_y_edge {
                boundary.push(p);
            } else {
                interior.push(p);
            }
        }
    }
    SampleSet {
        problem: problem.name(),
        provenance: Provenance::Grid { nx, ny },
        interior,
        boundary,
        initial,
    }
}

/// All grid points in row-major order (x fastest), regardless of role —
/// the ordering used for solution fields and the relative L2 norm.
pub fn grid_points(problem: &PdeProblem, nx: usize, ny: usize) -> Vec<Vec<f64>> {
    let d = problem.domain();
    let xs = linspace(d.x.0, d.x.1, nx);
    let ys = linspace(d.y.0, d.y.1, ny);
    let mut out = Vec::with_capacity(nx * ny);
    for &y in &ys {
        for &x in &xs {
            out.push(vec![x, y]);
        }
    }
    out
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn stream_rng(seed: u64, role: Role) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(role.stream());
    rng
}
