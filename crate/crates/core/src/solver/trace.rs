//! Outgoing traces and the boundary operator 𝒜: g|_{Γ₋} ↦ F|_{Γ₊}.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::field::PhaseFunction;
use super::grid::PhaseGrid;
use super::picard::{Solution, Solver};
use super::source::BoundarySource;
use crate::geometry::{boundary_points, classify_boundary, BoundaryClass, Domain, PhasePoint};
use crate::{Error, Result, Vector};

/// One outgoing sample of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow<const N: usize> {
    #[serde(skip)]
    pub point: PhasePoint<N>,
    pub value: f64,
    /// `|F(t₁) − 2F(t₂) + F(t₃)|`, the curvature the linear extrapolation
    /// ignores.
    pub extrapolation_residual: f64,
}

/// `lim_{t↓0} F(x − t·v, v)` at outgoing points, by linear extrapolation
/// from `t₁ = ½·step/|v|` and `t₂ = step/|v|`.
pub fn boundary_trace<const N: usize, F: PhaseFunction<N> + ?Sized>(
    f: &F,
    domain: &Domain<N>,
    samples: &[PhasePoint<N>],
    step: f64,
) -> Result<Vec<TraceRow<N>>> {
    let tol = 1e-9 * domain.diameter().max(1.0);
    samples
        .iter()
        .map(|p| {
            match classify_boundary(domain, p, tol) {
                BoundaryClass::Outgoing => {}
                BoundaryClass::Grazing => {
                    return Err(Error::Domain(format!("grazing sample at x = {:?} rejected", p.x.as_slice())));
                }
                other => {
                    return Err(Error::Precondition(format!("trace sample is {other:?}, expected outgoing")));
                }
            }
            let dt = 0.5 * step / p.v.norm();
            let at = |k: f64| -> Result<f64> {
                let y = domain.project(&(p.x - p.v * (k * dt)));
                f.value(&y, &p.v)
            };
            let (f1, f2, f3) = (at(1.0)?, at(2.0)?, at(3.0)?);
            Ok(TraceRow { point: *p, value: 2.0 * f1 - f2, extrapolation_residual: (f1 - 2.0 * f2 + f3).abs() })
        })
        .collect()
}

/// Outgoing phase points `(x, v)` with `x` spread on ∂Ω and `v` a lattice
/// velocity with `n(x)·v ≥ ¼·|v|`, chosen reproducibly from `seed`.
pub fn outgoing_samples<const N: usize>(grid: &PhaseGrid<N>, count: usize, seed: u64) -> Vec<PhasePoint<N>> {
    let domain = &grid.domain;
    let points = boundary_points(domain, count.max(1) * 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut velocities: Vec<usize> = (0..grid.nv()).filter(|&j| grid.v_active[j]).collect();
    let mut out = Vec::with_capacity(count);
    for x in points.iter().step_by(4) {
        let Some(n) = domain.outward_normal(x) else { continue };
        velocities.shuffle(&mut rng);
        if let Some(&j) = velocities.iter().find(|&&j| {
            let v: &Vector<N> = &grid.v_nodes[j];
            n.dot(v) >= 0.25 * v.norm() && domain.active_normals(x, 1e-9).iter().all(|m| m.dot(v) >= 0.0)
        }) {
            out.push(PhasePoint::new(*x, grid.v_nodes[j]));
        }
        if out.len() == count {
            break;
        }
    }
    out
}

/// Traces of a solution with the grid step as extrapolation scale.
pub fn solution_trace<const N: usize>(sol: &Solution<N>, samples: &[PhasePoint<N>]) -> Result<Vec<TraceRow<N>>> {
    boundary_trace(sol, &sol.grid.domain, samples, sol.grid.h())
}

/// `𝒜(g)` at the given outgoing samples: Picard solve followed by the trace.
pub fn apply_a<const N: usize>(solver: &Solver<N>, g: &BoundarySource<N>, samples: &[PhasePoint<N>]) -> Result<Vec<TraceRow<N>>> {
    let sol = solver.solve(g)?;
    solution_trace(&sol, samples)
}
