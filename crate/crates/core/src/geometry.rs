//! Bounded spatial domains and the geometry of characteristics.
//!
//! Exit times are computed in closed form: a quadratic for the ball and a
//! per-face minimum for the box. Everything downstream (free transport,
//! chord integrals, boundary traces) relies on these being exact.

use serde::{Deserialize, Serialize};

use crate::quadrature::GaussLegendre;
use crate::{check_dimension, Error, Result, Vector};

/// Relative tolerance used when deciding whether a point lies in Ω̄.
const CLOSURE_TOL: f64 = 1e-12;

/// Default grazing tolerance: `|n·v| ≤ GRAZING_TOL·|v|` is grazing.
pub const GRAZING_TOL: f64 = 1e-12;

/// A bounded domain Ω ⊂ ℝᴺ.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain<const N: usize> {
    /// Ball of the given radius centred at the origin.
    Ball { radius: f64 },
    /// Axis-aligned box `[lower, upper]`. Corners are not smooth; exit times
    /// are still well defined everywhere.
    Box { lower: Vector<N>, upper: Vector<N> },
}

/// Serializable domain description, independent of the const dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    Ball { radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl DomainSpec {
    pub fn build<const N: usize>(&self) -> Result<Domain<N>> {
        match self {
            DomainSpec::Ball { radius } => Domain::ball(*radius),
            DomainSpec::Box { lower, upper } => {
                if lower.len() != N || upper.len() != N {
                    return Err(Error::Config(format!("box corners must have {N} components")));
                }
                Domain::boxed(Vector::from_column_slice(lower), Vector::from_column_slice(upper))
            }
        }
    }
}

/// A phase-space point `(x, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<const N: usize> {
    pub x: Vector<N>,
    pub v: Vector<N>,
}

impl<const N: usize> PhasePoint<N> {
    pub fn new(x: Vector<N>, v: Vector<N>) -> Self {
        Self { x, v }
    }
}

/// Which part of phase space a point belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    /// `x ∈ ∂Ω`, `n(x)·v < 0` (Γ₋).
    Incoming,
    /// `x ∈ ∂Ω`, `n(x)·v > 0` (Γ₊).
    Outgoing,
    /// `x ∈ ∂Ω`, `n(x)·v = 0` within tolerance.
    Grazing,
    /// `x ∈ Ω`, farther than the tolerance from `∂Ω`.
    Interior,
    /// `x ∉ Ω̄`, farther than the tolerance from `∂Ω`.
    Exterior,
}

/// Direction of an exit time: `τ₊` follows `+v`, `τ₋` follows `−v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl<const N: usize> Domain<N> {
    pub fn ball(radius: f64) -> Result<Self> {
        check_dimension::<N>()?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Domain::Ball { radius })
    }

    pub fn unit_ball() -> Self {
        Domain::Ball { radius: 1.0 }
    }

    pub fn boxed(lower: Vector<N>, upper: Vector<N>) -> Result<Self> {
        check_dimension::<N>()?;
        if (0..N).any(|k| !(upper[k] > lower[k]) || !lower[k].is_finite() || !upper[k].is_finite()) {
            return Err(Error::Config("box must have positive side lengths".into()));
        }
        Ok(Domain::Box { lower, upper })
    }

    /// Smallest axis-aligned box containing Ω.
    pub fn bounding_box(&self) -> (Vector<N>, Vector<N>) {
        match self {
            Domain::Ball { radius } => (Vector::repeat(-radius), Vector::repeat(*radius)),
            Domain::Box { lower, upper } => (*lower, *upper),
        }
    }

    /// Maximum chord length.
    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Ball { radius } => 2.0 * radius,
            Domain::Box { lower, upper } => (upper - lower).norm(),
        }
    }

    fn length_scale(&self) -> f64 {
        self.diameter().max(1.0)
    }

    /// `x ∈ Ω̄` up to a relative tolerance.
    pub fn contains_closure(&self, x: &Vector<N>) -> bool {
        let tol = CLOSURE_TOL * self.length_scale();
        match self {
            Domain::Ball { radius } => x.norm() <= radius + tol,
            Domain::Box { lower, upper } => (0..N).all(|k| x[k] >= lower[k] - tol && x[k] <= upper[k] + tol),
        }
    }

    /// Distance from `x` to `∂Ω` (for points inside or outside).
    pub fn boundary_distance(&self, x: &Vector<N>) -> f64 {
        match self {
            Domain::Ball { radius } => (x.norm() - radius).abs(),
            Domain::Box { lower, upper } => {
                let inside = (0..N).all(|k| x[k] >= lower[k] && x[k] <= upper[k]);
                if inside {
                    (0..N).map(|k| (x[k] - lower[k]).min(upper[k] - x[k])).fold(f64::INFINITY, f64::min)
                } else {
                    let mut d2 = 0.0;
                    for k in 0..N {
                        let e = (lower[k] - x[k]).max(0.0).max(x[k] - upper[k]);
                        d2 += e * e;
                    }
                    d2.sqrt()
                }
            }
        }
    }

    /// Nearest point of Ω̄.
    pub fn project(&self, x: &Vector<N>) -> Vector<N> {
        match self {
            Domain::Ball { radius } => {
                let r = x.norm();
                if r <= *radius {
                    *x
                } else {
                    x * (radius / r)
                }
            }
            Domain::Box { lower, upper } => Vector::from_fn(|k, _| x[k].clamp(lower[k], upper[k])),
        }
    }

    /// Outward unit normals of the boundary pieces that `x` lies on (within
    /// `tol`). A ball point has one normal; a box point has one per active
    /// face (several at edges and corners).
    pub fn active_normals(&self, x: &Vector<N>, tol: f64) -> Vec<Vector<N>> {
        match self {
            Domain::Ball { radius } => {
                let r = x.norm();
                if (r - radius).abs() <= tol && r > 0.0 {
                    vec![x / r]
                } else {
                    Vec::new()
                }
            }
            Domain::Box { lower, upper } => {
                let mut out = Vec::new();
                for k in 0..N {
                    if (x[k] - lower[k]).abs() <= tol {
                        let mut n = Vector::zeros();
                        n[k] = -1.0;
                        out.push(n);
                    }
                    if (x[k] - upper[k]).abs() <= tol {
                        let mut n = Vector::zeros();
                        n[k] = 1.0;
                        out.push(n);
                    }
                }
                out
            }
        }
    }

    /// Outward unit normal at a boundary point (for box edges the first
    /// active face wins).
    pub fn outward_normal(&self, x: &Vector<N>) -> Option<Vector<N>> {
        let tol = 1e-9 * self.length_scale();
        self.active_normals(x, tol).into_iter().next()
    }
}

/// Exit time `τ±(x,v) = sup{s ≥ 0 : x ± s·v ∈ Ω}`.
pub fn exit_time<const N: usize>(domain: &Domain<N>, p: &PhasePoint<N>, direction: Direction) -> Result<f64> {
    let v = match direction {
        Direction::Forward => p.v,
        Direction::Backward => -p.v,
    };
    forward_exit(domain, &p.x, &v)
}

/// `τ₊(x, v)`.
pub fn tau_plus<const N: usize>(domain: &Domain<N>, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
    forward_exit(domain, x, v)
}

/// `τ₋(x, v) = τ₊(x, −v)`.
pub fn tau_minus<const N: usize>(domain: &Domain<N>, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
    forward_exit(domain, x, &(-v))
}

fn forward_exit<const N: usize>(domain: &Domain<N>, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
    let v2 = v.norm_squared();
    if v2 == 0.0 || !v2.is_finite() {
        return Err(Error::Domain("exit time requested for zero velocity".into()));
    }
    if !domain.contains_closure(x) {
        return Err(Error::Domain(format!("point {:?} lies outside the closed domain", x.as_slice())));
    }
    Ok(forward_exit_unchecked(domain, x, v))
}

/// Exit time without argument checks; callers guarantee `v ≠ 0`, `x ∈ Ω̄`.
#[inline]
pub(crate) fn forward_exit_unchecked<const N: usize>(domain: &Domain<N>, x: &Vector<N>, v: &Vector<N>) -> f64 {
    match domain {
        Domain::Ball { radius } => {
            // |x + s v|² = r²  ⇔  a s² + 2 b s + c = 0
            let a = v.norm_squared();
            let b = x.dot(v);
            let c = x.norm_squared() - radius * radius;
            let disc = (b * b - a * c).max(0.0);
            let root = disc.sqrt();
            let s = if b > 0.0 { -c / (b + root) } else { (root - b) / a };
            s.max(0.0)
        }
        Domain::Box { lower, upper } => {
            let mut s = f64::INFINITY;
            for k in 0..N {
                let t = if v[k] > 0.0 {
                    (upper[k] - x[k]) / v[k]
                } else if v[k] < 0.0 {
                    (lower[k] - x[k]) / v[k]
                } else {
                    continue;
                };
                s = s.min(t);
            }
            s.max(0.0)
        }
    }
}

/// Classifies `(x, v)` as incoming, outgoing, grazing, interior or exterior.
///
/// `tol` is the distance below which `x` counts as a boundary point; the
/// grazing test uses [`GRAZING_TOL`] relative to `|v|`.
pub fn classify_boundary<const N: usize>(domain: &Domain<N>, p: &PhasePoint<N>, tol: f64) -> BoundaryClass {
    let dist = domain.boundary_distance(&p.x);
    if dist > tol {
        return if domain.contains_closure(&p.x) { BoundaryClass::Interior } else { BoundaryClass::Exterior };
    }
    let normals = domain.active_normals(&p.x, tol.max(dist));
    let speed = p.v.norm();
    let graze = GRAZING_TOL * speed;
    if normals.is_empty() || speed == 0.0 {
        return BoundaryClass::Grazing;
    }
    let dots: Vec<f64> = normals.iter().map(|n| n.dot(&p.v)).collect();
    if dots.iter().any(|&d| d > graze) {
        BoundaryClass::Outgoing
    } else if dots.iter().all(|&d| d < -graze) {
        BoundaryClass::Incoming
    } else {
        BoundaryClass::Grazing
    }
}

/// Gauss–Legendre nodes `(s, weight)` on `[0, τ₋(x, v)]` for integrals
/// along the backward characteristic `s ↦ x − s·v`.
pub fn characteristic_nodes<const N: usize>(domain: &Domain<N>, p: &PhasePoint<N>, order: usize) -> Result<Vec<(f64, f64)>> {
    if order == 0 {
        return Err(Error::Config("characteristic quadrature order must be ≥ 1".into()));
    }
    let tau = exit_time(domain, p, Direction::Backward)?;
    Ok(GaussLegendre::new(order).on_interval(0.0, tau).collect())
}

/// Evenly spread boundary points: uniform angles on the circle, a
/// Fibonacci lattice on the sphere, a face grid on the box.
pub fn boundary_points<const N: usize>(domain: &Domain<N>, count: usize) -> Vec<Vector<N>> {
    let count = count.max(1);
    match domain {
        Domain::Ball { radius } => {
            if N == 2 {
                (0..count)
                    .map(|i| {
                        let t = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
                        Vector::from_fn(|k, _| radius * if k == 0 { t.cos() } else { t.sin() })
                    })
                    .collect()
            } else {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..count)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        let u = [r * phi.cos(), r * phi.sin(), z];
                        Vector::from_fn(|k, _| radius * u[k])
                    })
                    .collect()
            }
        }
        Domain::Box { lower, upper } => {
            let mut out = Vec::with_capacity(count);
            let faces = 2 * N;
            for i in 0..count {
                let face = i % faces;
                let axis = face / 2;
                let j = (i / faces) as f64;
                let frac = |m: usize| {
                    let t = (j + 0.5) * (0.618_033_988_749_895 * (m as f64 + 1.0));
                    t - t.floor()
                };
                let x = Vector::from_fn(|k, _| {
                    if k == axis {
                        if face.is_multiple_of(2) {
                            lower[k]
                        } else {
                            upper[k]
                        }
                    } else {
                        lower[k] + frac(k) * (upper[k] - lower[k])
                    }
                });
                out.push(x);
            }
            out
        }
    }
}
