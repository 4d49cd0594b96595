//! Probe geometry: the resonance relations, the scattering directions ω₁,
//! ω₂ and the `(a, b, θ)` parametrisation.

use serde::Serialize;

use crate::collision::collide;
use crate::{Error, Result, Vector};

/// Tolerance on the normalised relation residuals.
pub const RELATION_TOL: f64 = 1e-10;

/// The three resonance relations for a triple `(v*, v₀, u₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Relations {
    /// `(v*−v₀)·(u₀−v₀) = |v*−v₀|²`
    pub rel1: bool,
    /// `(v*−u₀)·(v₀−u₀) = |v*−u₀|²`
    pub rel2: bool,
    /// `(v*−v₀)·(v*−u₀) = 0`
    pub rel3: bool,
    /// `(v*−v₀)·(v*−u₀) / s²` with `s` the largest pairwise distance.
    pub residual: f64,
}

impl Relations {
    pub fn consistent(&self) -> bool {
        self.rel1 == self.rel2 && self.rel2 == self.rel3
    }
}

fn distinct<const N: usize>(v_star: &Vector<N>, v0: &Vector<N>, u0: &Vector<N>) -> Result<f64> {
    let s = (v_star - v0).norm().max((v_star - u0).norm()).max((u0 - v0).norm());
    let min = (v_star - v0).norm().min((v_star - u0).norm()).min((u0 - v0).norm());
    if !(min > 1e-12 * s.max(1.0)) {
        return Err(Error::Domain("probe velocities must be pairwise distinct".into()));
    }
    Ok(s)
}

/// Evaluates the three relations, each normalised by the square of the
/// largest pairwise distance and compared against [`RELATION_TOL`].
pub fn check_relations<const N: usize>(v_star: &Vector<N>, v0: &Vector<N>, u0: &Vector<N>) -> Result<Relations> {
    let s2 = distinct(v_star, v0, u0)?.powi(2);
    let r1 = ((v_star - v0).dot(&(u0 - v0)) - (v_star - v0).norm_squared()) / s2;
    let r2 = ((v_star - u0).dot(&(v0 - u0)) - (v_star - u0).norm_squared()) / s2;
    let r3 = (v_star - v0).dot(&(v_star - u0)) / s2;
    Ok(Relations { rel1: r1.abs() <= RELATION_TOL, rel2: r2.abs() <= RELATION_TOL, rel3: r3.abs() <= RELATION_TOL, residual: r3 })
}

/// `ω₁ = unit(v*−v₀)`, `ω₂ = unit(v*−u₀)`; requires the resonance relation.
pub fn omega_pair<const N: usize>(v_star: &Vector<N>, v0: &Vector<N>, u0: &Vector<N>) -> Result<(Vector<N>, Vector<N>)> {
    let rel = check_relations(v_star, v0, u0)?;
    if !rel.rel3 {
        return Err(Error::Precondition(format!("(v*−v₀)·(v*−u₀) ≠ 0 (normalised residual {:.3e})", rel.residual)));
    }
    Ok(((v_star - v0).normalize(), (v_star - u0).normalize()))
}

/// Residuals of the four collision identities at the resonance:
/// `u(u₀,v₀,ω₂) = v(u₀,v₀,ω₁) = v*` and
/// `v(u₀,v₀,ω₂) = u(u₀,v₀,ω₁) = u₀+v₀−v*`, each relative to the largest
/// pairwise distance.
pub fn collision_identities<const N: usize>(v_star: &Vector<N>, v0: &Vector<N>, u0: &Vector<N>) -> Result<[f64; 4]> {
    let (w1, w2) = omega_pair(v_star, v0, u0)?;
    let s = distinct(v_star, v0, u0)?;
    let partner = u0 + v0 - v_star;
    let (u1, v1) = collide(u0, v0, &w1);
    let (u2, v2) = collide(u0, v0, &w2);
    Ok([(u2 - v_star).norm() / s, (v1 - v_star).norm() / s, (v2 - partner).norm() / s, (u1 - partner).norm() / s])
}

/// A failed clause of the admissible parameter set for `(a, b, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    /// `(a−b)·θ = 0`
    Orthogonal,
    /// `a−b = [(a−b)·θ]θ`
    Parallel,
    /// `a−b = 2[(a−b)·θ]θ`
    DoubleParallel,
}

impl std::fmt::Display for Clause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Clause::Orthogonal => "(a−b)·θ = 0",
            Clause::Parallel => "a−b = [(a−b)·θ]θ",
            Clause::DoubleParallel => "a−b = 2[(a−b)·θ]θ",
        })
    }
}

/// Checks the three clauses, relative tolerance `1e-12·|a−b|`.
pub fn check_abtheta<const N: usize>(a: &Vector<N>, b: &Vector<N>, theta: &Vector<N>) -> Result<()> {
    if ((theta.norm() - 1.0).abs()) > 1e-12 {
        return Err(Error::Domain("θ must be a unit vector".into()));
    }
    let d = a - b;
    let tol = 1e-12 * d.norm().max(1e-300);
    let p = d.dot(theta);
    let fail = |c: Clause| Err(Error::Domain(format!("(a, b, θ) rejected: {c}")));
    if p.abs() <= tol {
        return fail(Clause::Orthogonal);
    }
    if (d - theta * p).norm() <= tol {
        return fail(Clause::Parallel);
    }
    if (d - theta * (2.0 * p)).norm() <= tol {
        return fail(Clause::DoubleParallel);
    }
    Ok(())
}

/// `v* = a`, `v₀ = a − [(a−b)·θ]θ`, `u₀ = b + [(a−b)·θ]θ`.
pub fn probe_from_abtheta<const N: usize>(a: &Vector<N>, b: &Vector<N>, theta: &Vector<N>) -> Result<(Vector<N>, Vector<N>, Vector<N>)> {
    check_abtheta(a, b, theta)?;
    let p = (a - b).dot(theta);
    Ok((*a, a - theta * p, b + theta * p))
}

/// `(a, b, θ)` from a resonant triple, with `θ = ω₁`.
pub fn abtheta_from_probe<const N: usize>(v_star: &Vector<N>, v0: &Vector<N>, u0: &Vector<N>) -> Result<(Vector<N>, Vector<N>, Vector<N>)> {
    let (w1, _) = omega_pair(v_star, v0, u0)?;
    Ok((*v_star, u0 + v0 - v_star, w1))
}

/// The lengths entering the closed forms: `α = |(a−b)·θ|`,
/// `β = |P_{θ⊥}(a−b)|` and `|a−b|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeLengths {
    pub alpha: f64,
    pub beta: f64,
    pub dist: f64,
}

pub fn probe_lengths<const N: usize>(a: &Vector<N>, b: &Vector<N>, theta: &Vector<N>) -> ProbeLengths {
    let d = a - b;
    let p = d.dot(theta);
    ProbeLengths { alpha: p.abs(), beta: (d - theta * p).norm(), dist: d.norm() }
}

/// A probe `(v*, v₀, u₀)` with mollification width `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe<const N: usize> {
    #[serde(skip)]
    pub v_star: Vector<N>,
    #[serde(skip)]
    pub v0: Vector<N>,
    #[serde(skip)]
    pub u0: Vector<N>,
    pub eta: f64,
}

impl<const N: usize> Probe<N> {
    pub fn new(v_star: Vector<N>, v0: Vector<N>, u0: Vector<N>, eta: f64) -> Result<Self> {
        distinct(&v_star, &v0, &u0)?;
        if !(eta > 0.0) {
            return Err(Error::Domain("η must be positive".into()));
        }
        Ok(Self { v_star, v0, u0, eta })
    }

    pub fn from_abtheta(a: &Vector<N>, b: &Vector<N>, theta: &Vector<N>, eta: f64) -> Result<Self> {
        let (v_star, v0, u0) = probe_from_abtheta(a, b, theta)?;
        Self::new(v_star, v0, u0, eta)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.v_star, self.v0, self.u0, eta)
    }

    pub fn relations(&self) -> Result<Relations> {
        check_relations(&self.v_star, &self.v0, &self.u0)
    }

    /// Smallest pairwise distance of the three centres.
    pub fn separation(&self) -> f64 {
        (self.v_star - self.v0).norm().min((self.v_star - self.u0).norm()).min((self.u0 - self.v0).norm())
    }

    /// Distance from `v*` to the sphere with diameter `[v₀, u₀]`, on which
    /// the resonance relation holds.
    pub fn manifold_distance(&self) -> f64 {
        let c = (self.v0 + self.u0) * 0.5;
        ((self.v_star - c).norm() - 0.5 * (self.u0 - self.v0).norm()).abs()
    }
}
