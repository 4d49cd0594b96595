//! The bilinear collision operator
//! `Q(H₁,H₂)(v) = ∫∫ B(v,u,ω) [H₁(u')H₂(v') − H₁(u)H₂(v)] dω du`.

use super::kernel::KernelSpec;
use super::kinematics::collide;
use super::rule::QuadratureRule;
use crate::{Result, Vector};

/// One quadrature node of the collision integral at a fixed `v`.
#[derive(Debug, Clone, Copy)]
pub struct CollisionTerm<const N: usize> {
    pub u: Vector<N>,
    pub omega: Vector<N>,
    pub u_post: Vector<N>,
    pub v_post: Vector<N>,
    /// Quadrature weight times `B(v, u, ω)`.
    pub weight: f64,
    /// `H₁(u')H₂(v')`.
    pub gain: f64,
    /// `H₁(u)H₂(v)`.
    pub loss: f64,
}

/// Visits every node of the `(u, ω)` rule at velocity `v`. Nodes where the
/// weighted kernel vanishes are still visited (with zero weight) so that
/// per-node identities can be checked everywhere.
pub fn collision_terms<const N: usize, H1, H2>(
    h1: H1,
    h2: H2,
    v: &Vector<N>,
    kernel: &KernelSpec,
    rule: &QuadratureRule<N>,
    mut visit: impl FnMut(&CollisionTerm<N>),
) -> Result<()>
where
    H1: Fn(&Vector<N>) -> Result<f64>,
    H2: Fn(&Vector<N>) -> Result<f64>,
{
    let h2v = h2(v)?;
    for (u, wu) in &rule.velocity {
        let h1u = h1(u)?;
        for (omega, wo) in &rule.sphere {
            let (u_post, v_post) = collide(u, v, omega);
            debug_assert!(((u_post + v_post) - (u + v)).amax() <= 1e-12 * (1.0 + u.amax() + v.amax()));
            debug_assert!(
                (u_post.norm_squared() + v_post.norm_squared() - u.norm_squared() - v.norm_squared()).abs()
                    <= 1e-12 * (1.0 + u.norm_squared() + v.norm_squared())
            );
            let term = CollisionTerm {
                u: *u,
                omega: *omega,
                u_post,
                v_post,
                weight: wu * wo * kernel.eval(v, u, omega),
                gain: h1(&u_post)? * h2(&v_post)?,
                loss: h1u * h2v,
            };
            visit(&term);
        }
    }
    Ok(())
}

/// `Q(H₁, H₂)(v)` by the tensor `(u, ω)` rule. Field handles return `Err`
/// when asked for a velocity outside their extension range.
pub fn collision_q<const N: usize, H1, H2>(h1: H1, h2: H2, v: &Vector<N>, kernel: &KernelSpec, rule: &QuadratureRule<N>) -> Result<f64>
where
    H1: Fn(&Vector<N>) -> Result<f64>,
    H2: Fn(&Vector<N>) -> Result<f64>,
{
    if kernel.is_zero() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    collision_terms(h1, h2, v, kernel, rule, |t| {
        if t.weight != 0.0 {
            acc += t.weight * (t.gain - t.loss);
        }
    })?;
    Ok(acc)
}

/// `Q(F, F)(v)`.
pub fn collision_q_diag<const N: usize, H>(f: H, v: &Vector<N>, kernel: &KernelSpec, rule: &QuadratureRule<N>) -> Result<f64>
where
    H: Fn(&Vector<N>) -> Result<f64>,
{
    collision_q(&f, &f, v, kernel, rule)
}
