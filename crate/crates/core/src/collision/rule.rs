//! Quadrature on the unit sphere `S^{N−1}` and on velocity balls.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::GaussLegendre;
use crate::{check_dimension, Error, Result, Vector};

/// Orders of a [`QuadratureRule`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleOrders {
    /// ω-rule: number of angles in 2D; number of polar nodes in 3D (with
    /// twice as many azimuths).
    pub sphere: usize,
    /// Gauss–Legendre nodes in the radial direction of the velocity ball.
    pub radial: usize,
    /// Angular order of the velocity-ball rule, same meaning as `sphere`.
    pub angular: usize,
}

impl Default for RuleOrders {
    fn default() -> Self {
        Self { sphere: 16, radial: 8, angular: 16 }
    }
}

/// `|S^{N−1}|`.
pub fn sphere_measure<const N: usize>() -> f64 {
    match N {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Volume of the `N`-ball of radius `r`.
pub fn ball_volume<const N: usize>(r: f64) -> f64 {
    sphere_measure::<N>() * r.powi(N as i32) / N as f64
}

/// Nodes and weights on `S^{N−1}`: uniform trapezoid in 2D, Gauss–Legendre
/// in `cos ϑ` times uniform azimuth in 3D.
pub fn sphere_rule<const N: usize>(order: usize) -> Result<Vec<(Vector<N>, f64)>> {
    check_dimension::<N>()?;
    if order == 0 {
        return Err(Error::Config("sphere order must be ≥ 1".into()));
    }
    let mut out = Vec::new();
    if N == 2 {
        let w = 2.0 * PI / order as f64;
        for k in 0..order {
            let t = 2.0 * PI * k as f64 / order as f64;
            out.push((Vector::<N>::from_fn(|i, _| if i == 0 { t.cos() } else { t.sin() }), w));
        }
    } else {
        let gl = GaussLegendre::new(order);
        let m = 2 * order;
        let dphi = 2.0 * PI / m as f64;
        for (&z, &wz) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - z * z).sqrt();
            for k in 0..m {
                let phi = dphi * k as f64;
                let p = [s * phi.cos(), s * phi.sin(), z];
                out.push((Vector::<N>::from_fn(|i, _| p[i]), wz * dphi));
            }
        }
    }
    Ok(out)
}

/// Polar tensor rule on the ball `|u − center| ≤ radius`: radial
/// Gauss–Legendre with the `r^{N−1}` Jacobian times the sphere rule.
/// With `radial ≥ 2` the weights sum to the ball volume to rounding.
pub fn ball_rule<const N: usize>(center: &Vector<N>, radius: f64, radial: usize, angular: usize) -> Result<Vec<(Vector<N>, f64)>> {
    if !(radius > 0.0) {
        return Err(Error::Config("ball radius must be positive".into()));
    }
    if radial < 2 {
        return Err(Error::Config("radial order must be ≥ 2".into()));
    }
    let dirs = sphere_rule::<N>(angular)?;
    let gl = GaussLegendre::new(radial);
    let mut out = Vec::with_capacity(dirs.len() * radial);
    for (r, wr) in gl.on_interval(0.0, radius) {
        let jac = wr * r.powi(N as i32 - 1);
        for (d, wd) in &dirs {
            out.push((center + d * r, jac * wd));
        }
    }
    Ok(out)
}

/// Discretisation of `∫_{|u|≤R_v} ∫_{S^{N−1}} · dω du`.
#[derive(Debug, Clone)]
pub struct QuadratureRule<const N: usize> {
    pub sphere: Vec<(Vector<N>, f64)>,
    pub velocity: Vec<(Vector<N>, f64)>,
    pub radius: f64,
    pub orders: RuleOrders,
    folded: bool,
}

impl<const N: usize> QuadratureRule<N> {
    pub fn new(orders: RuleOrders, radius: f64) -> Result<Self> {
        let sphere = sphere_rule::<N>(orders.sphere)?;
        let velocity = ball_rule::<N>(&Vector::zeros(), radius, orders.radial, orders.angular)?;
        Ok(Self { sphere, velocity, radius, orders, folded: false })
    }

    /// Same rule with antipodal ω-nodes merged (weights doubled). Valid
    /// only for integrands even in ω, which is the case for the collision
    /// integrand whenever the kernel is even.
    pub fn folded(&self) -> Result<Self> {
        if self.folded {
            return Ok(self.clone());
        }
        let mut used = vec![false; self.sphere.len()];
        let mut out = Vec::with_capacity(self.sphere.len() / 2);
        for i in 0..self.sphere.len() {
            if used[i] {
                continue;
            }
            let (w, wt) = self.sphere[i];
            let partner = (i + 1..self.sphere.len())
                .find(|&j| !used[j] && (self.sphere[j].0 + w).amax() < 1e-12 && self.sphere[j].1 == wt)
                .ok_or_else(|| Error::Config("sphere rule is not antipodally symmetric".into()))?;
            used[i] = true;
            used[partner] = true;
            out.push((w, 2.0 * wt));
        }
        Ok(Self { sphere: out, velocity: self.velocity.clone(), radius: self.radius, orders: self.orders, folded: true })
    }

    pub fn is_folded(&self) -> bool {
        self.folded
    }

    pub fn sphere_total(&self) -> f64 {
        self.sphere.iter().map(|(_, w)| w).sum()
    }

    pub fn velocity_total(&self) -> f64 {
        self.velocity.iter().map(|(_, w)| w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_weights_sum_to_measure() {
        for order in [1, 4, 16, 64] {
            let r2 = QuadratureRule::<2>::new(RuleOrders { sphere: order, radial: 4, angular: 8 }, 4.0).unwrap();
            assert_relative_eq!(r2.sphere_total(), 2.0 * PI, max_relative = 1e-10);
            let r3 = QuadratureRule::<3>::new(RuleOrders { sphere: order, radial: 4, angular: 4 }, 4.0).unwrap();
            assert_relative_eq!(r3.sphere_total(), 4.0 * PI, max_relative = 1e-10);
        }
    }

    #[test]
    fn velocity_weights_sum_to_ball_volume() {
        // the r^{N−1} Jacobian needs ⌈N/2⌉ radial nodes to be exact
        for radial in [2, 3, 8] {
            let r2 = QuadratureRule::<2>::new(RuleOrders { sphere: 8, radial, angular: 8 }, 4.0).unwrap();
            assert_relative_eq!(r2.velocity_total(), PI * 16.0, max_relative = 1e-8);
            let r3 = QuadratureRule::<3>::new(RuleOrders { sphere: 4, radial, angular: 4 }, 4.0).unwrap();
            assert_relative_eq!(r3.velocity_total(), 4.0 / 3.0 * PI * 64.0, max_relative = 1e-8);
        }
    }

    #[test]
    fn sphere_rule_integrates_smooth_functions() {
        // ∫_{S²} z² = 4π/3, ∫_{S¹} cos⁴ = 3π/4
        let s3 = sphere_rule::<3>(8).unwrap();
        let v: f64 = s3.iter().map(|(w, a)| a * w[2] * w[2]).sum();
        assert_relative_eq!(v, 4.0 * PI / 3.0, max_relative = 1e-12);
        let s2 = sphere_rule::<2>(16).unwrap();
        let v: f64 = s2.iter().map(|(w, a)| a * w[0].powi(4)).sum();
        assert_relative_eq!(v, 0.75 * PI, max_relative = 1e-12);
    }

    #[test]
    fn folding_preserves_even_integrals() {
        let rule = QuadratureRule::<2>::new(RuleOrders { sphere: 12, radial: 2, angular: 4 }, 1.0).unwrap();
        let f = rule.folded().unwrap();
        assert_eq!(f.sphere.len(), 6);
        let even = |w: &Vector<2>| w[0] * w[0] + 0.3 * w[0] * w[1];
        let a: f64 = rule.sphere.iter().map(|(w, a)| a * even(w)).sum();
        let b: f64 = f.sphere.iter().map(|(w, a)| a * even(w)).sum();
        assert_relative_eq!(a, b, max_relative = 1e-13);
        let r3 = QuadratureRule::<3>::new(RuleOrders { sphere: 6, radial: 2, angular: 2 }, 1.0).unwrap();
        let f = r3.folded().unwrap();
        assert_eq!(f.sphere.len() * 2, r3.sphere.len());
        assert_relative_eq!(f.sphere_total(), 4.0 * PI, max_relative = 1e-10);
    }
}
