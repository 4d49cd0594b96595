//! The sign function `P` and the monotonicity certificate.
//!
//! With `V₁ = e^{|v−v₀|²}` and `V₂ = 1` the second-order source at `v₀` is
//! `∫∫ B(v₀,u,ω) P(v₀,u,ω) dω du`, and `P ≤ 0` with equality only for ω
//! orthogonal or parallel to `v₀ − u`. Equal boundary data for `B₁ ≥ B₂`
//! therefore forces `B₁ = B₂` off that null set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collision::{KernelSpec, QuadratureRule};
use crate::{Error, Result, Vector};

/// `(s², |v₀−u|²)` with `s = (v₀−u)·ω`, clamped so that `s² ≤ |v₀−u|²`.
fn squares<const N: usize>(v0: &Vector<N>, u: &Vector<N>, omega: &Vector<N>) -> (f64, f64) {
    let d = v0 - u;
    let r2 = d.norm_squared();
    let s = d.dot(omega);
    ((s * s).min(r2), r2)
}

/// Factored form `(1 − e^{−s²})(e^{s²} − e^{|v₀−u|²})`.
pub fn monotonicity_p<const N: usize>(v0: &Vector<N>, u: &Vector<N>, omega: &Vector<N>) -> f64 {
    let (s2, r2) = squares(v0, u, omega);
    -(-s2).exp_m1() * (s2.exp() - r2.exp())
}

/// Expanded form `e^{|v₀−u|²−s²} + e^{s²} − 1 − e^{|v₀−u|²}`.
pub fn monotonicity_p_expanded<const N: usize>(v0: &Vector<N>, u: &Vector<N>, omega: &Vector<N>) -> f64 {
    let (s2, r2) = squares(v0, u, omega);
    (r2 - s2).exp() + s2.exp() - 1.0 - r2.exp()
}

/// `∫∫ B(v₀,u,ω) P(v₀,u,ω) dω du` on a rule.
pub fn p_integral<const N: usize>(kernel: &KernelSpec, v0: &Vector<N>, rule: &QuadratureRule<N>) -> f64 {
    let mut acc = 0.0;
    for (u, wu) in &rule.velocity {
        for (omega, wo) in &rule.sphere {
            acc += wu * wo * kernel.eval(v0, u, omega) * monotonicity_p(v0, u, omega);
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateRow<const N: usize> {
    #[serde(skip)]
    pub v0: Vector<N>,
    /// `∫∫ (B₁ − B₂) P`.
    pub integral: f64,
    /// `∫∫ (|B₁| + |B₂|) |P|`, the scale for the zero test.
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate<const N: usize> {
    pub rows: Vec<CertificateRow<N>>,
    /// First `v₀` with an integral below `−tol·scale`.
    #[serde(skip)]
    pub separating: Option<Vector<N>>,
    pub tolerance: f64,
}

impl<const N: usize> Certificate<N> {
    pub fn indistinguishable(&self) -> bool {
        self.separating.is_none()
    }

    pub fn verdict(&self) -> String {
        match &self.separating {
            Some(v) => format!("kernels separated at v0 = {:?}", v.as_slice()),
            None => "kernels indistinguishable by this probe".into(),
        }
    }
}

/// Evaluates `∫∫ (B₁ − B₂) P` at each `v₀`. Requires `B₁ ≥ B₂`, checked on
/// `checks` random triples drawn from the velocity ball of the rule.
pub fn monotonicity_certificate<const N: usize>(
    b1: &KernelSpec,
    b2: &KernelSpec,
    rule: &QuadratureRule<N>,
    v0s: &[Vector<N>],
    checks: usize,
    seed: u64,
) -> Result<Certificate<N>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rule.radius;
    let mut ball = || loop {
        let p = Vector::<N>::from_fn(|_, _| rng.gen_range(-r..=r));
        if p.norm() <= r {
            return p;
        }
    };
    for _ in 0..checks {
        let (v, u) = (ball(), ball());
        let omega = loop {
            let w = ball();
            if w.norm() > 1e-3 * r {
                break w.normalize();
            }
        };
        let (x1, x2) = (b1.eval(&v, &u, &omega), b2.eval(&v, &u, &omega));
        if x1 < x2 {
            return Err(Error::Precondition(format!(
                "B₁ < B₂ at v = {:?}, u = {:?}, ω = {:?} ({x1} < {x2})",
                v.as_slice(),
                u.as_slice(),
                omega.as_slice()
            )));
        }
    }
    let tolerance = 1e-12;
    let mut rows = Vec::with_capacity(v0s.len());
    let mut separating = None;
    for v0 in v0s {
        let mut integral = 0.0;
        let mut scale = 0.0;
        for (u, wu) in &rule.velocity {
            for (omega, wo) in &rule.sphere {
                let p = monotonicity_p(v0, u, omega);
                let (x1, x2) = (b1.eval(v0, u, omega), b2.eval(v0, u, omega));
                integral += wu * wo * (x1 - x2) * p;
                scale += wu * wo * (x1.abs() + x2.abs()) * p.abs();
            }
        }
        if separating.is_none() && integral < -tolerance * scale {
            separating = Some(*v0);
        }
        rows.push(CertificateRow { v0: *v0, integral, scale });
    }
    Ok(Certificate { rows, separating, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type V2 = Vector<2>;

    #[test]
    fn hand_values() {
        let (v0, u) = (V2::zeros(), V2::new(1.0, 0.0));
        assert_eq!(monotonicity_p(&v0, &u, &V2::new(0.0, 1.0)), 0.0);
        assert_eq!(monotonicity_p(&v0, &u, &V2::new(1.0, 0.0)), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = (1.0 - (-0.5f64).exp()) * (0.5f64.exp() - 1f64.exp());
        assert_relative_eq!(monotonicity_p(&v0, &u, &V2::new(h, h)), expect, epsilon = 1e-15);
        assert_relative_eq!(expect, -0.4209, epsilon = 1e-4);
    }

    proptest! {
        #[test]
        fn nonpositive_and_forms_agree(
            v0 in prop::array::uniform2(-2.0f64..2.0),
            u in prop::array::uniform2(-2.0f64..2.0),
            t in 0.0f64..std::f64::consts::TAU,
        ) {
            let (v0, u) = (V2::from(v0), V2::from(u));
            let w = V2::new(t.cos(), t.sin());
            let p = monotonicity_p(&v0, &u, &w);
            prop_assert!(p <= 0.0);
            let scale = (v0 - u).norm_squared().exp();
            prop_assert!((p - monotonicity_p_expanded(&v0, &u, &w)).abs() <= 1e-12 * scale);
        }
    }
}
