//! Elastic binary collisions parametrised by a unit vector ω.

use crate::{Error, Result, Vector};

/// Tolerance on `| |ω| − 1 |`.
pub const UNIT_TOL: f64 = 1e-12;

fn check_unit<const N: usize>(omega: &Vector<N>) -> Result<()> {
    let norm = omega.norm();
    if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
        return Err(Error::Domain(format!("ω must be a unit vector, |ω| = {norm}")));
    }
    Ok(())
}

/// The map `(u, v) ↦ (u − [(u−v)·ω]ω, v + [(u−v)·ω]ω)`.
///
/// No validation; the map is an involution for any unit ω.
#[inline]
pub fn collide<const N: usize>(u: &Vector<N>, v: &Vector<N>, omega: &Vector<N>) -> (Vector<N>, Vector<N>) {
    let t = (u - v).dot(omega);
    (u - omega * t, v + omega * t)
}

/// Post-collision velocities `(u', v')`.
pub fn post_collision<const N: usize>(u: &Vector<N>, v: &Vector<N>, omega: &Vector<N>) -> Result<(Vector<N>, Vector<N>)> {
    check_unit(omega)?;
    Ok(collide(u, v, omega))
}

/// Pre-collision velocities `(u, v)` from `(u', v')`.
///
/// The collision map is its own inverse, so this is the same formula with
/// the primed velocities as input.
pub fn pre_collision<const N: usize>(u_post: &Vector<N>, v_post: &Vector<N>, omega: &Vector<N>) -> Result<(Vector<N>, Vector<N>)> {
    check_unit(omega)?;
    Ok(collide(u_post, v_post, omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    type V2 = Vector<2>;
    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn perpendicular_omega_is_identity() {
        let (u, v) = (V2::new(1.0, 0.0), V2::new(-1.0, 0.0));
        let (up, vp) = post_collision(&u, &v, &V2::new(0.0, 1.0)).unwrap();
        assert_eq!((up, vp), (u, v));
    }

    #[test]
    fn head_on_exchange() {
        let (u, v) = (V2::new(1.0, 0.0), V2::new(-1.0, 0.0));
        let (up, vp) = post_collision(&u, &v, &V2::new(1.0, 0.0)).unwrap();
        assert_eq!((up, vp), (v, u));
    }

    #[test]
    fn diagonal_omega() {
        let (u, v) = (V2::new(1.0, 0.0), V2::new(-1.0, 0.0));
        let omega = V2::new(H, H);
        let (up, vp) = post_collision(&u, &v, &omega).unwrap();
        assert_relative_eq!(up, V2::new(0.0, -1.0), epsilon = 1e-15);
        assert_relative_eq!(vp, V2::new(0.0, 1.0), epsilon = 1e-15);
        let (u0, v0) = pre_collision(&up, &vp, &omega).unwrap();
        assert_relative_eq!(u0, u, epsilon = 1e-15);
        assert_relative_eq!(v0, v, epsilon = 1e-15);
    }

    #[test]
    fn non_unit_omega_rejected() {
        let z = V2::zeros();
        assert!(matches!(post_collision(&z, &z, &V2::new(1.0, 1.0)), Err(Error::Domain(_))));
        assert!(matches!(pre_collision(&z, &z, &V2::new(0.5, 0.0)), Err(Error::Domain(_))));
    }

    fn vec3() -> impl Strategy<Value = Vector<3>> {
        prop::array::uniform3(-4.0..4.0f64).prop_map(Vector::<3>::from)
    }

    fn unit3() -> impl Strategy<Value = Vector<3>> {
        prop::array::uniform3(-1.0..1.0f64)
            .prop_filter("nonzero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
            .prop_map(|a| Vector::<3>::from(a).normalize())
    }

    proptest! {
        #[test]
        fn conservation_and_involution(u in vec3(), v in vec3(), w in unit3()) {
            let (up, vp) = post_collision(&u, &v, &w).unwrap();
            prop_assert!(((up + vp) - (u + v)).amax() < 1e-12);
            let e = up.norm_squared() + vp.norm_squared() - u.norm_squared() - v.norm_squared();
            prop_assert!(e.abs() < 1e-12 * (1.0 + u.norm_squared() + v.norm_squared()));
            let (uu, vv) = post_collision(&up, &vp, &w).unwrap();
            prop_assert!((uu - u).amax() < 1e-12 && (vv - v).amax() < 1e-12);
        }

        #[test]
        fn parities(u in vec3(), v in vec3(), w in unit3()) {
            let a = pre_collision(&u, &v, &w).unwrap();
            let b = pre_collision(&u, &v, &(-w)).unwrap();
            prop_assert_eq!(a, b);
            let (su, sv) = pre_collision(&v, &u, &w).unwrap();
            prop_assert!((su - a.1).amax() < 1e-12 && (sv - a.0).amax() < 1e-12);
        }
    }
}
