//! The admissibility bound `τ₋(x,v) ∫∫|B(v,u,ω)| dω du < M`.

use super::kernel::KernelSpec;
use super::rule::QuadratureRule;
use crate::geometry::{boundary_points, forward_exit_unchecked, Domain};
use crate::{Error, Result, Vector};

#[derive(Debug, Clone)]
pub struct AdmissibilityReport<const N: usize> {
    pub m_estimate: f64,
    /// Sample attaining the maximum (`None` when every sample gives 0).
    pub maximizer: Option<(Vector<N>, Vector<N>)>,
    pub threshold: f64,
    pub passed: bool,
    pub samples: usize,
}

/// `∫∫ |B(v, u, ω)| dω du` by the rule.
pub fn kernel_mass<const N: usize>(kernel: &KernelSpec, v: &Vector<N>, rule: &QuadratureRule<N>) -> f64 {
    if kernel.is_zero() {
        return 0.0;
    }
    let mut acc = 0.0;
    for (u, wu) in &rule.velocity {
        for (omega, wo) in &rule.sphere {
            acc += wu * wo * kernel.eval(v, u, omega).abs();
        }
    }
    acc
}

/// Default sample set: for every ordered pair of spread boundary points
/// `(p, q)` the phase point `(q, unit(q − p))`, whose backward exit time is
/// the chord `|q − p|`; for boxes the corner diagonals are added. Speeds
/// are taken from `speeds`, each combined with every direction.
///
/// Exit times are measured per unit speed (chord lengths), so the bound
/// compares path length times collision frequency.
pub fn default_samples<const N: usize>(domain: &Domain<N>, boundary_count: usize, speeds: &[f64]) -> Vec<(Vector<N>, Vector<N>)> {
    let mut pts = boundary_points(domain, boundary_count);
    if let Domain::Box { lower, upper } = domain {
        for mask in 0..(1usize << N) {
            pts.push(Vector::from_fn(|k, _| if mask >> k & 1 == 1 { upper[k] } else { lower[k] }));
        }
    }
    let mut out = Vec::new();
    for p in &pts {
        for q in &pts {
            let d = q - p;
            let len = d.norm();
            if len < 1e-9 {
                continue;
            }
            for &s in speeds {
                out.push((*q, d * (s / len)));
            }
        }
    }
    out
}

/// Admissibility estimate over an explicit sample set of `(x, v)` pairs.
pub fn admissibility_check_at<const N: usize>(
    kernel: &KernelSpec,
    domain: &Domain<N>,
    rule: &QuadratureRule<N>,
    threshold: f64,
    samples: &[(Vector<N>, Vector<N>)],
) -> Result<AdmissibilityReport<N>> {
    if samples.is_empty() {
        return Err(Error::Config("admissibility check needs at least one sample".into()));
    }
    let mut best = 0.0;
    let mut maximizer = None;
    for (x, v) in samples {
        let speed = v.norm();
        if speed == 0.0 {
            return Err(Error::Domain("admissibility sample with zero velocity".into()));
        }
        if !domain.contains_closure(x) {
            return Err(Error::Domain("admissibility sample outside the domain".into()));
        }
        let dir = v / speed;
        let tau = forward_exit_unchecked(domain, x, &(-dir));
        let value = tau * kernel_mass(kernel, v, rule);
        if value > best {
            best = value;
            maximizer = Some((*x, *v));
        }
    }
    Ok(AdmissibilityReport { m_estimate: best, maximizer, threshold, passed: best < threshold, samples: samples.len() })
}

/// Admissibility estimate over [`default_samples`] with speeds spread over
/// `(0, R_v]`.
pub fn admissibility_check<const N: usize>(
    kernel: &KernelSpec,
    domain: &Domain<N>,
    rule: &QuadratureRule<N>,
    threshold: f64,
) -> Result<AdmissibilityReport<N>> {
    let speeds: Vec<f64> = (1..=4).map(|k| rule.radius * k as f64 / 4.0).collect();
    let samples = default_samples(domain, 16, &speeds);
    admissibility_check_at(kernel, domain, rule, threshold, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::rule::RuleOrders;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn rule() -> QuadratureRule<2> {
        QuadratureRule::new(RuleOrders { sphere: 16, radial: 6, angular: 12 }, 4.0).unwrap()
    }

    #[test]
    fn zero_kernel_passes_with_zero() {
        let r = admissibility_check(&KernelSpec::zero(), &Domain::<2>::unit_ball(), &rule(), 1.0).unwrap();
        assert_eq!(r.m_estimate, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn constant_kernel_matches_product_of_measures() {
        let c = 0.25;
        let r = admissibility_check(&KernelSpec::Constant { value: c }, &Domain::<2>::unit_ball(), &rule(), 1e9).unwrap();
        assert_relative_eq!(r.m_estimate, 2.0 * c * 2.0 * PI * PI * 16.0, max_relative = 1e-10);
    }

    #[test]
    fn support_outside_velocity_ball_gives_zero() {
        let k = KernelSpec::GaussianCompact { amplitude: 1.0, center: vec![10.0, 0.0], width: 1.0 };
        let r = admissibility_check(&k, &Domain::<2>::unit_ball(), &rule(), 1.0).unwrap();
        assert_eq!(r.m_estimate, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn empty_samples_rejected() {
        let r = admissibility_check_at(&KernelSpec::zero(), &Domain::<2>::unit_ball(), &rule(), 1.0, &[]);
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
