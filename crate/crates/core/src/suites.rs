//! Property suites shared by the CLI `verify` stage and the tests. Each
//! check reports the worst observed value against its threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::collision::{collide, collision_terms, KernelSpec, QuadratureRule, RuleOrders};
use crate::geometry::{classify_boundary, tau_minus, tau_plus, BoundaryClass, Domain, PhasePoint};
use crate::reconstruct::{check_relations, collision_identities, monotonicity_p, monotonicity_p_expanded, omega_pair, probe_from_abtheta};
use crate::solver::{GridSpec, PhaseGrid};
use crate::{Result, Vector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold, detail: detail.into() }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

fn unit<const N: usize>(rng: &mut ChaCha8Rng) -> Vector<N> {
    loop {
        let w = Vector::<N>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n = w.norm();
        if n > 0.1 && n <= 1.0 {
            return w / n;
        }
    }
}

fn cube<const N: usize>(rng: &mut ChaCha8Rng, r: f64) -> Vector<N> {
    Vector::<N>::from_fn(|_, _| rng.gen_range(-r..r))
}

/// Conservation, involution and the two parities of the collision map,
/// as relative errors over `samples` random `(u, v, ω)` with `|u|,|v| ≤ 4`.
pub fn kinematics_suite<const N: usize>(samples: usize, seed: u64, tol: f64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 5];
    for _ in 0..samples {
        let (u, v, w) = (cube::<N>(&mut rng, 4.0), cube::<N>(&mut rng, 4.0), unit::<N>(&mut rng));
        let s = 1.0 + u.norm().max(v.norm());
        let (up, vp) = collide(&u, &v, &w);
        worst[0] = worst[0].max(((up + vp) - (u + v)).norm() / s);
        worst[1] = worst[1].max((up.norm_squared() + vp.norm_squared() - u.norm_squared() - v.norm_squared()).abs() / (s * s));
        let (uu, vv) = collide(&up, &vp, &w);
        worst[2] = worst[2].max((uu - u).norm().max((vv - v).norm()) / s);
        let (um, vm) = collide(&u, &v, &-w);
        worst[3] = worst[3].max((um - up).norm().max((vm - vp).norm()) / s);
        let (us, vs) = collide(&v, &u, &w);
        worst[4] = worst[4].max((us - vp).norm().max((vs - up).norm()) / s);
    }
    let d = format!("{samples} samples, n={N}");
    vec![
        Check::at_most("momentum_conservation", worst[0], tol, d.clone()),
        Check::at_most("energy_conservation", worst[1], tol, d.clone()),
        Check::at_most("involution", worst[2], tol, d.clone()),
        Check::at_most("omega_parity", worst[3], tol, d.clone()),
        Check::at_most("swap_parity", worst[4], tol, d),
    ]
}

/// Relation equivalence over resonant, generic and slightly off-resonant
/// triples; orthogonality of ω₁, ω₂ and the four collision identities over
/// resonant triples built from random `(a, b, θ)`.
pub fn probe_geometry_suite<const N: usize>(samples: usize, seed: u64, tol: f64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inconsistent = 0usize;
    let mut missed = 0usize;
    let mut ortho = 0.0f64;
    let mut ident = [0.0f64; 4];
    let mut resonant = 0usize;
    while resonant < samples {
        let (a, b, th) = (cube::<N>(&mut rng, 3.0), cube::<N>(&mut rng, 3.0), unit::<N>(&mut rng));
        let d = a - b;
        let p = d.dot(&th);
        // keep both Jacobian lengths away from zero
        if p.abs() < 0.05 * d.norm() || (d - th * p).norm() < 0.05 * d.norm() || d.norm() < 0.1 {
            continue;
        }
        let (s, v0, u0) = probe_from_abtheta(&a, &b, &th)?;
        let r = check_relations(&s, &v0, &u0)?;
        inconsistent += usize::from(!r.consistent());
        missed += usize::from(!r.rel3);
        let (w1, w2) = omega_pair(&s, &v0, &u0)?;
        ortho = ortho.max(w1.dot(&w2).abs());
        for (w, e) in ident.iter_mut().zip(collision_identities(&s, &v0, &u0)?) {
            *w = w.max(e);
        }
        resonant += 1;

        let g = (cube::<N>(&mut rng, 3.0), cube::<N>(&mut rng, 3.0), cube::<N>(&mut rng, 3.0));
        if let Ok(r) = check_relations(&g.0, &g.1, &g.2) {
            inconsistent += usize::from(!r.consistent());
        }
        // push v* radially off the resonance sphere; the normalised
        // residual becomes about 5e-9, well above the tolerance
        let c = (v0 + u0) * 0.5;
        let off = c + (s - c) * (1.0 + 1e-8);
        if let Ok(r) = check_relations(&off, &v0, &u0) {
            inconsistent += usize::from(!r.consistent() || r.rel3);
        }
    }
    let d = format!("{samples} resonant triples, n={N}");
    let mut out = vec![
        Check::at_most("relation_equivalence", inconsistent as f64, 0.0, format!("{} triples, mismatches counted", 3 * samples)),
        Check::at_most("resonant_detected", missed as f64, 0.0, d.clone()),
        Check::at_most("omega_orthogonality", ortho, tol, d.clone()),
    ];
    let names = ["u(u0,v0,w2)=v*", "v(u0,v0,w1)=v*", "v(u0,v0,w2)=u0+v0-v*", "u(u0,v0,w1)=u0+v0-v*"];
    for (n, w) in names.iter().zip(ident) {
        out.push(Check::at_most(&format!("identity {n}"), w, tol, d.clone()));
    }
    Ok(out)
}

/// `Q(c,c)` and `Q(M,M)` node by node at every velocity node of the grid,
/// with the Maxwellian evaluated in closed form.
pub fn collision_invariant_suite<const N: usize>(kernel: &KernelSpec, grid: &GridSpec, orders: RuleOrders, tol: f64) -> Result<Vec<Check>> {
    let domain = Domain::<N>::unit_ball();
    let g = PhaseGrid::new(&domain, *grid)?;
    let rule = QuadratureRule::<N>::new(orders, grid.velocity_radius)?;
    let c = |_: &Vector<N>| Ok(0.7);
    let m = |w: &Vector<N>| Ok((-w.norm_squared()).exp());
    let mut q_const = 0.0f64;
    let mut node_const = 0.0f64;
    let mut node_max = 0.0f64;
    let mut q_max = 0.0f64;
    for v in &g.v_nodes {
        let mut acc = 0.0;
        collision_terms(c, c, v, kernel, &rule, |t| {
            let term = t.weight * (t.gain - t.loss);
            node_const = node_const.max(term.abs());
            acc += term;
        })?;
        q_const = q_const.max(acc.abs());
        let mut acc = 0.0;
        collision_terms(m, m, v, kernel, &rule, |t| {
            let term = t.weight * (t.gain - t.loss);
            node_max = node_max.max(term.abs());
            acc += term;
        })?;
        q_max = q_max.max(acc.abs());
    }
    let d = format!("{} velocity nodes, sphere order {}, n={N}", g.nv(), orders.sphere);
    Ok(vec![
        Check::at_most("Q(c,c) exact", q_const.max(node_const), 0.0, d.clone()),
        Check::at_most("Q(M,M) per node", node_max, tol, d.clone()),
        Check::at_most("Q(M,M) total", q_max, tol, d),
    ])
}

/// Exit-time consistency on the unit ball: both exit points lie on the
/// boundary and the forward exit point is outgoing.
pub fn geometry_suite<const N: usize>(domain: &Domain<N>, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = domain.bounding_box();
    let mut on_boundary = 0.0f64;
    let mut misclassified = 0usize;
    let mut n = 0;
    while n < samples {
        let x = Vector::<N>::from_fn(|i, _| rng.gen_range(lo[i]..hi[i]));
        if domain.boundary_distance(&x) < 1e-3 || !domain.contains_closure(&x) {
            continue;
        }
        let v = unit::<N>(&mut rng) * rng.gen_range(0.1..4.0);
        let (tp, tm) = (tau_plus(domain, &x, &v)?, tau_minus(domain, &x, &v)?);
        let (xp, xm) = (x + v * tp, x - v * tm);
        on_boundary = on_boundary.max(domain.boundary_distance(&xp)).max(domain.boundary_distance(&xm));
        if classify_boundary(domain, &PhasePoint::new(xp, v), 1e-9) != BoundaryClass::Outgoing
            || classify_boundary(domain, &PhasePoint::new(xm, v), 1e-9) != BoundaryClass::Incoming
        {
            misclassified += 1;
        }
        n += 1;
    }
    let d = format!("{samples} interior samples, n={N}");
    Ok(vec![
        Check::at_most("exit_points_on_boundary", on_boundary, 1e-12 * domain.diameter().max(1.0), d.clone()),
        Check::at_most("exit_points_classified", misclassified as f64, 0.0, d),
    ])
}

/// Sign and zero set of `P`: `P ≤ 0`, `|P| ≤ tol` on ω ⟂ (v₀−u) and
/// ω = ±unit(v₀−u), `|P| > tol` at distance ≥ 1e-3 from that set, and the
/// two algebraic forms agree. Magnitudes are relative to `e^{|v₀−u|²}`,
/// the size of the terms that cancel.
pub fn p_function_suite<const N: usize>(samples: usize, seed: u64, tol: f64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_p = f64::NEG_INFINITY;
    let mut on_set = 0.0f64;
    let mut off_missed = 0usize;
    let mut forms = 0.0f64;
    for _ in 0..samples {
        let v0 = cube::<N>(&mut rng, 2.0);
        let u = cube::<N>(&mut rng, 2.0);
        let d = v0 - u;
        if d.norm() < 0.5 {
            continue;
        }
        let w = unit::<N>(&mut rng);
        let p = monotonicity_p(&v0, &u, &w);
        max_p = max_p.max(p);
        let scale = d.norm_squared().exp();
        forms = forms.max((p - monotonicity_p_expanded(&v0, &u, &w)).abs() / scale);

        let dh = d.normalize();
        let perp = (w - dh * w.dot(&dh)).normalize();
        for z in [perp, dh, -dh] {
            on_set = on_set.max(monotonicity_p(&v0, &u, &z).abs() / scale);
        }
        // distance from the null set: angle to the plane ⟂ d̂ and to ±d̂
        let c = w.dot(&dh).abs().min(1.0);
        let dist = c.asin().min(c.acos());
        if dist >= 1e-3 && p.abs() <= tol * scale {
            off_missed += 1;
        }
    }
    let d = format!("{samples} samples with |v0−u| ≥ 0.5, n={N}");
    vec![
        Check::at_most("P_nonpositive", max_p.max(0.0), 0.0, d.clone()),
        Check::at_most("P_zero_on_null_set", on_set, tol, d.clone()),
        Check::at_most("P_nonzero_off_null_set", off_missed as f64, 0.0, d.clone()),
        Check::at_most("P_forms_agree", forms, 1e-12, d),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(all_passed(&kinematics_suite::<3>(2000, 1, 1e-12)));
        assert!(all_passed(&kinematics_suite::<2>(2000, 1, 1e-12)));
        assert!(all_passed(&probe_geometry_suite::<2>(500, 2, 1e-12).unwrap()));
        assert!(all_passed(&probe_geometry_suite::<3>(500, 2, 1e-12).unwrap()));
        assert!(all_passed(&p_function_suite::<2>(2000, 3, 1e-10)));
        assert!(all_passed(&geometry_suite::<2>(&Domain::unit_ball(), 500, 4).unwrap()));
        let b = Domain::<3>::boxed(Vector::<3>::zeros(), Vector::<3>::new(1.0, 2.0, 0.5)).unwrap();
        assert!(all_passed(&geometry_suite::<3>(&b, 500, 4).unwrap()));
    }

    #[test]
    fn failing_check_is_reported() {
        let c = Check::at_most("x", 2.0, 1.0, "");
        assert!(!c.passed);
        assert!(!all_passed(&[c]));
    }
}
