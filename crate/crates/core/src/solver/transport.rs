//! Linear transport along characteristics: free transport, pure source
//! problems and the attenuated problem `v·∇F + σF = f`, `F = g` on Γ₋.

use std::sync::Arc;

use super::field::PhaseField;
use super::grid::{ExtensionPolicy, Lattice, PhaseGrid};
use super::source::BoundarySource;
use crate::geometry::{characteristic_nodes, forward_exit_unchecked, tau_minus, Domain, PhasePoint};
use crate::quadrature::GaussLegendre;
use crate::{Error, Result, Vector};

/// `∫₀^τ f̃(y − s·v) ds`, where `f̃` is the multilinear interpolant of the
/// nodal values `f` on `lattice`.
///
/// The path is split where it crosses lattice planes; on each piece the
/// interpolant is a polynomial of degree ≤ N ≤ 3 in `s`, which the
/// two-point Gauss rule integrates exactly.
pub fn line_integral<const N: usize>(lattice: &Lattice<N>, f: &[f64], y: &Vector<N>, v: &Vector<N>, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    const G: f64 = 0.577_350_269_189_625_8; // 1/√3
    let mut next = [f64::INFINITY; 3];
    let mut inc = [f64::INFINITY; 3];
    for k in 0..N {
        let rate = -v[k] / lattice.step[k];
        if rate == 0.0 {
            continue;
        }
        let r0 = (y[k] - lattice.lower[k]) / lattice.step[k];
        let first = if rate < 0.0 {
            let m = r0.ceil() - 1.0;
            (r0 - m) / -rate
        } else {
            let m = r0.floor() + 1.0;
            (m - r0) / rate
        };
        next[k] = first;
        inc[k] = 1.0 / rate.abs();
    }
    let mut acc = 0.0;
    let mut s0 = 0.0;
    loop {
        let (mut k_min, mut s1) = (0, next[0]);
        for k in 1..N {
            if next[k] < s1 {
                s1 = next[k];
                k_min = k;
            }
        }
        let end = s1.min(tau);
        if end > s0 {
            let half = 0.5 * (end - s0);
            let mid = s0 + half;
            for s in [mid - half * G, mid + half * G] {
                let p = y - v * s;
                acc += half * lattice.stencil(&p).apply(f);
            }
            s0 = end;
        }
        if s1 >= tau {
            break;
        }
        next[k_min] += inc[k_min];
    }
    acc
}

/// `g(x − τ₋(x,v)·v, v)` at a single phase point.
pub fn free_transport_at<const N: usize>(g: &BoundarySource<N>, domain: &Domain<N>, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
    let tau = tau_minus(domain, x, v)?;
    Ok(g.eval(&(x - v * tau), v))
}

/// Unchecked version for callers that guarantee `x ∈ Ω̄`, `v ≠ 0`.
#[inline]
pub(crate) fn free_transport_unchecked<const N: usize>(g: &BoundarySource<N>, domain: &Domain<N>, x: &Vector<N>, v: &Vector<N>) -> f64 {
    if g.is_velocity_only() {
        return g.eval(x, v);
    }
    let tau = forward_exit_unchecked(domain, x, &(-v));
    g.eval(&(x - v * tau), v)
}

/// Solution `F₀` of `v·∇F = 0`, `F = g` on Γ₋, sampled on the grid. The
/// field keeps the closed form for analytic extension.
pub fn free_transport<const N: usize>(g: &BoundarySource<N>, grid: &Arc<PhaseGrid<N>>, policy: ExtensionPolicy) -> Result<PhaseField<N>> {
    let domain = grid.domain.clone();
    let field = PhaseField::from_fn(grid.clone(), policy, |x, v| free_transport_unchecked(g, &domain, x, v))?;
    let g = g.clone();
    Ok(field.with_analytic(Arc::new(move |x, v| {
        let x = domain.project(x);
        if v.norm_squared() == 0.0 {
            g.eval(&x, v)
        } else {
            free_transport_unchecked(&g, &domain, &x, v)
        }
    })))
}

/// `∫₀^{τ₋(x,v)} f(x − s·v, v) ds` by Gauss–Legendre of the given order.
pub fn source_solve_at<const N: usize>(
    f: impl Fn(&Vector<N>, &Vector<N>) -> f64,
    domain: &Domain<N>,
    x: &Vector<N>,
    v: &Vector<N>,
    order: usize,
) -> Result<f64> {
    let nodes = characteristic_nodes(domain, &PhasePoint::new(*x, *v), order)?;
    Ok(nodes.iter().map(|(s, w)| w * f(&(x - v * *s), v)).sum())
}

/// Solution of `v·∇F = f`, `F = 0` on Γ₋, sampled on the grid.
pub fn source_solve<const N: usize>(
    f: impl Fn(&Vector<N>, &Vector<N>) -> f64 + Sync,
    grid: &Arc<PhaseGrid<N>>,
    order: usize,
    policy: ExtensionPolicy,
) -> Result<PhaseField<N>> {
    let mut values = Vec::with_capacity(grid.nx() * grid.nv());
    for x in &grid.x_base {
        for v in &grid.v_nodes {
            values.push(source_solve_at(&f, &grid.domain, x, v, order)?);
        }
    }
    PhaseField::new(grid.clone(), values, policy)
}

/// Attenuated transport at one phase point:
/// `F = e^{−∫₀^{τ₋}σ} g(x − τ₋v, v) + ∫₀^{τ₋} e^{−∫₀^{s}σ} f(x − sv, v) ds`.
#[allow(clippy::too_many_arguments)]
pub fn attenuated_solve_at<const N: usize>(
    sigma: impl Fn(&Vector<N>, &Vector<N>) -> f64,
    sigma0: f64,
    f: impl Fn(&Vector<N>, &Vector<N>) -> f64,
    g: &BoundarySource<N>,
    domain: &Domain<N>,
    x: &Vector<N>,
    v: &Vector<N>,
    order: usize,
) -> Result<f64> {
    if !(sigma0 > 0.0) {
        return Err(Error::Domain(format!("attenuation lower bound must be positive, got {sigma0}")));
    }
    let tau = tau_minus(domain, x, v)?;
    let gl = GaussLegendre::new(order.max(1));
    let optical = |s: f64| -> Result<f64> {
        let mut acc = 0.0;
        for (r, w) in gl.on_interval(0.0, s) {
            let p = x - v * r;
            let sg = sigma(&p, v);
            if sg < sigma0 * (1.0 - 1e-12) {
                return Err(Error::Precondition(format!("σ = {sg} below σ₀ = {sigma0}")));
            }
            acc += w * sg;
        }
        Ok(acc)
    };
    let mut value = (-optical(tau)?).exp() * g.eval(&(x - v * tau), v);
    for (s, w) in gl.on_interval(0.0, tau) {
        value += w * (-optical(s)?).exp() * f(&(x - v * s), v);
    }
    Ok(value)
}

/// Attenuated transport sampled on the grid.
#[allow(clippy::too_many_arguments)]
pub fn attenuated_solve<const N: usize>(
    sigma: impl Fn(&Vector<N>, &Vector<N>) -> f64,
    sigma0: f64,
    f: impl Fn(&Vector<N>, &Vector<N>) -> f64,
    g: &BoundarySource<N>,
    grid: &Arc<PhaseGrid<N>>,
    order: usize,
    policy: ExtensionPolicy,
) -> Result<PhaseField<N>> {
    let mut values = Vec::with_capacity(grid.nx() * grid.nv());
    for x in &grid.x_base {
        for v in &grid.v_nodes {
            values.push(attenuated_solve_at(&sigma, sigma0, &f, g, &grid.domain, x, v, order)?);
        }
    }
    PhaseField::new(grid.clone(), values, policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tau_minus;
    use crate::solver::grid::GridSpec;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type V2 = Vector<2>;

    fn small_grid() -> Arc<PhaseGrid<2>> {
        Arc::new(PhaseGrid::new(&Domain::unit_ball(), GridSpec { spatial: 9, velocity: 8, ..Default::default() }).unwrap())
    }

    #[test]
    fn line_integral_exact_for_multilinear_data() {
        let lat = Lattice::<2>::spanning(V2::new(-1.0, -1.0), V2::new(1.0, 1.0), 6).unwrap();
        let f = |p: &V2| 0.5 + p[0] - 2.0 * p[1] + 3.0 * p[0] * p[1];
        let vals: Vec<f64> = lat.nodes().iter().map(f).collect();
        let y = V2::new(0.31, -0.2);
        let v = V2::new(0.7, 0.45);
        let tau = 1.1;
        let exact = GaussLegendre::new(8).integrate(0.0, tau, |s| f(&(y - v * s)));
        assert_relative_eq!(line_integral(&lat, &vals, &y, &v, tau), exact, epsilon = 1e-13);
        // starting on a lattice node, axis-aligned
        let y = V2::new(0.2, 0.2);
        let v = V2::new(-1.0, 0.0);
        let exact = GaussLegendre::new(8).integrate(0.0, 0.8, |s| f(&(y - v * s)));
        assert_relative_eq!(line_integral(&lat, &vals, &y, &v, 0.8), exact, epsilon = 1e-13);
    }

    #[test]
    fn constant_inflow_is_transported() {
        let f = free_transport(&BoundarySource::Constant(0.3), &small_grid(), ExtensionPolicy::Zero).unwrap();
        assert!(f.values.iter().all(|v| *v == 0.3));
    }

    #[test]
    fn velocity_only_inflow_is_unchanged() {
        let g = BoundarySource::<2>::maxwellian(1.0);
        let grid = small_grid();
        let f = free_transport(&g, &grid, ExtensionPolicy::Zero).unwrap();
        for (ix, x) in grid.x_nodes.iter().enumerate() {
            for (iv, v) in grid.v_nodes.iter().enumerate() {
                assert_eq!(f.node(ix, iv), g.eval(x, v));
            }
        }
    }

    #[test]
    fn chords_through_left_support() {
        // g supported on the left part of the circle (x₁ < −0.5) for v = (1, 0)
        let g = BoundarySource::<2>::custom(|x, _| if x[0] < -0.5 { 1.0 } else { 0.0 }, false, 1.0);
        let d = Domain::<2>::unit_ball();
        let v = V2::new(1.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let r: f64 = rng.gen_range(0.0..0.999);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let x = V2::new(r * t.cos(), r * t.sin());
            // the chord enters at x₁ = −√(1 − x₂²), inside the support iff |x₂| < √3/2
            let expected = if x[1].abs() < 0.75f64.sqrt() { 1.0 } else { 0.0 };
            assert_eq!(free_transport_at(&g, &d, &x, &v).unwrap(), expected);
        }
    }

    #[test]
    fn source_solve_examples() {
        let d = Domain::<2>::unit_ball();
        let (x, v) = (V2::new(0.2, -0.3), V2::new(0.6, 0.8));
        let tau = tau_minus(&d, &x, &v).unwrap();
        assert_relative_eq!(source_solve_at(|_, _| 1.0, &d, &x, &v, 3).unwrap(), tau, epsilon = 1e-14);
        let h = |v: &V2| v[0] * v[0] + 1.0;
        assert_relative_eq!(source_solve_at(|_, v| h(v), &d, &x, &v, 3).unwrap(), tau * h(&v), epsilon = 1e-14);
    }

    #[test]
    fn half_domain_source_gives_chord_inside_support() {
        // f = 1 on {x₁ > 0}; from x = (0.5, y) moving +x₁, the backward chord
        // inside the support has length 0.5.
        let d = Domain::<2>::unit_ball();
        let x = V2::new(0.5, 0.3);
        let v = V2::new(1.0, 0.0);
        let f = |p: &V2, _: &V2| if p[0] > 0.0 { 1.0 } else { 0.0 };
        // the integrand jumps, so use a rule fine enough to resolve it
        let val = source_solve_at(f, &d, &x, &v, 400).unwrap();
        assert!((val - 0.5).abs() < 5e-3, "{val}");
    }

    #[test]
    fn attenuated_examples() {
        let d = Domain::<2>::unit_ball();
        let (x, v) = (V2::new(-0.1, 0.4), V2::new(1.0, -0.5));
        let tau = tau_minus(&d, &x, &v).unwrap();
        let c = 0.7;
        let a = attenuated_solve_at(|_, _| 1.0, 1.0, |_, _| 0.0, &BoundarySource::Constant(c), &d, &x, &v, 8).unwrap();
        assert_relative_eq!(a, c * (-tau).exp(), epsilon = 1e-13);
        let s0 = 2.5;
        let b = attenuated_solve_at(|_, _| s0, s0, |_, _| s0 * c, &BoundarySource::Constant(0.0), &d, &x, &v, 24).unwrap();
        assert_relative_eq!(b, c * (1.0 - (-s0 * tau).exp()), epsilon = 1e-12);
        let z = attenuated_solve_at(|_, _| 1.0, 1.0, |_, _| 0.0, &BoundarySource::Constant(0.0), &d, &x, &v, 8).unwrap();
        assert_eq!(z, 0.0);
        assert!(matches!(
            attenuated_solve_at(|_, _| 1.0, 0.0, |_, _| 0.0, &BoundarySource::Constant(0.0), &d, &x, &v, 8),
            Err(Error::Domain(_))
        ));
    }
}
