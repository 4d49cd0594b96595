//! First and second linearizations of the solution map and of 𝒜.
//!
//! With inflow `ε₁g₁ + ε₂g₂` the solution expands as
//! `F = ε₁V⁽¹⁾ + ε₂V⁽²⁾ + ε₁ε₂W + …`, where `V⁽ᵏ⁾` is the free transport of
//! `gₖ` and `W` solves `v·∇W = S`, `W = 0` on Γ₋. On Γ₊ the mixed term can
//! be read off either from `S` by quadrature along chords or from three
//! nonlinear solves by a finite-difference quotient of 𝒜.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collision::{collide, KernelSpec, QuadratureRule};
use crate::geometry::{characteristic_nodes, tau_minus, PhasePoint};
use crate::solver::{free_transport, solution_trace, BoundarySource, ExtensionPolicy, PhaseField, PhaseGrid, Solver, TraceRow};
use crate::{Error, Result, Vector};

/// The ε-sequence of a finite-difference study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizationConfig {
    pub eps: Vec<(f64, f64)>,
}

impl Default for LinearizationConfig {
    fn default() -> Self {
        Self { eps: vec![(1e-2, 1e-2), (5e-3, 5e-3), (2.5e-3, 2.5e-3)] }
    }
}

impl LinearizationConfig {
    /// Geometric halving from `start`, `count` pairs.
    pub fn halving(start: f64, count: usize) -> Self {
        Self { eps: (0..count).map(|k| start * 0.5f64.powi(k as i32)).map(|e| (e, e)).collect() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() || self.eps.iter().any(|(a, b)| !(*a > 0.0 && *b > 0.0)) {
            return Err(Error::Config("ε-sequence must be non-empty with positive entries".into()));
        }
        Ok(())
    }
}

/// `V⁽ᵏ⁾`: the free transport of `gₖ`.
pub fn first_linearization<const N: usize>(
    g: &BoundarySource<N>,
    grid: &Arc<PhaseGrid<N>>,
    policy: ExtensionPolicy,
) -> Result<PhaseField<N>> {
    free_transport(g, grid, policy)
}

/// `sup |ε⁻¹F_ε − V| ` over the grid for each `ε`, where `F_ε` solves the
/// nonlinear problem with inflow `ε·g`.
pub fn first_order_quotients<const N: usize>(solver: &Solver<N>, g: &BoundarySource<N>, eps: &[f64]) -> Result<Vec<(f64, f64)>> {
    eps.iter()
        .map(|&e| {
            let sol = solver.solve(&g.scaled(e))?;
            // F_ε − ε·V is exactly the collision correction Ĝ
            let err = sol.ghat.iter().fold(0.0f64, |m, x| m.max(x.abs())) / e;
            Ok((e, err))
        })
        .collect()
}

/// One quadrature node of `S` at a fixed `v`.
#[derive(Debug, Clone, Copy)]
pub struct SourceTerm {
    /// Quadrature weight times `B(v, u, ω)`.
    pub weight: f64,
    /// `V₁(v')V₂(u') + V₁(u')V₂(v')`.
    pub gain: f64,
    /// `V₁(u)V₂(v) + V₁(v)V₂(u)`.
    pub loss: f64,
}

/// Visits the nodes of
/// `S(v) = ∫∫ B [V₁(v')V₂(u') + V₁(u')V₂(v') − V₁(u)V₂(v) − V₁(v)V₂(u)]`.
pub fn source_terms<const N: usize, A, B>(
    v1: A,
    v2: B,
    v: &Vector<N>,
    kernel: &KernelSpec,
    rule: &QuadratureRule<N>,
    mut visit: impl FnMut(&SourceTerm),
) -> Result<()>
where
    A: Fn(&Vector<N>) -> Result<f64>,
    B: Fn(&Vector<N>) -> Result<f64>,
{
    let (a_v, b_v) = (v1(v)?, v2(v)?);
    for (u, wu) in &rule.velocity {
        let (a_u, b_u) = (v1(u)?, v2(u)?);
        for (omega, wo) in &rule.sphere {
            let weight = wu * wo * kernel.eval(v, u, omega);
            let (up, vp) = collide(u, v, omega);
            let gain = v1(&vp)? * v2(&up)? + v1(&up)? * v2(&vp)?;
            let loss = a_u * b_v + a_v * b_u;
            visit(&SourceTerm { weight, gain, loss });
        }
    }
    Ok(())
}

/// `S(v)` for velocity functions `V₁`, `V₂`. The bracket is summed per node
/// in a form that is bitwise symmetric under `V₁ ↔ V₂`.
pub fn source_at<const N: usize, A, B>(v1: A, v2: B, v: &Vector<N>, kernel: &KernelSpec, rule: &QuadratureRule<N>) -> Result<f64>
where
    A: Fn(&Vector<N>) -> Result<f64>,
    B: Fn(&Vector<N>) -> Result<f64>,
{
    if kernel.is_zero() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    source_terms(v1, v2, v, kernel, rule, |t| {
        if t.weight != 0.0 {
            acc += t.weight * (t.gain - t.loss);
        }
    })?;
    Ok(acc)
}

/// The second-order source.
#[derive(Clone)]
pub enum SecondOrderSource<const N: usize> {
    /// `V₁`, `V₂` independent of `x`; `S = S(v)` is evaluated on demand.
    VelocityOnly {
        v1: BoundarySource<N>,
        v2: BoundarySource<N>,
        kernel: KernelSpec,
        rule: QuadratureRule<N>,
        /// Velocity lattice of the solver whose extension policy is applied
        /// to `V₁`, `V₂`; `None` evaluates the closed forms everywhere.
        lattice: Option<(crate::solver::Lattice<N>, ExtensionPolicy)>,
    },
    /// `S(x, v)` on a grid.
    Field(Arc<PhaseField<N>>),
}

impl<const N: usize> SecondOrderSource<N> {
    pub fn is_velocity_only(&self) -> bool {
        matches!(self, SecondOrderSource::VelocityOnly { .. })
    }

    /// `S(v)` for the velocity-only form.
    pub fn velocity_value(&self, v: &Vector<N>) -> Result<f64> {
        match self {
            SecondOrderSource::VelocityOnly { v1, v2, kernel, rule, lattice } => {
                let zero = Vector::<N>::zeros();
                let ext = |g: &BoundarySource<N>, w: &Vector<N>| -> f64 {
                    match lattice {
                        Some((lat, policy)) if !lat.contains(w) => match policy {
                            ExtensionPolicy::Zero => 0.0,
                            ExtensionPolicy::Clamp => g.eval(&zero, &lat.clamp(w)),
                            ExtensionPolicy::Analytic => g.eval(&zero, w),
                        },
                        _ => g.eval(&zero, w),
                    }
                };
                source_at(|w: &Vector<N>| Ok(ext(v1, w)), |w: &Vector<N>| Ok(ext(v2, w)), v, kernel, rule)
            }
            SecondOrderSource::Field(_) => Err(Error::Precondition("source depends on x".into())),
        }
    }

    pub fn value(&self, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
        match self {
            SecondOrderSource::Field(f) => f.eval(x, v),
            _ => self.velocity_value(v),
        }
    }
}

/// Velocity-only `S` with closed-form `V₁ = g₁`, `V₂ = g₂`.
pub fn second_order_source<const N: usize>(
    g1: &BoundarySource<N>,
    g2: &BoundarySource<N>,
    kernel: &KernelSpec,
    rule: &QuadratureRule<N>,
) -> Result<SecondOrderSource<N>> {
    if !g1.is_velocity_only() || !g2.is_velocity_only() {
        return Err(Error::Precondition("velocity-only source needs x-independent data".into()));
    }
    Ok(SecondOrderSource::VelocityOnly { v1: g1.clone(), v2: g2.clone(), kernel: kernel.clone(), rule: rule.clone(), lattice: None })
}

/// Velocity-only `S` evaluated exactly as the given solver discretises the
/// collision operator (same rule, same extension policy).
pub fn second_order_source_for<const N: usize>(
    solver: &Solver<N>,
    g1: &BoundarySource<N>,
    g2: &BoundarySource<N>,
) -> Result<SecondOrderSource<N>> {
    let mut s = second_order_source(g1, g2, &solver.kernel, &solver.rule)?;
    if let SecondOrderSource::VelocityOnly { lattice, .. } = &mut s {
        *lattice = Some((solver.grid.velocity.clone(), solver.config.extension));
    }
    Ok(s)
}

/// `S(xᵢ, vⱼ)` at every node from gridded `V₁`, `V₂`. Out-of-lattice
/// evaluations follow each field's extension policy; their number is
/// returned alongside.
pub fn second_order_source_field<const N: usize>(
    v1: &PhaseField<N>,
    v2: &PhaseField<N>,
    kernel: &KernelSpec,
    rule: &QuadratureRule<N>,
) -> Result<(SecondOrderSource<N>, usize)> {
    let grid = v1.grid.clone();
    let before = v1.out_of_range_count() + v2.out_of_range_count();
    let nv = grid.nv();
    let values = (0..grid.nx())
        .into_par_iter()
        .map(|i| {
            let x = grid.x_base[i];
            (0..nv)
                .map(|j| source_at(|w: &Vector<N>| v1.eval(&x, w), |w: &Vector<N>| v2.eval(&x, w), &grid.v_nodes[j], kernel, rule))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?
        .concat();
    let count = v1.out_of_range_count() + v2.out_of_range_count() - before;
    if count > 0 {
        log::warn!("second-order source: {count} velocity evaluations outside the lattice");
    }
    let field = PhaseField::new(grid, values, v1.policy)?;
    Ok((SecondOrderSource::Field(Arc::new(field)), count))
}

/// One row of a `W` table.
#[derive(Debug, Clone, Copy)]
pub struct WRow<const N: usize> {
    pub point: PhasePoint<N>,
    pub tau: f64,
    pub w: f64,
}

/// `W(x, v) = ∫₀^{τ₋} S(x − s·v, v) ds`. For velocity-only `S` this is
/// `τ₋(x,v)·S(v)` with no quadrature.
pub fn w_quadrature<const N: usize>(
    s: &SecondOrderSource<N>,
    samples: &[PhasePoint<N>],
    domain: &crate::geometry::Domain<N>,
    order: usize,
) -> Result<Vec<WRow<N>>> {
    samples
        .par_iter()
        .map(|p| {
            let tau = tau_minus(domain, &p.x, &p.v)?;
            let w = if s.is_velocity_only() { tau * s.velocity_value(&p.v)? } else { characteristic_integral(s, domain, p, order)? };
            Ok(WRow { point: *p, tau, w })
        })
        .collect()
}

/// `W` by Gauss–Legendre along the backward characteristic, for any source.
pub fn w_characteristic<const N: usize>(
    s: &SecondOrderSource<N>,
    samples: &[PhasePoint<N>],
    domain: &crate::geometry::Domain<N>,
    order: usize,
) -> Result<Vec<WRow<N>>> {
    samples
        .iter()
        .map(|p| {
            let tau = tau_minus(domain, &p.x, &p.v)?;
            Ok(WRow { point: *p, tau, w: characteristic_integral(s, domain, p, order)? })
        })
        .collect()
}

fn characteristic_integral<const N: usize>(
    s: &SecondOrderSource<N>,
    domain: &crate::geometry::Domain<N>,
    p: &PhasePoint<N>,
    order: usize,
) -> Result<f64> {
    let nodes = characteristic_nodes(domain, p, order)?;
    let mut acc = 0.0;
    for (t, wt) in nodes {
        let y = domain.project(&(p.x - p.v * t));
        acc += wt * s.value(&y, &p.v)?;
    }
    Ok(acc)
}

/// One row of the finite-difference convergence table.
#[derive(Debug, Clone, Copy)]
pub struct FdRow<const N: usize> {
    pub pair: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub sample: usize,
    pub point: PhasePoint<N>,
    pub w_fd: f64,
    pub w_quad: f64,
    pub abs_err: f64,
}

/// Error budget of one ε-pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub eps1: f64,
    pub eps2: f64,
    pub max_abs_err: f64,
    /// Trace extrapolation residual propagated through the quotient.
    pub trace_err: f64,
    /// `max τ₋|S_rule − S_refined|`: discretisation error of the direct route.
    pub quadrature_err: f64,
    /// Change of the error to the next smaller pair, a proxy for the
    /// linearization remainder (`NaN` for the last pair).
    pub remainder_err: f64,
}

#[derive(Debug, Clone)]
pub struct FdStudy<const N: usize> {
    pub rows: Vec<FdRow<N>>,
    pub pairs: Vec<PairSummary>,
}

impl<const N: usize> FdStudy<N> {
    /// True when the largest error decreases strictly along the sequence.
    pub fn strictly_decreasing(&self) -> bool {
        self.pairs.windows(2).all(|w| w[1].max_abs_err < w[0].max_abs_err)
    }
}

/// `(ε₁ε₂)⁻¹(𝒜(ε₁g₁ + ε₂g₂) − 𝒜(ε₂g₂) − 𝒜(ε₁g₁))` at outgoing samples for
/// every ε-pair, compared with `τ₋·S(v)` computed with the solver's own
/// collision discretisation. `refined` is a finer rule used only to
/// estimate the quadrature error of that direct route.
pub fn w_finite_difference<const N: usize>(
    solver: &Solver<N>,
    g1: &BoundarySource<N>,
    g2: &BoundarySource<N>,
    cfg: &LinearizationConfig,
    samples: &[PhasePoint<N>],
    refined: &QuadratureRule<N>,
) -> Result<FdStudy<N>> {
    cfg.validate()?;
    let domain = &solver.grid.domain;
    let r_v = solver.grid.spec.velocity_radius;
    let (n1, n2) = (g1.sup_norm(domain, r_v), g2.sup_norm(domain, r_v));
    for &(e1, e2) in &cfg.eps {
        if e1 * n1 + e2 * n2 > solver.config.smallness {
            return Err(Error::Precondition(format!(
                "amplitude ε₁‖g₁‖ + ε₂‖g₂‖ = {:.3e} exceeds the smallness threshold",
                e1 * n1 + e2 * n2
            )));
        }
    }
    let direct = second_order_source_for(solver, g1, g2)?;
    let quad = w_quadrature(&direct, samples, domain, 1)?;
    let fine = second_order_source(g1, g2, &solver.kernel, refined)?;
    let fine_rows = w_quadrature(&fine, samples, domain, 1)?;
    let quadrature_err = quad.iter().zip(&fine_rows).fold(0.0f64, |m, (a, b)| m.max((a.w - b.w).abs()));

    let trace = |g: &BoundarySource<N>, label: &str| -> Result<Vec<TraceRow<N>>> {
        let sol = solver.solve(g).map_err(|e| match e {
            Error::NonConvergence { reason, report } => Error::NonConvergence { reason: format!("{reason} (amplitude {label})"), report },
            other => Error::Precondition(format!("solve failed at amplitude {label}: {other}")),
        })?;
        solution_trace(&sol, samples)
    };

    let mut rows = Vec::new();
    let mut pairs = Vec::new();
    for (pi, &(e1, e2)) in cfg.eps.iter().enumerate() {
        let both = BoundarySource::combine(e1, g1, e2, g2);
        let a12 = trace(&both, &format!("ε₁g₁+ε₂g₂ with ε=({e1},{e2})"))?;
        let a2 = trace(&g2.scaled(e2), &format!("ε₂g₂ with ε₂={e2}"))?;
        let a1 = trace(&g1.scaled(e1), &format!("ε₁g₁ with ε₁={e1}"))?;
        let mut max_err = 0.0f64;
        let mut trace_err = 0.0f64;
        for (k, p) in samples.iter().enumerate() {
            let w_fd = (a12[k].value - a2[k].value - a1[k].value) / (e1 * e2);
            let abs_err = (w_fd - quad[k].w).abs();
            max_err = max_err.max(abs_err);
            let tr = (a12[k].extrapolation_residual + a2[k].extrapolation_residual + a1[k].extrapolation_residual) / (e1 * e2);
            trace_err = trace_err.max(tr);
            rows.push(FdRow { pair: pi, eps1: e1, eps2: e2, sample: k, point: *p, w_fd, w_quad: quad[k].w, abs_err });
        }
        pairs.push(PairSummary { eps1: e1, eps2: e2, max_abs_err: max_err, trace_err, quadrature_err, remainder_err: f64::NAN });
    }
    for i in 0..pairs.len().saturating_sub(1) {
        pairs[i].remainder_err = (pairs[i].max_abs_err - pairs[i + 1].max_abs_err).abs();
    }
    Ok(FdStudy { rows, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::RuleOrders;
    use crate::geometry::Domain;
    use approx::assert_relative_eq;

    type V2 = Vector<2>;

    fn rule() -> QuadratureRule<2> {
        QuadratureRule::new(RuleOrders { sphere: 12, radial: 6, angular: 12 }, 4.0).unwrap()
    }

    fn k() -> KernelSpec {
        KernelSpec::OmegaIndependentPoly { coefficients: vec![1.0, 0.0, 1.0] }
    }

    #[test]
    fn vanishes_on_collision_invariants() {
        let v = V2::new(0.4, -0.9);
        let c = |_: &V2| Ok(0.3);
        assert_eq!(source_at(c, c, &v, &k(), &rule()).unwrap(), 0.0);
        let m = |w: &V2| Ok((-w.norm_squared()).exp());
        let mut worst: f64 = 0.0;
        source_terms(m, m, &v, &k(), &rule(), |t| worst = worst.max((t.gain - t.loss).abs())).unwrap();
        assert!(worst < 1e-15);
    }

    #[test]
    fn symmetric_in_the_two_fields() {
        let a = BoundarySource::<2>::VelocityBump { amplitude: 1.0, center: V2::new(0.5, 0.0), width: 1.5 };
        let b = BoundarySource::<2>::maxwellian(0.7);
        let s12 = second_order_source(&a, &b, &k(), &rule()).unwrap();
        let s21 = second_order_source(&b, &a, &k(), &rule()).unwrap();
        for v in [V2::new(0.1, 0.2), V2::new(-1.0, 2.0)] {
            assert_eq!(s12.velocity_value(&v).unwrap(), s21.velocity_value(&v).unwrap());
        }
    }

    #[test]
    fn shortcut_matches_characteristic_route() {
        let a = BoundarySource::<2>::VelocityBump { amplitude: 1.0, center: V2::new(0.5, 0.0), width: 1.5 };
        let b = BoundarySource::<2>::Constant(1.0);
        let s = second_order_source(&a, &b, &k(), &rule()).unwrap();
        let d = Domain::<2>::unit_ball();
        let samples = vec![PhasePoint::new(V2::new(1.0, 0.0), V2::new(1.0, 0.3)), PhasePoint::new(V2::new(0.0, -1.0), V2::new(0.2, -1.0))];
        let fast = w_quadrature(&s, &samples, &d, 1).unwrap();
        let slow = w_characteristic(&s, &samples, &d, 3).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert_relative_eq!(a.w, b.w, epsilon = 1e-12 * a.w.abs().max(1.0));
        }
        let unit = SecondOrderSource::VelocityOnly {
            v1: BoundarySource::Constant(1.0),
            v2: BoundarySource::Constant(1.0),
            kernel: KernelSpec::zero(),
            rule: rule(),
            lattice: None,
        };
        assert!(w_quadrature(&unit, &samples, &d, 1).unwrap().iter().all(|r| r.w == 0.0));
    }
}
