use boltzlab::collision::{AngularProfile, KernelSpec, QuadratureRule, RuleOrders};
use boltzlab::geometry::{Domain, PhasePoint};
use boltzlab::linearize::{first_order_quotients, second_order_source, source_at, w_characteristic, w_quadrature, LinearizationConfig};
use boltzlab::reconstruct::p_integral;
use boltzlab::solver::{BoundarySource, GridSpec, Solver, SolverConfig};
use boltzlab::{Error, Vector};

type V2 = Vector<2>;
type V3 = Vector<3>;

fn kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::OmegaIndependentPoly { coefficients: vec![1.0, 0.0, 1.0] },
        KernelSpec::HardPotentialLike { scale: 0.7, gamma: 0.5, angular: AngularProfile::AngularBump { center: 0.4, width: 0.3 } },
    ]
}

/// With `V₁ = e^{|v−v₀|²}` and `V₂ = 1` the source at `v₀` is the integral
/// of `B·P` node for node.
fn gaussian_probe<const N: usize>(v0: Vector<N>, orders: RuleOrders) {
    let rule = QuadratureRule::<N>::new(orders, 2.0).unwrap();
    let v1 = move |w: &Vector<N>| Ok((w - v0).norm_squared().exp());
    let v2 = |_: &Vector<N>| Ok(1.0);
    for k in kernels() {
        let s = source_at(v1, v2, &v0, &k, &rule).unwrap();
        let p = p_integral(&k, &v0, &rule);
        assert!(p < 0.0);
        assert!((s - p).abs() <= 1e-10 * p.abs(), "{k:?}: S = {s}, ∫∫BP = {p}");
    }
}

#[test]
fn gaussian_probe_reproduces_p_integral() {
    gaussian_probe(V2::new(0.3, -0.4), RuleOrders { sphere: 24, radial: 8, angular: 16 });
    gaussian_probe(V3::new(0.2, 0.1, -0.5), RuleOrders { sphere: 6, radial: 5, angular: 6 });
}

#[test]
fn source_is_symmetric_in_the_data() {
    let rule = QuadratureRule::<2>::new(RuleOrders { sphere: 16, radial: 6, angular: 12 }, 3.0).unwrap();
    let g1 = BoundarySource::VelocityBump { amplitude: 1.0, center: V2::new(0.5, 0.2), width: 1.2 };
    let g2 = BoundarySource::Exponential { amplitude: 0.5, center: V2::new(-0.3, 0.4), rate: -1.0 };
    for k in kernels() {
        let a = second_order_source(&g1, &g2, &k, &rule).unwrap();
        let b = second_order_source(&g2, &g1, &k, &rule).unwrap();
        for v in [V2::new(0.1, 0.2), V2::new(-1.0, 0.7), V2::new(2.0, -1.5)] {
            assert_eq!(a.velocity_value(&v).unwrap(), b.velocity_value(&v).unwrap());
        }
    }
}

#[test]
fn w_routes_agree_for_velocity_only_data() {
    let rule = QuadratureRule::<2>::new(RuleOrders { sphere: 12, radial: 6, angular: 12 }, 3.0).unwrap();
    let g1 = BoundarySource::VelocityBump { amplitude: 1.0, center: V2::new(0.5, 0.2), width: 1.2 };
    let g2 = BoundarySource::maxwellian(1.0);
    let s = second_order_source(&g1, &g2, &KernelSpec::Constant { value: 1.0 }, &rule).unwrap();
    let domain = Domain::<2>::unit_ball();
    let samples: Vec<PhasePoint<2>> = (0..8)
        .map(|k| {
            let t = 0.7 * k as f64;
            let x = V2::new(t.cos(), t.sin());
            PhasePoint::new(x, x * 0.8 + V2::new(-x[1], x[0]) * 0.3)
        })
        .collect();
    let quad = w_quadrature(&s, &samples, &domain, 1).unwrap();
    let chars = w_characteristic(&s, &samples, &domain, 6).unwrap();
    for (q, c) in quad.iter().zip(&chars) {
        assert!(q.tau > 0.0);
        assert!((q.w - c.w).abs() <= 1e-12 * (1.0 + q.w.abs()));
    }
}

#[test]
fn first_order_quotient_shrinks_linearly() {
    let cfg = SolverConfig {
        grid: GridSpec { spatial: 9, velocity: 8, ..GridSpec::default() },
        rule: RuleOrders { sphere: 8, radial: 3, angular: 6 },
        residual_samples: 0,
        ..SolverConfig::default()
    };
    let solver = Solver::new(&Domain::<2>::unit_ball(), &KernelSpec::Constant { value: 0.01 }, &cfg).unwrap();
    let g = BoundarySource::LinearInX { amplitude: 1.0, slope: V2::new(0.5, 0.0), rate: 1.0 };
    let q = first_order_quotients(&solver, &g, &[1e-2, 5e-3, 2.5e-3]).unwrap();
    for w in q.windows(2) {
        let ratio = w[1].1 / w[0].1;
        assert!((ratio - 0.5).abs() < 0.05, "quotient ratio {ratio}");
    }
}

#[test]
fn bad_epsilon_sequences_are_rejected() {
    assert!(LinearizationConfig::default().validate().is_ok());
    assert!(matches!(LinearizationConfig { eps: vec![] }.validate(), Err(Error::Config(_))));
    assert!(matches!(LinearizationConfig { eps: vec![(1e-2, 0.0)] }.validate(), Err(Error::Config(_))));
    assert_eq!(LinearizationConfig::halving(1e-2, 3), LinearizationConfig::default());
}

#[test]
fn velocity_only_source_needs_velocity_only_data() {
    let rule = QuadratureRule::<2>::new(RuleOrders { sphere: 8, radial: 3, angular: 6 }, 3.0).unwrap();
    let g = BoundarySource::LinearInX { amplitude: 1.0, slope: V2::new(0.5, 0.0), rate: 1.0 };
    let k = KernelSpec::Constant { value: 1.0 };
    assert!(matches!(second_order_source(&g, &g, &k, &rule), Err(Error::Precondition(_))));
}
