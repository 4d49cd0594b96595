use boltzlab::collision::{KernelSpec, RuleOrders};
use boltzlab::geometry::Domain;
use boltzlab::solver::io::{read_field_cache, write_field_cache};
use boltzlab::solver::{
    apply_a, outgoing_samples, solution_trace, BoundarySource, ExtensionPolicy, GridSpec, PhaseFunction, Solver, SolverConfig,
};
use boltzlab::{Error, Vector};

type V2 = Vector<2>;

fn small() -> SolverConfig {
    SolverConfig {
        grid: GridSpec { spatial: 9, velocity: 8, ..GridSpec::default() },
        rule: RuleOrders { sphere: 8, radial: 3, angular: 6 },
        residual_samples: 50,
        ..SolverConfig::default()
    }
}

fn weak() -> KernelSpec {
    KernelSpec::Constant { value: 0.01 }
}

#[test]
fn inadmissible_kernel_is_rejected_up_front() {
    let err = Solver::new(&Domain::<2>::unit_ball(), &KernelSpec::Constant { value: 50.0 }, &small()).err().unwrap();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn large_data_is_rejected() {
    let solver = Solver::new(&Domain::<2>::unit_ball(), &weak(), &small()).unwrap();
    assert!(matches!(solver.solve(&BoundarySource::Constant(1.0)), Err(Error::Precondition(_))));
}

#[test]
fn solutions_are_deterministic_and_consistent() {
    let solver = Solver::new(&Domain::<2>::unit_ball(), &weak(), &small()).unwrap();
    let g = BoundarySource::LinearInX { amplitude: 0.01, slope: V2::new(0.5, -0.2), rate: 1.0 };
    let a = solver.solve(&g).unwrap();
    let b = solver.solve(&g).unwrap();
    assert_eq!(a.ghat, b.ghat);
    assert!(a.report.converged);
    let residual = a.report.residual.unwrap();
    assert!(residual <= 1e-3 * a.report.residual_scale, "residual {residual}");

    let samples = outgoing_samples(&solver.grid, 10, 3);
    assert!(!samples.is_empty());
    let via_solution = solution_trace(&a, &samples).unwrap();
    let via_map = apply_a(&solver, &g, &samples).unwrap();
    for (s, m) in via_solution.iter().zip(&via_map) {
        assert_eq!(s.value, m.value);
        // the trace extrapolates to the boundary; the direct value is exact there
        let direct = a.value(&s.point.x, &s.point.v).unwrap();
        assert!((s.value - direct).abs() <= 2.0 * s.extrapolation_residual + 1e-14);
    }
}

#[test]
fn field_cache_round_trips() {
    let solver = Solver::new(&Domain::<2>::unit_ball(), &weak(), &small()).unwrap();
    let sol = solver.solve(&BoundarySource::maxwellian(0.01)).unwrap();
    let field = sol.field().unwrap();
    let mut bytes = Vec::new();
    write_field_cache(&field, &mut bytes).unwrap();
    let back = read_field_cache(solver.grid.clone(), ExtensionPolicy::Zero, bytes.as_slice()).unwrap();
    assert_eq!(back.values, field.values);
    assert!(read_field_cache(solver.grid.clone(), ExtensionPolicy::Zero, &b"nope"[..]).is_err());
}
