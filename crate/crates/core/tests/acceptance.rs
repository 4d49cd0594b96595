//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL` line with the measured numbers before asserting.

use std::time::{Duration, Instant};

use boltzlab::collision::{AngularProfile, KernelSpec, QuadratureRule, RuleOrders};
use boltzlab::geometry::Domain;
use boltzlab::linearize::{w_finite_difference, LinearizationConfig};
use boltzlab::reconstruct::{
    closed_form_s, eta_study, exponent_oracle, mollified_s, monotonicity_certificate, recover_omega_independent_b, ExponentMode,
    MollifierOrders, Probe, ProbeSample,
};
use boltzlab::solver::{outgoing_samples, BoundarySource, ExtensionPolicy, GridSpec, Solver, SolverConfig};
use boltzlab::suites::{all_passed, collision_invariant_suite, kinematics_suite, p_function_suite, probe_geometry_suite, Check};
use boltzlab::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type V2 = Vector<2>;
type V3 = Vector<3>;

fn report(id: u32, passed: bool, detail: impl AsRef<str>) {
    println!("criterion {id}: {} {}", if passed { "PASS" } else { "FAIL" }, detail.as_ref());
}

fn failed(checks: &[Check]) -> String {
    checks.iter().filter(|c| !c.passed).map(|c| format!("{}={:.3e}>{:.1e}", c.name, c.value, c.threshold)).collect::<Vec<_>>().join(", ")
}

/// Constant kernel small enough for the admissibility bound on the unit
/// disk (`M ≈ 6.3` at the default grid).
fn weak() -> KernelSpec {
    KernelSpec::Constant { value: 0.01 }
}

fn quadratic() -> KernelSpec {
    KernelSpec::OmegaIndependentPoly { coefficients: vec![1.0, 0.0, 1.0] }
}

#[test]
fn criterion_01_collision_kinematics() {
    let start = Instant::now();
    let mut checks = kinematics_suite::<2>(100_000, 1, 1e-12);
    checks.extend(kinematics_suite::<3>(100_000, 2, 1e-12));
    let elapsed = start.elapsed();
    let ok = all_passed(&checks) && elapsed < Duration::from_secs(5);
    let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
    report(1, ok, format!("worst {worst:.2e} over 1e5 samples per dimension in {elapsed:.2?} {}", failed(&checks)));
    assert!(ok);
}

#[test]
fn criterion_02_probe_geometry() {
    let start = Instant::now();
    let mut checks = probe_geometry_suite::<2>(10_000, 3, 1e-12).unwrap();
    checks.extend(probe_geometry_suite::<3>(10_000, 4, 1e-12).unwrap());
    let elapsed = start.elapsed();
    let ok = all_passed(&checks) && elapsed < Duration::from_secs(5);
    let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
    report(2, ok, format!("worst {worst:.2e} over 1e4 triples per dimension in {elapsed:.2?} {}", failed(&checks)));
    assert!(ok);
}

#[test]
fn criterion_03_collision_invariants() {
    let grid = GridSpec { velocity: 32, velocity_radius: 4.0, ..GridSpec::default() };
    let orders = RuleOrders { sphere: 64, radial: 8, angular: 16 };
    let mut checks = collision_invariant_suite::<2>(&quadratic(), &grid, orders, 1e-12).unwrap();
    let hard = KernelSpec::HardPotentialLike { scale: 1.0, gamma: 1.0, angular: AngularProfile::One };
    checks.extend(collision_invariant_suite::<2>(&hard, &grid, orders, 1e-12).unwrap());
    let ok = all_passed(&checks);
    let summary: Vec<String> = checks.iter().map(|c| format!("{}={:.2e}", c.name, c.value)).collect();
    report(3, ok, summary.join(", "));
    assert!(ok);
}

#[test]
fn criterion_04_picard_contraction() {
    let start = Instant::now();
    let domain = Domain::<2>::unit_ball();
    let kernel = weak();
    let solver = Solver::new(&domain, &kernel, &SolverConfig::default()).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for norm in [1e-2, 2e-2] {
        let g = BoundarySource::LinearInX { amplitude: norm / 2.0, slope: V2::new(1.0, 0.0), rate: 0.5 };
        let sol = solver.solve(&g).unwrap();
        let r = &sol.report;
        let ratio = r.ratio.unwrap_or(0.0);
        ok &= r.converged && ratio < 0.5 && r.iterations <= 15;
        lines.push(format!("‖g‖={:.1e}: {} iterations, ratio {ratio:.2e}, M={:.3}", r.g_norm, r.iterations, r.admissibility));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    report(4, ok, format!("{} in {elapsed:.2?}", lines.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_05_exact_solutions() {
    let domain = Domain::<2>::unit_ball();
    let kernel = weak();
    let cfg = SolverConfig { extension: ExtensionPolicy::Analytic, residual_samples: 0, ..SolverConfig::default() };
    let solver = Solver::new(&domain, &kernel, &cfg).unwrap();
    let c = 0.02;
    let sol = solver.solve(&BoundarySource::Constant(c)).unwrap();
    let const_err = sol.node_values().iter().fold(0.0f64, |m, f| m.max((f - c).abs()));

    let a = 0.02;
    let sol = solver.solve(&BoundarySource::maxwellian(a)).unwrap();
    let correction = sol.ghat.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let grid = &solver.grid;
    let nv = grid.nv();
    let mut max_err = 0.0f64;
    for (n, f) in sol.node_values().iter().enumerate() {
        if grid.x_inside[n / nv] && grid.v_active[n % nv] {
            max_err = max_err.max((f - a * (-grid.v_nodes[n % nv].norm_squared()).exp()).abs());
        }
    }
    let ok = const_err <= 1e-12 && max_err < 1e-6;
    report(5, ok, format!("constant inflow sup error {const_err:.2e}, Maxwellian sup error {max_err:.2e} (max |Ĝ| {correction:.2e})"));
    assert!(ok);
}

#[test]
fn criterion_06_linearization_cross_check() {
    let start = Instant::now();
    let domain = Domain::<2>::unit_ball();
    let kernel = weak();
    let solver = Solver::new(&domain, &kernel, &SolverConfig { residual_samples: 0, ..SolverConfig::default() }).unwrap();
    let g1 = BoundarySource::VelocityBump { amplitude: 1.0, center: V2::new(1.0, 0.5), width: 1.5 };
    let g2 = BoundarySource::VelocityBump { amplitude: 1.0, center: V2::new(-0.5, -1.0), width: 1.5 };
    let samples = outgoing_samples(&solver.grid, 20, 7);
    assert_eq!(samples.len(), 20);
    let refined = QuadratureRule::new(RuleOrders { sphere: 24, radial: 12, angular: 24 }, solver.grid.spec.velocity_radius).unwrap();
    let study = w_finite_difference(&solver, &g1, &g2, &LinearizationConfig::default(), &samples, &refined).unwrap();
    let elapsed = start.elapsed();
    let last = study.pairs.last().unwrap();
    let ok = study.strictly_decreasing() && last.max_abs_err < 10.0 * last.quadrature_err && elapsed < Duration::from_secs(600);
    let errs: Vec<String> = study.pairs.iter().map(|p| format!("{:.1e}→{:.3e}", p.eps1, p.max_abs_err)).collect();
    report(6, ok, format!("errors {}, quadrature estimate {:.3e}, in {elapsed:.2?}", errs.join(", "), last.quadrature_err));
    assert!(ok);
}

#[test]
fn criterion_07_off_manifold_vanishing() {
    let eta = 0.1;
    let orders = MollifierOrders::for_dim::<2>();
    let kernel = KernelSpec::Constant { value: 1.0 };
    let (v0, u0) = (V2::new(-1.0, 0.0), V2::new(1.0, 0.0));
    let on = mollified_s(&Probe::new(V2::new(0.6, 0.8), v0, u0, eta).unwrap(), &kernel, &orders).unwrap();
    let scale = on.s_eta.abs();
    let mut worst = 0.0f64;
    let mut exact_loss = on.terms[2].to_bits() == 0 && on.terms[3].to_bits() == 0;
    let mut count = 0;
    // radial offsets from the unit circle through v₀, u₀, every margin ≥ 5η
    for k in 0..12 {
        let phi = 0.3 + 0.5 * k as f64;
        for r in [0.5, 1.5, 1.8, 2.5] {
            let v_star = V2::new(r * phi.cos(), r * phi.sin());
            let probe = Probe::new(v_star, v0, u0, eta).unwrap();
            if probe.manifold_distance() < 5.0 * eta || probe.separation() <= 2.0 * eta {
                continue;
            }
            let res = mollified_s(&probe, &kernel, &orders).unwrap();
            exact_loss &= res.terms[2].to_bits() == 0 && res.terms[3].to_bits() == 0;
            worst = worst.max(res.s_eta.abs());
            count += 1;
        }
    }
    let ok = exact_loss && count > 0 && worst < 1e-3 * scale;
    report(7, ok, format!("loss terms bitwise zero: {exact_loss}; max |S_η| {worst:.2e} over {count} probes vs on-manifold {scale:.3e}"));
    assert!(ok);
}

fn oracle_probes_2d() -> Vec<(V2, V2, V2)> {
    vec![
        (V2::new(1.0, 0.0), V2::new(0.0, 1.0), V2::new(1.0, 0.0)),
        (V2::new(1.5, -0.3), V2::new(-1.0, 0.8), V2::new(0.8, 0.6)),
        (V2::new(0.2, 1.1), V2::new(-1.3, -0.9), V2::new(7.0, 1.0).normalize()),
        (V2::new(-0.7, 0.4), V2::new(1.6, 0.1), V2::new(1.0, 1.0).normalize()),
        (V2::new(0.5, -1.2), V2::new(-0.4, 1.4), V2::new(2.0, -1.0).normalize()),
    ]
}

/// Scored against the two candidate conventions only. The surface-density
/// form is printed next to them as a diagnostic and does not count.
#[test]
fn criterion_08_exponent_oracle() {
    let kernel = KernelSpec::Constant { value: 1.0 };
    let candidates = [ExponentMode::TheoremMinus2, ExponentMode::PropositionMinusN];
    let r2 = exponent_oracle(&kernel, &oracle_probes_2d(), 0.4, &MollifierOrders::for_dim::<2>(), &candidates, 0.05).unwrap();
    let spot = [(V3::new(1.5, -0.3, 0.2), V3::new(-1.0, 0.8, 0.4), V3::new(0.8, 0.6, 0.3).normalize())];
    let r3 = exponent_oracle(&kernel, &spot, 0.4, &MollifierOrders::for_dim::<3>(), &candidates, 0.05).unwrap();

    for (i, row) in r2.rows.iter().enumerate() {
        let (a, b, t) = oracle_probes_2d()[i];
        let surface = closed_form_s(&a, &b, &t, &kernel, ExponentMode::SurfaceDensity).unwrap();
        println!(
            "  n=2 probe {i}: extrapolated {:.6} | theorem_minus2 {:.4} | proposition_minus_n {:.4} | surface_density {surface:.6}",
            row.study.normalized.limit, row.closed[0], row.closed[1]
        );
    }
    let (a, b, t) = spot[0];
    let surface = closed_form_s(&a, &b, &t, &kernel, ExponentMode::SurfaceDensity).unwrap();
    let row = &r3.rows[0];
    println!(
        "  n=3 spot: extrapolated {:.6} | theorem_minus2 {:.4} | proposition_minus_n {:.4} | surface_density {surface:.6}",
        row.study.normalized.limit, row.closed[0], row.closed[1]
    );

    let ok = r2.winner.is_some() && r2.winner == r3.winner;
    let name = |w: Option<ExponentMode>| w.map_or("none", |m| m.name());
    report(8, ok, format!("winner n=2: {}, n=3: {}", name(r2.winner), name(r3.winner)));
    assert!(ok, "no candidate exponent convention matches the extrapolated probe values");
}

#[test]
fn criterion_09_omega_independent_recovery() {
    let start = Instant::now();
    let kernel = quadratic();
    let orders = MollifierOrders::for_dim::<2>();
    let eta = 0.4;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut samples = Vec::new();
    while samples.len() < 20 {
        let a = V2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let b = V2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let theta = V2::new(phi.cos(), phi.sin());
        let d = a - b;
        let alpha = d.dot(&theta).abs();
        let beta = (d - theta * d.dot(&theta)).norm();
        if alpha < 0.5 || beta < 0.5 {
            continue;
        }
        let probe = Probe::from_abtheta(&a, &b, &theta, eta).unwrap();
        if probe.separation() <= 2.5 * eta {
            continue;
        }
        let study = eta_study(&probe, &kernel, 3, &orders).unwrap();
        samples.push(ProbeSample { a, b, theta, value: study.normalized.limit, uncertainty: study.normalized.uncertainty });
    }
    let recovered = recover_omega_independent_b(&samples, ExponentMode::SurfaceDensity).unwrap();
    let mut worst = 0.0f64;
    let mut worst_unc = 0.0f64;
    for r in &recovered {
        let truth = 1.0 + (r.a - r.b).norm_squared();
        worst = worst.max(((r.estimate - truth) / truth).abs());
        worst_unc = worst_unc.max(r.residual / truth);
    }
    let elapsed = start.elapsed();
    let ok = worst < 0.1 && elapsed < Duration::from_secs(1800);
    report(9, ok, format!("max relative error {worst:.2e}, max extrapolation uncertainty {worst_unc:.2e}, 20 probes in {elapsed:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_10_monotonicity() {
    let mut checks = p_function_suite::<2>(20_000, 10, 1e-10);
    checks.extend(p_function_suite::<3>(20_000, 11, 1e-10));
    let suite_ok = all_passed(&checks);

    let rule = QuadratureRule::<2>::new(RuleOrders { sphere: 32, radial: 8, angular: 16 }, 3.0).unwrap();
    let b2 = KernelSpec::Constant { value: 1.0 };
    let bump = KernelSpec::HardPotentialLike { scale: 0.5, gamma: 1.0, angular: AngularProfile::AngularBump { center: 0.5, width: 0.3 } };
    let b1 = KernelSpec::Sum { terms: vec![b2.clone(), bump] };
    let v0s = [V2::new(0.0, 0.0), V2::new(0.5, -0.3), V2::new(-1.0, 0.7)];
    let separated = monotonicity_certificate(&b1, &b2, &rule, &v0s, 2000, 12).unwrap();
    let same = monotonicity_certificate(&b2, &b2, &rule, &v0s, 2000, 13).unwrap();
    let all_zero = same.rows.iter().all(|r| r.integral == 0.0);
    let ok = suite_ok && !separated.indistinguishable() && same.indistinguishable() && all_zero;
    report(
        10,
        ok,
        format!(
            "P suite {}; B₁ > B₂: {}; B₁ = B₂: {} {}",
            if suite_ok { "ok" } else { "failed" },
            separated.verdict(),
            same.verdict(),
            failed(&checks)
        ),
    );
    assert!(ok);
}
