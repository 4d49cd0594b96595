//! The five pipeline stages. Each writes CSV tables below the run directory
//! and returns the paths it wrote.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use boltzlab::collision::QuadratureRule;
use boltzlab::geometry::{tau_minus, Domain};
use boltzlab::linearize::{w_finite_difference, LinearizationConfig};
use boltzlab::reconstruct::{closed_form_all, eta_study, recover_omega_independent_b, ExponentMode, MollifierOrders, Probe, ProbeSample};
use boltzlab::solver::io::write_field_csv;
use boltzlab::solver::{free_transport_at, outgoing_samples, solution_trace, Solver, SolverConfig};
use boltzlab::suites::{collision_invariant_suite, geometry_suite, kinematics_suite, p_function_suite, probe_geometry_suite, Check};
use boltzlab::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, ProbeGenerator, SourceRoute};
use crate::manifest::relative;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    VerifyGeometry,
    VerifyCollision,
    Forward,
    Linearize,
    Reconstruct,
}

impl Stage {
    pub const ORDER: [Stage; 5] = [Stage::VerifyGeometry, Stage::VerifyCollision, Stage::Forward, Stage::Linearize, Stage::Reconstruct];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::VerifyGeometry => "verify-geometry",
            Stage::VerifyCollision => "verify-collision",
            Stage::Forward => "forward",
            Stage::Linearize => "linearize",
            Stage::Reconstruct => "reconstruct",
        }
    }

    pub fn enabled(&self, cfg: &ExperimentConfig) -> bool {
        match self {
            Stage::VerifyGeometry => cfg.verify.geometry,
            Stage::VerifyCollision => cfg.verify.collision,
            Stage::Forward => cfg.forward.is_some(),
            Stage::Linearize => cfg.linearize.is_some(),
            Stage::Reconstruct => cfg.reconstruct.is_some(),
        }
    }
}

pub const FD_TABLE: &str = "linearize/fd.csv";

/// Runs one stage for the configured dimension.
pub fn run_stage(cfg: &ExperimentConfig, dir: &Path, stage: Stage) -> Result<Vec<String>> {
    match cfg.dimension {
        2 => Runner::<2> { cfg, dir }.run(stage),
        3 => Runner::<3> { cfg, dir }.run(stage),
        d => bail!("dimension {d} is not supported"),
    }
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn coords<const N: usize>(prefix: &str) -> Vec<String> {
    (0..N).map(|k| format!("{prefix}{k}")).collect()
}

fn push_vec<const N: usize>(row: &mut Vec<String>, v: &Vector<N>) {
    row.extend(v.iter().map(|x| num(*x)));
}

fn vector<const N: usize>(c: &[f64]) -> Vector<N> {
    Vector::<N>::from_column_slice(c)
}

struct Runner<'a, const N: usize> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
}

impl<const N: usize> Runner<'_, N> {
    fn run(&self, stage: Stage) -> Result<Vec<String>> {
        match stage {
            Stage::VerifyGeometry => self.verify_geometry(),
            Stage::VerifyCollision => self.verify_collision(),
            Stage::Forward => self.forward(),
            Stage::Linearize => self.linearize(),
            Stage::Reconstruct => self.reconstruct(),
        }
    }

    fn write(&self, rel: &str, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<String> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(relative(self.dir, &path))
    }

    fn checks(&self, rel: &str, groups: Vec<(&str, Vec<Check>)>) -> Result<Vec<String>> {
        let header = ["suite", "name", "passed", "value", "threshold", "detail"].map(String::from).to_vec();
        let mut rows = Vec::new();
        let mut failed = Vec::new();
        for (suite, checks) in groups {
            for c in checks {
                if !c.passed {
                    failed.push(format!("{suite}/{} = {:.3e} > {:.1e}", c.name, c.value, c.threshold));
                }
                rows.push(vec![suite.into(), c.name, c.passed.to_string(), num(c.value), num(c.threshold), c.detail]);
            }
        }
        let file = self.write(rel, header, rows)?;
        ensure!(failed.is_empty(), "failed checks: {}", failed.join("; "));
        Ok(vec![file])
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig { seed: self.cfg.seed, ..self.cfg.solver.clone() }
    }

    fn domain(&self) -> Result<Domain<N>> {
        Ok(self.cfg.domain.build::<N>()?)
    }

    fn verify_geometry(&self) -> Result<Vec<String>> {
        let (n, seed, tol) = (self.cfg.verify.samples, self.cfg.seed, self.cfg.verify.tol);
        let groups = vec![
            ("kinematics", kinematics_suite::<N>(n, seed, tol)),
            ("probe_geometry", probe_geometry_suite::<N>(n, seed, tol)?),
            ("exit_times", geometry_suite::<N>(&self.domain()?, n, seed)?),
            ("p_function", p_function_suite::<N>(n, seed, 1e-10)),
        ];
        self.checks("verify/geometry.csv", groups)
    }

    fn verify_collision(&self) -> Result<Vec<String>> {
        let s = &self.cfg.solver;
        let checks = collision_invariant_suite::<N>(&self.cfg.kernel, &s.grid, s.rule, self.cfg.verify.tol)?;
        self.checks("verify/collision.csv", vec![("collision_invariants", checks)])
    }

    fn forward(&self) -> Result<Vec<String>> {
        let f = self.cfg.forward.as_ref().context("no [forward] table in the config")?;
        let domain = self.domain()?;
        let solver = Solver::new(&domain, &self.cfg.kernel, &self.solver_config())?;
        let g = f.source.build::<N>()?;
        let sol = solver.solve(&g)?;
        let mut files = Vec::new();

        let rows = sol.report.deltas.iter().enumerate().map(|(k, d)| vec![(k + 1).to_string(), num(*d)]).collect();
        files.push(self.write("forward/convergence.csv", vec!["iteration".into(), "delta".into()], rows)?);

        let samples = outgoing_samples(&solver.grid, f.samples, self.cfg.seed);
        let trace = solution_trace(&sol, &samples)?;
        let mut header = coords::<N>("x");
        header.extend(coords::<N>("v"));
        header.extend(["trace", "extrapolation_residual", "free_transport"].map(String::from));
        let mut rows = Vec::new();
        for t in &trace {
            let mut row = Vec::new();
            push_vec(&mut row, &t.point.x);
            push_vec(&mut row, &t.point.v);
            row.push(num(t.value));
            row.push(num(t.extrapolation_residual));
            row.push(num(free_transport_at(&g, &domain, &t.point.x, &t.point.v)?));
            rows.push(row);
        }
        files.push(self.write("forward/outgoing.csv", header, rows)?);

        let path = self.dir.join("forward/report.json");
        fs::write(&path, serde_json::to_string_pretty(&sol.report)? + "\n")?;
        files.push(relative(self.dir, &path));
        if f.write_field {
            let path = self.dir.join("forward/field.csv");
            write_field_csv(&sol.field()?, std::io::BufWriter::new(fs::File::create(&path)?))?;
            files.push(relative(self.dir, &path));
        }
        Ok(files)
    }

    fn linearize(&self) -> Result<Vec<String>> {
        let l = self.cfg.linearize.as_ref().context("no [linearize] table in the config")?;
        let domain = self.domain()?;
        let solver = Solver::new(&domain, &self.cfg.kernel, &self.solver_config())?;
        let (g1, g2) = (l.g1.build::<N>()?, l.g2.build::<N>()?);
        let samples = outgoing_samples(&solver.grid, l.samples, self.cfg.seed);
        ensure!(!samples.is_empty(), "no outgoing samples on this grid");
        let refined = QuadratureRule::new(l.refined, solver.grid.spec.velocity_radius)?;
        let eps = LinearizationConfig { eps: l.eps.iter().map(|e| (e[0], e[1])).collect() };
        let study = w_finite_difference(&solver, &g1, &g2, &eps, &samples, &refined)?;

        let mut header = ["pair", "eps1", "eps2", "sample"].map(String::from).to_vec();
        header.extend(coords::<N>("x"));
        header.extend(coords::<N>("v"));
        header.extend(["tau", "w_fd", "w_quad", "abs_err", "s_fd", "s_direct"].map(String::from));
        let mut rows = Vec::new();
        for r in &study.rows {
            let tau = tau_minus(&domain, &r.point.x, &r.point.v)?;
            let mut row = vec![r.pair.to_string(), num(r.eps1), num(r.eps2), r.sample.to_string()];
            push_vec(&mut row, &r.point.x);
            push_vec(&mut row, &r.point.v);
            row.extend([tau, r.w_fd, r.w_quad, r.abs_err, r.w_fd / tau, r.w_quad / tau].map(num));
            rows.push(row);
        }
        let mut files = vec![self.write(FD_TABLE, header, rows)?];

        let header = ["eps1", "eps2", "max_abs_err", "trace_err", "quadrature_err", "remainder_err"].map(String::from).to_vec();
        let rows = study
            .pairs
            .iter()
            .map(|p| [p.eps1, p.eps2, p.max_abs_err, p.trace_err, p.quadrature_err, p.remainder_err].map(num).to_vec())
            .collect();
        files.push(self.write("linearize/pairs.csv", header, rows)?);
        Ok(files)
    }

    fn probes(&self, generator: Option<&ProbeGenerator>, eta: f64) -> Result<Vec<(Vector<N>, Vector<N>, Vector<N>)>> {
        let r = self.cfg.reconstruct.as_ref().expect("checked by caller");
        let mut out: Vec<_> = r.probes.iter().map(|p| (vector::<N>(&p.a), vector::<N>(&p.b), vector::<N>(&p.theta).normalize())).collect();
        let Some(gen) = generator else { return Ok(out) };
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let h = gen.half_width;
        // the mollifier cap must stay clear of the bump centres
        let min_len = gen.min_length.max(2.5 * eta);
        let mut accepted = 0;
        for _ in 0..gen.count * 1000 {
            if accepted == gen.count {
                break;
            }
            let a = Vector::<N>::from_fn(|_, _| rng.gen_range(-h..h));
            let b = Vector::<N>::from_fn(|_, _| rng.gen_range(-h..h));
            let theta = Vector::<N>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            if theta.norm() < 0.1 {
                continue;
            }
            let theta = theta.normalize();
            let d = a - b;
            let alpha = d.dot(&theta).abs();
            let beta = (d - theta * d.dot(&theta)).norm();
            if alpha < min_len || beta < min_len || d.norm() < min_len {
                continue;
            }
            out.push((a, b, theta));
            accepted += 1;
        }
        ensure!(accepted == gen.count, "probe generator found only {accepted} of {} probes", gen.count);
        Ok(out)
    }

    fn reconstruct(&self) -> Result<Vec<String>> {
        let r = self.cfg.reconstruct.as_ref().context("no [reconstruct] table in the config")?;
        let fd_path = self.dir.join(FD_TABLE);
        if r.route == SourceRoute::FiniteDifference && !fd_path.exists() {
            bail!("route \"finite_difference\" needs the linearize output {} (missing); run the linearize stage first", fd_path.display());
        }
        let kernel = r.kernel.clone().unwrap_or_else(|| self.cfg.kernel.clone());
        let orders = r.orders.unwrap_or_else(MollifierOrders::for_dim::<N>);
        let triples = self.probes(r.generate.as_ref(), r.eta)?;

        let mut eta_rows = Vec::new();
        let mut probe_rows = Vec::new();
        for (k, (a, b, theta)) in triples.iter().enumerate() {
            let probe = Probe::from_abtheta(a, b, theta, r.eta).with_context(|| format!("probe {k}"))?;
            let study = eta_study(&probe, &kernel, r.levels, &orders).with_context(|| format!("probe {k}"))?;
            for (level, row) in study.rows.iter().enumerate() {
                let mut out = vec![k.to_string(), level.to_string(), num(row.probe.eta), num(row.s_eta)];
                out.extend(row.terms.map(num));
                out.extend([num(row.normalizer), num(row.s_normalized)]);
                eta_rows.push(out);
            }
            let closed = closed_form_all(a, b, theta, &kernel)?;
            let lim = study.normalized;
            let mut row = vec![k.to_string()];
            push_vec(&mut row, a);
            push_vec(&mut row, b);
            push_vec(&mut row, theta);
            let f = study.rows[0].factors;
            row.extend([f.alpha, f.beta, lim.limit, lim.uncertainty, lim.observed_order].map(num));
            row.extend(closed.map(num));
            row.extend(closed.map(|c| num(((lim.limit - c) / c).abs())));
            if kernel.is_omega_independent() {
                let sample = ProbeSample { a: *a, b: *b, theta: *theta, value: lim.limit, uncertainty: lim.uncertainty };
                let rec = recover_omega_independent_b(&[sample], r.mode)?[0];
                let truth = kernel.eval(a, b, theta);
                row.extend([rec.estimate, truth, ((rec.estimate - truth) / truth).abs()].map(num));
            } else {
                row.extend(["", "", ""].map(String::from));
            }
            probe_rows.push(row);
        }

        let mut header =
            ["probe", "level", "eta", "s_eta", "i1", "i2", "i3", "i4", "normalizer", "s_normalized"].map(String::from).to_vec();
        let mut files = vec![self.write("reconstruct/eta.csv", header, eta_rows)?];
        header = vec!["probe".into()];
        header.extend(coords::<N>("a"));
        header.extend(coords::<N>("b"));
        header.extend(coords::<N>("theta"));
        header.extend(["alpha", "beta", "limit", "uncertainty", "observed_order"].map(String::from));
        header.extend(ExponentMode::ALL.map(|m| m.name().to_string()));
        header.extend(ExponentMode::ALL.map(|m| format!("err_{}", m.name())));
        header.extend(["recovered", "kernel", "rel_err"].map(String::from));
        files.push(self.write("reconstruct/probes.csv", header, probe_rows)?);

        if fd_path.exists() {
            files.push(self.cross_check(&fd_path, r.route, r.cross_check)?);
        } else {
            log::info!("no linearize output; skipping the source cross-check");
        }
        Ok(files)
    }

    /// Point values of `S` from both routes at the first rows of the
    /// smallest ε-pair.
    fn cross_check(&self, fd_path: &Path, route: SourceRoute, count: usize) -> Result<String> {
        let mut reader = csv::Reader::from_path(fd_path)?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("{FD_TABLE} lacks column {name}"));
        let (pair, sample, s_fd, s_direct) = (col("pair")?, col("sample")?, col("s_fd")?, col("s_direct")?);
        let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
        let last = records.iter().filter_map(|r| r[pair].parse::<usize>().ok()).max().context("empty linearize table")?;
        let route_name = match route {
            SourceRoute::Direct => "direct",
            SourceRoute::FiniteDifference => "finite_difference",
        };
        let mut values = Vec::new();
        for rec in records.iter().filter(|r| r[pair].parse::<usize>().ok() == Some(last)).take(count) {
            let (fd, direct): (f64, f64) = (rec[s_fd].parse()?, rec[s_direct].parse()?);
            let (primary, check) = match route {
                SourceRoute::Direct => (direct, fd),
                SourceRoute::FiniteDifference => (fd, direct),
            };
            values.push((rec[sample].to_string(), primary, check));
        }
        // S vanishes at some velocities, so differences are relative to its sup
        let scale = values.iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.1.abs()));
        let rows = values
            .into_iter()
            .map(|(k, primary, check)| {
                let diff = (primary - check).abs();
                vec![k, route_name.to_string(), num(primary), num(check), num(diff), num(diff / scale)]
            })
            .collect();
        let header = ["sample", "route", "s_primary", "s_check", "abs_diff", "rel_diff"].map(String::from).to_vec();
        self.write("reconstruct/source_check.csv", header, rows)
    }
}
