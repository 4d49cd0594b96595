//! Picard iteration `Ĝ ↦ 𝓛⁻¹ Q(F₀ + Ĝ, F₀ + Ĝ)` for small inflow data.
//!
//! `F₀` is the free transport of `g`. When `g` depends on `v` only, `F₀`
//! is evaluated in closed form at every collision velocity, so collision
//! invariants of `g` are preserved to rounding; otherwise `F₀` is carried
//! on the grid together with `Ĝ`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{PhaseField, PhaseFunction};
use super::grid::{ExtensionPolicy, GridSpec, PhaseGrid};
use super::source::BoundarySource;
use super::transport::{free_transport_unchecked, line_integral};
use crate::collision::{admissibility_check, collide, AdmissibilityReport, KernelSpec, QuadratureRule, RuleOrders};
use crate::geometry::{forward_exit_unchecked, Domain};
use crate::{Error, Result, Vector};

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub grid: GridSpec,
    /// Collision quadrature; the velocity ball has radius `grid.velocity_radius`.
    pub rule: RuleOrders,
    /// Absolute sup-norm tolerance on successive iterates.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible `‖g‖`.
    pub smallness: f64,
    /// Upper bound imposed on the admissibility constant `M`.
    pub admissibility_threshold: f64,
    pub extension: ExtensionPolicy,
    /// Random interior grid nodes used for the final residual check.
    pub residual_samples: usize,
    pub seed: u64,
    /// Merge antipodal ω nodes (valid for even kernels).
    pub fold_omega: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            rule: RuleOrders { sphere: 8, radial: 4, angular: 8 },
            tol: 1e-10,
            max_iter: 50,
            smallness: 0.05,
            admissibility_threshold: 20.0,
            extension: ExtensionPolicy::Zero,
            residual_samples: 1000,
            seed: 0,
            fold_omega: true,
        }
    }
}

/// Iteration history and diagnostics of a Picard solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// `sup |Ĝ_{k+1} − Ĝ_k|` over the grid, per iteration.
    pub deltas: Vec<f64>,
    pub converged: bool,
    /// Geometric mean of successive delta quotients.
    pub ratio: Option<f64>,
    /// Largest `|v·∇F − Q(F,F)|` over the residual samples.
    pub residual: Option<f64>,
    pub residual_scale: f64,
    pub g_norm: f64,
    pub admissibility: f64,
    /// Collision-velocity references outside the velocity lattice.
    pub out_of_range: usize,
}

impl ConvergenceReport {
    fn finish_ratio(&mut self) {
        let d: Vec<f64> = self.deltas.iter().copied().filter(|d| *d > 0.0).collect();
        self.ratio = if d.len() >= 2 { Some((d[d.len() - 1] / d[0]).powf(1.0 / (d.len() - 1) as f64)) } else { None };
    }
}

const OUT_UP: u8 = 1;
const OUT_VP: u8 = 2;

#[derive(Debug, Clone, Copy)]
struct Entry {
    wb: f64,
    k: u32,
    l: u32,
    up_off: u32,
    vp_off: u32,
    up_len: u8,
    vp_len: u8,
    out: u8,
}

/// Precomputed collision quadrature on the velocity lattice: for every
/// lattice velocity `vⱼ` and rule node `(uₖ, ω_l)`, the weight `w·B` and
/// the interpolation stencils of `u'` and `v'`.
struct CollisionPlan {
    entries: Vec<Entry>,
    start: Vec<usize>,
    pool_idx: Vec<u32>,
    pool_w: Vec<f64>,
    u_off: Vec<(u32, u8)>,
    out_of_range: usize,
}

impl CollisionPlan {
    fn build<const N: usize>(grid: &PhaseGrid<N>, kernel: &KernelSpec, rule: &QuadratureRule<N>, policy: ExtensionPolicy) -> Self {
        let mut pool_idx = Vec::new();
        let mut pool_w = Vec::new();
        let mut push = |p: &Vector<N>| -> (u32, u8) {
            let st = grid.velocity.stencil(p);
            let off = pool_idx.len() as u32;
            for (i, w) in st.iter() {
                pool_idx.push(i as u32);
                pool_w.push(w);
            }
            (off, st.len)
        };
        let u_off: Vec<(u32, u8)> = rule.velocity.iter().map(|(u, _)| push(u)).collect();
        let mut entries = Vec::new();
        let mut start = Vec::with_capacity(grid.nv() + 1);
        let mut out_of_range = 0;
        for (j, v) in grid.v_nodes.iter().enumerate() {
            start.push(entries.len());
            if !grid.v_active[j] || kernel.is_zero() {
                continue;
            }
            for (k, (u, wu)) in rule.velocity.iter().enumerate() {
                for (l, (omega, wo)) in rule.sphere.iter().enumerate() {
                    let wb = wu * wo * kernel.eval(v, u, omega);
                    if wb == 0.0 {
                        continue;
                    }
                    let (up, vp) = collide(u, v, omega);
                    let mut out = 0u8;
                    let mut reference = |w: &Vector<N>, flag: u8| -> (u32, u8) {
                        if grid.velocity.contains(w) {
                            push(w)
                        } else {
                            out |= flag;
                            match policy {
                                ExtensionPolicy::Clamp => push(&grid.velocity.clamp(w)),
                                _ => (0, 0),
                            }
                        }
                    };
                    let (up_off, up_len) = reference(&up, OUT_UP);
                    let (vp_off, vp_len) = reference(&vp, OUT_VP);
                    out_of_range += (out & OUT_UP != 0) as usize + (out & OUT_VP != 0) as usize;
                    entries.push(Entry { wb, k: k as u32, l: l as u32, up_off, vp_off, up_len, vp_len, out });
                }
            }
        }
        start.push(entries.len());
        Self { entries, start, pool_idx, pool_w, u_off, out_of_range }
    }

    #[inline]
    fn apply(&self, off: u32, len: u8, h: &[f64]) -> f64 {
        let off = off as usize;
        let mut acc = 0.0;
        for c in off..off + len as usize {
            acc += self.pool_w[c] * h[self.pool_idx[c] as usize];
        }
        acc
    }
}

/// Per-source constants: the closed-form part of `F` at every collision
/// velocity (velocity-only sources) or zeros (x-dependent sources).
struct SourceTables {
    a_up: Vec<f64>,
    a_vp: Vec<f64>,
    a_u: Vec<f64>,
    a_v: Vec<f64>,
    /// x-dependent source with analytic extension: out-of-lattice values
    /// are computed per spatial node.
    analytic_x: bool,
}

/// A prepared Picard solver: grid, collision plan and exit-time table for a
/// fixed domain and kernel, reusable across inflow data.
pub struct Solver<const N: usize> {
    pub grid: Arc<PhaseGrid<N>>,
    pub kernel: KernelSpec,
    pub rule: QuadratureRule<N>,
    pub config: SolverConfig,
    pub admissibility: AdmissibilityReport<N>,
    plan: CollisionPlan,
    /// `τ₋(x_base_i, v_j)` stored `[v][x]`.
    tau: Vec<f64>,
}

impl<const N: usize> Solver<N> {
    pub fn new(domain: &Domain<N>, kernel: &KernelSpec, config: &SolverConfig) -> Result<Self> {
        kernel.validate(N)?;
        if !config.grid.velocity.is_multiple_of(2) {
            return Err(Error::Config("velocity lattice needs an even node count so that v = 0 is not a node".into()));
        }
        if !(config.tol > 0.0) || config.max_iter == 0 {
            return Err(Error::Config("tolerance must be positive and max_iter ≥ 1".into()));
        }
        let grid = Arc::new(PhaseGrid::new(domain, config.grid)?);
        let full = QuadratureRule::new(config.rule, config.grid.velocity_radius)?;
        let admissibility = admissibility_check(kernel, domain, &full, config.admissibility_threshold)?;
        if !admissibility.passed {
            return Err(Error::Precondition(format!(
                "kernel not admissible: M ≈ {:.4e} ≥ threshold {:.4e}",
                admissibility.m_estimate, config.admissibility_threshold
            )));
        }
        let rule = if config.fold_omega && kernel.is_even() { full.folded()? } else { full };
        let plan = CollisionPlan::build(&grid, kernel, &rule, config.extension);
        let (nx, nv) = (grid.nx(), grid.nv());
        let mut tau = vec![0.0; nx * nv];
        tau.par_chunks_mut(nx).enumerate().for_each(|(j, col)| {
            let v = grid.v_nodes[j];
            for (i, t) in col.iter_mut().enumerate() {
                *t = forward_exit_unchecked(&grid.domain, &grid.x_base[i], &(-v));
            }
        });
        Ok(Self { grid, kernel: kernel.clone(), rule, config: config.clone(), admissibility, plan, tau })
    }

    /// Value the solver assigns to a velocity-only datum at velocity `w`,
    /// applying the extension policy outside the velocity lattice.
    pub fn extended_value(&self, g: &BoundarySource<N>, w: &Vector<N>) -> f64 {
        let zero = Vector::<N>::zeros();
        if self.grid.velocity.contains(w) {
            return g.eval(&zero, w);
        }
        match self.config.extension {
            ExtensionPolicy::Zero => 0.0,
            ExtensionPolicy::Clamp => g.eval(&zero, &self.grid.velocity.clamp(w)),
            ExtensionPolicy::Analytic => g.eval(&zero, w),
        }
    }

    fn tables(&self, g: &BoundarySource<N>) -> SourceTables {
        let grid = &self.grid;
        let n_e = self.plan.entries.len();
        if !g.is_velocity_only() {
            return SourceTables {
                a_up: vec![0.0; n_e],
                a_vp: vec![0.0; n_e],
                a_u: vec![0.0; self.rule.velocity.len()],
                a_v: vec![0.0; grid.nv()],
                analytic_x: self.config.extension == ExtensionPolicy::Analytic,
            };
        }
        let zero = Vector::<N>::zeros();
        let policy = self.config.extension;
        let value = |w: &Vector<N>, out: bool| -> f64 {
            if !out {
                g.eval(&zero, w)
            } else {
                match policy {
                    ExtensionPolicy::Zero => 0.0,
                    ExtensionPolicy::Clamp => g.eval(&zero, &grid.velocity.clamp(w)),
                    ExtensionPolicy::Analytic => g.eval(&zero, w),
                }
            }
        };
        let mut a_up = Vec::with_capacity(n_e);
        let mut a_vp = Vec::with_capacity(n_e);
        for j in 0..grid.nv() {
            let v = grid.v_nodes[j];
            for e in &self.plan.entries[self.plan.start[j]..self.plan.start[j + 1]] {
                let (up, vp) = collide(&self.rule.velocity[e.k as usize].0, &v, &self.rule.sphere[e.l as usize].0);
                a_up.push(value(&up, e.out & OUT_UP != 0));
                a_vp.push(value(&vp, e.out & OUT_VP != 0));
            }
        }
        SourceTables {
            a_up,
            a_vp,
            a_u: self.rule.velocity.iter().map(|(u, _)| g.eval(&zero, u)).collect(),
            a_v: grid.v_nodes.iter().map(|v| g.eval(&zero, v)).collect(),
            analytic_x: false,
        }
    }

    /// `F(xᵢ, uₖ)` at the velocity-ball nodes.
    fn ball_values(&self, h: &[f64], t: &SourceTables) -> Vec<f64> {
        let plan = &self.plan;
        plan.u_off.iter().zip(&t.a_u).map(|(&(o, n), a)| a + plan.apply(o, n, h)).collect()
    }

    /// `Q(F,F)(xᵢ, vⱼ)` where `F(xᵢ, ·) = a + interpolant of h`.
    #[inline]
    fn collision_at(&self, i: usize, j: usize, h: &[f64], fu: &[f64], t: &SourceTables, g: &BoundarySource<N>) -> f64 {
        let plan = &self.plan;
        let (s, e) = (plan.start[j], plan.start[j + 1]);
        if s == e {
            return 0.0;
        }
        let x = &self.grid.x_base[i];
        let fv = t.a_v[j] + h[j];
        let v = &self.grid.v_nodes[j];
        let mut acc = 0.0;
        for (n, en) in plan.entries[s..e].iter().enumerate() {
            let mut fup = t.a_up[s + n] + plan.apply(en.up_off, en.up_len, h);
            let mut fvp = t.a_vp[s + n] + plan.apply(en.vp_off, en.vp_len, h);
            if t.analytic_x && en.out != 0 {
                let (up, vp) = collide(&self.rule.velocity[en.k as usize].0, v, &self.rule.sphere[en.l as usize].0);
                if en.out & OUT_UP != 0 {
                    fup = free_transport_unchecked(g, &self.grid.domain, x, &up);
                }
                if en.out & OUT_VP != 0 {
                    fvp = free_transport_unchecked(g, &self.grid.domain, x, &vp);
                }
            }
            acc += en.wb * (fup * fvp - fu[en.k as usize] * fv);
        }
        acc
    }

    fn collision_row(&self, i: usize, h: &[f64], t: &SourceTables, g: &BoundarySource<N>, out: &mut [f64]) {
        let fu = self.ball_values(h, t);
        for (j, q) in out.iter_mut().enumerate() {
            *q = self.collision_at(i, j, h, &fu, t, g);
        }
    }

    /// `Q` on the whole grid, stored `[x][v]`.
    fn collision_all(&self, h: &[f64], t: &SourceTables, g: &BoundarySource<N>) -> Vec<f64> {
        let nv = self.grid.nv();
        let mut q = vec![0.0; h.len()];
        q.par_chunks_mut(nv).enumerate().for_each(|(i, row)| self.collision_row(i, &h[i * nv..(i + 1) * nv], t, g, row));
        q
    }

    /// `Ĝ = ∫₀^{τ₋} Q̃(x − s·v, v) ds` for nodal `Q` stored `[v][x]`;
    /// result stored `[x][v]`.
    fn transport(&self, qt: &[f64]) -> Vec<f64> {
        let (nx, nv) = (self.grid.nx(), self.grid.nv());
        let mut gt = vec![0.0; nx * nv];
        gt.par_chunks_mut(nx).enumerate().for_each(|(j, col)| {
            if !self.grid.v_active[j] {
                return;
            }
            let q = &qt[j * nx..(j + 1) * nx];
            if q.iter().all(|x| *x == 0.0) {
                return;
            }
            let v = &self.grid.v_nodes[j];
            for (i, out) in col.iter_mut().enumerate() {
                *out = line_integral(&self.grid.space, q, &self.grid.x_base[i], v, self.tau[j * nx + i]);
            }
        });
        transpose(&gt, nv, nx)
    }

    /// Solves `v·∇F = Q(F,F)` in Ω, `F = g` on Γ₋.
    pub fn solve(&self, g: &BoundarySource<N>) -> Result<Solution<N>> {
        let grid = &self.grid;
        let (nx, nv) = (grid.nx(), grid.nv());
        let g_norm = g.sup_norm(&grid.domain, grid.spec.velocity_radius);
        if g_norm > self.config.smallness {
            return Err(Error::Precondition(format!("‖g‖ ≈ {g_norm:.4e} exceeds the smallness threshold {:.4e}", self.config.smallness)));
        }
        let tables = self.tables(g);
        let f0: Option<Vec<f64>> = if g.is_velocity_only() {
            None
        } else {
            let mut f0 = vec![0.0; nx * nv];
            f0.par_chunks_mut(nv).enumerate().for_each(|(i, row)| {
                for (j, val) in row.iter_mut().enumerate() {
                    *val = free_transport_unchecked(g, &grid.domain, &grid.x_base[i], &grid.v_nodes[j]);
                }
            });
            Some(f0)
        };
        let mut report = ConvergenceReport {
            g_norm,
            admissibility: self.admissibility.m_estimate,
            out_of_range: self.plan.out_of_range,
            ..Default::default()
        };
        let mut ghat = vec![0.0; nx * nv];
        let mut qt = vec![0.0; nx * nv];
        let mut h = vec![0.0; nx * nv];
        for it in 1..=self.config.max_iter {
            match &f0 {
                Some(f0) => h.iter_mut().zip(f0.iter().zip(&ghat)).for_each(|(h, (a, b))| *h = a + b),
                None => h.copy_from_slice(&ghat),
            }
            let q = self.collision_all(&h, &tables, g);
            qt = transpose(&q, nx, nv);
            let next = self.transport(&qt);
            let delta = next.iter().zip(&ghat).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            ghat = next;
            report.iterations = it;
            report.deltas.push(delta);
            log::debug!("picard iteration {it}: delta {delta:.3e}");
            if !delta.is_finite() {
                break;
            }
            if delta <= self.config.tol {
                report.converged = true;
                break;
            }
            if it >= 3 && delta > 1e3 * report.deltas[0] {
                break;
            }
        }
        report.finish_ratio();
        let mut solution = Solution { grid: grid.clone(), source: g.clone(), policy: self.config.extension, f0, ghat, qt, report };
        if !solution.report.converged {
            let reason = format!("‖g‖ ≈ {g_norm:.3e} may be too large for M ≈ {:.3e}", self.admissibility.m_estimate);
            return Err(Error::NonConvergence { reason, report: Box::new(solution.report) });
        }
        let (residual, scale) = self.residual(&solution, &tables)?;
        solution.report.residual = residual;
        solution.report.residual_scale = scale;
        Ok(solution)
    }

    /// `max |v·∇F − Q(F,F)|` over random interior grid nodes; the
    /// derivative is a central difference along the characteristic of the
    /// characteristic-form solution, `Q` is recomputed from the final field.
    fn residual(&self, sol: &Solution<N>, tables: &SourceTables) -> Result<(Option<f64>, f64)> {
        let grid = &self.grid;
        let nv = grid.nv();
        let scale = sol.node_values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if self.config.residual_samples == 0 {
            return Ok((None, scale));
        }
        let candidates_x: Vec<usize> =
            (0..grid.nx()).filter(|&i| grid.x_inside[i] && grid.domain.boundary_distance(&grid.x_nodes[i]) > 1e-6).collect();
        let candidates_v: Vec<usize> = (0..nv).filter(|&j| grid.v_active[j]).collect();
        if candidates_x.is_empty() || candidates_v.is_empty() {
            return Ok((None, scale));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let picks: Vec<(usize, usize)> = (0..self.config.residual_samples)
            .map(|_| (candidates_x[rng.gen_range(0..candidates_x.len())], candidates_v[rng.gen_range(0..candidates_v.len())]))
            .collect();
        let h_full: Vec<f64> = match &sol.f0 {
            Some(f0) => f0.iter().zip(&sol.ghat).map(|(a, b)| a + b).collect(),
            None => sol.ghat.clone(),
        };
        let worst = picks
            .par_iter()
            .map(|&(i, j)| -> Result<f64> {
                let x = grid.x_nodes[i];
                let v = grid.v_nodes[j];
                let h = &h_full[i * nv..(i + 1) * nv];
                let q = self.collision_at(i, j, h, &self.ball_values(h, tables), tables, &sol.source);
                let ds = 1e-7 / v.norm();
                let fp = sol.value(&(x + v * ds), &v)?;
                let fm = sol.value(&(x - v * ds), &v)?;
                let transport = (fp - fm) / (2.0 * ds);
                Ok((transport - q).abs())
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok((Some(worst), scale))
    }
}

fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}

/// Convenience wrapper: build a [`Solver`] and solve once.
pub fn picard_solve<const N: usize>(
    domain: &Domain<N>,
    kernel: &KernelSpec,
    g: &BoundarySource<N>,
    config: &SolverConfig,
) -> Result<Solution<N>> {
    Solver::new(domain, kernel, config)?.solve(g)
}

/// Converged solution `F = F₀ + Ĝ`.
///
/// Off the grid, `F` is evaluated in characteristic form:
/// `F(x,v) = F₀(x,v) + ∫₀^{τ₋(x,v)} Q̃(x − s·v, v) ds` with `F₀` in closed
/// form and `Q̃` the multilinear interpolant of the last collision term.
pub struct Solution<const N: usize> {
    pub grid: Arc<PhaseGrid<N>>,
    pub source: BoundarySource<N>,
    pub policy: ExtensionPolicy,
    f0: Option<Vec<f64>>,
    /// `Ĝ` at the nodes, stored `[x][v]`.
    pub ghat: Vec<f64>,
    /// Collision term that produced `Ĝ`, stored `[v][x]`.
    qt: Vec<f64>,
    pub report: ConvergenceReport,
}

impl<const N: usize> Solution<N> {
    /// `F` at every node, stored `[x][v]`.
    pub fn node_values(&self) -> Vec<f64> {
        let grid = &self.grid;
        let nv = grid.nv();
        match &self.f0 {
            Some(f0) => f0.iter().zip(&self.ghat).map(|(a, b)| a + b).collect(),
            None => {
                self.ghat.iter().enumerate().map(|(n, gh)| self.source.eval(&grid.x_base[n / nv], &grid.v_nodes[n % nv]) + gh).collect()
            }
        }
    }

    /// Nodal field with the closed form of `F₀` attached for analytic
    /// extension.
    pub fn field(&self) -> Result<PhaseField<N>> {
        let f = PhaseField::new(self.grid.clone(), self.node_values(), self.policy)?;
        let g = self.source.clone();
        let domain = self.grid.domain.clone();
        Ok(f.with_analytic(Arc::new(move |x, v| free_transport_unchecked(&g, &domain, &domain.project(x), v))))
    }

    /// `Ĝ(x, v)` in characteristic form.
    pub fn correction(&self, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
        let grid = &self.grid;
        let tau = crate::geometry::tau_minus(&grid.domain, x, v)?;
        let nx = grid.nx();
        let vs = grid.velocity.stencil(&grid.velocity.clamp(v));
        let mut acc = 0.0;
        for (j, w) in vs.iter() {
            let q = &self.qt[j * nx..(j + 1) * nx];
            acc += w * line_integral(&grid.space, q, x, v, tau);
        }
        Ok(acc)
    }
}

impl<const N: usize> PhaseFunction<N> for Solution<N> {
    fn value(&self, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
        let grid = &self.grid;
        if !grid.domain.contains_closure(x) {
            return Err(Error::Domain("evaluation point outside the domain".into()));
        }
        if v.norm_squared() == 0.0 {
            return Err(Error::Domain("evaluation at zero velocity".into()));
        }
        let x = grid.domain.project(x);
        if grid.velocity.contains(v) {
            Ok(free_transport_unchecked(&self.source, &grid.domain, &x, v) + self.correction(&x, v)?)
        } else {
            match self.policy {
                ExtensionPolicy::Zero => Ok(0.0),
                ExtensionPolicy::Analytic => Ok(free_transport_unchecked(&self.source, &grid.domain, &x, v)),
                ExtensionPolicy::Clamp => {
                    let vc = grid.velocity.clamp(v);
                    Ok(free_transport_unchecked(&self.source, &grid.domain, &x, &vc) + self.correction(&x, &vc)?)
                }
            }
        }
    }
}
