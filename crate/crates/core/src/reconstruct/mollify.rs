//! Mollified delta probes.
//!
//! The gain terms are `I₁ = ∫∫∫ B(v,u,ω) φ(v'−v₀) φ(u'−u₀) ψ(v−v*)` and
//! `I₂` with `v₀ ↔ u₀`, where `φ = ψ` is the unit-mass bump of width `η`.
//! After the measure-preserving change `(u,v) ↦ (u',v')` the ω-integral
//! is taken over the sphere `Σ` with diameter `[v₀, u₀]`, which is the
//! image of `ω ↦ v(u₀,v₀,ω)`; only a cap of `Σ` around `v*` contributes.
//! The loss terms `I₃`, `I₄` carry the product `ψ(v−v*)φ(v−v₀)`, which is
//! identically zero for disjoint supports and is skipped node by node.
//!
//! `S_η` grows like `1/η` on the resonance set: the data concentrate on a
//! hypersurface. Dividing by the density at zero of the combined normal
//! offset of the three bumps gives `S̃_η`, which has a finite limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::probe::{omega_pair, Probe};
use crate::collision::{ball_rule, bump_profile, sphere_measure, sphere_rule, KernelSpec};
use crate::quadrature::GaussLegendre;
use crate::{check_dimension, Error, Result, Vector};

/// Quadrature orders for the mollified integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MollifierOrders {
    /// Radial Gauss–Legendre nodes per bump.
    pub radial: usize,
    /// Sphere order for bump directions.
    pub angular: usize,
    /// Polar nodes on the cap of `Σ`.
    pub cap_polar: usize,
    /// Azimuthal nodes on the cap (3D only).
    pub cap_azimuth: usize,
    /// Sphere order for the ω-integral of the loss terms.
    pub sphere: usize,
}

impl MollifierOrders {
    pub fn for_dim<const N: usize>() -> Self {
        if N == 2 {
            Self { radial: 12, angular: 24, cap_polar: 48, cap_azimuth: 1, sphere: 32 }
        } else {
            Self { radial: 6, angular: 6, cap_polar: 10, cap_azimuth: 20, sphere: 12 }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.radial < 2 || self.angular == 0 || self.cap_polar == 0 || self.cap_azimuth == 0 || self.sphere == 0 {
            return Err(Error::Config("mollifier orders must be positive (radial ≥ 2)".into()));
        }
        Ok(())
    }
}

/// Unit-mass bump `φ(w) = C·η^{−N}·exp(−r²/(1−r²))`, `r = |w|/η`.
#[derive(Debug, Clone, Copy)]
pub struct Bump<const N: usize> {
    norm: f64,
}

impl<const N: usize> Bump<N> {
    pub fn new() -> Result<Self> {
        check_dimension::<N>()?;
        let mass = sphere_measure::<N>() * GaussLegendre::new(200).integrate(0.0, 1.0, |r| bump_profile(r) * r.powi(N as i32 - 1));
        Ok(Self { norm: 1.0 / mass })
    }

    pub fn density(&self, w: &Vector<N>, eta: f64) -> f64 {
        let r = w.norm() / eta;
        if r >= 1.0 {
            0.0
        } else {
            self.norm * bump_profile(r) / eta.powi(N as i32)
        }
    }

    /// Nodes of a polar rule on the support around `center`, with weights
    /// multiplied by the density.
    pub fn nodes(&self, center: &Vector<N>, eta: f64, orders: &MollifierOrders) -> Result<Vec<(Vector<N>, f64)>> {
        let mut out = ball_rule(center, eta, orders.radial, orders.angular)?;
        for (p, w) in &mut out {
            *w *= self.density(&(*p - center), eta);
        }
        Ok(out)
    }

    /// Density of `w·e` for `w` distributed as the unit-width bump and any
    /// unit `e`.
    pub fn marginal(&self, t: f64) -> f64 {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let top = (1.0 - t * t).sqrt();
        let gl = GaussLegendre::new(48);
        let g = |s: f64| self.norm * bump_profile((t * t + s * s).sqrt());
        if N == 2 {
            2.0 * gl.integrate(0.0, top, g)
        } else {
            2.0 * std::f64::consts::PI * gl.integrate(0.0, top, |s| g(s) * s)
        }
    }

    /// `∫∫ f(s₁) f(s₂) f(c₁s₁ + c₂s₂) ds₁ ds₂` with `f` the marginal: the
    /// density at zero of `Y₃ + c₁Y₁ + c₂Y₂` for independent marginals.
    pub fn offset_density(&self, c1: f64, c2: f64) -> f64 {
        let gl = GaussLegendre::new(64);
        let f: Vec<f64> = gl.nodes.iter().map(|&s| self.marginal(s)).collect();
        let mut acc = 0.0;
        for (i, (&s1, &w1)) in gl.nodes.iter().zip(&gl.weights).enumerate() {
            for (j, (&s2, &w2)) in gl.nodes.iter().zip(&gl.weights).enumerate() {
                acc += w1 * w2 * f[i] * f[j] * self.marginal(c1 * s1 + c2 * s2);
            }
        }
        acc
    }
}

/// Jacobian factors of the two candidate conventions at a probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JacobianFactors {
    /// `|v*−v₀| = |(u₀−v₀)·ω₁|`
    pub alpha: f64,
    /// `|v*−u₀| = |(u₀−v₀)·ω₂|`
    pub beta: f64,
    /// `|u₀−v₀|`
    pub dist: f64,
    pub minus2: [f64; 2],
    pub minus_n: [f64; 2],
}

impl JacobianFactors {
    fn new<const N: usize>(p: &Probe<N>) -> Self {
        let alpha = (p.v_star - p.v0).norm();
        let beta = (p.v_star - p.u0).norm();
        let n = N as i32;
        Self { alpha, beta, dist: (p.u0 - p.v0).norm(), minus2: [alpha.powi(-2), beta.powi(-2)], minus_n: [alpha.powi(-n), beta.powi(-n)] }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeResult<const N: usize> {
    pub probe: Probe<N>,
    /// `S_η = I₁ + I₂ + I₃ + I₄`.
    pub s_eta: f64,
    pub terms: [f64; 4],
    /// Offset density `p_η(0)`, proportional to `1/η`.
    pub normalizer: f64,
    /// `S_η / p_η(0)`.
    pub s_normalized: f64,
    pub resonant: bool,
    pub manifold_distance: f64,
    #[serde(skip)]
    pub omegas: Option<(Vector<N>, Vector<N>)>,
    pub factors: JacobianFactors,
}

fn orthonormal_complement<const N: usize>(e: &Vector<N>) -> Vec<Vector<N>> {
    let mut out: Vec<Vector<N>> = Vec::with_capacity(N - 1);
    for i in 0..N {
        let mut w = Vector::<N>::zeros();
        w[i] = 1.0;
        w -= e * e.dot(&w);
        for f in &out {
            w -= f * f.dot(&w);
        }
        if w.norm() > 0.3 && out.len() < N - 1 {
            out.push(w.normalize());
        }
    }
    out
}

/// ω-nodes and weights covering every ω with `|v(p,q,ω) − v*| < ρ`, where
/// `v(p,q,ω) = q + [(p−q)·ω]ω`. Built on a cap of `Σ` and pulled back by
/// both preimages `±ω` with the Jacobian `|p−q|^{N−1}|cos∠(ω,p−q)|^{N−2}`.
/// Empty when `v*` is farther than `ρ` from `Σ`.
pub fn thales_cap<const N: usize>(
    p: &Vector<N>,
    q: &Vector<N>,
    v_star: &Vector<N>,
    rho: f64,
    orders: &MollifierOrders,
) -> Result<Vec<(Vector<N>, f64)>> {
    check_dimension::<N>()?;
    let d = p - q;
    let dist = d.norm();
    let dh = d / dist;
    let c = (p + q) * 0.5;
    let radius = 0.5 * dist;
    let to = v_star - c;
    if to.norm() == 0.0 {
        return Err(Error::Precondition("v* at the centre of the resonance sphere".into()));
    }
    let e = to.normalize();
    let m = (to.norm() - radius).abs();
    if m >= rho {
        return Ok(Vec::new());
    }
    let gamma = 2.0 * ((rho + m) / dist).min(1.0).asin();
    // ω ⟂ p−q collapses onto y = q, where the pull-back degenerates
    if (-dh.dot(&e)).clamp(-1.0, 1.0).acos() <= gamma {
        return Err(Error::Precondition("probe cap reaches the degenerate point of the resonance sphere".into()));
    }
    let frame = orthonormal_complement(&e);
    let mut ys: Vec<(Vector<N>, f64)> = Vec::new();
    if N == 2 {
        for (t, w) in GaussLegendre::new(orders.cap_polar).on_interval(-gamma, gamma) {
            ys.push((e * t.cos() + frame[0] * t.sin(), w * radius));
        }
    } else {
        let m = orders.cap_azimuth;
        let dphi = 2.0 * std::f64::consts::PI / m as f64;
        for (t, w) in GaussLegendre::new(orders.cap_polar).on_interval(0.0, gamma) {
            for k in 0..m {
                let phi = dphi * k as f64;
                let dir = frame[0] * phi.cos() + frame[1] * phi.sin();
                ys.push((e * t.cos() + dir * t.sin(), w * t.sin() * radius * radius * dphi));
            }
        }
    }
    let mut out = Vec::with_capacity(2 * ys.len());
    for (ey, wy) in ys {
        let omega = (dh + ey).normalize();
        let jac = dist.powi(N as i32 - 1) * dh.dot(&omega).abs().powi(N as i32 - 2);
        out.push((omega, wy / jac));
        out.push((-omega, wy / jac));
    }
    Ok(out)
}

/// `∫dω ∫∫ B(v,u,ω) φ(u'−p) φ(v'−q) ψ(v−v*)` with `(u,v)` the collision
/// partners of `(u',v')`.
#[allow(clippy::too_many_arguments)]
fn gain<const N: usize>(
    bump: &Bump<N>,
    kernel: &KernelSpec,
    p_nodes: &[(Vector<N>, f64)],
    q_nodes: &[(Vector<N>, f64)],
    p: &Vector<N>,
    q: &Vector<N>,
    v_star: &Vector<N>,
    eta: f64,
    orders: &MollifierOrders,
) -> Result<f64> {
    let rho = (1.0 + std::f64::consts::SQRT_2) * eta;
    let cap = thales_cap(p, q, v_star, rho, orders)?;
    let eta2 = eta * eta;
    let partial: Vec<f64> = cap
        .par_iter()
        .map(|(omega, w_omega)| {
            let t: Vec<f64> = p_nodes.iter().map(|(u, _)| omega.dot(u)).collect();
            let mut acc = 0.0;
            for (vp, wv) in q_nodes {
                let a = vp - omega * omega.dot(vp) - v_star;
                let (aa, ao) = (a.norm_squared(), a.dot(omega));
                for ((up, wu), &tk) in p_nodes.iter().zip(&t) {
                    if aa + tk * (2.0 * ao + tk) >= eta2 {
                        continue;
                    }
                    let v = a + omega * tk + v_star;
                    let u = up + vp - v;
                    acc += wv * wu * bump.density(&(v - v_star), eta) * kernel.eval(&v, &u, omega);
                }
            }
            w_omega * acc
        })
        .collect();
    Ok(partial.iter().sum())
}

/// `−∫dv ψ(v−v*) φ(v−c_v) ∫du φ(u−c_u) ∫dω B(v,u,ω)`; nodes with a zero
/// product contribute nothing, so disjoint supports give exactly `0`.
#[allow(clippy::too_many_arguments)]
fn loss<const N: usize>(
    bump: &Bump<N>,
    kernel: &KernelSpec,
    star_nodes: &[(Vector<N>, f64)],
    u_nodes: &[(Vector<N>, f64)],
    sphere: &[(Vector<N>, f64)],
    c_v: &Vector<N>,
    eta: f64,
) -> f64 {
    let mut acc = 0.0;
    for (v, wv) in star_nodes {
        let weight = wv * bump.density(&(v - c_v), eta);
        if weight == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for (u, wu) in u_nodes {
            for (omega, wo) in sphere {
                inner += wu * wo * kernel.eval(v, u, omega);
            }
        }
        acc += weight * inner;
    }
    0.0 - acc
}

/// Evaluates `S_η` and its four terms at a probe.
pub fn mollified_s<const N: usize>(probe: &Probe<N>, kernel: &KernelSpec, orders: &MollifierOrders) -> Result<ProbeResult<N>> {
    check_dimension::<N>()?;
    orders.validate()?;
    kernel.validate(N)?;
    let eta = probe.eta;
    if probe.separation() <= 2.0 * eta {
        return Err(Error::Precondition(format!("bump supports overlap: separation {:.4} ≤ 2η = {:.4}", probe.separation(), 2.0 * eta)));
    }
    let bump = Bump::<N>::new()?;
    let (s, v0, u0) = (probe.v_star, probe.v0, probe.u0);
    let nv0 = bump.nodes(&v0, eta, orders)?;
    let nu0 = bump.nodes(&u0, eta, orders)?;
    let i1 = gain(&bump, kernel, &nu0, &nv0, &u0, &v0, &s, eta, orders)?;
    let i2 = gain(&bump, kernel, &nv0, &nu0, &v0, &u0, &s, eta, orders)?;
    // ψ is centred at v*; its ball rule uses the ψ weights.
    let star = bump.nodes(&s, eta, orders)?;
    let sphere = sphere_rule::<N>(orders.sphere)?;
    let i3 = loss(&bump, kernel, &star, &nu0, &sphere, &v0, eta);
    let i4 = loss(&bump, kernel, &star, &nv0, &sphere, &u0, eta);

    let factors = JacobianFactors::new(probe);
    let scale = factors.alpha.hypot(factors.beta);
    let normalizer = bump.offset_density(factors.beta / scale, factors.alpha / scale) / eta;
    let s_eta = i1 + i2 + i3 + i4;
    let resonant = probe.relations()?.rel3;
    Ok(ProbeResult {
        probe: *probe,
        s_eta,
        terms: [i1, i2, i3, i4],
        normalizer,
        s_normalized: s_eta / normalizer,
        resonant,
        manifold_distance: probe.manifold_distance(),
        omegas: if resonant { Some(omega_pair(&s, &v0, &u0)?) } else { None },
        factors,
    })
}

/// Extrapolated limit of a sequence taken at `η, η/2, η/4, …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Observed order `log₂((S₁−S₂)/(S₂−S₃))`; `NaN` when undefined.
    pub observed_order: f64,
    /// Order actually used, the observed one clamped to `[1, 4]`.
    pub order: f64,
    /// `|limit − last value|`.
    pub uncertainty: f64,
}

/// Richardson extrapolation on the last three values, with the order
/// estimated from the data.
pub fn richardson(values: &[f64]) -> Result<Extrapolation> {
    let n = values.len();
    if n < 3 {
        return Err(Error::Config("Richardson extrapolation needs at least three levels".into()));
    }
    let (s1, s2, s3) = (values[n - 3], values[n - 2], values[n - 1]);
    let (d1, d2) = (s1 - s2, s2 - s3);
    if d2 == 0.0 {
        return Ok(Extrapolation { limit: s3, observed_order: f64::NAN, order: f64::NAN, uncertainty: 0.0 });
    }
    let r = d1 / d2;
    let observed = if r > 0.0 { r.log2() } else { f64::NAN };
    let order = if observed.is_finite() { observed.clamp(1.0, 4.0) } else { 2.0 };
    let limit = s3 - d2 / (2f64.powf(order) - 1.0);
    Ok(Extrapolation { limit, observed_order: observed, order, uncertainty: (limit - s3).abs() })
}

/// A probe evaluated along `η, η/2, …` with extrapolated limits of the raw
/// and the normalised values.
#[derive(Debug, Clone, Serialize)]
pub struct EtaStudy<const N: usize> {
    pub rows: Vec<ProbeResult<N>>,
    pub raw: Extrapolation,
    pub normalized: Extrapolation,
}

pub fn eta_study<const N: usize>(probe: &Probe<N>, kernel: &KernelSpec, levels: usize, orders: &MollifierOrders) -> Result<EtaStudy<N>> {
    let rows = (0..levels.max(3))
        .map(|k| mollified_s(&probe.with_eta(probe.eta * 0.5f64.powi(k as i32))?, kernel, orders))
        .collect::<Result<Vec<_>>>()?;
    let raw = richardson(&rows.iter().map(|r| r.s_eta).collect::<Vec<_>>())?;
    let normalized = richardson(&rows.iter().map(|r| r.s_normalized).collect::<Vec<_>>())?;
    Ok(EtaStudy { rows, raw, normalized })
}
