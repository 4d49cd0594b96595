//! Closed-form combinations of `B` at a probe and their inversion for
//! ω-independent kernels.

use serde::{Deserialize, Serialize};

use super::mollify::{eta_study, EtaStudy, MollifierOrders};
use super::probe::{check_abtheta, probe_lengths, Probe};
use crate::collision::KernelSpec;
use crate::{Error, Result, Vector};

/// Convention for the Jacobian factors in the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMode {
    /// `α⁻²(B(a,b,θ) + β⁻²B(a,b,ω̂₂))`.
    TheoremMinus2,
    /// `α⁻ⁿB(a,b,θ) + β⁻ⁿB(a,b,ω̂₂)`.
    PropositionMinusN,
    /// `(2/|a−b|)(α^{2−n}B(a,b,θ) + β^{2−n}B(a,b,ω̂₂))`: the surface
    /// density of the resonance data, the finite limit of the normalised
    /// mollified probe.
    SurfaceDensity,
}

impl ExponentMode {
    pub const ALL: [ExponentMode; 3] = [ExponentMode::TheoremMinus2, ExponentMode::PropositionMinusN, ExponentMode::SurfaceDensity];

    pub fn name(&self) -> &'static str {
        match self {
            ExponentMode::TheoremMinus2 => "theorem_minus2",
            ExponentMode::PropositionMinusN => "proposition_minus_n",
            ExponentMode::SurfaceDensity => "surface_density",
        }
    }
}

/// `α = |(a−b)·θ|`, `β = |P_{θ⊥}(a−b)|`, `ω̂₂ = unit(P_{θ⊥}(a−b))`.
fn pieces<const N: usize>(a: &Vector<N>, b: &Vector<N>, theta: &Vector<N>) -> Result<(f64, f64, f64, Vector<N>)> {
    check_abtheta(a, b, theta)?;
    let l = probe_lengths(a, b, theta);
    let d = a - b;
    let w2 = (d - theta * d.dot(theta)) / l.beta;
    Ok((l.alpha, l.beta, l.dist, w2))
}

fn combine(mode: ExponentMode, n: i32, alpha: f64, beta: f64, dist: f64, b1: f64, b2: f64) -> f64 {
    match mode {
        ExponentMode::TheoremMinus2 => alpha.powi(-2) * (b1 + beta.powi(-2) * b2),
        ExponentMode::PropositionMinusN => alpha.powi(-n) * b1 + beta.powi(-n) * b2,
        ExponentMode::SurfaceDensity => 2.0 / dist * (alpha.powi(2 - n) * b1 + beta.powi(2 - n) * b2),
    }
}

/// The closed-form value of `S` at the probe built from `(a, b, θ)`.
pub fn closed_form_s<const N: usize>(
    a: &Vector<N>,
    b: &Vector<N>,
    theta: &Vector<N>,
    kernel: &KernelSpec,
    mode: ExponentMode,
) -> Result<f64> {
    if !kernel.is_symmetric() || !kernel.is_even() {
        return Err(Error::Precondition("closed form needs a symmetric kernel even in ω".into()));
    }
    let (alpha, beta, dist, w2) = pieces(a, b, theta)?;
    let b1 = kernel.eval(a, b, theta);
    let b2 = kernel.eval(a, b, &w2);
    Ok(combine(mode, N as i32, alpha, beta, dist, b1, b2))
}

/// All conventions side by side.
pub fn closed_form_all<const N: usize>(a: &Vector<N>, b: &Vector<N>, theta: &Vector<N>, kernel: &KernelSpec) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (o, m) in out.iter_mut().zip(ExponentMode::ALL) {
        *o = closed_form_s(a, b, theta, kernel, m)?;
    }
    Ok(out)
}

/// A measured value of `S` at a probe, with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeSample<const N: usize> {
    #[serde(skip)]
    pub a: Vector<N>,
    #[serde(skip)]
    pub b: Vector<N>,
    #[serde(skip)]
    pub theta: Vector<N>,
    pub value: f64,
    pub uncertainty: f64,
}

/// Recovered `B(a, b)` at one probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Recovered<const N: usize> {
    #[serde(skip)]
    pub a: Vector<N>,
    #[serde(skip)]
    pub b: Vector<N>,
    pub estimate: f64,
    /// Sample uncertainty propagated through the inversion.
    pub residual: f64,
}

/// For `B = B(v, u)` both kernel evaluations in the closed form coincide,
/// so each probe determines `B(a, b)` by one division.
pub fn recover_omega_independent_b<const N: usize>(samples: &[ProbeSample<N>], mode: ExponentMode) -> Result<Vec<Recovered<N>>> {
    samples
        .iter()
        .map(|s| {
            let (alpha, beta, dist, _) = pieces(&s.a, &s.b, &s.theta)?;
            if alpha < 1e-6 || beta < 1e-6 {
                return Err(Error::Precondition(format!(
                    "near-degenerate Jacobian factor (|(a−b)·θ| = {alpha:.3e}, |P_θ⊥(a−b)| = {beta:.3e})"
                )));
            }
            let k = combine(mode, N as i32, alpha, beta, dist, 1.0, 1.0);
            Ok(Recovered { a: s.a, b: s.b, estimate: s.value / k, residual: s.uncertainty / k })
        })
        .collect()
}

/// One probe of the exponent experiment.
#[derive(Debug, Clone, Serialize)]
pub struct OracleRow<const N: usize> {
    pub study: EtaStudy<N>,
    /// Closed forms in the order of `modes`.
    pub closed: Vec<f64>,
    /// `|extrapolated − closed| / |closed|` per mode.
    pub rel_err: Vec<f64>,
    /// Modes within tolerance.
    pub matches: Vec<ExponentMode>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport<const N: usize> {
    pub modes: Vec<ExponentMode>,
    pub tolerance: f64,
    pub rows: Vec<OracleRow<N>>,
    /// The single mode matching at every probe, if there is one.
    pub winner: Option<ExponentMode>,
}

/// Compares the η-extrapolated normalised probe value against each
/// candidate convention at every `(a, b, θ)`.
pub fn exponent_oracle<const N: usize>(
    kernel: &KernelSpec,
    probes: &[(Vector<N>, Vector<N>, Vector<N>)],
    eta: f64,
    orders: &MollifierOrders,
    modes: &[ExponentMode],
    tolerance: f64,
) -> Result<OracleReport<N>> {
    let mut rows = Vec::with_capacity(probes.len());
    for (a, b, theta) in probes {
        let study = eta_study(&Probe::from_abtheta(a, b, theta, eta)?, kernel, 3, orders)?;
        let closed = modes.iter().map(|&m| closed_form_s(a, b, theta, kernel, m)).collect::<Result<Vec<_>>>()?;
        let x = study.normalized.limit;
        let rel_err: Vec<f64> = closed.iter().map(|c| ((x - c) / c).abs()).collect();
        let matches = modes.iter().zip(&rel_err).filter(|(_, e)| **e <= tolerance).map(|(m, _)| *m).collect();
        rows.push(OracleRow { study, closed, rel_err, matches });
    }
    let winner = match rows.first().map(|r| r.matches.clone()) {
        Some(first) if first.len() == 1 && rows.iter().all(|r| r.matches == first) => Some(first[0]),
        _ => None,
    };
    Ok(OracleReport { modes: modes.to_vec(), tolerance, rows, winner })
}
