//! Collision kernel families `B(v, u, ω)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vector};

/// Angular factor `q₀` of the hard-potential-like family, a function of
/// `c = ω·unit(v − u)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum AngularProfile {
    /// `q₀ ≡ 1`.
    #[default]
    One,
    /// Smooth bump in `c²` centred at `center ∈ (0,1)` with half-width
    /// `width`; vanishes near `c = 0` and `c = ±1` when the support stays
    /// inside `(0, 1)`.
    AngularBump { center: f64, width: f64 },
}

impl AngularProfile {
    fn eval(&self, c: f64) -> f64 {
        match self {
            AngularProfile::One => 1.0,
            AngularProfile::AngularBump { center, width } => bump_profile((c * c - center) / width),
        }
    }
}

/// `exp(−r²/(1−r²))` on `|r| < 1`, zero outside; equals 1 at the origin.
pub fn bump_profile(r: f64) -> f64 {
    let r2 = r * r;
    if r2 < 1.0 {
        (-r2 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Analytic description of a collision kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `B ≡ value`.
    Constant { value: f64 },
    /// `B = Σₖ cₖ |v − u|ᵏ`.
    OmegaIndependentPoly { coefficients: Vec<f64> },
    /// `B = scale · |v − u|^γ · q₀(ω·unit(v − u))`, `0 < γ ≤ 1`.
    HardPotentialLike {
        scale: f64,
        gamma: f64,
        #[serde(default)]
        angular: AngularProfile,
    },
    /// `B = amplitude · b(|v − c|/ρ) · b(|u − c|/ρ)` with the compact bump
    /// `b`; supported in the ball of radius `ρ = width` around `c = center`.
    GaussianCompact { amplitude: f64, center: Vec<f64>, width: f64 },
    /// Sum of kernels.
    Sum { terms: Vec<KernelSpec> },
}

impl KernelSpec {
    pub fn zero() -> Self {
        KernelSpec::Constant { value: 0.0 }
    }

    /// Checks parameters against the family constraints for dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            KernelSpec::Constant { value } if !value.is_finite() => bad("constant kernel value must be finite".into()),
            KernelSpec::OmegaIndependentPoly { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    bad("polynomial kernel needs finite coefficients".into())
                } else {
                    Ok(())
                }
            }
            KernelSpec::HardPotentialLike { scale, gamma, angular } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return bad(format!("hard-potential exponent must lie in (0, 1], got {gamma}"));
                }
                if !scale.is_finite() {
                    return bad("hard-potential scale must be finite".into());
                }
                if let AngularProfile::AngularBump { center, width } = angular {
                    if !(*width > 0.0) || !center.is_finite() {
                        return bad("angular bump needs a finite centre and positive width".into());
                    }
                }
                Ok(())
            }
            KernelSpec::GaussianCompact { amplitude, center, width } => {
                if center.len() != dim {
                    return bad(format!("kernel centre has {} components, expected {dim}", center.len()));
                }
                if !(*width > 0.0) || !amplitude.is_finite() {
                    return bad("compact kernel needs positive width and finite amplitude".into());
                }
                Ok(())
            }
            KernelSpec::Sum { terms } => terms.iter().try_for_each(|t| t.validate(dim)),
            _ => Ok(()),
        }
    }

    /// `B(v, u, ω) = B(u, v, ω)`. All shipped families satisfy this.
    pub fn is_symmetric(&self) -> bool {
        true
    }

    /// `B(v, u, −ω) = B(v, u, ω)`. All shipped families satisfy this.
    pub fn is_even(&self) -> bool {
        true
    }

    /// True when `B` does not depend on ω.
    pub fn is_omega_independent(&self) -> bool {
        match self {
            KernelSpec::HardPotentialLike { angular, .. } => *angular == AngularProfile::One,
            KernelSpec::Sum { terms } => terms.iter().all(|t| t.is_omega_independent()),
            _ => true,
        }
    }

    /// True when `B ≡ 0` is evident from the parameters.
    pub fn is_zero(&self) -> bool {
        match self {
            KernelSpec::Constant { value } => *value == 0.0,
            KernelSpec::OmegaIndependentPoly { coefficients } => coefficients.iter().all(|c| *c == 0.0),
            KernelSpec::HardPotentialLike { scale, .. } => *scale == 0.0,
            KernelSpec::GaussianCompact { amplitude, .. } => *amplitude == 0.0,
            KernelSpec::Sum { terms } => terms.iter().all(|t| t.is_zero()),
        }
    }

    /// Evaluates `B(v, u, ω)`.
    pub fn eval<const N: usize>(&self, v: &Vector<N>, u: &Vector<N>, omega: &Vector<N>) -> f64 {
        match self {
            KernelSpec::Constant { value } => *value,
            KernelSpec::OmegaIndependentPoly { coefficients } => {
                let r = (v - u).norm();
                coefficients.iter().rev().fold(0.0, |acc, c| acc * r + c)
            }
            KernelSpec::HardPotentialLike { scale, gamma, angular } => {
                let d = v - u;
                let r = d.norm();
                if r == 0.0 {
                    return 0.0;
                }
                let c = d.dot(omega) / r;
                scale * r.powf(*gamma) * angular.eval(c)
            }
            KernelSpec::GaussianCompact { amplitude, center, width } => {
                let c = Vector::<N>::from_iterator(center.iter().copied());
                amplitude * bump_profile((v - c).norm() / width) * bump_profile((u - c).norm() / width)
            }
            KernelSpec::Sum { terms } => terms.iter().map(|t| t.eval(v, u, omega)).sum(),
        }
    }

    /// The ω-free form `B(v, u)` of an ω-independent kernel.
    pub fn eval_omega_free<const N: usize>(&self, v: &Vector<N>, u: &Vector<N>) -> Result<f64> {
        if !self.is_omega_independent() {
            return Err(Error::Precondition("kernel depends on ω".into()));
        }
        let mut omega = Vector::<N>::zeros();
        omega[0] = 1.0;
        Ok(self.eval(v, u, &omega))
    }
}
