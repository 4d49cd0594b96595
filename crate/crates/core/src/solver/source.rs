//! Inflow data `g` on Γ₋.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::collision::bump_profile;
use crate::geometry::Domain;
use crate::{Error, Result, Vector};

type PhaseFn<const N: usize> = Arc<dyn Fn(&Vector<N>, &Vector<N>) -> f64 + Send + Sync>;

/// Boundary datum `g(x, v)`, evaluated on Γ₋ (and, by the same closed form,
/// anywhere it is needed).
#[derive(Clone)]
pub enum BoundarySource<const N: usize> {
    Constant(f64),
    /// `amplitude · exp(rate·|v − center|²)`; `rate = −1`, `center = 0` is the
    /// Maxwellian.
    Exponential {
        amplitude: f64,
        center: Vector<N>,
        rate: f64,
    },
    /// `amplitude · b(|v − center|/width)` with the compact bump `b`.
    VelocityBump {
        amplitude: f64,
        center: Vector<N>,
        width: f64,
    },
    /// `amplitude · (1 + slope·x) · exp(−rate·|v|²)`.
    LinearInX {
        amplitude: f64,
        slope: Vector<N>,
        rate: f64,
    },
    /// `Σ cᵢ gᵢ`.
    Combination(Vec<(f64, BoundarySource<N>)>),
    /// Arbitrary closure with a user-supplied sup-norm bound.
    Custom {
        f: PhaseFn<N>,
        velocity_only: bool,
        sup: f64,
    },
    /// Nearest-sample lookup in a table of `(x, v, value)`.
    Sampled(Arc<Vec<(Vector<N>, Vector<N>, f64)>>),
}

impl<const N: usize> fmt::Debug for BoundarySource<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundarySource::Constant(c) => write!(f, "Constant({c})"),
            BoundarySource::Exponential { amplitude, center, rate } => {
                write!(f, "Exponential({amplitude}, {:?}, {rate})", center.as_slice())
            }
            BoundarySource::VelocityBump { amplitude, center, width } => {
                write!(f, "VelocityBump({amplitude}, {:?}, {width})", center.as_slice())
            }
            BoundarySource::LinearInX { amplitude, slope, rate } => {
                write!(f, "LinearInX({amplitude}, {:?}, {rate})", slope.as_slice())
            }
            BoundarySource::Combination(terms) => f.debug_list().entries(terms).finish(),
            BoundarySource::Custom { velocity_only, sup, .. } => {
                write!(f, "Custom(velocity_only={velocity_only}, sup={sup})")
            }
            BoundarySource::Sampled(t) => write!(f, "Sampled({} rows)", t.len()),
        }
    }
}

impl<const N: usize> BoundarySource<N> {
    pub fn maxwellian(amplitude: f64) -> Self {
        BoundarySource::Exponential { amplitude, center: Vector::zeros(), rate: -1.0 }
    }

    pub fn custom(f: impl Fn(&Vector<N>, &Vector<N>) -> f64 + Send + Sync + 'static, velocity_only: bool, sup: f64) -> Self {
        BoundarySource::Custom { f: Arc::new(f), velocity_only, sup }
    }

    /// `a·g`.
    pub fn scaled(&self, a: f64) -> Self {
        BoundarySource::Combination(vec![(a, self.clone())])
    }

    /// `a·g₁ + b·g₂`.
    pub fn combine(a: f64, g1: &Self, b: f64, g2: &Self) -> Self {
        BoundarySource::Combination(vec![(a, g1.clone()), (b, g2.clone())])
    }

    pub fn eval(&self, x: &Vector<N>, v: &Vector<N>) -> f64 {
        match self {
            BoundarySource::Constant(c) => *c,
            BoundarySource::Exponential { amplitude, center, rate } => amplitude * (rate * (v - center).norm_squared()).exp(),
            BoundarySource::VelocityBump { amplitude, center, width } => amplitude * bump_profile((v - center).norm() / width),
            BoundarySource::LinearInX { amplitude, slope, rate } => amplitude * (1.0 + slope.dot(x)) * (-rate * v.norm_squared()).exp(),
            BoundarySource::Combination(terms) => terms.iter().map(|(c, g)| c * g.eval(x, v)).sum(),
            BoundarySource::Custom { f, .. } => f(x, v),
            BoundarySource::Sampled(rows) => rows
                .iter()
                .map(|(sx, sv, val)| ((sx - x).norm_squared() + (sv - v).norm_squared(), *val))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(_, val)| val)
                .unwrap_or(0.0),
        }
    }

    /// True when `g` does not depend on `x`; the free transport is then
    /// `F₀(x, v) = g(v)` everywhere.
    pub fn is_velocity_only(&self) -> bool {
        match self {
            BoundarySource::LinearInX { .. } | BoundarySource::Sampled(_) => false,
            BoundarySource::Combination(t) => t.iter().all(|(_, g)| g.is_velocity_only()),
            BoundarySource::Custom { velocity_only, .. } => *velocity_only,
            _ => true,
        }
    }

    /// Upper bound of `sup |g|` over `Ω̄ × {|v| ≤ √N·R_v}` (the velocity
    /// lattice hull).
    pub fn sup_norm(&self, domain: &Domain<N>, velocity_radius: f64) -> f64 {
        let vmax = velocity_radius * (N as f64).sqrt();
        match self {
            BoundarySource::Constant(c) => c.abs(),
            BoundarySource::Exponential { amplitude, center, rate } => {
                if *rate <= 0.0 {
                    amplitude.abs()
                } else {
                    amplitude.abs() * (rate * (vmax + center.norm()).powi(2)).exp()
                }
            }
            BoundarySource::VelocityBump { amplitude, .. } => amplitude.abs(),
            BoundarySource::LinearInX { amplitude, slope, rate } => {
                let (lo, hi) = domain.bounding_box();
                let reach: f64 = (0..N).map(|k| (slope[k] * lo[k]).abs().max((slope[k] * hi[k]).abs())).sum();
                let vel = if *rate >= 0.0 { 1.0 } else { (-rate * vmax * vmax).exp() };
                amplitude.abs() * (1.0 + reach) * vel
            }
            BoundarySource::Combination(t) => t.iter().map(|(c, g)| c.abs() * g.sup_norm(domain, velocity_radius)).sum(),
            BoundarySource::Custom { sup, .. } => *sup,
            BoundarySource::Sampled(rows) => rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max),
        }
    }
}

/// Serializable inflow description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    Constant { value: f64 },
    Maxwellian { amplitude: f64 },
    Exponential { amplitude: f64, center: Vec<f64>, rate: f64 },
    VelocityBump { amplitude: f64, center: Vec<f64>, width: f64 },
    LinearInX { amplitude: f64, slope: Vec<f64>, rate: f64 },
}

impl SourceSpec {
    pub fn build<const N: usize>(&self) -> Result<BoundarySource<N>> {
        let vec = |c: &Vec<f64>, what: &str| {
            if c.len() == N {
                Ok(Vector::<N>::from_column_slice(c))
            } else {
                Err(Error::Config(format!("{what} must have {N} components")))
            }
        };
        Ok(match self {
            SourceSpec::Constant { value } => BoundarySource::Constant(*value),
            SourceSpec::Maxwellian { amplitude } => BoundarySource::maxwellian(*amplitude),
            SourceSpec::Exponential { amplitude, center, rate } => {
                BoundarySource::Exponential { amplitude: *amplitude, center: vec(center, "center")?, rate: *rate }
            }
            SourceSpec::VelocityBump { amplitude, center, width } => {
                if !(*width > 0.0) {
                    return Err(Error::Config("bump width must be positive".into()));
                }
                BoundarySource::VelocityBump { amplitude: *amplitude, center: vec(center, "center")?, width: *width }
            }
            SourceSpec::LinearInX { amplitude, slope, rate } => {
                BoundarySource::LinearInX { amplitude: *amplitude, slope: vec(slope, "slope")?, rate: *rate }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn combination_is_linear() {
        let a = BoundarySource::<2>::maxwellian(2.0);
        let b = BoundarySource::<2>::Constant(0.5);
        let c = BoundarySource::combine(3.0, &a, -1.0, &b);
        let (x, v) = (Vector::<2>::new(0.1, 0.2), Vector::<2>::new(0.5, -1.0));
        assert_relative_eq!(c.eval(&x, &v), 3.0 * a.eval(&x, &v) - 0.5, epsilon = 1e-15);
        assert!(c.is_velocity_only());
        assert_relative_eq!(c.sup_norm(&Domain::unit_ball(), 4.0), 6.5);
    }

    #[test]
    fn spec_dimension_checked() {
        let s = SourceSpec::VelocityBump { amplitude: 1.0, center: vec![0.0; 3], width: 1.0 };
        assert!(s.build::<2>().is_err());
        assert!(s.build::<3>().is_ok());
    }
}
