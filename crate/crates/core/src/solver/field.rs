//! Gridded phase-space functions.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use super::grid::{ExtensionPolicy, PhaseGrid};
use crate::{Error, Result, Vector};

/// Anything that can be evaluated at a phase point.
pub trait PhaseFunction<const N: usize>: Sync {
    fn value(&self, x: &Vector<N>, v: &Vector<N>) -> Result<f64>;
}

/// Adapter turning a closure into a [`PhaseFunction`].
pub struct FnPhase<F>(pub F);

impl<const N: usize, F> PhaseFunction<N> for FnPhase<F>
where
    F: Fn(&Vector<N>, &Vector<N>) -> f64 + Sync,
{
    fn value(&self, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
        Ok((self.0)(x, v))
    }
}

pub type AnalyticFn<const N: usize> = Arc<dyn Fn(&Vector<N>, &Vector<N>) -> f64 + Send + Sync>;

/// Node values `F(xᵢ, vⱼ)` (stored `[x][v]`) with multilinear interpolation.
///
/// Spatial queries are clamped into the lattice hull, which contains Ω̄.
/// Velocity queries outside the hull follow the [`ExtensionPolicy`].
pub struct PhaseField<const N: usize> {
    pub grid: Arc<PhaseGrid<N>>,
    pub values: Vec<f64>,
    pub policy: ExtensionPolicy,
    analytic: Option<AnalyticFn<N>>,
    out_of_range: AtomicUsize,
}

impl<const N: usize> fmt::Debug for PhaseField<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseField")
            .field("nx", &self.grid.nx())
            .field("nv", &self.grid.nv())
            .field("policy", &self.policy)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl<const N: usize> Clone for PhaseField<N> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            policy: self.policy,
            analytic: self.analytic.clone(),
            out_of_range: AtomicUsize::new(self.out_of_range.load(Ordering::Relaxed)),
        }
    }
}

impl<const N: usize> PhaseField<N> {
    pub fn new(grid: Arc<PhaseGrid<N>>, values: Vec<f64>, policy: ExtensionPolicy) -> Result<Self> {
        if values.len() != grid.nx() * grid.nv() {
            return Err(Error::Config(format!("field has {} values, grid needs {}", values.len(), grid.nx() * grid.nv())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value at flat index {bad}")));
        }
        Ok(Self { grid, values, policy, analytic: None, out_of_range: AtomicUsize::new(0) })
    }

    /// Samples `f` at every node (spatial nodes outside Ω̄ use their
    /// projection).
    pub fn from_fn(grid: Arc<PhaseGrid<N>>, policy: ExtensionPolicy, f: impl Fn(&Vector<N>, &Vector<N>) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.nx() * grid.nv());
        for x in &grid.x_base {
            for v in &grid.v_nodes {
                values.push(f(x, v));
            }
        }
        Self::new(grid, values, policy)
    }

    /// Attaches the closed form used by [`ExtensionPolicy::Analytic`].
    pub fn with_analytic(mut self, f: AnalyticFn<N>) -> Self {
        self.analytic = Some(f);
        self
    }

    pub fn node(&self, ix: usize, iv: usize) -> f64 {
        self.values[ix * self.grid.nv() + iv]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Number of velocity queries that fell outside the lattice.
    pub fn out_of_range_count(&self) -> usize {
        self.out_of_range.load(Ordering::Relaxed)
    }

    pub fn eval(&self, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
        let g = &self.grid;
        let v_use = if g.velocity.contains(v) {
            *v
        } else {
            self.out_of_range.fetch_add(1, Ordering::Relaxed);
            match self.policy {
                ExtensionPolicy::Zero => return Ok(0.0),
                ExtensionPolicy::Clamp => g.velocity.clamp(v),
                ExtensionPolicy::Analytic => {
                    return match &self.analytic {
                        Some(f) => Ok(f(x, v)),
                        None => Err(Error::Domain("analytic extension requested but the field has no closed form".into())),
                    }
                }
            }
        };
        let xs = g.space.stencil(x);
        let vs = g.velocity.stencil(&v_use);
        let nv = g.nv();
        let mut acc = 0.0;
        for (ix, wx) in xs.iter() {
            let row = &self.values[ix * nv..(ix + 1) * nv];
            acc += wx * vs.apply(row);
        }
        Ok(acc)
    }
}

impl<const N: usize> PhaseFunction<N> for PhaseField<N> {
    fn value(&self, x: &Vector<N>, v: &Vector<N>) -> Result<f64> {
        self.eval(x, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::solver::grid::GridSpec;
    use approx::assert_relative_eq;

    fn grid() -> Arc<PhaseGrid<2>> {
        Arc::new(PhaseGrid::new(&Domain::unit_ball(), GridSpec { spatial: 9, velocity: 9, ..Default::default() }).unwrap())
    }

    #[test]
    fn nodes_reproduced_exactly() {
        let g = grid();
        let f = PhaseField::from_fn(g.clone(), ExtensionPolicy::Zero, |x, v| (x[0] + 2.0 * v[1]).sin()).unwrap();
        for ix in (0..g.nx()).step_by(7) {
            for iv in (0..g.nv()).step_by(5) {
                assert_eq!(f.eval(&g.x_nodes[ix], &g.v_nodes[iv]).unwrap(), f.node(ix, iv));
            }
        }
    }

    #[test]
    fn extension_policies() {
        let g = grid();
        let f = PhaseField::from_fn(g.clone(), ExtensionPolicy::Zero, |_, _| 2.0).unwrap();
        let far = Vector::<2>::new(10.0, 0.0);
        assert_eq!(f.eval(&Vector::zeros(), &far).unwrap(), 0.0);
        assert_eq!(f.out_of_range_count(), 1);
        let mut c = f.clone();
        c.policy = ExtensionPolicy::Clamp;
        assert_relative_eq!(c.eval(&Vector::zeros(), &far).unwrap(), 2.0);
        c.policy = ExtensionPolicy::Analytic;
        assert!(c.eval(&Vector::zeros(), &far).is_err());
        let a = c.with_analytic(Arc::new(|_, v: &Vector<2>| v[0]));
        assert_eq!(a.eval(&Vector::zeros(), &far).unwrap(), 10.0);
    }
}
