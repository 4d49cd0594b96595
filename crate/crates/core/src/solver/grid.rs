//! Tensor lattices for the spatial and velocity variables.

use serde::{Deserialize, Serialize};

use crate::geometry::Domain;
use crate::{check_dimension, Error, Result, Vector};

/// What a field returns for velocities outside its lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionPolicy {
    /// Zero outside the lattice; each such query is counted.
    #[default]
    Zero,
    /// Value at the nearest lattice point.
    Clamp,
    /// The field's closed form (available for analytic parts only).
    Analytic,
}

/// Grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Nodes per spatial axis.
    pub spatial: usize,
    /// Nodes per velocity axis.
    pub velocity: usize,
    /// Velocity lattice covers `[−R_v, R_v]ᴺ`.
    pub velocity_radius: f64,
    /// Velocities with `|v| < v_min_fraction·R_v` carry no collision
    /// correction.
    pub v_min_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { spatial: 32, velocity: 32, velocity_radius: 4.0, v_min_fraction: 0.05 }
    }
}

/// Multilinear interpolation weights: up to `2ᴺ` `(node, weight)` pairs.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub idx: [u32; 8],
    pub w: [f64; 8],
    pub len: u8,
}

impl Stencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let mut acc = 0.0;
        for c in 0..self.len as usize {
            acc += self.w[c] * values[self.idx[c] as usize];
        }
        acc
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len as usize).map(move |c| (self.idx[c] as usize, self.w[c]))
    }
}

/// Uniform tensor lattice with nodes `lower + i·step`, `i < count`, per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<const N: usize> {
    pub lower: Vector<N>,
    pub step: Vector<N>,
    pub count: usize,
}

impl<const N: usize> Lattice<N> {
    /// Lattice spanning `[lower, upper]` with `count` nodes per axis.
    pub fn spanning(lower: Vector<N>, upper: Vector<N>, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config("a lattice needs at least 2 nodes per axis".into()));
        }
        let step = (upper - lower) / (count - 1) as f64;
        Ok(Self { lower, step, count })
    }

    pub fn len(&self) -> usize {
        self.count.pow(N as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn upper(&self) -> Vector<N> {
        self.lower + self.step * (self.count - 1) as f64
    }

    /// Node position for a flat index (last axis fastest).
    pub fn node(&self, flat: usize) -> Vector<N> {
        let mut rem = flat;
        let mut p = Vector::<N>::zeros();
        for k in (0..N).rev() {
            let i = rem % self.count;
            rem /= self.count;
            p[k] = self.lower[k] + self.step[k] * i as f64;
        }
        p
    }

    pub fn nodes(&self) -> Vec<Vector<N>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// True when `p` lies in the lattice hull (with a small relative slack).
    pub fn contains(&self, p: &Vector<N>) -> bool {
        (0..N).all(|k| {
            let r = (p[k] - self.lower[k]) / self.step[k];
            r >= -1e-9 && r <= (self.count - 1) as f64 + 1e-9
        })
    }

    pub fn clamp(&self, p: &Vector<N>) -> Vector<N> {
        let hi = self.upper();
        Vector::from_fn(|k, _| p[k].clamp(self.lower[k], hi[k]))
    }

    /// Multilinear stencil at `p`, clamped into the hull. Coordinates within
    /// `1e-9` cells of a node snap to it, so nodes are reproduced exactly.
    #[inline]
    pub fn stencil(&self, p: &Vector<N>) -> Stencil {
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        let last = (self.count - 1) as f64;
        for k in 0..N {
            let r = ((p[k] - self.lower[k]) / self.step[k]).clamp(0.0, last);
            let ri = r.round();
            if (r - ri).abs() < 1e-9 {
                base[k] = ri as usize;
                frac[k] = 0.0;
            } else {
                let i = (r.floor() as usize).min(self.count - 2);
                base[k] = i;
                frac[k] = r - i as f64;
            }
        }
        let mut st = Stencil { idx: [0; 8], w: [0.0; 8], len: 0 };
        for corner in 0..(1usize << N) {
            let mut w = 1.0;
            let mut flat = 0usize;
            let mut skip = false;
            for k in 0..N {
                let up = corner >> (N - 1 - k) & 1 == 1;
                let wk = if up { frac[k] } else { 1.0 - frac[k] };
                if wk == 0.0 {
                    skip = true;
                    break;
                }
                w *= wk;
                flat = flat * self.count + base[k] + up as usize;
            }
            if !skip {
                let c = st.len as usize;
                st.idx[c] = flat as u32;
                st.w[c] = w;
                st.len += 1;
            }
        }
        st
    }
}

/// Phase-space grid: a spatial lattice over the bounding box of Ω and a
/// velocity lattice over `[−R_v, R_v]ᴺ`.
///
/// Spatial nodes outside Ω̄ are kept so that every cell meeting Ω has all
/// its corners; they carry the values of their projection onto Ω̄.
#[derive(Debug, Clone)]
pub struct PhaseGrid<const N: usize> {
    pub domain: Domain<N>,
    pub spec: GridSpec,
    pub space: Lattice<N>,
    pub velocity: Lattice<N>,
    pub x_nodes: Vec<Vector<N>>,
    /// Projection of each spatial node onto Ω̄ (the node itself when inside).
    pub x_base: Vec<Vector<N>>,
    pub x_inside: Vec<bool>,
    pub v_nodes: Vec<Vector<N>>,
    /// `|v| ≥ v_min`.
    pub v_active: Vec<bool>,
    pub v_min: f64,
}

impl<const N: usize> PhaseGrid<N> {
    pub fn new(domain: &Domain<N>, spec: GridSpec) -> Result<Self> {
        check_dimension::<N>()?;
        if !(spec.velocity_radius > 0.0) || !(spec.v_min_fraction >= 0.0 && spec.v_min_fraction < 1.0) {
            return Err(Error::Config("velocity radius must be positive and v_min fraction in [0, 1)".into()));
        }
        let (lo, hi) = domain.bounding_box();
        let space = Lattice::spanning(lo, hi, spec.spatial)?;
        let r = spec.velocity_radius;
        let velocity = Lattice::spanning(Vector::repeat(-r), Vector::repeat(r), spec.velocity)?;
        let x_nodes = space.nodes();
        let x_base: Vec<_> = x_nodes.iter().map(|x| domain.project(x)).collect();
        let x_inside = x_nodes.iter().map(|x| domain.contains_closure(x)).collect();
        let v_nodes = velocity.nodes();
        let v_min = spec.v_min_fraction * r;
        let v_active = v_nodes.iter().map(|v: &Vector<N>| v.norm() >= v_min && v.norm() > 0.0).collect();
        Ok(Self { domain: domain.clone(), spec, space, velocity, x_nodes, x_base, x_inside, v_nodes, v_active, v_min })
    }

    pub fn nx(&self) -> usize {
        self.x_nodes.len()
    }

    pub fn nv(&self) -> usize {
        self.v_nodes.len()
    }

    /// Smallest spatial step.
    pub fn h(&self) -> f64 {
        self.space.step.min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stencil_reproduces_nodes() {
        let lat = Lattice::<2>::spanning(Vector::repeat(-1.0), Vector::repeat(1.0), 7).unwrap();
        for (i, p) in lat.nodes().iter().enumerate() {
            let st = lat.stencil(p);
            assert_eq!(st.len, 1);
            assert_eq!(st.idx[0] as usize, i);
            assert_eq!(st.w[0], 1.0);
        }
    }

    #[test]
    fn stencil_is_exact_for_bilinear_functions() {
        let lat = Lattice::<2>::spanning(Vector::<2>::new(0.0, -1.0), Vector::<2>::new(2.0, 3.0), 5).unwrap();
        let f = |p: &Vector<2>| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1];
        let vals: Vec<f64> = lat.nodes().iter().map(f).collect();
        for p in [Vector::<2>::new(0.3, 0.7), Vector::<2>::new(1.99, -0.99), Vector::<2>::new(1.0, 2.2)] {
            assert_relative_eq!(lat.stencil(&p).apply(&vals), f(&p), epsilon = 1e-13);
        }
        let lat3 = Lattice::<3>::spanning(Vector::repeat(0.0), Vector::repeat(1.0), 4).unwrap();
        let g = |p: &Vector<3>| p[0] * p[1] * p[2] - p[2] + 3.0;
        let vals: Vec<f64> = lat3.nodes().iter().map(g).collect();
        let p = Vector::<3>::new(0.21, 0.77, 0.5);
        assert_relative_eq!(lat3.stencil(&p).apply(&vals), g(&p), epsilon = 1e-13);
    }

    #[test]
    fn grid_marks_slow_velocities() {
        let g = PhaseGrid::new(&Domain::<2>::unit_ball(), GridSpec::default()).unwrap();
        assert_eq!(g.nv(), 1024);
        let inactive = g.v_active.iter().filter(|a| !**a).count();
        assert_eq!(inactive, 4);
        assert!(g.x_base.iter().all(|x| x.norm() <= 1.0 + 1e-15));
    }
}
