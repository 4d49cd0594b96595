//! Numerical laboratory for the stationary nonlinear Boltzmann equation
//! `v·∇ₓF = Q(F,F)` on a bounded domain with inflow data on Γ₋.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: balls and boxes, exit times τ±, boundary classification
//!   and quadrature along characteristics.
//! * [`collision`]: collision kinematics, kernel families, sphere and
//!   velocity-ball quadrature, the bilinear collision operator and the
//!   admissibility bound.
//! * [`solver`]: transport solves, the Picard fixed-point solver for small
//!   inflow data, boundary traces and the incoming-to-outgoing map 𝒜.
//! * [`linearize`]: first and second linearizations of the solution and of
//!   𝒜, with the quadrature route and the finite-difference route for `W`.
//! * [`reconstruct`]: probe geometry, mollified delta probes, closed-form
//!   combinations of the kernel and the monotonicity probe.
//! * [`suites`]: property suites shared by the CLI `verify` stage and the
//!   acceptance tests.
//!
//! All vectors are fixed-size `nalgebra` vectors; the spatial dimension is
//! a const generic `N` (2 or 3).

pub mod collision;
pub mod error;
pub mod geometry;
pub mod linearize;
pub mod quadrature;
pub mod reconstruct;
pub mod solver;
pub mod suites;

pub use error::{Error, Result};

/// Position or velocity in ℝᴺ.
pub type Vector<const N: usize> = nalgebra::SVector<f64, N>;

/// Returns `Err` unless `N` is a supported spatial dimension.
pub fn check_dimension<const N: usize>() -> Result<()> {
    if N == 2 || N == 3 {
        Ok(())
    } else {
        Err(Error::Config(format!("dimension {N} is not supported (use 2 or 3)")))
    }
}
