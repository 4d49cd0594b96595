//! Kernel recovery from second-order boundary data.
//!
//! A probe `(v*, v₀, u₀)` sharpens the inflow data into bumps at `v₀` and
//! `u₀` and reads the second-order source near `v*`. The source is
//! supported where `(v*−v₀)·(v*−u₀) = 0` and there it is a combination of
//! `B` at the two scattering directions ω₁ and ω₂.

mod closed_form;
mod mollify;
mod monotonicity;
mod probe;

pub use closed_form::{
    closed_form_all, closed_form_s, exponent_oracle, recover_omega_independent_b, ExponentMode, OracleReport, OracleRow, ProbeSample,
    Recovered,
};
pub use mollify::{
    eta_study, mollified_s, richardson, thales_cap, Bump, EtaStudy, Extrapolation, JacobianFactors, MollifierOrders, ProbeResult,
};
pub use monotonicity::{monotonicity_certificate, monotonicity_p, monotonicity_p_expanded, p_integral, Certificate, CertificateRow};
pub use probe::{
    abtheta_from_probe, check_abtheta, check_relations, collision_identities, omega_pair, probe_from_abtheta, probe_lengths, Clause, Probe,
    ProbeLengths, Relations, RELATION_TOL,
};
