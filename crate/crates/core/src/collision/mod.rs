//! Collision kinematics, kernels, quadrature rules, the collision operator
//! and the admissibility bound.

mod admissibility;
mod kernel;
mod kinematics;
mod operator;
mod rule;

pub use admissibility::{admissibility_check, admissibility_check_at, default_samples, kernel_mass, AdmissibilityReport};
pub use kernel::{bump_profile, AngularProfile, KernelSpec};
pub use kinematics::{collide, post_collision, pre_collision, UNIT_TOL};
pub use operator::{collision_q, collision_q_diag, collision_terms, CollisionTerm};
pub use rule::{ball_rule, ball_volume, sphere_measure, sphere_rule, QuadratureRule, RuleOrders};
