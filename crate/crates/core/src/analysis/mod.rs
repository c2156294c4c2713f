//! Numerical checks of the ensemble lower bound, the optimality of linked
//! ensembles, the performance difference identity and the max-ent surrogate.

mod bound;
mod link;
mod maxent;

pub use bound::{
    bound_coefficient, bound_csv, bound_suite, expected_sqrt_kl, joint_objective, lower_bound_report,
    pdl_suite, random_bound_instance, verify_performance_difference, BoundCase, BoundReport,
    JointObjective, PdlReport, BOUND_TOL, PDL_TOL,
};
pub use link::{link_suite, verify_link_optimality, LinkCase, LinkOptimalityReport, OptimizerBudget, LINK_TOL};
pub use maxent::{maxent_equivalence_check, maxent_suite, MaxEntReport, MAXENT_DISCOUNT};
