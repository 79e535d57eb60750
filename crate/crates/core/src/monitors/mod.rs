//! Online and post-hoc checks of the convergence inequalities.

mod check;
mod contraction;
mod energy;
mod metrics;
mod theorems;

pub use check::{
    check_trajectory, convergence_verdict, recorded_sup_alpha, violation_counts, CheckReport, CheckSummary,
    ConvergenceVerdict, StepRecord,
};
pub use contraction::{
    beta, contraction_check, diameter_slack, global_diameter, theorem1_monitor, ContractionVerdict, Theorem1Verdict,
};
pub use energy::{displacement_sq, energy, energy_slack, nl8_lower_bound};
pub use metrics::{components_interact, step_metrics, StepMetrics};
pub use theorems::{
    corollary_bounds, interaction_equivalence, tau_delta, theorem2_terms, theorem3_component_bounds, theorem3_rhs,
    theorem3_step_bound, CorollaryBounds, InteractionReport, InteractionStep, Theorem2Step, Theorem2Terms,
    Theorem3Verdict, THEOREM3_RTOL,
};

pub(crate) use metrics::{online_checks, step_metrics_with};
