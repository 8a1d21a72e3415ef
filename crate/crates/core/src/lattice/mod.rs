//! Finite-dimensional Hilbert-lattice algebra on `W = R^m`.

mod interval;
mod operators;
mod projection;
mod subspace;
mod vector;

pub use interval::{project_interval, OrderInterval};
pub use operators::{
    find_interval_witness, generator_leaves_interval_invariant, interval_invariant, is_irreducible,
    is_positive_operator, leaves_box_invariant, lift_norm_check, max_row_abs_sum, pattern_strongly_connected,
    spectral_norm, INVARIANCE_TOL, PATTERN_TOL, POSITIVITY_TOL,
};
pub use projection::{
    commuting_projection_equivalence, commuting_projection_equivalence_with, find_ideal_witness, is_ideal,
    project_domination_cone, ConvexSet, IdealWitness, ProjectionRelations, DEFAULT_SEED,
};
pub use subspace::{make_subspace, Subspace, DEPENDENCE_TOL, MEMBERSHIP_TOL};
pub use vector::{lattice_decompose, Decomposition, LatticeVector};
