//! Brute-force oracles and random instance generators for `qw-core`.
//!
//! The oracles avoid the algorithms they check: the bracket is contracted
//! from gradients instead of formed as a matrix, dissipativity is read off a
//! dense angle grid instead of a refined sweep, and common zeros are located
//! by closed-form circle intersections and bisection instead of Gauss–Newton.

pub mod generators;
pub mod oracles;

pub use generators::{
    constructed_known_zero, generate_passing_instance, random_pd_pair, random_symmetric, random_traceless,
    random_traceless_pair, PassingInstance,
};
pub use oracles::{
    bracket_gradient_oracle, dissipativity_sweep_oracle, restricted_rank_property, witness_grid_oracle, GridBest,
    GridReport, OracleConfig,
};
