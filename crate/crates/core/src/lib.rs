//! Matrix-level nonsolvability checks for doubly characteristic second-order
//! operators with complex coefficients `A + iB`.
//!
//! * [`forms`]: quadratic forms, constant Poisson structures, brackets.
//! * [`pencil`]: `span{A, B}`: independence, extreme ranks, joint kernel,
//!   symplectic subspaces.
//! * [`dissipativity`]: non-dissipativity decisions with trace certificates.
//! * [`witness`]: numerical search for points of `{Q_A = Q_B = 0}`.
//! * [`checker`]: the combined verdict for two-step nilpotent groups and the
//!   Heisenberg group.
//!
//! Every routine is a pure function of its inputs, configuration and seed.

pub mod checker;
pub mod config;
pub mod dissipativity;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod pencil;
pub mod witness;

pub use checker::{
    check_heisenberg, check_at_point, check_two_step, find_nondegenerate_mu, j_mu, witness_evidence,
    Branch, CheckConfig, ConditionB, ConditionC, ConditionReport, EvidenceBundle, OperatorSpec, Scope,
    TwoStepGroup, Verdict, VerdictKind,
};
pub use config::ToleranceConfig;
pub use dissipativity::{
    is_non_dissipative, traceless_normalize, CertificateStatus, Dissipativity, DissipativityDecision,
};
pub use error::{Error, Result};
pub use forms::{evaluate, heisenberg_bracket_matrix, poisson_bracket_forms, PoissonStructure, SymmetricForm};
pub use pencil::{is_symplectic_subspace, joint_kernel, linear_independence, pencil_minmax_rank, Pencil, PencilRanks};
pub use witness::{
    hoermander_witness, project_to_variety, transversal_point, Projection, SearchConfig, SearchOutcome,
    WitnessPoint,
};
