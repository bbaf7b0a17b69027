//! Fixed-confidence best-arm identification driven by the gap entropy of an
//! instance: analytics, sampling primitives, elimination solvers, the SIGN-ξ
//! reduction and a seeded Monte-Carlo bench harness.

pub mod bench;
pub mod instance;
pub mod oracle;
pub mod primitives;
pub mod profile;
pub mod signxi;
pub mod solvers;

pub use instance::{
    make_discrete_instance, parse_instance, ArmId, ArmSpec, Instance, InstanceError,
};
pub use oracle::{BudgetExceeded, RewardFamily, SamplingOracle, DEFAULT_BUDGET};
pub use profile::{conjectured_bound, entropy, group_index, profile, GapProfile, GroupStats};
pub use solvers::{Answer, RunOutcome, Solver, SolverConfig, SolverError};
