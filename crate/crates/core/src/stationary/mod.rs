//! Stationary states: linearised Hamiltonian, eigensolver and the self-consistent iteration.

mod eigen;
mod hamiltonian;
mod scf;
mod sigma;
mod verify;

pub use eigen::{eigensolve, eigenvalues, Eigenpairs, CLUSTER_TOL, COUPLING_DROP};
pub use hamiltonian::{build_hamiltonian, HamiltonianRep};
pub use scf::{implied_total, scf_solve, IterationRecord, ScfConfig, StationaryState, PHI_SLACK};
pub use sigma::{occupation_sum, solve_sigma};
pub use verify::{verify_stationary, StationaryResiduals, OCCUPATION_FLAG};
