//! Quantum error correction for continuously detected errors.
//!
//! Given detected error channels on a qubit register, this crate
//! synthesizes a stabilizer code for which every detected jump is exactly
//! reversible ([`code`]), a driving Hamiltonian that cancels the no-jump
//! backaction on the codespace plus per-channel correction unitaries
//! ([`control`]), and simulates the resulting protocol with seeded jump
//! trajectories checked against a master-equation integrator
//! ([`trajectory`], [`oracle`]).

pub mod channel;
pub mod code;
pub mod control;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod trajectory;

pub use channel::{
    axis_lowering, cptp_defect, d_operator, effective_jump_operator, kraus_set, lindblad_rhs,
    DOperator, ErrorChannel, KrausSet,
};
pub use code::{
    build_code, codespace_basis, null_space_involution, verify_correctability, CodeKind,
    CorrectabilityReport, Generator, StabilizerCode,
};
pub use control::{
    control_plan, correction_unitary, driving_hamiltonian, nojump_invariance_check,
    sector_assignment, worst_correction_fidelity, Axis, ControlPlan, NoJumpInvariance,
};
pub use error::{Error, Result};
pub use linalg::{pauli_expansion, BlochVector};
pub use oracle::{integrate_master_equation, master_equation_oracle, OracleSeries};
pub use trajectory::{
    fidelity, run_ensemble, run_trajectory, step, trace_distance, EnsembleResult, FidelityRecord,
    LogicalState, Protocol, SimConfig, StepEvent, TrajectoryState,
};
