//! Machine-readable synthesis and verification reports.

use qfec_core::channel::{d_operator, kraus_set};
use qfec_core::code::{CodeKind, CorrectabilityReport, StabilizerCode};
use qfec_core::control::{
    control_plan, driving_hamiltonian, nojump_invariance_check, sector_assignment,
    worst_correction_fidelity, Axis,
};
use qfec_core::{pauli_expansion, verify_correctability, ErrorChannel, Result};
use serde::Serialize;

pub const ANTICOMMUTATION_TOL: f64 = 1e-10;
pub const NOJUMP_TOL: f64 = 1e-12;
pub const CORRECTION_FIDELITY_TOL: f64 = 1e-9;
/// Pauli coefficients at or below this are omitted from listings.
pub const PAULI_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct PauliTerm {
    pub pauli: String,
    pub coefficient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisReport {
    pub n: usize,
    pub kind: CodeKind,
    pub logical_count: usize,
    pub codespace_dimension: usize,
    /// Per generator, one Bloch vector per qubit.
    pub generators: Vec<Vec<[f64; 3]>>,
    pub generator_labels: Vec<String>,
    /// `None` when the code admits no driving Hamiltonian.
    pub hamiltonian: Option<Vec<PauliTerm>>,
}

fn generator_arrays(code: &StabilizerCode) -> Vec<Vec<[f64; 3]>> {
    code.generators
        .iter()
        .map(|g| g.factors.iter().map(|v| v.to_array()).collect())
        .collect()
}

pub fn synthesis_report(code: &StabilizerCode, channels: &[ErrorChannel]) -> SynthesisReport {
    let hamiltonian = match driving_hamiltonian(channels, code) {
        Ok(h) => Some(
            pauli_expansion(&h, code.n, PAULI_CUTOFF)
                .into_iter()
                .map(|(pauli, coefficient)| PauliTerm { pauli, coefficient })
                .collect(),
        ),
        Err(e) => {
            log::warn!("no driving Hamiltonian: {e}");
            None
        }
    };
    SynthesisReport {
        n: code.n,
        kind: code.kind,
        logical_count: code.logical_count,
        codespace_dimension: code.codespace.len(),
        generators: generator_arrays(code),
        generator_labels: code.generators.iter().map(|g| g.label()).collect(),
        hamiltonian,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnticommutationEntry {
    pub channel: usize,
    pub qubit: usize,
    /// Bloch axis for the two-generator code, absent otherwise.
    pub axis: Option<char>,
    pub generator: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoJumpSummary {
    pub dt: f64,
    pub a: f64,
    pub expected_a: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub kind: CodeKind,
    pub logical_count: usize,
    pub generators: Vec<Vec<[f64; 3]>>,
    pub correctability: CorrectabilityReport,
    pub anticommutation: Vec<AnticommutationEntry>,
    pub max_anticommutation: f64,
    pub nojump: Option<NoJumpSummary>,
    pub worst_correction_fidelity: Option<f64>,
    /// Checks that could not run, with the reason.
    pub skipped: Vec<String>,
    pub passed: bool,
}

fn anticommutation(code: &StabilizerCode, channels: &[ErrorChannel]) -> Vec<AnticommutationEntry> {
    let mut out = Vec::new();
    for (i, ch) in channels.iter().enumerate() {
        let d = d_operator(ch);
        if d.is_zero() {
            continue;
        }
        match code.kind {
            CodeKind::SingleGenerator => out.push(AnticommutationEntry {
                channel: i,
                qubit: ch.qubit,
                axis: None,
                generator: 0,
                residual: code.generators[0].anticommutator_norm(&d.matrix, ch.qubit),
            }),
            CodeKind::Erasure => {
                for axis in Axis::ALL {
                    let l = axis.index();
                    if d.bloch.to_array()[l] == 0.0 {
                        continue;
                    }
                    let g = sector_assignment(axis, code).expect("erasure code");
                    out.push(AnticommutationEntry {
                        channel: i,
                        qubit: ch.qubit,
                        axis: Some(['x', 'y', 'z'][l]),
                        generator: g,
                        residual: code.generators[g]
                            .anticommutator_norm(&d.bloch.axis_term(l), ch.qubit),
                    });
                }
            }
            CodeKind::Custom => {}
        }
    }
    out
}

/// Runs every structural check on `code` against `channels`, evaluating
/// no-jump invariance at step `dt`.
pub fn verify_report(
    code: &StabilizerCode,
    channels: &[ErrorChannel],
    dt: f64,
) -> Result<VerifyReport> {
    let correctability = verify_correctability(code, channels);
    let anticommutation = anticommutation(code, channels);
    let max_anticommutation = anticommutation
        .iter()
        .map(|e| e.residual)
        .fold(0.0, f64::max);
    let mut skipped = Vec::new();
    let mut passed = correctability.passed() && max_anticommutation <= ANTICOMMUTATION_TOL;
    if code.kind == CodeKind::Custom {
        skipped.push("anticommutation: generators are not a synthesized code".to_string());
    }

    let mut nojump = None;
    let mut worst = None;
    match control_plan(channels, code) {
        Ok(plan) => {
            let ks = kraus_set(channels, &plan.driving, code.n, dt)?;
            let check = nojump_invariance_check(&ks, code);
            let total: f64 = channels.iter().map(|c| d_operator(c).offset_scalar).sum();
            let expected_a = 1.0 - total * dt / 2.0;
            passed &= check.residual <= NOJUMP_TOL && (check.a - expected_a).abs() <= NOJUMP_TOL;
            nojump = Some(NoJumpSummary {
                dt,
                a: check.a,
                expected_a,
                residual: check.residual,
            });
            let f = worst_correction_fidelity(channels, code, &plan.corrections);
            passed &= (1.0 - f).abs() <= CORRECTION_FIDELITY_TOL;
            worst = Some(f);
        }
        Err(e) => {
            skipped.push(format!("no-jump invariance and jump correction: {e}"));
            passed = false;
        }
    }

    Ok(VerifyReport {
        n: code.n,
        kind: code.kind,
        logical_count: code.logical_count,
        generators: generator_arrays(code),
        correctability,
        anticommutation,
        max_anticommutation,
        nojump,
        worst_correction_fidelity: worst,
        skipped,
        passed,
    })
}
