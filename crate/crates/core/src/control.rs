//! Driving Hamiltonian and post-jump correction unitaries.
//!
//! With the trace-preserving no-jump operator and the driving Hamiltonian
//! built here, `Omega_0 = a 1 - (dt/2) sum D (1 - S)` holds as a matrix
//! identity, so the codespace is left invariant by no-jump evolution. A
//! detected jump is undone by an instantaneous unitary that maps the
//! jumped codespace back onto itself.

use serde::Serialize;

use crate::channel::{d_operator, effective_jump_operator, ErrorChannel, KrausSet};
use crate::code::{verify_correctability, CodeKind, StabilizerCode, CORRECTABILITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_local, kron_factors, real, tensor_embed, unitary_completion, CMatrix, CVector, Mat2, I,
};

/// `c'` at or below this is treated as an identically zero channel.
const DEGENERATE_RATE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Generator of `{X^n, Z^n}` that anticommutes with `sigma_axis` on any
/// qubit. Both anticommute with Y; X^n is used.
pub fn sector_assignment(axis: Axis, code: &StabilizerCode) -> Result<usize> {
    if code.kind != CodeKind::Erasure {
        return Err(Error::NotApplicable(
            "sector assignment needs the {X^n, Z^n} code",
        ));
    }
    Ok(match axis {
        Axis::X => 1,
        Axis::Y | Axis::Z => 0,
    })
}

fn require_correctable(code: &StabilizerCode, channels: &[ErrorChannel]) -> Result<()> {
    let report = verify_correctability(code, channels);
    match report.channels.iter().find(|c| !c.passed) {
        Some(bad) => Err(Error::CorrectabilityViolated {
            channel: bad.channel,
            residual: bad.residual,
        }),
        None => Ok(()),
    }
}

/// `(i/2) op_q G` as a Kronecker product: factor `op g_q` at `qubit`,
/// `g_k` elsewhere.
fn half_i_times(op: &Mat2, qubit: usize, generator: &[Mat2]) -> CMatrix {
    let mut factors = generator.to_vec();
    factors[qubit] = op * generator[qubit];
    kron_factors(&factors) * (I * 0.5)
}

/// `(i/2)(mu* E - mu E^dag)` for one channel, single-qubit form.
fn offset_term(ch: &ErrorChannel) -> Mat2 {
    let mu = ch.offset();
    let e = ch.operator;
    (e * mu.conj() - e.adjoint() * mu) * (I * 0.5)
}

/// Hamiltonian that cancels the no-jump backaction on the codespace.
pub fn driving_hamiltonian(channels: &[ErrorChannel], code: &StabilizerCode) -> Result<CMatrix> {
    if code.kind == CodeKind::Custom {
        return Err(Error::NotApplicable(
            "driving Hamiltonian needs a synthesized code",
        ));
    }
    require_correctable(code, channels)?;

    let n = code.n;
    let dim = code.dim();
    let gens: Vec<Vec<Mat2>> = code.generators.iter().map(|g| g.local_matrices()).collect();
    let mut h = CMatrix::zeros(dim, dim);
    for ch in channels {
        let d = d_operator(ch);
        match code.kind {
            CodeKind::SingleGenerator => {
                h += half_i_times(&d.matrix, ch.qubit, &gens[0]);
            }
            CodeKind::Erasure => {
                for axis in Axis::ALL {
                    let l = axis.index();
                    if d.bloch.to_array()[l] == 0.0 {
                        continue;
                    }
                    let j = sector_assignment(axis, code)?;
                    h += half_i_times(&d.bloch.axis_term(l), ch.qubit, &gens[j]);
                }
            }
            CodeKind::Custom => unreachable!(),
        }
        h += tensor_embed(&offset_term(ch), ch.qubit, n)?;
    }
    Ok((&h + h.adjoint()) * real(0.5))
}

#[derive(Debug, Clone)]
pub struct Correction {
    pub channel: usize,
    pub unitary: CMatrix,
    /// Set when the channel is identically zero and the identity was used.
    pub degenerate: bool,
}

/// Unitary `U` with `U (E + mu) v = sqrt(c') v` for every codespace vector.
pub fn correction_unitary(
    channel_index: usize,
    ch: &ErrorChannel,
    code: &StabilizerCode,
) -> Result<Correction> {
    let dim = code.dim();
    let d = d_operator(ch);
    if d.offset_scalar <= DEGENERATE_RATE {
        log::warn!("channel {channel_index} is identically zero; correction is the identity");
        return Ok(Correction {
            channel: channel_index,
            unitary: CMatrix::identity(dim, dim),
            degenerate: true,
        });
    }
    let residual = crate::code::codespace_matrix_element_max(code, &d.matrix, ch.qubit);
    if residual > CORRECTABILITY_TOL {
        return Err(Error::CorrectabilityViolated {
            channel: channel_index,
            residual,
        });
    }

    let a = effective_jump_operator(ch);
    let scale = d.offset_scalar.sqrt();
    let images: Vec<CVector> = code
        .codespace
        .iter()
        .map(|v| apply_local(&a, ch.qubit, code.n, v).unscale(scale))
        .collect();
    let unitary = unitary_completion(&images, &code.codespace).map_err(|_| {
        Error::CorrectabilityViolated {
            channel: channel_index,
            residual,
        }
    })?;
    Ok(Correction {
        channel: channel_index,
        unitary,
        degenerate: false,
    })
}

#[derive(Debug, Clone)]
pub struct ControlPlan {
    pub driving: CMatrix,
    pub corrections: Vec<Correction>,
    /// Per channel, the generator index used for each Bloch axis.
    pub sector_map: Vec<[Option<usize>; 3]>,
}

pub fn control_plan(channels: &[ErrorChannel], code: &StabilizerCode) -> Result<ControlPlan> {
    let driving = driving_hamiltonian(channels, code)?;
    let corrections = channels
        .iter()
        .enumerate()
        .map(|(i, ch)| correction_unitary(i, ch, code))
        .collect::<Result<_>>()?;
    let sector_map = channels
        .iter()
        .map(|ch| {
            let d = d_operator(ch).bloch.to_array();
            Axis::ALL.map(|axis| {
                if d[axis.index()] == 0.0 {
                    return None;
                }
                match code.kind {
                    CodeKind::Erasure => sector_assignment(axis, code).ok(),
                    _ => Some(0),
                }
            })
        })
        .collect();
    Ok(ControlPlan {
        driving,
        corrections,
        sector_map,
    })
}

/// Smallest `|<v|U A v>|^2 / ||A v||^2` over channels and codespace basis
/// vectors, where `A` is the channel's jump operator and `U` its correction.
/// Degenerate channels and vanishing images are skipped; returns 1 when
/// nothing is checked.
pub fn worst_correction_fidelity(
    channels: &[ErrorChannel],
    code: &StabilizerCode,
    corrections: &[Correction],
) -> f64 {
    let mut worst: f64 = 1.0;
    for (ch, corr) in channels.iter().zip(corrections) {
        if corr.degenerate {
            continue;
        }
        let a = effective_jump_operator(ch);
        for v in &code.codespace {
            let jumped = apply_local(&a, ch.qubit, code.n, v);
            let norm = jumped.norm();
            if norm <= 1e-300 {
                continue;
            }
            let back = &corr.unitary * jumped.unscale(norm);
            worst = worst.min(v.dotc(&back).norm_sqr());
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoJumpInvariance {
    /// `1 - (sum c') dt / 2`
    pub a: f64,
    /// `max_v ||Omega_0 v - a v||_2` over the codespace basis.
    pub residual: f64,
}

/// Measures how far the no-jump operator is from `a 1` on the codespace.
pub fn nojump_invariance_check(ks: &KrausSet, code: &StabilizerCode) -> NoJumpInvariance {
    // each jump factor is (E + mu) sqrt(dt): tr(L^dag L) = 2 c' dt
    let total: f64 = ks
        .jumps
        .iter()
        .map(|j| (j.local.adjoint() * j.local).trace().re)
        .sum();
    let a = 1.0 - total / 4.0;
    let residual = code
        .codespace
        .iter()
        .map(|v| (&ks.no_jump * v - v * real(a)).norm())
        .fold(0.0, f64::max);
    NoJumpInvariance { a, residual }
}
