//! Detected error channels and their jump-unraveled Kraus evolution.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    apply_local, bloch_decompose, hermitian_deviation, identity2, max_norm, real, tensor_embed,
    traceless_decompose, BlochVector, CMatrix, CVector, Mat2, C64, I, INPUT_TOL, MAX_QUBITS, ONE,
};

/// Per-step limit on the summed jump weight `sum (c' + |d|_1) dt`.
pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

/// A single continuously monitored decoherence channel on one qubit.
///
/// The unraveling offset `mu = gamma e^{i phi}` is added to the jump
/// operator; `gamma = 0` is photon counting.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorChannel {
    pub qubit: usize,
    pub label: String,
    pub operator: Mat2,
    gamma: f64,
    phi: f64,
}

impl ErrorChannel {
    pub fn new(qubit: usize, operator: Mat2) -> Self {
        Self {
            qubit,
            label: String::new(),
            operator,
            gamma: 0.0,
            phi: 0.0,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Sets the unraveling offset. `phi` is reduced into `[0, 2 pi)`.
    pub fn with_offset(mut self, gamma: f64, phi: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "phi must be finite, got {phi}"
            )));
        }
        self.gamma = gamma;
        self.phi = phi.rem_euclid(TAU);
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `mu = gamma e^{i phi}`
    pub fn offset(&self) -> C64 {
        if self.phi == 0.0 {
            real(self.gamma)
        } else {
            C64::from_polar(self.gamma, self.phi)
        }
    }
}

/// Traceless part of `(E + mu)^dagger (E + mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DOperator {
    pub matrix: Mat2,
    pub bloch: BlochVector,
    /// `c' = tr[(E + mu)^dagger (E + mu)] / 2`
    pub offset_scalar: f64,
}

impl DOperator {
    pub fn is_zero(&self) -> bool {
        self.bloch.norm() <= INPUT_TOL
    }
}

/// `E + mu 1`
pub fn effective_jump_operator(ch: &ErrorChannel) -> Mat2 {
    ch.operator + identity2() * ch.offset()
}

pub fn d_operator(ch: &ErrorChannel) -> DOperator {
    let a = effective_jump_operator(ch);
    let ada = a.adjoint() * a;
    // exact Hermitian symmetrization; rounding in the product is ~1e-16
    let ada = (ada + ada.adjoint()) * real(0.5);
    let (matrix, offset_scalar) =
        traceless_decompose(&ada).expect("A^dagger A is Hermitian after symmetrization");
    let bloch = bloch_decompose(&matrix).expect("traceless part has zero trace");
    DOperator {
        matrix,
        bloch,
        offset_scalar,
    }
}

/// Lowering operator along a unit Bloch axis `n`, `|+n><-n|` up to a phase.
///
/// `L^dag L = (1 - n . sigma) / 2`, so its D operator points along `-n`.
/// For `n = z` this is `sigma_minus`.
pub fn axis_lowering(axis: BlochVector) -> Mat2 {
    let n = axis.scale(1.0 / axis.norm());
    let seed = if n.x.abs() < 0.9 {
        BlochVector::X
    } else {
        BlochVector::Y
    };
    let e1 = {
        let v = BlochVector::new(
            seed.x - n.dot(seed) * n.x,
            seed.y - n.dot(seed) * n.y,
            seed.z - n.dot(seed) * n.z,
        );
        v.scale(1.0 / v.norm())
    };
    let e2 = BlochVector::new(
        n.y * e1.z - n.z * e1.y,
        n.z * e1.x - n.x * e1.z,
        n.x * e1.y - n.y * e1.x,
    );
    (e1.to_matrix() + e2.to_matrix() * I) * real(0.5)
}

/// Anti-Hermitian-free part of the no-jump generator for one channel:
/// `E^dagger E / 2 + mu* E + |mu|^2 / 2`.
fn no_jump_local(ch: &ErrorChannel) -> Mat2 {
    let e = ch.operator;
    let mu = ch.offset();
    e.adjoint() * e * real(0.5) + e * mu.conj() + identity2() * real(0.5 * mu.norm_sqr())
}

pub(crate) fn check_channels(channels: &[ErrorChannel], n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::RegisterTooLarge { n, max: MAX_QUBITS });
    }
    for ch in channels {
        if ch.qubit >= n {
            return Err(Error::QubitOutOfRange { qubit: ch.qubit, n });
        }
    }
    Ok(())
}

pub(crate) fn check_hamiltonian(h: &CMatrix, n: usize) -> Result<()> {
    let dim = 1usize << n;
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: h.nrows().max(h.ncols()),
        });
    }
    let deviation = hermitian_deviation(h);
    if deviation > INPUT_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// A jump Kraus operator `(E + mu) sqrt(dt)` kept in single-qubit form.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    /// Index into the channel list the Kraus set was built from.
    pub channel: usize,
    pub qubit: usize,
    pub local: Mat2,
}

impl JumpOperator {
    pub fn apply(&self, n: usize, v: &CVector) -> CVector {
        apply_local(&self.local, self.qubit, n, v)
    }

    /// Dense `2^n x 2^n` form.
    pub fn matrix(&self, n: usize) -> CMatrix {
        tensor_embed(&self.local, self.qubit, n).expect("qubit validated at construction")
    }
}

/// Raised when a step's total jump weight exceeds [`WEAK_COUPLING_LIMIT`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSizeWarning {
    pub load: f64,
    pub limit: f64,
}

/// First-order Kraus decomposition of one time step.
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub n: usize,
    pub dt: f64,
    pub no_jump: CMatrix,
    pub jumps: Vec<JumpOperator>,
    pub warning: Option<StepSizeWarning>,
}

/// Builds `Omega_0 = 1 - dt [iH + sum (E^dag E / 2 + mu* E + |mu|^2 / 2)]`
/// and `Omega_{j,alpha} = (E + mu) sqrt(dt)`.
pub fn kraus_set(channels: &[ErrorChannel], h: &CMatrix, n: usize, dt: f64) -> Result<KrausSet> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidConfig(format!("dt must be > 0, got {dt}")));
    }
    check_channels(channels, n)?;
    check_hamiltonian(h, n)?;

    let dim = 1usize << n;
    let mut generator = h * I;
    let mut load = 0.0;
    for ch in channels {
        generator += tensor_embed(&no_jump_local(ch), ch.qubit, n)?;
        let d = d_operator(ch);
        load += (d.offset_scalar + d.bloch.norm1()) * dt;
    }
    let no_jump = CMatrix::identity(dim, dim) - generator * real(dt);

    let sqrt_dt = real(dt.sqrt());
    let jumps = channels
        .iter()
        .enumerate()
        .map(|(i, ch)| JumpOperator {
            channel: i,
            qubit: ch.qubit,
            local: effective_jump_operator(ch) * sqrt_dt,
        })
        .collect();

    let warning = (load > WEAK_COUPLING_LIMIT).then(|| {
        log::warn!(
            "per-step jump weight {load:.3e} exceeds weak-coupling limit {WEAK_COUPLING_LIMIT}"
        );
        StepSizeWarning {
            load,
            limit: WEAK_COUPLING_LIMIT,
        }
    });

    Ok(KrausSet {
        n,
        dt,
        no_jump,
        jumps,
        warning,
    })
}

/// `||Omega_0^dag Omega_0 + sum Omega^dag Omega - 1||_max`
pub fn cptp_defect(ks: &KrausSet) -> f64 {
    let dim = ks.no_jump.nrows();
    let mut total = ks.no_jump.adjoint() * &ks.no_jump - CMatrix::identity(dim, dim);
    for jump in &ks.jumps {
        let local = jump.local.adjoint() * jump.local;
        total += tensor_embed(&local, jump.qubit, ks.n).expect("qubit validated");
    }
    max_norm(&total)
}

/// Right-hand side of the master equation with the channel operators
/// embedded in the register. Offsets `mu` do not enter.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    hamiltonian: CMatrix,
    ops: Vec<(CMatrix, CMatrix)>,
}

impl Lindbladian {
    pub fn new(channels: &[ErrorChannel], h: &CMatrix, n: usize) -> Result<Self> {
        check_channels(channels, n)?;
        check_hamiltonian(h, n)?;
        let ops = channels
            .iter()
            .map(|ch| {
                let l = tensor_embed(&ch.operator, ch.qubit, n)?;
                let ldl = l.adjoint() * &l;
                Ok((l, ldl))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            hamiltonian: h.clone(),
            ops,
        })
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let h_rho = &self.hamiltonian * rho;
        // -i[H, rho] = -i (H rho - (H rho)^dag) for Hermitian rho
        let mut out = (&h_rho - h_rho.adjoint()) * (-I);
        for (l, ldl) in &self.ops {
            let ldl_rho = ldl * rho;
            out += l * rho * l.adjoint() - (&ldl_rho + ldl_rho.adjoint()) * real(0.5);
        }
        out
    }
}

/// `sum E rho E^dag - {E^dag E, rho}/2 - i[H, rho]`
pub fn lindblad_rhs(
    rho: &CMatrix,
    channels: &[ErrorChannel],
    h: &CMatrix,
    n: usize,
) -> Result<CMatrix> {
    validate_density(rho, n)?;
    Ok(Lindbladian::new(channels, h, n)?.apply(rho))
}

pub(crate) fn validate_density(rho: &CMatrix, n: usize) -> Result<()> {
    let dim = 1usize << n;
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::InvalidDensityMatrix(format!(
            "expected {dim}x{dim}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let deviation = hermitian_deviation(rho);
    if deviation > 1e-10 {
        return Err(Error::InvalidDensityMatrix(format!(
            "not Hermitian (deviation {deviation:e})"
        )));
    }
    let trace = rho.trace();
    if (trace - ONE).norm() > 1e-10 {
        return Err(Error::InvalidDensityMatrix(format!("trace {trace} != 1")));
    }
    Ok(())
}
