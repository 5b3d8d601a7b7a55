//! Stabilizer codes built from detected-channel sets.
//!
//! Two constructions are supported. When every qubit's D operators span at
//! most a plane of the Bloch sphere, a single generator `S = s_1 x ... x s_n`
//! with each `s_j` anticommuting with all D operators on qubit `j` encodes
//! `n - 1` logical qubits. Otherwise the pair `{X^n, Z^n}` (even `n`) is
//! used and each Pauli axis of a D operator is handled by whichever
//! generator anticommutes with it, encoding `n - 2` logical qubits.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::{check_channels, d_operator, ErrorChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_local, apply_product, identity2, inner, kron_factors, max_abs, max_norm2, real,
    BlochVector, CMatrix, CVector, Mat2, C64, MAX_QUBITS, ONE, OUTPUT_TOL, ZERO,
};

/// Residual threshold for the correctability condition.
pub const CORRECTABILITY_TOL: f64 = 1e-10;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-9;

/// A tensor product of single-qubit involutions `n_j . sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub factors: Vec<BlochVector>,
}

impl Generator {
    pub fn new(factors: Vec<BlochVector>) -> Self {
        Self { factors }
    }

    pub fn uniform(axis: BlochVector, n: usize) -> Self {
        Self::new(vec![axis; n])
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn local_matrices(&self) -> Vec<Mat2> {
        self.factors.iter().map(|f| f.to_matrix()).collect()
    }

    pub fn matrix(&self) -> CMatrix {
        kron_factors(&self.local_matrices())
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        apply_product(&self.local_matrices(), v)
    }

    /// `||{G, op embedded at qubit}||_max`, evaluated factor-wise: the
    /// anticommutator is itself a Kronecker product and the max-norm of a
    /// Kronecker product is the product of the factors' max-norms.
    pub fn anticommutator_norm(&self, op: &Mat2, qubit: usize) -> f64 {
        self.local_matrices()
            .iter()
            .enumerate()
            .map(|(k, g)| {
                if k == qubit {
                    max_norm2(&(g * op + op * g))
                } else {
                    max_norm2(g)
                }
            })
            .product()
    }

    fn is_uniform(&self, axis: BlochVector) -> bool {
        self.factors.iter().all(|f| f.approx_eq(axis))
    }

    /// Pauli-string rendering when every factor lies on a coordinate axis.
    pub fn label(&self) -> String {
        self.factors
            .iter()
            .map(|f| {
                if f.approx_eq(BlochVector::X) {
                    'X'
                } else if f.approx_eq(BlochVector::Y) {
                    'Y'
                } else if f.approx_eq(BlochVector::Z) {
                    'Z'
                } else {
                    '*'
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    /// One generator `s_1 x ... x s_n`.
    SingleGenerator,
    /// `{X^n, Z^n}` in that order.
    Erasure,
    /// Any other commuting generator set (only reachable via overrides).
    Custom,
}

#[derive(Debug, Clone)]
pub struct StabilizerCode {
    pub n: usize,
    pub kind: CodeKind,
    pub generators: Vec<Generator>,
    pub codespace: Vec<CVector>,
    pub logical_count: usize,
}

impl StabilizerCode {
    /// Validates a generator list and computes its codespace.
    pub fn from_generators(n: usize, generators: Vec<Generator>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::RegisterTooLarge { n, max: MAX_QUBITS });
        }
        for (i, g) in generators.iter().enumerate() {
            if g.n() != n {
                return Err(Error::InvalidGenerators(format!(
                    "generator {i} has {} factors, register has {n} qubits",
                    g.n()
                )));
            }
            for f in &g.factors {
                if (f.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidGenerators(format!(
                        "generator {i} has a non-unit factor {f:?}"
                    )));
                }
            }
        }
        check_commuting(&generators, n)?;
        let codespace = codespace_basis(&generators, n)?;
        let logical_count = codespace.len().trailing_zeros() as usize;
        let kind = match generators.as_slice() {
            [_] => CodeKind::SingleGenerator,
            [x, z] if x.is_uniform(BlochVector::X) && z.is_uniform(BlochVector::Z) => {
                CodeKind::Erasure
            }
            _ => CodeKind::Custom,
        };
        Ok(Self {
            n,
            kind,
            generators,
            codespace,
            logical_count,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Codespace vector with the given coefficients over the basis.
    pub fn logical_state(&self, coefficients: &[C64]) -> Result<CVector> {
        if coefficients.len() != self.codespace.len() {
            return Err(Error::DimensionMismatch {
                expected: self.codespace.len(),
                got: coefficients.len(),
            });
        }
        let mut v = CVector::zeros(self.dim());
        for (coef, basis) in coefficients.iter().zip(&self.codespace) {
            v.axpy(*coef, basis, ONE);
        }
        let norm = v.norm();
        if norm < 1e-12 {
            return Err(Error::InvalidConfig(
                "logical coefficients are all zero".into(),
            ));
        }
        Ok(v.unscale(norm))
    }
}

fn check_commuting(generators: &[Generator], n: usize) -> Result<()> {
    let dim = 1usize << n;
    for (i, a) in generators.iter().enumerate() {
        for (k, b) in generators.iter().enumerate().skip(i + 1) {
            let (ma, mb) = (a.local_matrices(), b.local_matrices());
            for col in 0..dim {
                let mut e = CVector::zeros(dim);
                e[col] = ONE;
                let ab = apply_product(&ma, &apply_product(&mb, &e));
                let ba = apply_product(&mb, &apply_product(&ma, &e));
                if max_abs(&(ab - ba)) > 1e-12 {
                    return Err(Error::InvalidGenerators(format!(
                        "generators {i} and {k} do not commute"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Returns a unit Bloch vector orthogonal to every constraint.
///
/// Selection is deterministic: within the null space, pick the direction
/// with the largest component along the earliest coordinate axis that has a
/// nonzero projection, then make the first nonzero component positive.
pub fn null_space_involution(constraints: &[BlochVector]) -> Result<BlochVector> {
    let rows = constraints.len().max(3);
    let m = DMatrix::<f64>::from_fn(rows, 3, |r, col| {
        constraints.get(r).map_or(0.0, |d| d.to_array()[col])
    });
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("V^T requested");
    let largest = svd.singular_values.max();

    let null_basis: Vec<[f64; 3]> = (0..3)
        .filter(|&i| largest == 0.0 || svd.singular_values[i] <= RANK_TOL * largest)
        .map(|i| [v_t[(i, 0)], v_t[(i, 1)], v_t[(i, 2)]])
        .collect();
    if null_basis.is_empty() {
        return Err(Error::Rank3);
    }

    for axis in 0..3 {
        let mut p = [0.0; 3];
        for b in &null_basis {
            for (pc, bc) in p.iter_mut().zip(b) {
                *pc += b[axis] * bc;
            }
        }
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if norm > 1e-9 {
            let sign = p
                .iter()
                .find(|c| c.abs() > 1e-12)
                .map_or(1.0, |c| c.signum());
            return Ok(BlochVector::from_array(p.map(|c| sign * c / norm)));
        }
    }
    unreachable!("a nonempty orthonormal null basis has a nonzero projection of some axis")
}

/// Synthesizes a stabilizer code for which every channel is correctable.
pub fn build_code(channels: &[ErrorChannel], n: usize) -> Result<StabilizerCode> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "register needs at least one qubit".into(),
        ));
    }
    check_channels(channels, n)?;

    let mut constraints: Vec<Option<Vec<BlochVector>>> = vec![None; n];
    for ch in channels {
        let d = d_operator(ch);
        let slot = constraints[ch.qubit].get_or_insert_with(Vec::new);
        if !d.is_zero() {
            slot.push(d.bloch);
        }
    }

    let single: Result<Vec<BlochVector>> = constraints
        .iter()
        .map(|c| match c {
            None => Ok(BlochVector::Z),
            Some(ds) => null_space_involution(ds),
        })
        .collect();

    let generators = match single {
        Ok(factors) => vec![Generator::new(factors)],
        Err(Error::Rank3) => {
            if n % 2 == 1 {
                return Err(Error::EvenQubitCountRequired { n });
            }
            vec![
                Generator::uniform(BlochVector::X, n),
                Generator::uniform(BlochVector::Z, n),
            ]
        }
        Err(e) => return Err(e),
    };
    StabilizerCode::from_generators(n, generators)
}

/// `tr(prod_i (1 + G_i)/2)` via subset expansion; each product of
/// generators is a Kronecker product so its trace factorizes.
fn projector_rank(generators: &[Generator], n: usize) -> f64 {
    let locals: Vec<Vec<Mat2>> = generators.iter().map(|g| g.local_matrices()).collect();
    let g = generators.len();
    let mut total = ZERO;
    for mask in 0u32..(1 << g) {
        let mut trace = ONE;
        for q in 0..n {
            let mut factor = identity2();
            for (i, l) in locals.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    factor *= l[q];
                }
            }
            trace *= factor.trace();
        }
        total += trace;
    }
    total.re / (1u64 << g) as f64
}

/// Orthonormal basis of the joint +1 eigenspace of `generators`.
///
/// Columns of the projector are orthogonalized in index order; columns
/// whose residual is negligible are skipped.
pub fn codespace_basis(generators: &[Generator], n: usize) -> Result<Vec<CVector>> {
    let dim = 1usize << n;
    let rank = projector_rank(generators, n);
    let expected = rank.round();
    if expected < 0.5 {
        return Err(Error::EmptyCodespace);
    }
    if (rank - expected).abs() > 1e-6 || !(expected as usize).is_power_of_two() {
        return Err(Error::InvalidGenerators(format!(
            "projector trace {rank} is not a power of two"
        )));
    }
    let expected = expected as usize;

    let half = real(0.5);
    let locals: Vec<Vec<Mat2>> = generators.iter().map(|g| g.local_matrices()).collect();
    let mut basis: Vec<CVector> = Vec::with_capacity(expected);
    for k in 0..dim {
        if basis.len() == expected {
            break;
        }
        let mut col = CVector::zeros(dim);
        col[k] = ONE;
        for l in &locals {
            col = (&col + apply_product(l, &col)) * half;
        }
        for _ in 0..2 {
            for b in &basis {
                let proj = inner(b, &col);
                col.axpy(-proj, b, ONE);
            }
        }
        let norm = col.norm();
        // the remaining projector has trace >= 1 spread over dim columns,
        // so some column always clears this bar
        if norm > 1e-4 {
            basis.push(col.unscale(norm));
        }
    }
    if basis.len() != expected {
        return Err(Error::InvalidGenerators(format!(
            "found {} codespace vectors, projector rank is {expected}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Largest `|<psi_i| op |psi_k>|` over all codespace basis pairs, `op`
/// acting on a single qubit.
pub fn codespace_matrix_element_max(code: &StabilizerCode, op: &Mat2, qubit: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for psi_k in &code.codespace {
        let image = apply_local(op, qubit, code.n, psi_k);
        for psi_i in &code.codespace {
            worst = worst.max(inner(psi_i, &image).norm());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelResidual {
    pub channel: usize,
    pub label: String,
    pub qubit: usize,
    pub residual: f64,
    /// Per-axis residuals of `d_l sigma_l`, reported for the erasure code.
    pub axis_residuals: Option<[f64; 3]>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectabilityReport {
    pub channels: Vec<ChannelResidual>,
    pub tolerance: f64,
}

impl CorrectabilityReport {
    pub fn passed(&self) -> bool {
        self.channels.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.channels.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Checks `<psi_i| D |psi_k> = 0` for all codespace pairs, diagonal
/// included, for every channel.
pub fn verify_correctability(
    code: &StabilizerCode,
    channels: &[ErrorChannel],
) -> CorrectabilityReport {
    let entries = channels
        .iter()
        .enumerate()
        .map(|(i, ch)| {
            let d = d_operator(ch);
            let mut residual = codespace_matrix_element_max(code, &d.matrix, ch.qubit);
            let axis_residuals = (code.kind == CodeKind::Erasure).then(|| {
                let axes = [0, 1, 2]
                    .map(|l| codespace_matrix_element_max(code, &d.bloch.axis_term(l), ch.qubit));
                residual = axes.iter().copied().fold(residual, f64::max);
                axes
            });
            ChannelResidual {
                channel: i,
                label: ch.label.clone(),
                qubit: ch.qubit,
                residual,
                axis_residuals,
                passed: residual <= CORRECTABILITY_TOL,
            }
        })
        .collect();
    CorrectabilityReport {
        channels: entries,
        tolerance: CORRECTABILITY_TOL,
    }
}

/// Checks generator invariants: Hermitian, involutive, mutually commuting,
/// and every codespace vector fixed by every generator. Returns the worst
/// residual (dense; intended for small registers).
pub fn code_invariant_residual(code: &StabilizerCode) -> f64 {
    let dim = code.dim();
    let mats: Vec<CMatrix> = code.generators.iter().map(|g| g.matrix()).collect();
    let mut worst: f64 = 0.0;
    for (i, g) in mats.iter().enumerate() {
        worst = worst.max(crate::linalg::hermitian_deviation(g));
        worst = worst.max(crate::linalg::max_norm(
            &(g * g - CMatrix::identity(dim, dim)),
        ));
        for h in &mats[i + 1..] {
            worst = worst.max(crate::linalg::max_norm(&(g * h - h * g)));
        }
        for v in &code.codespace {
            worst = worst.max(max_abs(&(g * v - v)));
        }
    }
    worst
        .max(if code.codespace.len() == 1 << code.logical_count {
            0.0
        } else {
            f64::INFINITY
        })
        .max(gram_residual(&code.codespace))
}

fn gram_residual(vs: &[CVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for (k, b) in vs.iter().enumerate() {
            let target = if i == k { ONE } else { ZERO };
            worst = worst.max((inner(a, b) - target).norm());
        }
    }
    worst
}

/// Tolerance used by [`code_invariant_residual`] consumers.
pub const CODE_INVARIANT_TOL: f64 = OUTPUT_TOL;
