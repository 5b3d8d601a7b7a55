//! Dense complex linear algebra for small qubit registers.
//!
//! Register operators are `2^n x 2^n` dense matrices. Tensor slot 0 is the
//! leftmost Kronecker factor, i.e. the most significant bit of a
//! computational-basis index.

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Largest supported register.
pub const MAX_QUBITS: usize = 12;

/// Input-side tolerance for Hermiticity and trace checks.
pub const INPUT_TOL: f64 = 1e-12;
/// Output-side tolerance for orthonormality and unitarity checks.
pub const OUTPUT_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity2() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, ONE)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Lowering operator `|0><1|`.
pub fn sigma_minus() -> Mat2 {
    Mat2::new(ZERO, ONE, ZERO, ZERO)
}

/// Raising operator `|1><0|`.
pub fn sigma_plus() -> Mat2 {
    Mat2::new(ZERO, ZERO, ONE, ZERO)
}

/// The three Pauli matrices in x, y, z order.
pub fn paulis() -> [Mat2; 3] {
    [pauli_x(), pauli_y(), pauli_z()]
}

/// Coefficients of a Hermitian traceless 2x2 operator in the Pauli basis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const Y: BlochVector = BlochVector {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const Z: BlochVector = BlochVector {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm1(self) -> f64 {
        self.x.abs() + self.y.abs() + self.z.abs()
    }

    /// Componentwise equality within `1e-12`.
    pub fn approx_eq(self, other: BlochVector) -> bool {
        (self.x - other.x).abs() <= 1e-12
            && (self.y - other.y).abs() <= 1e-12
            && (self.z - other.z).abs() <= 1e-12
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// `d . sigma`
    pub fn to_matrix(self) -> Mat2 {
        let [x, y, z] = paulis();
        x * real(self.x) + y * real(self.y) + z * real(self.z)
    }

    /// The single-axis term `d_l sigma_l` for axis `l` in 0..3.
    pub fn axis_term(self, axis: usize) -> Mat2 {
        paulis()[axis] * real(self.to_array()[axis])
    }
}

/// Largest absolute entry.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entry modulus of a state vector.
pub fn max_abs(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_norm2(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_norm(&(m - m.adjoint()))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermitian_deviation(m) <= tol
}

/// `||U^dagger U - 1||_max`
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let dim = u.ncols();
    max_norm(&(u.adjoint() * u - CMatrix::identity(dim, dim)))
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_defect(u) <= tol
}

/// `<a|b>`
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

fn check_register(qubit: usize, n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::RegisterTooLarge { n, max: MAX_QUBITS });
    }
    if qubit >= n {
        return Err(Error::QubitOutOfRange { qubit, n });
    }
    Ok(())
}

/// Kronecker product of single-qubit factors, factor 0 leftmost.
pub fn kron_factors(factors: &[Mat2]) -> CMatrix {
    let mut out = CMatrix::from_element(1, 1, ONE);
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// `1 x ... x op x ... x 1` with `op` at tensor slot `qubit`.
pub fn tensor_embed(op: &Mat2, qubit: usize, n: usize) -> Result<CMatrix> {
    check_register(qubit, n)?;
    let mut factors = vec![identity2(); n];
    factors[qubit] = *op;
    Ok(kron_factors(&factors))
}

/// Applies a single-qubit operator at slot `qubit` of an `n`-qubit state
/// without building the embedded matrix.
pub fn apply_local(op: &Mat2, qubit: usize, n: usize, v: &CVector) -> CVector {
    debug_assert!(qubit < n && v.len() == 1 << n);
    let stride = 1usize << (n - 1 - qubit);
    let mut out = v.clone();
    for base in 0..v.len() {
        if base & stride != 0 {
            continue;
        }
        let (a0, a1) = (v[base], v[base | stride]);
        out[base] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
        out[base | stride] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
    }
    out
}

/// Applies `factors[0] x factors[1] x ...` to a register state.
pub fn apply_product(factors: &[Mat2], v: &CVector) -> CVector {
    let n = factors.len();
    let mut out = v.clone();
    for (q, f) in factors.iter().enumerate() {
        out = apply_local(f, q, n, &out);
    }
    out
}

/// Splits a Hermitian 2x2 matrix into `D + c 1` with `tr D = 0`.
pub fn traceless_decompose(m: &Mat2) -> Result<(Mat2, f64)> {
    let deviation = max_norm2(&(m - m.adjoint()));
    if deviation > INPUT_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let c = 0.5 * m.trace().re;
    Ok((m - identity2() * real(c), c))
}

/// `d_l = tr(sigma_l D) / 2` for a Hermitian traceless `D`.
pub fn bloch_decompose(d: &Mat2) -> Result<BlochVector> {
    let deviation = max_norm2(&(d - d.adjoint()));
    if deviation > INPUT_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let trace = d.trace().norm();
    if trace > INPUT_TOL {
        return Err(Error::NonzeroTrace { trace });
    }
    let [x, y, z] = paulis().map(|p| 0.5 * (p * d).trace().re);
    Ok(BlochVector::new(x, y, z))
}

fn gram_deviation(vs: &[CVector]) -> f64 {
    let mut dev: f64 = 0.0;
    for (i, a) in vs.iter().enumerate() {
        for (k, b) in vs.iter().enumerate() {
            let expected = if i == k { ONE } else { ZERO };
            dev = dev.max((inner(a, b) - expected).norm());
        }
    }
    dev
}

/// Removes the components of `v` along `basis` (two passes).
fn orthogonalize(v: &mut CVector, basis: &[CVector]) {
    for _ in 0..2 {
        for b in basis {
            let proj = inner(b, v);
            v.axpy(-proj, b, ONE);
        }
    }
}

/// Extends an orthonormal list to a full basis of `C^dim` by Gram-Schmidt
/// against canonical basis vectors in index order.
fn complete_basis(vs: &[CVector], dim: usize) -> Vec<CVector> {
    let mut basis: Vec<CVector> = vs.to_vec();
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut e = CVector::zeros(dim);
        e[k] = ONE;
        orthogonalize(&mut e, &basis);
        let norm = e.norm();
        // at least one remaining canonical vector has residual >= sqrt(1/dim)
        if norm > 1e-6 {
            basis.push(e.unscale(norm));
        }
    }
    basis
}

/// Returns a unitary `U` with `U sources[i] = targets[i]`.
///
/// The orthogonal complements of both lists are filled in by Gram-Schmidt
/// against the canonical basis in index order, so the result is
/// deterministic.
pub fn unitary_completion(sources: &[CVector], targets: &[CVector]) -> Result<CMatrix> {
    if sources.len() != targets.len() {
        return Err(Error::LengthMismatch {
            sources: sources.len(),
            targets: targets.len(),
        });
    }
    let Some(dim) = sources.first().or(targets.first()).map(|v| v.len()) else {
        return Err(Error::LengthMismatch {
            sources: 0,
            targets: 0,
        });
    };
    for v in sources.iter().chain(targets) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    if sources.len() > dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: sources.len(),
        });
    }
    for list in [sources, targets] {
        let deviation = gram_deviation(list);
        if deviation > OUTPUT_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
    }

    let src = CMatrix::from_columns(&complete_basis(sources, dim));
    let tgt = CMatrix::from_columns(&complete_basis(targets, dim));
    Ok(tgt * src.adjoint())
}

/// Pauli-string coefficients `c_P = tr(P H) / 2^n` of a Hermitian register
/// operator, sorted by string, omitting `|c_P| <= tol`.
///
/// For each X-mask `a`, the traces over all Z-masks are one Walsh-Hadamard
/// transform of the `a`-th off-diagonal of `H`, so the whole expansion costs
/// `O(n 4^n)`.
pub fn pauli_expansion(h: &CMatrix, n: usize, tol: f64) -> Vec<(String, f64)> {
    let dim = 1usize << n;
    assert_eq!(
        h.shape(),
        (dim, dim),
        "operator does not match register size"
    );
    let mut out = Vec::new();
    for a in 0..dim {
        let mut g: Vec<C64> = (0..dim).map(|z| h[(z, z ^ a)]).collect();
        let mut len = 1;
        while len < dim {
            for block in (0..dim).step_by(2 * len) {
                for k in block..block + len {
                    let (u, v) = (g[k], g[k + len]);
                    g[k] = u + v;
                    g[k + len] = u - v;
                }
            }
            len *= 2;
        }
        for (b, trace) in g.iter().enumerate() {
            // Y = i X Z on every qubit where both masks are set
            let phase = match (a & b).count_ones() % 4 {
                0 => ONE,
                1 => I,
                2 => -ONE,
                _ => -I,
            };
            let coefficient = (phase * trace).re / dim as f64;
            if coefficient.abs() <= tol {
                continue;
            }
            let label: String = (0..n)
                .map(|q| {
                    let bit = 1 << (n - 1 - q);
                    match (a & bit != 0, b & bit != 0) {
                        (false, false) => 'I',
                        (true, false) => 'X',
                        (false, true) => 'Z',
                        (true, true) => 'Y',
                    }
                })
                .collect();
            out.push((label, coefficient));
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}
