//! Two-qubit matrices: the Pauli tensor basis, local (tensor-product) gates and
//! the magic-basis change of frame.
//!
//! Conventions: Pauli axes are ordered (x, y, z) and indexed 0..3, and in a
//! Kronecker product `A ⊗ B` the first factor acts on qubit 1. A two-qubit
//! Hermitian matrix is written
//!
//! ```text
//! H = I⊗(a·σ) + (b·σ)⊗I + Σᵢⱼ Mᵢⱼ σᵢ⊗σⱼ
//! ```
//!
//! and the magic frame is the fixed change of basis `X ↦ Q† X Q`. In that
//! frame local gates `A⊗B` with `A, B ∈ SU(2)` are real orthogonal with
//! determinant one and every canonical Hamiltonian `Σ θⱼ σⱼ⊗σⱼ` is real
//! diagonal.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::LazyLock;

use nalgebra::{Matrix2, Matrix4, SMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;
pub type RealMat4 = Matrix4<f64>;

/// A single-qubit gate pair `(A, B)` standing for the local gate `A ⊗ B`.
pub type LocalPair = (Mat2, Mat2);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Frame position `k` of the magic-frame diagonal of a canonical matrix holds
/// the φ component with index `FRAME_ORDER[k]`.
///
/// With `Q` exactly as defined by [`magic_q`] the diagonal of `Q† H_θ Q` is
/// `(φ₂, φ₁, φ₄, φ₃)`. The map is an involution.
pub const FRAME_ORDER: [usize; 4] = [1, 0, 3, 2];

/// Numerical tolerances used by the matrix predicates and decompositions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `‖U†U − I‖` bound for the unitary predicate.
    pub unitary: f64,
    /// `‖H − H†‖` bound for the Hermitian predicate.
    pub hermitian: f64,
    /// `|det U − 1|` bound for the special predicate.
    pub special: f64,
    /// Hermiticity residual above which decomposition refuses the input.
    pub reject_hermitian: f64,
    /// `|tr H|` above which the trace is removed with a warning.
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitary: 1e-10,
            hermitian: 1e-10,
            special: 1e-8,
            reject_hermitian: 1e-8,
            trace: 1e-10,
        }
    }
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

/// Pauli matrix for axis 0 (x), 1 (y) or 2 (z).
pub fn pauli(axis: usize) -> Mat2 {
    match axis {
        0 => Mat2::new(ZERO, ONE, ONE, ZERO),
        1 => Mat2::new(ZERO, -I, I, ZERO),
        2 => Mat2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("Pauli axis must be 0, 1 or 2, got {axis}"),
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn local_gate(pair: &LocalPair) -> Mat4 {
    kron(&pair.0, &pair.1)
}

/// `σᵢ ⊗ σⱼ`.
pub fn pauli_pair(i: usize, j: usize) -> Mat4 {
    kron(&pauli(i), &pauli(j))
}

pub fn dagger<const N: usize>(m: &SMatrix<Complex64, N, N>) -> SMatrix<Complex64, N, N> {
    m.adjoint()
}

pub fn unitarity_residual<const N: usize>(m: &SMatrix<Complex64, N, N>) -> f64 {
    (m.adjoint() * m - SMatrix::<Complex64, N, N>::identity()).norm()
}

pub fn hermiticity_residual<const N: usize>(m: &SMatrix<Complex64, N, N>) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_unitary<const N: usize>(m: &SMatrix<Complex64, N, N>, tol: f64) -> bool {
    unitarity_residual(m) <= tol
}

pub fn is_hermitian<const N: usize>(m: &SMatrix<Complex64, N, N>, tol: f64) -> bool {
    hermiticity_residual(m) <= tol
}

pub fn is_special(m: &Mat4, tol: f64) -> bool {
    (m.determinant() - ONE).norm() <= tol
}

pub fn is_finite<const N: usize>(m: &SMatrix<Complex64, N, N>) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Pauli-tensor coefficients of a two-qubit Hermitian matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliCoefficients {
    /// Coefficients of `I ⊗ σⱼ`.
    pub a: [f64; 3],
    /// Coefficients of `σⱼ ⊗ I`.
    pub b: [f64; 3],
    /// Coupling tensor, `m[i][j]` multiplies `σᵢ ⊗ σⱼ`.
    pub m: [[f64; 3]; 3],
}

impl PauliCoefficients {
    pub fn coupling(m: [[f64; 3]; 3]) -> Self {
        Self { a: [0.0; 3], b: [0.0; 3], m }
    }

    pub fn diagonal_coupling(d: [f64; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (j, v) in d.into_iter().enumerate() {
            m[j][j] = v;
        }
        Self::coupling(m)
    }

    /// Euclidean norm of the local coefficients `(a, b)`.
    pub fn local_norm(&self) -> f64 {
        self.a
            .iter()
            .chain(self.b.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Result of [`pauli_decompose`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliDecomposition {
    pub coefficients: PauliCoefficients,
    /// Trace that was discarded from the input, if it exceeded the tolerance.
    pub removed_trace: Option<f64>,
}

/// Expands a Hermitian matrix in the Pauli tensor basis.
///
/// The identity component carries only a global phase; when `|tr H|`
/// exceeds `tol.trace` it is dropped and reported in
/// [`PauliDecomposition::removed_trace`].
pub fn pauli_decompose(h: &Mat4, tol: &Tolerances) -> Result<PauliDecomposition> {
    let residual = hermiticity_residual(h);
    if !is_finite(h) || residual > tol.reject_hermitian {
        return Err(Error::NonHermitianInput { residual });
    }
    let project = |p: &Mat4| (p * h).trace().re / 4.0;
    let id = identity2();
    let mut c = PauliCoefficients::default();
    for j in 0..3 {
        c.a[j] = project(&kron(&id, &pauli(j)));
        c.b[j] = project(&kron(&pauli(j), &id));
        for k in 0..3 {
            c.m[j][k] = project(&pauli_pair(j, k));
        }
    }
    let trace = h.trace().re;
    let removed_trace = if trace.abs() > tol.trace {
        log::warn!("discarding trace {trace:.3e} from two-qubit Hamiltonian");
        Some(trace)
    } else {
        None
    };
    Ok(PauliDecomposition {
        coefficients: c,
        removed_trace,
    })
}

/// Builds the traceless Hermitian matrix with the given Pauli coefficients.
pub fn pauli_compose(c: &PauliCoefficients) -> Mat4 {
    let id = identity2();
    let mut h = Mat4::zeros();
    for j in 0..3 {
        h += kron(&id, &pauli(j)) * Complex64::from(c.a[j]);
        h += kron(&pauli(j), &id) * Complex64::from(c.b[j]);
        for k in 0..3 {
            h += pauli_pair(j, k) * Complex64::from(c.m[j][k]);
        }
    }
    h
}

/// Drops the local terms, keeping the coupling tensor.
pub fn nonlocal_part(c: &PauliCoefficients) -> PauliCoefficients {
    PauliCoefficients::coupling(c.m)
}

static MAGIC_Q: LazyLock<Mat4> = LazyLock::new(|| {
    let s = FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x * s, 0.0);
    let i = |x: f64| Complex64::new(0.0, x * s);
    #[rustfmt::skip]
    let q = Mat4::new(
        r(1.0), r(0.0), r(0.0),  i(1.0),
        r(0.0), i(1.0), r(1.0),  r(0.0),
        r(0.0), i(1.0), r(-1.0), r(0.0),
        r(1.0), r(0.0), r(0.0),  i(-1.0),
    );
    q
});

/// The magic-basis matrix `Q`; its columns are the magic basis vectors.
pub fn magic_q() -> &'static Mat4 {
    &MAGIC_Q
}

/// `Q⁻¹ X Q`.
pub fn to_magic(x: &Mat4) -> Mat4 {
    let q = magic_q();
    q.adjoint() * x * q
}

/// `Q X Q⁻¹`, the inverse of [`to_magic`].
pub fn from_magic(x: &Mat4) -> Mat4 {
    let q = magic_q();
    q * x * q.adjoint()
}

pub fn real_part(m: &Mat4) -> RealMat4 {
    m.map(|z| z.re)
}

pub fn max_imag(m: &Mat4) -> f64 {
    m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

pub fn complexify(m: &RealMat4) -> Mat4 {
    m.map(Complex64::from)
}

/// `Σ θⱼ σⱼ⊗σⱼ`.
pub fn canonical_hamiltonian(theta: &[f64; 3]) -> Mat4 {
    (0..3).fold(Mat4::zeros(), |acc, j| {
        acc + pauli_pair(j, j) * Complex64::from(theta[j])
    })
}

/// `exp(−i Σ θⱼ σⱼ⊗σⱼ)`, computed from the diagonal magic-frame form.
pub fn canonical_gate(theta: &[f64; 3]) -> Mat4 {
    let phi = crate::canonical::theta_to_phi(theta);
    let diag = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| {
        Complex64::from_polar(1.0, -phi[FRAME_ORDER[k]])
    }));
    from_magic(&diag)
}

/// `exp(−i H t)` for Hermitian `H`, through its spectral decomposition.
pub fn expm_hermitian(h: &Mat4, t: f64) -> Mat4 {
    let hermitian = (h + h.adjoint()) * Complex64::from(0.5);
    let eig = SymmetricEigen::new(hermitian);
    let phases = nalgebra::Vector4::from_fn(|k, _| Complex64::from_polar(1.0, -eig.eigenvalues[k] * t));
    eig.eigenvectors * Mat4::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Closest unitary matrix in Frobenius norm (unitary factor of the polar
/// decomposition).
pub fn polar_unitary(m: &Mat4) -> Mat4 {
    let svd = m.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return *m;
    };
    u * v_t
}

/// Splits a local gate `L = A ⊗ B` into single-qubit factors with
/// `det A = det B = 1` (up to the unavoidable joint sign).
///
/// Fails when `L` is not a tensor product within `tol`.
pub fn factor_local(l: &Mat4, tol: f64) -> Result<LocalPair> {
    let block = |i: usize, j: usize| -> Mat2 {
        Mat2::from_fn(|k, m| l[(2 * i + k, 2 * j + m)])
    };
    let (mut bi, mut bj, mut best) = (0, 0, -1.0);
    for i in 0..2 {
        for j in 0..2 {
            let n = block(i, j).norm();
            if n > best {
                (bi, bj, best) = (i, j, n);
            }
        }
    }
    if best <= 0.0 {
        return Err(Error::Numerical("cannot factor a zero matrix".into()));
    }
    let pivot = block(bi, bj);
    let mut b = pivot / pivot.determinant().sqrt();
    if !is_finite(&b) {
        // Rank-deficient pivot block: L is not a product of unitaries.
        return Err(Error::Numerical("matrix is not a local gate".into()));
    }
    let norm_b = b.norm_squared();
    let mut a = Mat2::from_fn(|i, j| (b.adjoint() * block(i, j)).trace() / norm_b);
    let det_a = a.determinant();
    if det_a.norm() > 0.0 {
        let s = det_a.sqrt();
        a /= s;
        b *= s;
    }
    let residual = (kron(&a, &b) - l).norm();
    if residual > tol {
        return Err(Error::Numerical(format!(
            "matrix is not a local gate (residual {residual:.3e})"
        )));
    }
    Ok((a, b))
}

/// Row-major JSON form of a complex matrix: `{"re": [[..]], "im": [[..]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix<const N: usize>(m: &SMatrix<Complex64, N, N>) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..N)
                .map(|i| (0..N).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    /// Validates the shape and finiteness and builds the matrix.
    pub fn to_matrix<const N: usize>(&self) -> Result<SMatrix<Complex64, N, N>> {
        let check = |part: &Vec<Vec<f64>>, name: &str| -> Result<()> {
            if part.len() != N || part.iter().any(|row| row.len() != N) {
                return Err(Error::InvalidInput(format!(
                    "matrix field '{name}' must be {N}x{N}"
                )));
            }
            if part.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "matrix field '{name}' has non-finite entries"
                )));
            }
            Ok(())
        };
        check(&self.re, "re")?;
        check(&self.im, "im")?;
        Ok(SMatrix::from_fn(|i, j| {
            Complex64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

/// `serde(with = ...)` adapter storing fixed-size complex matrices as
/// [`MatrixJson`].
pub mod serde_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<const N: usize, S: Serializer>(
        m: &SMatrix<Complex64, N, N>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, const N: usize, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<SMatrix<Complex64, N, N>, D::Error> {
        MatrixJson::deserialize(d)?
            .to_matrix()
            .map_err(serde::de::Error::custom)
    }
}

/// `serde(with = ...)` adapter for a [`LocalPair`], stored as `[A, B]`.
pub mod serde_local_pair {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &LocalPair, s: S) -> std::result::Result<S::Ok, S::Error> {
        [MatrixJson::from_matrix(&p.0), MatrixJson::from_matrix(&p.1)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<LocalPair, D::Error> {
        let [a, b] = <[MatrixJson; 2]>::deserialize(d)?;
        Ok((
            a.to_matrix().map_err(serde::de::Error::custom)?,
            b.to_matrix().map_err(serde::de::Error::custom)?,
        ))
    }
}
