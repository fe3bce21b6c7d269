//! Canonical (Cartan) decomposition of two-qubit Hamiltonians and gates.
//!
//! A non-local Hamiltonian is written `H = (A⊗B)† H_θ (A⊗B)` with
//! `H_θ = Σ θⱼ σⱼ⊗σⱼ` and θ s-ordered (`θ₁ ≥ θ₂ ≥ |θ₃|`). A gate is written
//! `U = e^{iα} (A₁⊗B₁) exp(−i H_θ) (A₂⊗B₂)` with θ in the gate cell
//! `π/4 ≥ θ₁ ≥ θ₂ ≥ |θ₃|`.
//!
//! Both decompositions go through the magic frame, where the Hamiltonian is
//! real symmetric and the gate factors as `R·D·S` with `R, S ∈ SO(4)`.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su4::{
    self, canonical_gate, canonical_hamiltonian, complexify, factor_local, hermiticity_residual,
    kron, magic_q, pauli, pauli_compose, pauli_decompose, real_part, to_magic, unitarity_residual,
    LocalPair, Mat2, Mat4, RealMat4, Tolerances, FRAME_ORDER,
};

/// Tolerance used for gate-cell membership and boundary tie-breaks.
pub const CELL_TOL: f64 = 1e-9;

/// Residual bound for accepting a matrix as unitary in [`canon_unitary`].
pub const UNITARY_INPUT_TOL: f64 = 1e-8;

/// Maps canonical parameters to the magic-frame eigenvalues:
/// `φ = (θ₁+θ₂−θ₃, θ₁−θ₂+θ₃, −θ₁+θ₂+θ₃, −θ₁−θ₂−θ₃)`.
pub fn theta_to_phi(theta: &[f64; 3]) -> [f64; 4] {
    let [t1, t2, t3] = *theta;
    [t1 + t2 - t3, t1 - t2 + t3, -t1 + t2 + t3, -t1 - t2 - t3]
}

/// Inverse of [`theta_to_phi`]; the input must sum to zero within `tol`.
pub fn phi_to_theta(phi: &[f64; 4], tol: f64) -> Result<[f64; 3]> {
    let sum: f64 = phi.iter().sum();
    if !(sum.abs() <= tol) {
        return Err(Error::NonZeroSum { sum });
    }
    Ok([
        0.5 * (phi[0] + phi[1]),
        0.5 * (phi[0] + phi[2]),
        0.5 * (phi[1] + phi[2]),
    ])
}

/// The s-ordered version of a 3-vector: absolute values sorted descending,
/// with the last entry carrying the sign of `x₁x₂x₃`.
pub fn s_reorder(x: &[f64; 3]) -> [f64; 3] {
    let mut abs = x.map(f64::abs);
    abs.sort_by(|a, b| b.total_cmp(a));
    let sign = if x[0] * x[1] * x[2] < 0.0 { -1.0 } else { 1.0 };
    [abs[0], abs[1], sign * abs[2]]
}

pub fn is_s_ordered(x: &[f64; 3], tol: f64) -> bool {
    x[0] + tol >= x[1] && x[1] + tol >= x[2].abs()
}

/// `π/4 ≥ θ₁ ≥ θ₂ ≥ |θ₃|` within `tol`.
pub fn in_gate_cell(x: &[f64; 3], tol: f64) -> bool {
    is_s_ordered(x, tol) && x[0] <= FRAC_PI_4 + tol
}

/// Canonical form of a non-local Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCanonicalForm {
    pub theta: [f64; 3],
    #[serde(with = "su4::serde_local_pair")]
    pub local: LocalPair,
}

impl HamiltonianCanonicalForm {
    /// `(A⊗B)† H_θ (A⊗B)`.
    pub fn reconstruct(&self) -> Mat4 {
        let l = su4::local_gate(&self.local);
        l.adjoint() * canonical_hamiltonian(&self.theta) * l
    }
}

/// Canonical form of a two-qubit gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryCanonicalForm {
    pub theta: [f64; 3],
    /// Left local factor `(A₁, B₁)`.
    #[serde(with = "su4::serde_local_pair")]
    pub left: LocalPair,
    /// Right local factor `(A₂, B₂)`.
    #[serde(with = "su4::serde_local_pair")]
    pub right: LocalPair,
    pub global_phase: Complex64,
}

impl UnitaryCanonicalForm {
    /// `e^{iα} (A₁⊗B₁) U_θ (A₂⊗B₂)`.
    pub fn reconstruct(&self) -> Mat4 {
        su4::local_gate(&self.left)
            * canonical_gate(&self.theta)
            * su4::local_gate(&self.right)
            * self.global_phase
    }

    fn apply(&mut self, mv: WeylMove) {
        let i = Complex64::i();
        match mv {
            WeylMove::Shift { axis, k } => {
                self.theta[axis] += k as f64 * FRAC_PI_2;
                self.global_phase *= i.powi(k.rem_euclid(4) as i32);
                if k.rem_euclid(2) == 1 {
                    let s = pauli(axis) * i;
                    self.right.0 = s * self.right.0;
                    self.right.1 = -s * self.right.1;
                }
            }
            WeylMove::Swap(a, b) => {
                self.theta.swap(a, b);
                let r = quarter_turn(3 - a - b);
                let r_dag = r.adjoint();
                self.left = (self.left.0 * r_dag, self.left.1 * r_dag);
                self.right = (r * self.right.0, r * self.right.1);
            }
            WeylMove::NegatePair { keep } => {
                for j in (0..3).filter(|&j| j != keep) {
                    self.theta[j] = -self.theta[j];
                }
                let s = pauli(keep) * i;
                self.left.0 *= s;
                self.right.0 = -s * self.right.0;
            }
        }
    }
}

/// `exp(−iπ/4 σ_axis)`, which rotates the other two Pauli axes into each
/// other.
fn quarter_turn(axis: usize) -> Mat2 {
    (Mat2::identity() - pauli(axis) * Complex64::i()) * Complex64::from(std::f64::consts::FRAC_1_SQRT_2)
}

/// An elementary local-equivalence move on canonical parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeylMove {
    /// `θ[axis] += k·π/2`.
    Shift { axis: usize, k: i64 },
    /// Exchange two components.
    Swap(usize, usize),
    /// Negate the two components other than `keep`.
    NegatePair { keep: usize },
}

impl WeylMove {
    pub fn apply_to(self, theta: &mut [f64; 3]) {
        match self {
            WeylMove::Shift { axis, k } => theta[axis] += k as f64 * FRAC_PI_2,
            WeylMove::Swap(a, b) => theta.swap(a, b),
            WeylMove::NegatePair { keep } => {
                for j in (0..3).filter(|&j| j != keep) {
                    theta[j] = -theta[j];
                }
            }
        }
    }
}

/// Output of [`weyl_reduce`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReduction {
    /// Representative in the gate cell.
    pub theta: [f64; 3],
    /// Integer shift `n`: the representative is a signed permutation of
    /// `θ + (π/2)·n`.
    pub shift: [i64; 3],
    /// The moves, in application order.
    pub moves: Vec<WeylMove>,
}

/// Reduces canonical parameters into the gate cell.
///
/// Members of the cell are returned unchanged with a zero shift.
pub fn weyl_reduce(theta: &[f64; 3]) -> WeylReduction {
    if in_gate_cell(theta, CELL_TOL) {
        return WeylReduction {
            theta: *theta,
            shift: [0; 3],
            moves: Vec::new(),
        };
    }
    let mut t = *theta;
    let mut moves = Vec::new();
    let mut shift = [0; 3];
    for axis in 0..3 {
        let k = -(t[axis] / FRAC_PI_2).round() as i64;
        if k != 0 {
            let mv = WeylMove::Shift { axis, k };
            mv.apply_to(&mut t);
            moves.push(mv);
            shift[axis] = k;
        }
    }
    // Sort by magnitude, largest first.
    for pass in 0..2 {
        for j in 0..2 - pass {
            if t[j].abs() < t[j + 1].abs() {
                let mv = WeylMove::Swap(j, j + 1);
                mv.apply_to(&mut t);
                moves.push(mv);
            }
        }
    }
    let sign_move = match (t[0] < 0.0, t[1] < 0.0) {
        (true, true) => Some(WeylMove::NegatePair { keep: 2 }),
        (true, false) => Some(WeylMove::NegatePair { keep: 1 }),
        (false, true) => Some(WeylMove::NegatePair { keep: 0 }),
        (false, false) => None,
    };
    if let Some(mv) = sign_move {
        mv.apply_to(&mut t);
        moves.push(mv);
    }
    WeylReduction { theta: t, shift, moves }
}

/// The two candidate vectors of the minimum-time test for a gate-cell θ:
/// `θ` itself and the s-ordered form of `θ + (π/2)(−1, 0, 0)`.
pub fn equivalent_gate_vectors(theta: &[f64; 3]) -> [[f64; 3]; 2] {
    [*theta, s_reorder(&shifted_gate_vector(theta))]
}

/// `θ + (π/2)(−1, 0, 0)` without reordering.
pub fn shifted_gate_vector(theta: &[f64; 3]) -> [f64; 3] {
    [theta[0] - FRAC_PI_2, theta[1], theta[2]]
}

/// Makes the first nonzero component of every column positive.
fn fix_column_signs(v: &mut RealMat4) {
    for mut col in v.column_iter_mut() {
        if let Some(first) = col.iter().copied().find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Canonical form of a non-local Hermitian matrix.
///
/// The magic-frame image of `H` is real symmetric; its descending
/// eigenvalues are `φ(θ)`, and its eigenvector matrix (with determinant one)
/// pulled back through the frame gives the local conjugation.
pub fn canon_hamiltonian(h: &Mat4, tol: &Tolerances) -> Result<HamiltonianCanonicalForm> {
    let residual = hermiticity_residual(h);
    if residual > tol.reject_hermitian {
        return Err(Error::NonHermitianInput { residual });
    }
    let coeffs = pauli_decompose(h, tol)?.coefficients;
    let local = coeffs.local_norm();
    if local > 1e-8 {
        return Err(Error::NonNegligibleLocalPart { norm: local });
    }
    let h0 = pauli_compose(&su4::nonlocal_part(&coeffs));
    let m = real_part(&to_magic(&h0));
    let m = (m + m.transpose()) * 0.5;

    let eig = SymmetricEigen::new(m);
    let mut order = [0, 1, 2, 3];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let phi = order.map(|k| eig.eigenvalues[k]);
    let mut v = RealMat4::from_fn(|i, j| eig.eigenvectors[(i, order[j])]);
    fix_column_signs(&mut v);
    if v.determinant() < 0.0 {
        v.column_mut(3).neg_mut();
    }
    let theta = phi_to_theta(&phi, 1e-8 * (1.0 + phi[0].abs()))?;

    // O = Π·Vᵀ with Π placing φ into frame order, so that m = Oᵀ D_frame O.
    let o = RealMat4::from_fn(|k, j| v[(j, FRAME_ORDER[k])]);
    let q = magic_q();
    let l = q * complexify(&o) * q.adjoint();
    let local = factor_local(&l, 1e-8)?;
    Ok(HamiltonianCanonicalForm { theta, local })
}

/// `m = R · diag(e^{−iφ_frame}) · S` with `R, S ∈ SO(4)`, for `m` in the
/// magic frame with unit determinant.
fn magic_frame_kak(m: &Mat4) -> Result<(RealMat4, [f64; 4], RealMat4)> {
    let m2 = m.transpose() * m;
    let re = real_part(&m2);
    let im = m2.map(|z| z.im);
    let re = (re + re.transpose()) * 0.5;
    let im = (im + im.transpose()) * 0.5;

    // Re(m2) and Im(m2) commute; a generic real combination shares their
    // real eigenbasis. Degenerate eigenspaces come out real-orthonormal.
    const MIXING_ANGLES: [f64; 6] = [
        0.6180339887,
        1.3247179572,
        2.2360679775,
        0.1414213562,
        2.9153155494,
        1.7320508076,
    ];
    let mut best: Option<(f64, RealMat4)> = None;
    for a in MIXING_ANGLES {
        let x = re * a.cos() + im * a.sin();
        let p = SymmetricEigen::new(x).eigenvectors;
        let d = complexify(&p).transpose() * m2 * complexify(&p);
        let off = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| d[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if best.as_ref().is_none_or(|(o, _)| off < *o) {
            best = Some((off, p));
        }
        if off < 1e-12 {
            break;
        }
    }
    let (off, p) = best.expect("at least one mixing angle");
    if off > 1e-6 {
        return Err(Error::Numerical(format!(
            "could not diagonalize mᵀm (off-diagonal {off:.3e})"
        )));
    }
    let d = complexify(&p).transpose() * m2 * complexify(&p);
    let half_phase = |k: usize| -0.5 * d[(k, k)].arg();
    let mut order = [0, 1, 2, 3];
    order.sort_by(|&a, &b| half_phase(b).total_cmp(&half_phase(a)));
    let mut phi_frame = order.map(half_phase);
    let mut p = RealMat4::from_fn(|i, j| p[(i, order[j])]);
    fix_column_signs(&mut p);
    if p.determinant() < 0.0 {
        p.column_mut(3).neg_mut();
    }
    let inv_d = Vector4::from_fn(|k, _| Complex64::from_polar(1.0, phi_frame[k]));
    let r = m * complexify(&p) * Mat4::from_diagonal(&inv_d);
    let mut r_real = real_part(&r);
    if r_real.determinant() < 0.0 {
        r_real.column_mut(0).neg_mut();
        phi_frame[0] += PI;
    }
    Ok((r_real, phi_frame, p.transpose()))
}

/// Decomposes `u` after normalizing it by the given fourth root of its
/// determinant.
fn canon_with_root(u: &Mat4, root: Complex64) -> Result<UnitaryCanonicalForm> {
    let su = u / root;
    let m = to_magic(&su);
    let (r, phi_frame, s) = magic_frame_kak(&m)?;

    let mut phi = [0.0; 4];
    for k in 0..4 {
        // Fold into (−π, π].
        let x = phi_frame[k];
        phi[FRAME_ORDER[k]] = x - 2.0 * PI * ((x - PI) / (2.0 * PI)).ceil();
    }
    let mean = phi.iter().sum::<f64>() / 4.0;
    let phi0 = phi.map(|x| x - mean);
    let theta_raw = phi_to_theta(&phi0, 1e-9)?;

    let q = magic_q();
    let left = factor_local(&(q * complexify(&r) * q.adjoint()), 1e-7)?;
    let right = factor_local(&(q * complexify(&s) * q.adjoint()), 1e-7)?;
    let mut form = UnitaryCanonicalForm {
        theta: theta_raw,
        left,
        right,
        global_phase: root * Complex64::from_polar(1.0, -mean),
    };
    for mv in weyl_reduce(&theta_raw).moves {
        form.apply(mv);
    }
    // On the face θ₁ = π/4 the sign of θ₃ is not fixed by the cell
    // inequalities; pick θ₃ ≥ 0.
    if (form.theta[0] - FRAC_PI_4).abs() <= CELL_TOL && form.theta[2] < 0.0 {
        form.apply(WeylMove::Shift { axis: 0, k: -1 });
        form.apply(WeylMove::NegatePair { keep: 1 });
    }
    Ok(form)
}

fn cell_order(a: &[f64; 3], b: &[f64; 3]) -> Ordering {
    for j in 0..2 {
        if (a[j] - b[j]).abs() > CELL_TOL {
            return a[j].total_cmp(&b[j]);
        }
    }
    b[2].total_cmp(&a[2])
}

/// Canonical form of a two-qubit unitary.
///
/// Every fourth root of `det U` is tried as the SU(4) normalization and the
/// representative with the smallest `θ₁` (then `θ₂`) is kept.
pub fn canon_unitary(u: &Mat4) -> Result<UnitaryCanonicalForm> {
    let residual = unitarity_residual(u);
    if !su4::is_finite(u) || residual > UNITARY_INPUT_TOL {
        return Err(Error::NonUnitaryInput { residual });
    }
    let base = u.determinant().powf(0.25);
    let mut best: Option<UnitaryCanonicalForm> = None;
    for r in 0..4 {
        let root = base * Complex64::i().powi(r);
        let form = canon_with_root(u, root)?;
        if best
            .as_ref()
            .is_none_or(|b| cell_order(&form.theta, &b.theta) == Ordering::Less)
        {
            best = Some(form);
        }
    }
    Ok(best.expect("four candidate roots"))
}

/// The local gate `A ⊗ B` as a 4×4 matrix, re-exported for convenience.
pub fn local_matrix(a: &Mat2, b: &Mat2) -> Mat4 {
    kron(a, b)
}
