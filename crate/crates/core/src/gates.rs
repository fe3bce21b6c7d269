//! A few standard two-qubit gates.

use num_complex::Complex64;

use crate::su4::{canonical_gate, Mat4};

fn permutation_matrix(cols: [usize; 4]) -> Mat4 {
    let mut m = Mat4::zeros();
    for (row, col) in cols.into_iter().enumerate() {
        m[(row, col)] = Complex64::from(1.0);
    }
    m
}

/// CNOT with qubit 1 (first tensor factor) as control.
pub fn cnot() -> Mat4 {
    permutation_matrix([0, 1, 3, 2])
}

pub fn swap() -> Mat4 {
    permutation_matrix([0, 2, 1, 3])
}

/// `exp(−i π/4 (XX + YY + ZZ))`, equal to SWAP up to a global phase.
pub fn swap_canonical() -> Mat4 {
    let q = std::f64::consts::FRAC_PI_4;
    canonical_gate(&[q, q, q])
}
