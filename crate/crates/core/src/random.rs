//! Random sampling of gates and Hamiltonians (Haar measure where it applies).

use nalgebra::Vector4;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::su4::{LocalPair, Mat2, Mat4};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-random element of SU(2), from a uniformly random unit quaternion.
pub fn haar_su2<R: Rng + ?Sized>(rng: &mut R) -> Mat2 {
    let q = Vector4::from_fn(|_, _| gaussian(rng)).normalize();
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Mat2::new(
        Complex64::new(w, z),
        Complex64::new(y, x),
        Complex64::new(-y, x),
        Complex64::new(w, -z),
    )
}

pub fn random_local_pair<R: Rng + ?Sized>(rng: &mut R) -> LocalPair {
    (haar_su2(rng), haar_su2(rng))
}

/// Haar-random element of U(4) (QR of a Ginibre matrix with the phase fix).
pub fn haar_u4<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let z = Mat4::from_fn(|_, _| Complex64::new(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2);
    let qr = z.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = Vector4::from_fn(|k, _| {
        let d = r[(k, k)];
        if d.norm() > 0.0 { d / d.norm() } else { Complex64::from(1.0) }
    });
    q * Mat4::from_diagonal(&phases)
}

/// Haar-random element of SU(4).
pub fn haar_su4<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let u = haar_u4(rng);
    let root = u.determinant().powf(0.25);
    u / root
}

/// Random Hermitian matrix with independent Gaussian entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R) -> Mat4 {
    let z = Mat4::from_fn(|_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    (z + z.adjoint()) * Complex64::from(0.5)
}
