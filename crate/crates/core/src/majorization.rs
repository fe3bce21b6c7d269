//! Majorization, s-majorization and their constructive converses.
//!
//! A permutation of four items is stored as `[usize; 4]` with row `i` of its
//! matrix carrying a one in column `σ[i]`, so `(P·v)[i] = v[σ[i]]`.

use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::canonical::{s_reorder, theta_to_phi};
use crate::error::{Error, Result};

/// Default slack for majorization comparisons.
pub const MAJORIZATION_EPS: f64 = 1e-10;

/// Default slack for s-majorization, which is used at feasibility
/// boundaries.
pub const S_MAJORIZATION_EPS: f64 = 1e-9;

pub type Permutation4 = [usize; 4];

/// The 24 permutations of `{0, 1, 2, 3}` in lexicographic order.
pub fn all_permutations4() -> Vec<Permutation4> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in (0..4).filter(|&b| b != a) {
            for c in (0..4).filter(|&c| c != a && c != b) {
                let d = 6 - a - b - c;
                out.push([a, b, c, d]);
            }
        }
    }
    out
}

pub fn permutation_matrix(sigma: &Permutation4) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| if sigma[i] == j { 1.0 } else { 0.0 })
}

/// `(P·v)[i] = v[σ[i]]`.
pub fn permute(sigma: &Permutation4, v: &[f64; 4]) -> [f64; 4] {
    sigma.map(|j| v[j])
}

fn descending(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// True when `x` is majorized by `y`: descending partial sums of `x` never
/// exceed those of `y` and the totals agree.
pub fn majorizes(y: &[f64], x: &[f64]) -> Result<bool> {
    majorizes_with(y, x, MAJORIZATION_EPS)
}

pub fn majorizes_with(y: &[f64], x: &[f64], eps: f64) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(y.len(), x.len()));
    }
    let (xs, ys) = (descending(x), descending(y));
    let (mut sx, mut sy) = (0.0, 0.0);
    for k in 0..xs.len() {
        sx += xs[k];
        sy += ys[k];
        if sx > sy + eps {
            return Ok(false);
        }
    }
    Ok((sx - sy).abs() <= eps)
}

/// The three s-majorization margins `y − x` after s-reordering both:
/// `y₁−x₁`, `(y₁+y₂+y₃)−(x₁+x₂+x₃)` and `(y₁+y₂−y₃)−(x₁+x₂−x₃)`.
/// All three nonnegative means `x` is s-majorized by `y`.
pub fn s_majorization_margins(y: &[f64; 3], x: &[f64; 3]) -> [f64; 3] {
    let (x, y) = (s_reorder(x), s_reorder(y));
    [
        y[0] - x[0],
        (y[0] + y[1] + y[2]) - (x[0] + x[1] + x[2]),
        (y[0] + y[1] - y[2]) - (x[0] + x[1] - x[2]),
    ]
}

pub fn s_majorizes(y: &[f64; 3], x: &[f64; 3]) -> bool {
    s_majorizes_with(y, x, S_MAJORIZATION_EPS)
}

pub fn s_majorizes_with(y: &[f64; 3], x: &[f64; 3], eps: f64) -> bool {
    s_majorization_margins(y, x).iter().all(|&m| m >= -eps)
}

/// Evaluates s-majorization of `alpha` by `beta` and majorization of their
/// magic-frame eigenvalue vectors. Both inputs are s-reordered first; the
/// two answers always agree.
pub fn phi_major_equiv_check(alpha: &[f64; 3], beta: &[f64; 3]) -> (bool, bool) {
    let (a, b) = (s_reorder(alpha), s_reorder(beta));
    let s = s_majorizes(&b, &a);
    let m = majorizes_with(&theta_to_phi(&b), &theta_to_phi(&a), S_MAJORIZATION_EPS)
        .expect("equal lengths");
    (s, m)
}

fn sort_order(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    idx
}

/// An orthogonal `K` with `det K = 1` and `diag(Kᵀ·diag(λ)·K) = a`.
///
/// Built from at most `n − 1` plane rotations: each one fixes the largest
/// outstanding target entry by rotating two adjacent remaining diagonal
/// values that bracket it.
pub fn schur_horn_rotation(a: &[f64], lambda: &[f64]) -> Result<DMatrix<f64>> {
    let n = a.len();
    if !majorizes_with(lambda, a, 1e-9)? {
        return Err(Error::NotMajorized);
    }
    let lam_order = sort_order(lambda);
    let a_order = sort_order(a);
    let mut diag: Vec<f64> = lam_order.iter().map(|&i| lambda[i]).collect();
    let mut g = DMatrix::<f64>::identity(n, n);
    // `remaining` holds positions (in sorted-λ coordinates) whose diagonal
    // entry is not yet assigned; their values stay in descending order.
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut assigned = vec![0usize; n];
    for (rank, &target_idx) in a_order.iter().enumerate() {
        let t = a[target_idx];
        let i = remaining
            .iter()
            .rposition(|&p| diag[p] >= t)
            .unwrap_or(0);
        let p = remaining[i];
        let done_directly = i + 1 == remaining.len() || (diag[p] - t).abs() <= 1e-14;
        if !done_directly {
            let q = remaining[i + 1];
            let (x, y) = (diag[p], diag[q]);
            let c2 = ((t - y) / (x - y)).clamp(0.0, 1.0);
            let (c, s) = (c2.sqrt(), (1.0 - c2).sqrt());
            // Columns p and q of G mix; diag(Gᵀ Λ G) follows.
            for r in 0..n {
                let (gp, gq) = (g[(r, p)], g[(r, q)]);
                g[(r, p)] = c * gp + s * gq;
                g[(r, q)] = -s * gp + c * gq;
            }
            diag[q] = x + y - t;
            diag[p] = t;
        }
        assigned[rank] = p;
        remaining.remove(i);
    }
    // K = Sᵀ G Π where S sorts λ and Π sends column j to the position that
    // received a[j].
    let mut rank_of = vec![0usize; n];
    for (rank, &j) in a_order.iter().enumerate() {
        rank_of[j] = rank;
    }
    let mut k = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let src = assigned[rank_of[j]];
        for (row_sorted, &row) in lam_order.iter().enumerate() {
            k[(row, j)] = g[(row_sorted, src)];
        }
    }
    if n > 0 && k.determinant() < 0.0 {
        k.column_mut(0).neg_mut();
    }
    Ok(k)
}

/// A doubly stochastic `B` with `B·gamma = beta`, built as a chain of at
/// most three T-transforms.
///
/// Pivots follow the classical construction: the last coordinate where the
/// current vector still exceeds the target, paired with the first later
/// coordinate that falls short.
pub fn transfer_matrix(beta: &[f64; 4], gamma: &[f64; 4]) -> Result<Matrix4<f64>> {
    transfer_matrix_with(beta, gamma, 1e-9)
}

/// [`transfer_matrix`] with an explicit majorization slack. Inputs that are
/// majorized only within the slack give a `B` whose image misses `beta` by
/// at most that much.
pub fn transfer_matrix_with(beta: &[f64; 4], gamma: &[f64; 4], eps: f64) -> Result<Matrix4<f64>> {
    if !majorizes_with(gamma, beta, eps)? {
        return Err(Error::NotMajorized);
    }
    let bo = sort_order(beta);
    let go = sort_order(gamma);
    let x: Vec<f64> = bo.iter().map(|&i| beta[i]).collect();
    let mut y: Vec<f64> = go.iter().map(|&i| gamma[i]).collect();
    let scale = 1.0 + gamma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-13 * scale;
    let mut b_sorted = Matrix4::<f64>::identity();
    // Excesses inside the slack can sit past the last deficit, so the
    // pivot is the last excess that still has a later deficit.
    for _ in 0..6 {
        let pivot = (0..4).rev().filter(|&j| y[j] > x[j] + tol).find_map(|j| {
            (j + 1..4).find(|&k| y[k] < x[k] - tol).map(|k| (j, k))
        });
        let Some((j, k)) = pivot else {
            break;
        };
        let delta = (y[j] - x[j]).min(x[k] - y[k]);
        let lam = 1.0 - delta / (y[j] - y[k]);
        let mut t = Matrix4::<f64>::identity() * lam;
        t[(j, k)] = 1.0 - lam;
        t[(k, j)] = 1.0 - lam;
        for d in 0..4 {
            if d != j && d != k {
                t[(d, d)] = 1.0;
            }
        }
        let (yj, yk) = (y[j], y[k]);
        y[j] = lam * yj + (1.0 - lam) * yk;
        y[k] = lam * yk + (1.0 - lam) * yj;
        b_sorted = t * b_sorted;
    }
    // β = Pₓᵀ·x, y_sorted = P_γ·γ.
    let px = Matrix4::from_fn(|r, c| if bo[r] == c { 1.0 } else { 0.0 });
    let pg = Matrix4::from_fn(|r, c| if go[r] == c { 1.0 } else { 0.0 });
    Ok(px.transpose() * b_sorted * pg)
}

/// One weighted permutation in a Birkhoff decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffTerm {
    pub weight: f64,
    pub permutation: Permutation4,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffDecomposition {
    pub terms: Vec<BirkhoffTerm>,
}

impl BirkhoffDecomposition {
    pub fn reconstruct(&self) -> Matrix4<f64> {
        self.terms
            .iter()
            .map(|t| permutation_matrix(&t.permutation) * t.weight)
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }
}

/// Largest deviation of row/column sums from one, or of negative entries
/// from zero.
pub fn doubly_stochastic_residual(b: &Matrix4<f64>) -> f64 {
    let rows = (0..4).map(|i| (b.row(i).sum() - 1.0).abs());
    let cols = (0..4).map(|j| (b.column(j).sum() - 1.0).abs());
    let neg = b.iter().map(|&v| (-v).max(0.0));
    rows.chain(cols).chain(neg).fold(0.0, f64::max)
}

/// Greedy Birkhoff–von Neumann decomposition.
///
/// Each step takes the permutation whose smallest supported entry is
/// largest, subtracts that weight and zeroes the bottleneck entry, so at
/// most ten terms are produced.
pub fn birkhoff(b: &Matrix4<f64>) -> Result<BirkhoffDecomposition> {
    let residual = doubly_stochastic_residual(b);
    if !(residual <= 1e-7) {
        return Err(Error::NotDoublyStochastic { residual });
    }
    let perms = all_permutations4();
    let mut r = b.map(|v| v.max(0.0));
    let mut terms = Vec::new();
    let mut remaining = 1.0;
    while remaining > 1e-12 && terms.len() < 10 {
        let (sigma, w, argmin) = perms
            .iter()
            .map(|s| {
                let (row, w) = (0..4)
                    .map(|i| (i, r[(i, s[i])]))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("four rows");
                (*s, w, row)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("24 permutations");
        if w <= 1e-14 {
            if remaining <= 1e-9 {
                break;
            }
            return Err(Error::NoMatchingFound);
        }
        for i in 0..4 {
            r[(i, sigma[i])] -= w;
        }
        r[(argmin, sigma[argmin])] = 0.0;
        remaining -= w;
        terms.push(BirkhoffTerm {
            weight: w,
            permutation: sigma,
        });
    }
    let out = BirkhoffDecomposition { terms };
    let err = (out.reconstruct() - b).abs().max();
    if err > 1e-8 {
        return Err(Error::Numerical(format!(
            "Birkhoff decomposition residual {err:.3e} after {} terms",
            out.terms.len()
        )));
    }
    Ok(out)
}
