//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, TAU};

use qtopt_core::canonical::s_reorder;
use qtopt_core::majorization::{all_permutations4, permute};
use qtopt_core::profiles::CouplingProfile;
use qtopt_core::random::random_hermitian;
use qtopt_core::su4::{nonlocal_part, pauli_compose, pauli_decompose, Mat4, Tolerances};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random point of the simplex with `n` vertices.
pub fn simplex_weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// `B·v` for a random doubly stochastic `B` built as a convex combination
/// of a few permutations.
pub fn random_doubly_stochastic_image<R: Rng>(rng: &mut R, v: &[f64; 4]) -> [f64; 4] {
    let perms = all_permutations4();
    let k = rng.random_range(1..=5);
    let w = simplex_weights(rng, k);
    let mut out = [0.0; 4];
    for wi in w {
        let p = permute(&perms[rng.random_range(0..perms.len())], v);
        for i in 0..4 {
            out[i] += wi * p[i];
        }
    }
    out
}

pub fn random_vec4<R: Rng>(rng: &mut R, scale: f64) -> [f64; 4] {
    std::array::from_fn(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
}

pub fn random_vec3<R: Rng>(rng: &mut R, scale: f64) -> [f64; 3] {
    std::array::from_fn(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
}

/// A uniformly random point of the gate cell `π/4 ≥ θ₁ ≥ θ₂ ≥ |θ₃|`.
pub fn random_gate_cell<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let t = [
            FRAC_PI_2 / 2.0 * rng.random::<f64>(),
            FRAC_PI_2 / 2.0 * rng.random::<f64>(),
            FRAC_PI_2 / 2.0 * (2.0 * rng.random::<f64>() - 1.0),
        ];
        if t[0] >= t[1] && t[1] >= t[2].abs() {
            return t;
        }
    }
}

/// A random s-ordered vector with `θ₁` in `(0, scale]`.
pub fn random_s_ordered<R: Rng>(rng: &mut R, scale: f64) -> [f64; 3] {
    let v = s_reorder(&random_vec3(rng, scale));
    if v[0] == 0.0 {
        [scale, 0.0, 0.0]
    } else {
        v
    }
}

pub fn random_nonlocal_hamiltonian<R: Rng>(rng: &mut R) -> Mat4 {
    let h = random_hermitian(rng);
    let c = pauli_decompose(&h, &Tolerances::default()).unwrap().coefficients;
    pauli_compose(&nonlocal_part(&c))
}

/// A random profile of any kind, with couplings of order one.
pub fn random_profile<R: Rng>(rng: &mut R) -> CouplingProfile {
    match rng.random_range(0..4) {
        0 => CouplingProfile::constant_hamiltonian(&random_nonlocal_hamiltonian(rng)).unwrap(),
        1 => CouplingProfile::mas_dipolar(
            rng.random_range(0.3..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 },
            rng.random_range(4.0..30.0),
            rng.random_range(0.05..3.0),
            rng.random_range(0.0..TAU),
        )
        .unwrap(),
        2 => {
            let n = rng.random_range(2..6);
            let mut times = vec![0.0];
            for _ in 1..n {
                let last = *times.last().unwrap();
                times.push(last + rng.random_range(0.2..1.0));
            }
            let theta = (0..n).map(|_| random_s_ordered(rng, 1.5)).collect();
            CouplingProfile::sampled(times, theta).unwrap()
        }
        _ => {
            let n = rng.random_range(1..5);
            let segs: Vec<(f64, Mat4)> = (0..n)
                .map(|_| (rng.random_range(0.2..1.0), random_nonlocal_hamiltonian(rng)))
                .collect();
            CouplingProfile::piecewise_constant(&segs).unwrap()
        }
    }
}

/// Whether `x` is a convex combination of the 24 coordinate permutations of
/// `y`, decided by a phase-one simplex with Bland's rule.
pub fn in_permutation_hull(y: &[f64; 4], x: &[f64; 4]) -> bool {
    let perms = all_permutations4();
    let n = perms.len();
    // Rows: Σ_σ w_σ (P_σ y)_i = x_i for i = 0..4, and Σ w_σ = 1.
    let mut rows: Vec<(Vec<f64>, f64)> = (0..4)
        .map(|i| (perms.iter().map(|p| permute(p, y)[i]).collect(), x[i]))
        .collect();
    rows.push((vec![1.0; n], 1.0));
    phase_one_feasible(rows, n, 1e-9)
}

/// Feasibility of `A w = b, w ≥ 0` by minimizing the sum of artificial
/// variables.
fn phase_one_feasible(mut rows: Vec<(Vec<f64>, f64)>, n: usize, tol: f64) -> bool {
    let m = rows.len();
    for (a, b) in rows.iter_mut() {
        if *b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
        }
    }
    // Tableau columns: n structural, m artificial, then the right-hand side.
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(r, (a, b))| {
            let mut row = a.clone();
            row.extend((0..m).map(|k| if k == r { 1.0 } else { 0.0 }));
            row.push(*b);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Reduced costs of the phase-one objective Σ artificials.
    let mut cost = vec![0.0; width];
    for row in &t {
        for j in 0..width {
            if j < n || j == width - 1 {
                cost[j] -= row[j];
            }
        }
    }
    for _ in 0..10_000 {
        let Some(enter) = (0..n + m).find(|&j| cost[j] < -1e-12) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for r in 0..m {
            if t[r][enter] > 1e-12 {
                let ratio = t[r][width - 1] / t[r][enter];
                match leave {
                    None => leave = Some(r),
                    Some(l) => {
                        let best = t[l][width - 1] / t[l][enter];
                        if ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[r] < basis[l]) {
                            leave = Some(r);
                        }
                    }
                }
            }
        }
        let Some(r) = leave else {
            break;
        };
        let pivot = t[r][enter];
        t[r].iter_mut().for_each(|v| *v /= pivot);
        let pivot_row = t[r].clone();
        for (k, row) in t.iter_mut().enumerate() {
            if k != r {
                let f = row[enter];
                if f != 0.0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
        let f = cost[enter];
        cost.iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
        basis[r] = enter;
    }
    -cost[width - 1] <= tol
}

/// Exact minimum time for a constant profile with canonical rate `rate`,
/// solving the three linear inequalities per shift directly.
pub fn constant_min_time(rate: &[f64; 3], theta_u: &[f64; 3]) -> f64 {
    let y = s_reorder(rate);
    let lhs = [y[0], y[0] + y[1] + y[2], y[0] + y[1] - y[2]];
    let candidates = [
        *theta_u,
        s_reorder(&[theta_u[0] - FRAC_PI_2, theta_u[1], theta_u[2]]),
    ];
    candidates
        .iter()
        .map(|x| {
            let rhs = [x[0], x[0] + x[1] + x[2], x[0] + x[1] - x[2]];
            lhs.iter()
                .zip(rhs)
                .map(|(&a, b)| {
                    if b <= 0.0 {
                        0.0
                    } else if a <= 0.0 {
                        f64::INFINITY
                    } else {
                        b / a
                    }
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Spinning dipolar coupling written out as a Fourier series:
/// `D(t) = (d/2)(6ab·cos u + (3b²/2)·cos 2u)` with `u = ωt + phase`,
/// `a = cos β cos θ_M`, `b = sin β sin θ_M`. The constant term vanishes
/// at the magic angle.
pub struct MasSeries {
    pub d: f64,
    pub omega: f64,
    pub phase: f64,
    pub a: f64,
    pub b: f64,
}

impl MasSeries {
    pub fn new(d: f64, omega: f64, beta: f64, phase: f64) -> Self {
        let cos_m = 1.0 / 3f64.sqrt();
        let sin_m = (2.0f64 / 3.0).sqrt();
        MasSeries {
            d,
            omega,
            phase,
            a: beta.cos() * cos_m,
            b: beta.sin() * sin_m,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let u = self.omega * t + self.phase;
        0.5 * self.d * (6.0 * self.a * self.b * u.cos() + 1.5 * self.b * self.b * (2.0 * u).cos())
    }

    /// Antiderivative of [`MasSeries::value`].
    pub fn antiderivative(&self, t: f64) -> f64 {
        let u = self.omega * t + self.phase;
        0.5 * self.d * (6.0 * self.a * self.b * u.sin() + 0.75 * self.b * self.b * (2.0 * u).sin()) / self.omega
    }

    /// `∫|D|` on `[t0, t1]`: sign changes are located by a dense scan plus
    /// bisection and each lobe is integrated with the antiderivative.
    pub fn abs_integral(&self, t0: f64, t1: f64) -> f64 {
        let n = (((t1 - t0) * self.omega / TAU).ceil() as usize).max(1) * 400;
        let h = (t1 - t0) / n as f64;
        let mut cuts = vec![t0];
        for i in 0..n {
            let (a, b) = (t0 + i as f64 * h, t0 + (i + 1) as f64 * h);
            let (fa, fb) = (self.value(a), self.value(b));
            if fa * fb < 0.0 {
                let (mut lo, mut hi) = (a, b);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid) * fa > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cuts.push(0.5 * (lo + hi));
            }
        }
        cuts.push(t1);
        cuts.windows(2)
            .map(|w| (self.antiderivative(w[1]) - self.antiderivative(w[0])).abs())
            .sum()
    }
}
