//! Construction of explicit control schedules.
//!
//! The drift is conjugated by a sequence of local gates, each of which
//! permutes the magic-frame eigenvalues of the canonical Hamiltonian. With
//! the doubly stochastic matrix `B = Σ cᵢ Pᵢ` taking the accumulated
//! eigenvalues `γ = φ(Θ(T))` to the target `φ(β)`, permutation `Pᵢ` is held
//! for a share `cᵢ` of the accumulated coupling. All conjugated canonical
//! Hamiltonians commute, so the product of segment propagators is the
//! canonical gate of `β`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::canonical::{canon_unitary, phi_to_theta, shifted_gate_vector, theta_to_phi};
use crate::error::{Error, Result};
use crate::majorization::{birkhoff, permute, transfer_matrix_with, BirkhoffTerm, Permutation4};
use crate::profiles::{CouplingProfile, DirectionPiece, PieceShape};
use crate::reachability::{margins_at, SHIFTS};
use crate::su4::{
    self, complexify, factor_local, identity2, magic_q, pauli_pair, LocalPair, Mat4, RealMat4,
    FRAME_ORDER,
};

/// Tolerance on the tiling of `[0, T]` by segments.
pub const TILING_TOL: f64 = 1e-12;

/// One constant-permutation block of a schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub start: f64,
    pub end: f64,
    /// `(P·φ)[k] = φ[σ[k]]`.
    pub permutation: Permutation4,
    /// `G = A⊗B` with `G† H_φ G = H_{Pφ}` for every canonical Hamiltonian.
    #[serde(with = "su4::serde_local_pair")]
    pub local: LocalPair,
    /// Time-averaged canonical parameters of the conjugated drift.
    pub effective_theta: [f64; 3],
}

impl ScheduleSegment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

mod serde_opt_matrix {
    use super::*;
    use crate::su4::MatrixJson;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<Mat4>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(MatrixJson::from_matrix).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Mat4>, D::Error> {
        Option::<MatrixJson>::deserialize(d)?
            .map(|j| j.to_matrix().map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// A complete control schedule. The realized gate is
/// `suffix · shift_correction · (∏ segments, time-ordered) · prefix`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub duration: f64,
    pub segments: Vec<ScheduleSegment>,
    #[serde(with = "su4::serde_local_pair")]
    pub prefix: LocalPair,
    #[serde(with = "su4::serde_local_pair")]
    pub suffix: LocalPair,
    /// Integer shift `n` of the targeted vector `β = θ_U + (π/2)·n`.
    pub shift: [i64; 3],
    /// `∏ⱼ (iσⱼ⊗σⱼ)^{nⱼ}`, absent when `n = 0`.
    #[serde(default, with = "serde_opt_matrix", skip_serializing_if = "Option::is_none")]
    pub shift_correction: Option<Mat4>,
    /// Canonical vector `β` accumulated by the segments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_beta: Option<[f64; 3]>,
    /// Gate-cell parameters of the target gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_theta: Option<[f64; 3]>,
}

impl PulseSchedule {
    /// An empty schedule of the given duration with identity locals.
    pub fn empty(duration: f64) -> Self {
        PulseSchedule {
            duration,
            segments: Vec::new(),
            prefix: (identity2(), identity2()),
            suffix: (identity2(), identity2()),
            shift: [0; 3],
            shift_correction: None,
            target_beta: None,
            target_theta: None,
        }
    }

    /// Checks that the segments tile `[0, duration]` in order and that all
    /// matrices are unitary.
    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::InvalidInput("schedule duration must be nonnegative".into()));
        }
        let tol = TILING_TOL * self.duration.max(1.0);
        let mut cursor = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            if (s.start - cursor).abs() > tol || s.end < s.start - tol {
                return Err(Error::InvalidInput(format!(
                    "segment {i} [{}, {}] does not continue the tiling at {cursor}",
                    s.start, s.end
                )));
            }
            let mut seen = [false; 4];
            for &k in &s.permutation {
                if k > 3 || std::mem::replace(&mut seen[k], true) {
                    return Err(Error::InvalidInput(format!("segment {i} has an invalid permutation")));
                }
            }
            cursor = s.end;
        }
        if !self.segments.is_empty() && (cursor - self.duration).abs() > tol {
            return Err(Error::InvalidInput(format!(
                "segments end at {cursor}, schedule duration is {}",
                self.duration
            )));
        }
        let locals = self
            .segments
            .iter()
            .map(|s| &s.local)
            .chain([&self.prefix, &self.suffix]);
        for (a, b) in locals {
            if !su4::is_unitary(a, 1e-8) || !su4::is_unitary(b, 1e-8) {
                return Err(Error::NonUnitaryInput {
                    residual: su4::unitarity_residual(a).max(su4::unitarity_residual(b)),
                });
            }
        }
        if let Some(c) = &self.shift_correction {
            if !su4::is_unitary(c, 1e-8) {
                return Err(Error::NonUnitaryInput {
                    residual: su4::unitarity_residual(c),
                });
            }
        }
        Ok(())
    }
}

/// Local gate whose conjugation permutes canonical eigenvalues by `σ`:
/// `G† H_φ G = H_{Pφ}` with `(Pφ)[k] = φ[σ[k]]`.
pub fn permutation_to_local(sigma: &Permutation4) -> LocalPair {
    // In the magic frame, slot k carries φ[FRAME_ORDER[k]], so the slot
    // permutation is τ = f∘σ∘f with f = FRAME_ORDER (an involution).
    let tau: [usize; 4] = std::array::from_fn(|b| FRAME_ORDER[sigma[FRAME_ORDER[b]]]);
    let mut o = RealMat4::zeros();
    for b in 0..4 {
        o[(tau[b], b)] = 1.0;
    }
    if o.determinant() < 0.0 {
        o.row_mut(tau[0]).neg_mut();
    }
    let q = magic_q();
    factor_local(&(q * complexify(&o) * q.adjoint()), 1e-10)
        .expect("signed permutations in SO(4) are local")
}

/// `∏ⱼ (iσⱼ⊗σⱼ)^{nⱼ}`.
pub fn shift_correction(shift: &[i64; 3]) -> Mat4 {
    let mut m = Mat4::identity();
    for (j, &k) in shift.iter().enumerate() {
        let phase = Complex64::i().powi(k.rem_euclid(4) as i32);
        let factor = if k.rem_euclid(2) == 1 {
            pauli_pair(j, j)
        } else {
            Mat4::identity()
        };
        m *= factor * phase;
    }
    m
}

fn directions(profile: &CouplingProfile, pieces: &[DirectionPiece]) -> Result<Vec<[f64; 4]>> {
    let mut out: Vec<[f64; 4]> = Vec::new();
    for piece in pieces {
        let times = match piece.shape {
            PieceShape::Linear => vec![piece.start, piece.end],
            _ => vec![piece.midpoint()],
        };
        for t in times {
            let v = theta_to_phi(&profile.theta_at(t)?);
            if !out.iter().any(|w| same_vector(w, &v)) {
                out.push(v);
            }
        }
    }
    Ok(out)
}

fn same_vector(a: &[f64; 4], b: &[f64; 4]) -> bool {
    let scale = 1.0 + a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * scale)
}

/// Combines Birkhoff terms whose permutations act identically on every
/// direction the profile visits, then sorts by descending weight.
fn merge_terms(terms: &[BirkhoffTerm], dirs: &[[f64; 4]]) -> Vec<BirkhoffTerm> {
    let mut merged: Vec<BirkhoffTerm> = Vec::new();
    for term in terms {
        let same = |other: &BirkhoffTerm| {
            dirs.iter()
                .all(|v| same_vector(&permute(&term.permutation, v), &permute(&other.permutation, v)))
        };
        match merged.iter_mut().find(|m| same(m)) {
            Some(m) => m.weight += term.weight,
            None => merged.push(*term),
        }
    }
    merged.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then_with(|| a.permutation.cmp(&b.permutation))
    });
    merged
}

/// Time in `[start, end]` where `∫_start^t θ₁` reaches `level`.
fn theta1_quantile(profile: &CouplingProfile, piece: &DirectionPiece, level: f64, total: f64) -> Result<f64> {
    let (mut a, mut b) = (piece.start, piece.end);
    let tol = profile.default_tolerance(piece.duration()) * 1e-2;
    let mut t = piece.start + piece.duration() * (level / total);
    for _ in 0..200 {
        let value = profile.integrate_between(piece.start, t, tol)?.theta[0] - level;
        if value.abs() <= 1e-14 * total.max(1e-300) || b - a <= 1e-15 * piece.end.abs().max(1.0) {
            return Ok(t);
        }
        if value > 0.0 {
            b = t;
        } else {
            a = t;
        }
        let slope = profile.theta_at(t)?[0];
        let newton = t - value / slope;
        t = if slope > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Ok(t)
}

/// Splits one piece among the terms so each receives its weight's share of
/// the accumulated coupling on the piece.
fn allocate_piece(
    profile: &CouplingProfile,
    piece: &DirectionPiece,
    terms: &[BirkhoffTerm],
) -> Result<Vec<(f64, f64, Permutation4)>> {
    let mut out = Vec::new();
    match piece.shape {
        PieceShape::Uniform => {
            let mut t = piece.start;
            let mut acc = 0.0;
            for (i, term) in terms.iter().enumerate() {
                acc += term.weight;
                let end = if i + 1 == terms.len() {
                    piece.end
                } else {
                    piece.start + piece.duration() * acc
                };
                out.push((t, end, term.permutation));
                t = end;
            }
        }
        PieceShape::FixedDirection => {
            let tol = profile.default_tolerance(piece.duration()) * 1e-2;
            let total = profile.integrate_between(piece.start, piece.end, tol)?.theta[0];
            let mut t = piece.start;
            let mut acc = 0.0;
            for (i, term) in terms.iter().enumerate() {
                acc += term.weight;
                let end = if i + 1 == terms.len() {
                    piece.end
                } else if total > 0.0 {
                    theta1_quantile(profile, piece, acc * total, total)?
                } else {
                    piece.start + piece.duration() * acc
                };
                let end = end.max(t);
                out.push((t, end, term.permutation));
                t = end;
            }
        }
        PieceShape::Linear => {
            // Mirrored halves: term i gets two sub-intervals placed
            // symmetrically about the midpoint, which carry exactly the
            // fraction cᵢ of any affine integrand.
            let half: Vec<f64> = terms.iter().map(|t| 0.5 * t.weight).collect();
            let order: Vec<usize> = (0..terms.len()).chain((0..terms.len()).rev()).collect();
            let mut t = piece.start;
            let mut acc = 0.0;
            for (n, &i) in order.iter().enumerate() {
                acc += half[i];
                let end = if n + 1 == order.len() {
                    piece.end
                } else {
                    piece.start + piece.duration() * acc
                };
                out.push((t, end, terms[i].permutation));
                t = end;
            }
        }
    }
    Ok(out)
}

pub(crate) fn realized_theta(profile: &CouplingProfile, start: f64, end: f64, sigma: &Permutation4) -> Result<[f64; 3]> {
    let tol = profile.default_tolerance(end - start);
    let theta = profile.integrate_between(start, end, tol)?.theta;
    let phi = permute(sigma, &theta_to_phi(&theta));
    phi_to_theta(&phi, 1e-6 * (1.0 + phi.iter().map(|x| x.abs()).sum::<f64>()))
}

/// Schedule that realizes the canonical gate of `θ_U` (a gate-cell vector)
/// in time `t`, up to the local gates `suffix`, `prefix` (identity here).
pub fn synthesize(theta_u: &[f64; 3], profile: &CouplingProfile, t: f64) -> Result<PulseSchedule> {
    let margins = margins_at(theta_u, profile, t)?;
    let Some(s) = margins.best_feasible_shift() else {
        return Err(Error::NotReachable { t });
    };
    let shift = SHIFTS[s];
    let beta = if s == 0 { *theta_u } else { shifted_gate_vector(theta_u) };
    let gamma = theta_to_phi(&margins.theta);
    let target = theta_to_phi(&beta);
    // Margins within the feasibility slack may leave a sliver of
    // infeasibility; the transfer matrix then lands within that slack.
    let b = transfer_matrix_with(&target, &gamma, 4.0 * crate::majorization::S_MAJORIZATION_EPS)?;
    let terms = birkhoff(&b)?.terms;

    let pieces = profile.direction_pieces(0.0, t)?;
    let terms = merge_terms(&terms, &directions(profile, &pieces)?);
    let mut raw: Vec<(f64, f64, Permutation4)> = Vec::new();
    for piece in &pieces {
        for (start, end, sigma) in allocate_piece(profile, piece, &terms)? {
            if end <= start {
                continue;
            }
            match raw.last_mut() {
                Some(last) if last.2 == sigma => last.1 = end,
                _ => raw.push((start, end, sigma)),
            }
        }
    }
    let mut locals: BTreeMap<Permutation4, LocalPair> = BTreeMap::new();
    let segments = raw
        .into_iter()
        .map(|(start, end, sigma)| {
            let local = *locals.entry(sigma).or_insert_with(|| permutation_to_local(&sigma));
            let total = realized_theta(profile, start, end, &sigma)?;
            Ok(ScheduleSegment {
                start,
                end,
                permutation: sigma,
                local,
                effective_theta: total.map(|x| x / (end - start)),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(PulseSchedule {
        duration: t,
        segments,
        shift,
        shift_correction: (shift != [0; 3]).then(|| shift_correction(&shift)),
        target_beta: Some(beta),
        target_theta: Some(*theta_u),
        ..PulseSchedule::empty(t)
    })
}

/// Schedule realizing the gate `u` (up to global phase) in time `t`.
pub fn synthesize_gate(u: &Mat4, profile: &CouplingProfile, t: f64) -> Result<PulseSchedule> {
    let canon = canon_unitary(u)?;
    let mut schedule = synthesize(&canon.theta, profile, t)?;
    schedule.prefix = canon.right;
    schedule.suffix = canon.left;
    Ok(schedule)
}

/// `Σ_segments P_σ · ∫ φ(θ(t)) dt`, the eigenvalue vector a schedule
/// accumulates; for a synthesized schedule it equals `φ(β)`.
pub fn schedule_target_phi(schedule: &PulseSchedule, profile: &CouplingProfile) -> Result<[f64; 4]> {
    let mut acc = [0.0; 4];
    for seg in &schedule.segments {
        let tol = profile.default_tolerance(seg.duration()) * 1e-2;
        let theta = profile.integrate_between(seg.start, seg.end, tol)?.theta;
        let phi = permute(&seg.permutation, &theta_to_phi(&theta));
        for k in 0..4 {
            acc[k] += phi[k];
        }
    }
    Ok(acc)
}
