//! Time-ordered propagation of schedules under a coupling profile.
//!
//! Each schedule segment holds a local gate `G` defined against the
//! canonical frame of the drift. In the lab frame, where the profile gives
//! `H_d(t) = L(t)† H_θ(t) L(t)`, the applied conjugation is `K = L(t)† G`,
//! so each segment evolves under `K† H_d(t) K = G† H_θ(t) G`. The frame is
//! constant on each direction piece of the profile, so propagation runs
//! piece by piece with the conjugation hoisted out of the step loop.
//!
//! Pieces with a constant drift are exponentiated exactly. Time-varying
//! pieces use fixed steps aligned to the piece boundaries with either the
//! midpoint exponential (second order) or the two-point Gauss Magnus
//! integrator (fourth order). Every step is also taken as two half steps;
//! the difference serves as the local error estimate and the half-step
//! result is kept.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::canonical::{canon_unitary, equivalent_gate_vectors};
use crate::error::{Error, Result};
use crate::profiles::{CouplingProfile, PieceShape};
use crate::random::random_local_pair;
use crate::su4::{self, expm_hermitian, local_gate, polar_unitary, unitarity_residual, LocalPair, Mat4};
use crate::synthesis::{permutation_to_local, realized_theta, PulseSchedule, ScheduleSegment};

/// Steps per rotor period used by [`PropagationSettings::for_profile`].
pub const STEPS_PER_PERIOD: f64 = 256.0;

/// Default bound on the local error estimate of a single step.
pub const DEFAULT_PROPAGATION_TOL: f64 = 1e-9;

/// Integrator for time-varying pieces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationMethod {
    /// `exp(−i h H(t + h/2))`.
    Magnus2,
    /// Two-point Gauss Magnus expansion, fourth order.
    #[default]
    Magnus4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropagationSettings {
    /// Largest step on time-varying pieces.
    pub max_step: f64,
    /// Bound on the local error estimate of each step.
    pub tolerance: f64,
    pub method: PropagationMethod,
}

impl PropagationSettings {
    /// `max_step = period / 256` for periodic profiles and `duration / 256`
    /// otherwise, fourth-order stepping.
    pub fn for_profile(profile: &CouplingProfile, duration: f64) -> Self {
        let base = profile.period().unwrap_or(duration);
        let max_step = if base > 0.0 && base.is_finite() {
            base / STEPS_PER_PERIOD
        } else {
            1.0
        };
        PropagationSettings {
            max_step,
            tolerance: DEFAULT_PROPAGATION_TOL,
            method: PropagationMethod::Magnus4,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.max_step > 0.0) || !self.max_step.is_finite() {
            return Err(Error::InvalidInput("maxStep must be positive and finite".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("propagation tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Result of [`propagate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Propagation {
    /// Polar projection of the raw product onto the unitary group.
    pub unitary: Mat4,
    /// `‖U†U − I‖_F` of the raw product before projection.
    pub unitarity_defect: f64,
    /// Exact exponentials plus integrator steps.
    pub steps: usize,
    /// Sum of the per-step error estimates.
    pub error_estimate: f64,
}

/// Propagates `schedule` under `profile`:
/// `suffix · shift_correction · (∏ segments, time-ordered) · prefix`.
pub fn propagate(
    schedule: &PulseSchedule,
    profile: &CouplingProfile,
    settings: &PropagationSettings,
) -> Result<Propagation> {
    settings.validate()?;
    schedule.validate()?;
    let mut u = local_gate(&schedule.prefix);
    let mut steps = 0;
    let mut error_estimate = 0.0;
    for seg in &schedule.segments {
        let g = local_gate(&seg.local);
        for piece in profile.direction_pieces(seg.start, seg.end)? {
            let frame = local_gate(&profile.frame_at(piece.midpoint())?);
            let k = frame.adjoint() * g;
            let lab = match piece.shape {
                PieceShape::Uniform => {
                    steps += 1;
                    expm_hermitian(&profile.lab_hamiltonian(piece.midpoint())?, piece.duration())
                }
                _ => {
                    let n = (piece.duration() / settings.max_step).ceil().max(1.0) as usize;
                    let h = piece.duration() / n as f64;
                    let mut w = Mat4::identity();
                    for i in 0..n {
                        let t = piece.start + i as f64 * h;
                        let (step, estimate) = checked_step(profile, settings.method, t, h)?;
                        if estimate > settings.tolerance {
                            return Err(Error::StepTooLarge {
                                estimate,
                                tol: settings.tolerance,
                            });
                        }
                        error_estimate += estimate;
                        w = step * w;
                    }
                    steps += n;
                    w
                }
            };
            u = k.adjoint() * lab * k * u;
        }
    }
    if let Some(c) = &schedule.shift_correction {
        u = c * u;
    }
    u = local_gate(&schedule.suffix) * u;
    let unitarity_defect = unitarity_residual(&u);
    Ok(Propagation {
        unitary: polar_unitary(&u),
        unitarity_defect,
        steps,
        error_estimate,
    })
}

/// One step of length `h` from `t`, taken as two half steps, with the
/// difference to the full step as error estimate.
fn checked_step(profile: &CouplingProfile, method: PropagationMethod, t: f64, h: f64) -> Result<(Mat4, f64)> {
    let full = step(profile, method, t, h)?;
    let half = 0.5 * h;
    let fine = step(profile, method, t + half, half)? * step(profile, method, t, half)?;
    Ok((fine, (fine - full).norm()))
}

fn step(profile: &CouplingProfile, method: PropagationMethod, t: f64, h: f64) -> Result<Mat4> {
    let generator = match method {
        PropagationMethod::Magnus2 => profile.lab_hamiltonian(t + 0.5 * h)? * Complex64::from(h),
        PropagationMethod::Magnus4 => {
            let offset = h * (3f64.sqrt() / 6.0);
            let mid = t + 0.5 * h;
            let h1 = profile.lab_hamiltonian(mid - offset)?;
            let h2 = profile.lab_hamiltonian(mid + offset)?;
            let commutator = h2 * h1 - h1 * h2;
            (h1 + h2) * Complex64::from(0.5 * h)
                - commutator * Complex64::new(0.0, 3f64.sqrt() / 12.0 * h * h)
        }
    };
    Ok(expm_hermitian(&generator, 1.0))
}

/// Distance between the local-equivalence classes of two unitaries: the
/// Euclidean distance of their gate-cell vectors, minimized over both
/// equivalent vectors of each.
pub fn local_equiv_distance(u: &Mat4, v: &Mat4) -> Result<f64> {
    let a = canon_unitary(u)?.theta;
    let b = canon_unitary(v)?.theta;
    Ok(theta_class_distance(&a, &b))
}

/// [`local_equiv_distance`] between a unitary and a gate-cell vector.
pub fn distance_to_theta(u: &Mat4, theta: &[f64; 3]) -> Result<f64> {
    Ok(theta_class_distance(&canon_unitary(u)?.theta, theta))
}

fn theta_class_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for x in equivalent_gate_vectors(a) {
        for y in equivalent_gate_vectors(b) {
            let d = x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            best = best.min(d);
        }
    }
    best
}

/// What the random sampler puts between segments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LocalSampling {
    /// Eigenvalue permutations with their matching local gates, identity
    /// prefix and suffix.
    #[default]
    Permutations,
    /// Haar-random local gates everywhere. The recorded permutation is the
    /// identity, and `effective_theta` is the time-averaged θ, which local
    /// conjugation leaves unchanged.
    Haar,
}

/// Random schedule of `segments` blocks with exponentially distributed
/// (flat Dirichlet) dwell times summing to `t`.
pub fn random_schedule_sampler<R: Rng + ?Sized>(
    profile: &CouplingProfile,
    t: f64,
    segments: usize,
    locals: LocalSampling,
    rng: &mut R,
) -> Result<PulseSchedule> {
    let mut schedule = PulseSchedule::empty(t);
    if segments == 0 {
        return Ok(schedule);
    }
    let weights: Vec<f64> = (0..segments).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = weights.iter().sum();
    let mut start = 0.0;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        let end = if i + 1 == segments { t } else { t * (acc / total) };
        let (permutation, local): ([usize; 4], LocalPair) = match locals {
            LocalSampling::Permutations => {
                let mut sigma = [0, 1, 2, 3];
                sigma.shuffle(rng);
                (sigma, permutation_to_local(&sigma))
            }
            LocalSampling::Haar => ([0, 1, 2, 3], random_local_pair(rng)),
        };
        let effective_theta = if end > start {
            realized_theta(profile, start, end, &permutation)?.map(|x| x / (end - start))
        } else {
            profile.theta_at(start)?
        };
        schedule.segments.push(ScheduleSegment {
            start,
            end,
            permutation,
            local,
            effective_theta,
        });
        start = end;
    }
    if locals == LocalSampling::Haar {
        schedule.prefix = random_local_pair(rng);
        schedule.suffix = random_local_pair(rng);
    }
    Ok(schedule)
}

/// Verification summary of a propagated schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    /// Local-equivalence distance to the schedule's target, when it has one.
    pub distance: Option<f64>,
    pub unitarity_defect: f64,
    pub steps: usize,
    pub error_estimate: f64,
    /// Gate-cell vector of the propagated unitary.
    pub theta: [f64; 3],
    #[serde(with = "su4::serde_matrix")]
    pub unitary: Mat4,
}

/// Propagates `schedule` and compares the result with its recorded target.
pub fn verify(
    schedule: &PulseSchedule,
    profile: &CouplingProfile,
    settings: &PropagationSettings,
) -> Result<VerificationReport> {
    let p = propagate(schedule, profile, settings)?;
    let theta = canon_unitary(&p.unitary)?.theta;
    Ok(VerificationReport {
        distance: schedule.target_theta.map(|target| theta_class_distance(&theta, &target)),
        unitarity_defect: p.unitarity_defect,
        steps: p.steps,
        error_estimate: p.error_estimate,
        theta,
        unitary: p.unitary,
    })
}
