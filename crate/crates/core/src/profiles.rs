//! Time-dependent coupling profiles.
//!
//! A profile describes the drift coupling `H_d(t)` of the two qubits. Every
//! kind exposes the canonical parameters `θ(t)` (always s-ordered), their
//! time integral `Θ`, the lab-frame non-local Hamiltonian and the local
//! frame `L(t)` with `H_d(t) = L(t)† H_θ(t) L(t)`.
//!
//! Four kinds are supported: a constant coupling, the magic-angle-spinning
//! dipolar coupling, linearly interpolated θ samples, and a piecewise
//! constant list of Hamiltonians.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::canonical::{canon_hamiltonian, is_s_ordered, HamiltonianCanonicalForm};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, Quadrature};
use crate::su4::{
    canonical_hamiltonian, identity2, nonlocal_part, pauli_compose, pauli_decompose, LocalPair,
    Mat4, MatrixJson, PauliCoefficients, Tolerances,
};

/// The magic angle `arctan(√2)`.
pub fn magic_angle() -> f64 {
    2f64.sqrt().atan()
}

/// Unit attached to every frequency-valued field of a profile config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    #[serde(rename = "rad/s")]
    RadPerSecond,
    #[serde(rename = "Hz")]
    Hertz,
}

impl FrequencyUnit {
    /// Factor converting a value in this unit to rad/s.
    pub fn to_angular(self) -> f64 {
        match self {
            FrequencyUnit::RadPerSecond => 1.0,
            FrequencyUnit::Hertz => TAU,
        }
    }
}

/// One step of a piecewise-constant profile config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    /// Seconds.
    pub duration: f64,
    pub hamiltonian: MatrixJson,
}

/// Serializable profile description, tagged by `kind`.
///
/// Frequencies (θ values, Hamiltonian entries, `d`, `omega`) are in `unit`;
/// times are in seconds and angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileSpec {
    /// Exactly one of `theta`, `hamiltonian` or `coupling` must be given.
    Constant {
        unit: FrequencyUnit,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<[f64; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hamiltonian: Option<MatrixJson>,
        /// Coupling tensor `M`, `M[i][j]` multiplying `σᵢ⊗σⱼ`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coupling: Option<[[f64; 3]; 3]>,
    },
    MasDipolar {
        unit: FrequencyUnit,
        d: f64,
        omega: f64,
        beta: f64,
        #[serde(default)]
        phase: f64,
    },
    Sampled {
        unit: FrequencyUnit,
        times: Vec<f64>,
        theta: Vec<[f64; 3]>,
    },
    PiecewiseConstant {
        unit: FrequencyUnit,
        segments: Vec<SegmentSpec>,
    },
}

/// How θ varies inside a [`DirectionPiece`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceShape {
    /// θ is constant.
    Uniform,
    /// θ(t) = f(t)·v for a fixed vector v and scalar f ≥ 0.
    FixedDirection,
    /// θ is affine in t.
    Linear,
}

/// A maximal interval on which θ(t) has a simple known shape. The local
/// frame is constant on each piece.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionPiece {
    pub start: f64,
    pub end: f64,
    pub shape: PieceShape,
}

impl DirectionPiece {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// `Θ = ∫ θ(t) dt` over an interval, with an absolute error estimate per
/// component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaIntegral {
    pub theta: [f64; 3],
    pub duration: f64,
    pub error: f64,
}

#[derive(Clone, Debug)]
struct ConstantCoupling {
    theta: [f64; 3],
    frame: LocalPair,
    hamiltonian: Mat4,
}

#[derive(Clone, Debug)]
struct MasDipolar {
    d: f64,
    omega: f64,
    phase: f64,
    /// `c(t) = offset + amplitude·cos(ωt + phase)`.
    offset: f64,
    amplitude: f64,
    period: f64,
    /// Sign changes of `D(t)` in `[0, period)`, ascending.
    crossings: Vec<f64>,
    /// `∫|D|` and `∫D` over one period.
    period_abs: Quadrature,
    period_signed: Quadrature,
    /// Frames for the `D ≥ 0` and `D < 0` branches.
    frames: [LocalPair; 2],
    /// `XX + YY − 2ZZ`.
    shape: Mat4,
}

#[derive(Clone, Debug)]
struct Sampled {
    times: Vec<f64>,
    theta: Vec<[f64; 3]>,
}

#[derive(Clone, Debug)]
struct Piece {
    start: f64,
    end: f64,
    coupling: ConstantCoupling,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
enum Kind {
    Constant(ConstantCoupling),
    Mas(MasDipolar),
    Sampled(Sampled),
    Piecewise(Vec<Piece>),
}

/// A validated, immutable coupling profile.
#[derive(Clone, Debug)]
pub struct CouplingProfile {
    spec: ProfileSpec,
    kind: Kind,
}

fn canon_nonlocal(h: &Mat4) -> Result<ConstantCoupling> {
    let tol = Tolerances::default();
    let coeffs = pauli_decompose(h, &tol)?.coefficients;
    let local = coeffs.local_norm();
    if local > tol.reject_hermitian {
        log::warn!("ignoring local part of the drift Hamiltonian (norm {local:.3e})");
    }
    let hamiltonian = pauli_compose(&nonlocal_part(&coeffs));
    let HamiltonianCanonicalForm { theta, local } = canon_hamiltonian(&hamiltonian, &tol)?;
    Ok(ConstantCoupling {
        theta,
        frame: local,
        hamiltonian,
    })
}

fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be finite")))
    }
}

fn identity_pair() -> LocalPair {
    (identity2(), identity2())
}

impl MasDipolar {
    fn new(d: f64, omega: f64, beta: f64, phase: f64) -> Result<Self> {
        ensure_finite(&[d, omega, beta, phase], "mas-dipolar parameters")?;
        if omega <= 0.0 {
            return Err(Error::InvalidInput("omega must be positive".into()));
        }
        let theta_m = magic_angle();
        let offset = beta.cos() * theta_m.cos();
        let amplitude = beta.sin() * theta_m.sin();
        let period = TAU / omega;

        // D(t) = 0 exactly where c(t) = ±1/√3, i.e. where
        // cos(ωt + phase) = (±1/√3 − offset) / amplitude.
        let mut crossings = Vec::new();
        if d != 0.0 && amplitude.abs() > 0.0 {
            for level in [1.0 / 3f64.sqrt(), -1.0 / 3f64.sqrt()] {
                let r = (level - offset) / amplitude;
                if r.abs() < 1.0 {
                    let a = r.acos();
                    for u in [a, TAU - a] {
                        crossings.push((u - phase).rem_euclid(TAU) / omega);
                    }
                }
            }
        }
        crossings.sort_by(f64::total_cmp);
        crossings.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * period);

        let shape = pauli_compose(&PauliCoefficients::diagonal_coupling([1.0, 1.0, -2.0]));
        let tol = Tolerances::default();
        let positive = canon_hamiltonian(&shape, &tol)?.local;
        let negative = canon_hamiltonian(&-shape, &tol)?.local;

        let mut mas = MasDipolar {
            d,
            omega,
            phase,
            offset,
            amplitude,
            period,
            crossings,
            period_abs: Quadrature::default(),
            period_signed: Quadrature::default(),
            frames: [positive, negative],
            shape,
        };
        let tol = 1e-14 * d.abs() * period;
        let (abs, signed) = mas.integrate_span(0.0, period, tol)?;
        mas.period_abs = abs;
        mas.period_signed = signed;
        Ok(mas)
    }

    fn coupling(&self, t: f64) -> f64 {
        let c = self.offset + self.amplitude * (self.omega * t + self.phase).cos();
        self.d * (3.0 * c * c - 1.0) / 2.0
    }

    fn is_null(&self) -> bool {
        self.d == 0.0 || self.amplitude == 0.0
    }

    fn crossings_between(&self, a: f64, b: f64) -> Vec<f64> {
        if self.crossings.is_empty() || b <= a {
            return Vec::new();
        }
        let k0 = (a / self.period).floor() as i64 - 1;
        let k1 = (b / self.period).ceil() as i64 + 1;
        let eps = 1e-13 * self.period;
        let mut out = Vec::new();
        for k in k0..=k1 {
            for &r in &self.crossings {
                let t = r + k as f64 * self.period;
                if t > a + eps && t < b - eps {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    /// `(∫|D|, ∫D)` over `[a, b]`, split at sign changes. No whole-period
    /// shortcut.
    fn integrate_span(&self, a: f64, b: f64, tol: f64) -> Result<(Quadrature, Quadrature)> {
        if self.is_null() || b <= a {
            return Ok(Default::default());
        }
        let mut cuts = vec![a];
        cuts.extend(self.crossings_between(a, b));
        cuts.push(b);
        let share = tol / (cuts.len() - 1) as f64;
        let mut abs = Quadrature::default();
        let mut signed = Quadrature::default();
        for w in cuts.windows(2) {
            let q = adaptive_simpson(|t| self.coupling(t), w[0], w[1], share.max(f64::MIN_POSITIVE))?;
            abs = abs + Quadrature { value: q.value.abs(), error: q.error };
            signed = signed + q;
        }
        Ok((abs, signed))
    }

    fn integrate(&self, a: f64, b: f64, tol: f64) -> Result<(Quadrature, Quadrature)> {
        let whole = ((b - a) / self.period).floor();
        let (mut abs, mut signed) = self.integrate_span(a + whole * self.period, b, tol)?;
        if whole > 0.0 {
            abs = abs + Quadrature {
                value: whole * self.period_abs.value,
                error: whole * self.period_abs.error,
            };
            signed = signed + Quadrature {
                value: whole * self.period_signed.value,
                error: whole * self.period_signed.error,
            };
        }
        Ok((abs, signed))
    }

    fn theta(&self, t: f64) -> [f64; 3] {
        let d = self.coupling(t);
        [2.0 * d.abs(), d.abs(), -d]
    }
}

impl Sampled {
    fn new(times: Vec<f64>, theta: Vec<[f64; 3]>) -> Result<Self> {
        if times.len() != theta.len() {
            return Err(Error::LengthMismatch(times.len(), theta.len()));
        }
        if times.len() < 2 {
            return Err(Error::InvalidInput("a sampled profile needs at least two samples".into()));
        }
        ensure_finite(&times, "sample times")?;
        ensure_finite(&theta.concat(), "sample values")?;
        if times[0] != 0.0 {
            return Err(Error::InvalidInput("sample times must start at 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
        }
        if let Some(bad) = theta.iter().find(|th| !is_s_ordered(th, 1e-12)) {
            return Err(Error::InvalidInput(format!(
                "sample {bad:?} is not s-ordered (θ₁ ≥ θ₂ ≥ |θ₃|)"
            )));
        }
        Ok(Sampled { times, theta })
    }

    fn end(&self) -> f64 {
        *self.times.last().expect("at least two samples")
    }

    /// Index `i` of the interval `[tᵢ, tᵢ₊₁]` holding `t`.
    fn interval(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.clamp(1, self.times.len() - 1) - 1
    }

    fn theta(&self, t: f64) -> [f64; 3] {
        let i = self.interval(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let (a, b) = (self.theta[i], self.theta[i + 1]);
        [0, 1, 2].map(|j| a[j] + s * (b[j] - a[j]))
    }

    fn integrate(&self, a: f64, b: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        let mut cuts = vec![a];
        cuts.extend(self.times.iter().copied().filter(|&t| t > a && t < b));
        cuts.push(b);
        for w in cuts.windows(2) {
            let (x, y) = (self.theta(w[0]), self.theta(w[1]));
            for j in 0..3 {
                out[j] += 0.5 * (w[1] - w[0]) * (x[j] + y[j]);
            }
        }
        out
    }
}

impl CouplingProfile {
    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        let kind = match spec {
            ProfileSpec::Constant {
                unit,
                theta,
                hamiltonian,
                coupling,
            } => {
                let scale = unit.to_angular();
                let h = match (theta, hamiltonian, coupling) {
                    (Some(t), None, None) => {
                        ensure_finite(t, "theta")?;
                        canonical_hamiltonian(&t.map(|x| x * scale))
                    }
                    (None, Some(m), None) => m.to_matrix::<4>()? * num_complex::Complex64::from(scale),
                    (None, None, Some(m)) => {
                        ensure_finite(&m.concat(), "coupling")?;
                        pauli_compose(&PauliCoefficients::coupling(m.map(|r| r.map(|x| x * scale))))
                    }
                    _ => {
                        return Err(Error::InvalidInput(
                            "constant profile needs exactly one of theta, hamiltonian, coupling".into(),
                        ))
                    }
                };
                Kind::Constant(canon_nonlocal(&h)?)
            }
            ProfileSpec::MasDipolar {
                unit,
                d,
                omega,
                beta,
                phase,
            } => {
                let s = unit.to_angular();
                Kind::Mas(MasDipolar::new(d * s, omega * s, *beta, *phase)?)
            }
            ProfileSpec::Sampled { unit, times, theta } => {
                let s = unit.to_angular();
                Kind::Sampled(Sampled::new(
                    times.clone(),
                    theta.iter().map(|t| t.map(|x| x * s)).collect(),
                )?)
            }
            ProfileSpec::PiecewiseConstant { unit, segments } => {
                if segments.is_empty() {
                    return Err(Error::InvalidInput("piecewise-constant profile has no segments".into()));
                }
                let s = num_complex::Complex64::from(unit.to_angular());
                let mut start = 0.0;
                let mut pieces = Vec::with_capacity(segments.len());
                for seg in segments {
                    if !(seg.duration.is_finite() && seg.duration > 0.0) {
                        return Err(Error::InvalidInput("segment durations must be positive".into()));
                    }
                    let coupling = canon_nonlocal(&(seg.hamiltonian.to_matrix::<4>()? * s))?;
                    let end = start + seg.duration;
                    pieces.push(Piece { start, end, coupling });
                    start = end;
                }
                Kind::Piecewise(pieces)
            }
        };
        Ok(CouplingProfile {
            spec: spec.clone(),
            kind,
        })
    }

    /// Constant coupling with canonical parameters `theta` (rad/s).
    pub fn constant_theta(theta: [f64; 3]) -> Result<Self> {
        Self::from_spec(&ProfileSpec::Constant {
            unit: FrequencyUnit::RadPerSecond,
            theta: Some(theta),
            hamiltonian: None,
            coupling: None,
        })
    }

    /// Constant drift Hamiltonian (rad/s); local terms are dropped.
    pub fn constant_hamiltonian(h: &Mat4) -> Result<Self> {
        Self::from_spec(&ProfileSpec::Constant {
            unit: FrequencyUnit::RadPerSecond,
            theta: None,
            hamiltonian: Some(MatrixJson::from_matrix(h)),
            coupling: None,
        })
    }

    /// Dipolar coupling under magic-angle spinning; `d` and `omega` in
    /// rad/s.
    pub fn mas_dipolar(d: f64, omega: f64, beta: f64, phase: f64) -> Result<Self> {
        Self::from_spec(&ProfileSpec::MasDipolar {
            unit: FrequencyUnit::RadPerSecond,
            d,
            omega,
            beta,
            phase,
        })
    }

    pub fn sampled(times: Vec<f64>, theta: Vec<[f64; 3]>) -> Result<Self> {
        Self::from_spec(&ProfileSpec::Sampled {
            unit: FrequencyUnit::RadPerSecond,
            times,
            theta,
        })
    }

    /// Piecewise-constant drift from `(duration, Hamiltonian)` pairs.
    pub fn piecewise_constant(segments: &[(f64, Mat4)]) -> Result<Self> {
        Self::from_spec(&ProfileSpec::PiecewiseConstant {
            unit: FrequencyUnit::RadPerSecond,
            segments: segments
                .iter()
                .map(|(duration, h)| SegmentSpec {
                    duration: *duration,
                    hamiltonian: MatrixJson::from_matrix(h),
                })
                .collect(),
        })
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Constant(_) => "constant",
            Kind::Mas(_) => "mas-dipolar",
            Kind::Sampled(_) => "sampled",
            Kind::Piecewise(_) => "piecewise-constant",
        }
    }

    /// End of the time domain (`+∞` for constant and spinning profiles).
    pub fn domain_end(&self) -> f64 {
        match &self.kind {
            Kind::Constant(_) | Kind::Mas(_) => f64::INFINITY,
            Kind::Sampled(s) => s.end(),
            Kind::Piecewise(p) => p.last().expect("non-empty").end,
        }
    }

    /// Rotor period `2π/ω` for spinning profiles.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            Kind::Mas(m) => Some(m.period),
            _ => None,
        }
    }

    /// True when θ(t) has the `|D|·(2, 1, ∓1)` dipolar shape for all t.
    pub fn is_dipolar(&self) -> bool {
        let dipolar = |t: &[f64; 3]| {
            let scale = t[1];
            scale > 0.0
                && (t[0] - 2.0 * scale).abs() <= 1e-9 * scale
                && (t[2].abs() - scale).abs() <= 1e-9 * scale
        };
        match &self.kind {
            Kind::Mas(_) => true,
            Kind::Constant(c) => dipolar(&c.theta),
            Kind::Piecewise(p) => p.iter().all(|x| dipolar(&x.coupling.theta)),
            Kind::Sampled(_) => false,
        }
    }

    /// Dipolar coupling strength `D(t)` for spinning profiles.
    pub fn dipolar_coupling(&self, t: f64) -> Option<f64> {
        match &self.kind {
            Kind::Mas(m) => Some(m.coupling(t)),
            _ => None,
        }
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let end = self.domain_end();
        let slack = 1e-12 * end.max(1.0);
        if !t.is_finite() || t < -slack || (end.is_finite() && t > end + slack) {
            return Err(Error::OutOfRange { t, start: 0.0, end });
        }
        Ok(t.clamp(0.0, end))
    }

    /// Canonical parameters `θ(t)`, s-ordered.
    pub fn theta_at(&self, t: f64) -> Result<[f64; 3]> {
        let t = self.check_time(t)?;
        Ok(match &self.kind {
            Kind::Constant(c) => c.theta,
            Kind::Mas(m) => m.theta(t),
            Kind::Sampled(s) => s.theta(t),
            Kind::Piecewise(p) => self.piece_at(p, t).coupling.theta,
        })
    }

    fn piece_at<'a>(&self, pieces: &'a [Piece], t: f64) -> &'a Piece {
        let i = pieces.partition_point(|p| p.end <= t);
        &pieces[i.min(pieces.len() - 1)]
    }

    /// Non-local lab-frame drift Hamiltonian `H_d(t)`.
    pub fn lab_hamiltonian(&self, t: f64) -> Result<Mat4> {
        let t = self.check_time(t)?;
        Ok(match &self.kind {
            Kind::Constant(c) => c.hamiltonian,
            Kind::Mas(m) => m.shape * num_complex::Complex64::from(m.coupling(t)),
            Kind::Sampled(s) => canonical_hamiltonian(&s.theta(t)),
            Kind::Piecewise(p) => self.piece_at(p, t).coupling.hamiltonian,
        })
    }

    /// Local frame `L(t)` with `H_d(t) = L(t)† H_θ(t) L(t)`.
    pub fn frame_at(&self, t: f64) -> Result<LocalPair> {
        let t = self.check_time(t)?;
        Ok(match &self.kind {
            Kind::Constant(c) => c.frame,
            Kind::Mas(m) => {
                if m.coupling(t) >= 0.0 {
                    m.frames[0]
                } else {
                    m.frames[1]
                }
            }
            Kind::Sampled(_) => identity_pair(),
            Kind::Piecewise(p) => self.piece_at(p, t).coupling.frame,
        })
    }

    /// Largest `θ₁` scale of the profile, used for default tolerances.
    fn theta1_scale(&self) -> f64 {
        match &self.kind {
            Kind::Constant(c) => c.theta[0],
            Kind::Mas(m) => 2.0 * m.d.abs(),
            Kind::Sampled(s) => s.theta.iter().map(|t| t[0]).fold(0.0, f64::max),
            Kind::Piecewise(p) => p.iter().map(|x| x.coupling.theta[0]).fold(0.0, f64::max),
        }
    }

    /// Default absolute quadrature tolerance for a horizon of `t`:
    /// `1e−10 · max(1, θ₁·t)`.
    pub fn default_tolerance(&self, t: f64) -> f64 {
        1e-10 * (self.theta1_scale() * t).max(1.0)
    }

    /// `Θ(T) = ∫₀ᵀ θ(t) dt`.
    pub fn integrate_theta(&self, t: f64, tol: f64) -> Result<ThetaIntegral> {
        self.integrate_between(0.0, t, tol)
    }

    /// `∫ θ(t) dt` over `[t0, t1]` with absolute error at most `tol` per
    /// component.
    pub fn integrate_between(&self, t0: f64, t1: f64, tol: f64) -> Result<ThetaIntegral> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
        }
        if t1 < t0 {
            return Err(Error::BadRange { t0, t1 });
        }
        let a = self.check_time(t0)?;
        let b = self.check_time(t1)?;
        let (theta, error) = match &self.kind {
            Kind::Constant(c) => (c.theta.map(|x| x * (b - a)), 0.0),
            Kind::Mas(m) => {
                // θ₁ = 2|D| carries twice the scalar error.
                let (abs, signed) = m.integrate(a, b, 0.5 * tol)?;
                let err = 2.0 * abs.error.max(signed.error);
                if err > tol {
                    return Err(Error::QuadratureFailure { tol, estimate: err });
                }
                ([2.0 * abs.value, abs.value, -signed.value], err)
            }
            Kind::Sampled(s) => (s.integrate(a, b), 0.0),
            Kind::Piecewise(p) => {
                let mut out = [0.0; 3];
                for piece in p {
                    let overlap = piece.end.min(b) - piece.start.max(a);
                    if overlap > 0.0 {
                        for (o, th) in out.iter_mut().zip(piece.coupling.theta) {
                            *o += overlap * th;
                        }
                    }
                }
                (out, 0.0)
            }
        };
        Ok(ThetaIntegral {
            theta,
            duration: b - a,
            error,
        })
    }

    /// Splits `[t0, t1]` into pieces of known θ shape with a constant local
    /// frame on each.
    pub fn direction_pieces(&self, t0: f64, t1: f64) -> Result<Vec<DirectionPiece>> {
        if t1 < t0 {
            return Err(Error::BadRange { t0, t1 });
        }
        let a = self.check_time(t0)?;
        let b = self.check_time(t1)?;
        let (cuts, shape): (Vec<f64>, PieceShape) = match &self.kind {
            Kind::Constant(_) => (Vec::new(), PieceShape::Uniform),
            Kind::Mas(m) if m.is_null() => (Vec::new(), PieceShape::Uniform),
            Kind::Mas(m) => (m.crossings_between(a, b), PieceShape::FixedDirection),
            Kind::Sampled(s) => (
                s.times.iter().copied().filter(|&t| t > a && t < b).collect(),
                PieceShape::Linear,
            ),
            Kind::Piecewise(p) => (
                p.iter().map(|x| x.end).filter(|&t| t > a && t < b).collect(),
                PieceShape::Uniform,
            ),
        };
        let mut bounds = vec![a];
        bounds.extend(cuts);
        bounds.push(b);
        Ok(bounds
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| DirectionPiece {
                start: w[0],
                end: w[1],
                shape,
            })
            .collect())
    }

    /// Areas `(S₁, S₂)` of the negative and positive lobes of `D(t)` over
    /// one rotor period.
    pub fn period_areas(&self) -> Result<(f64, f64)> {
        match &self.kind {
            Kind::Mas(m) => {
                let (abs, signed) = (m.period_abs.value, m.period_signed.value);
                Ok((0.5 * (abs - signed), 0.5 * (abs + signed)))
            }
            _ => Err(Error::InvalidInput("period areas need a mas-dipolar profile".into())),
        }
    }

    /// Zero crossings of `D(t)` within one rotor period.
    pub fn period_crossings(&self) -> Option<&[f64]> {
        match &self.kind {
            Kind::Mas(m) => Some(&m.crossings),
            _ => None,
        }
    }

    /// Rapid-spinning estimate of the number of rotor periods needed to
    /// accumulate `threshold` of `∫(3|D| + D)`: `⌈threshold / (2S₁ + 4S₂)⌉`.
    ///
    /// This is only a diagnostic; solvers use the exact integral.
    pub fn approximate_period_count(&self, threshold: f64) -> Result<u64> {
        let (s1, s2) = self.period_areas()?;
        let per = 2.0 * s1 + 4.0 * s2;
        if per <= 0.0 {
            return Err(Error::HorizonExceeded { horizon: f64::INFINITY });
        }
        Ok((threshold / per).ceil() as u64)
    }

    /// Tabulates the profile on `samples` equally spaced times in
    /// `[t0, t1]`: columns `t,D` for spinning profiles, `t,theta1,theta2,
    /// theta3` otherwise.
    pub fn table(&self, t0: f64, t1: f64, samples: usize) -> Result<ProfileTable> {
        if !(t1 > t0) {
            return Err(Error::BadRange { t0, t1 });
        }
        if samples < 2 {
            return Err(Error::InvalidInput("at least two samples are required".into()));
        }
        let dipolar = matches!(self.kind, Kind::Mas(_));
        let header = if dipolar {
            vec!["t".to_string(), "D".to_string()]
        } else {
            ["t", "theta1", "theta2", "theta3"].map(String::from).to_vec()
        };
        let mut rows = Vec::with_capacity(samples);
        for k in 0..samples {
            let t = if k + 1 == samples {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (samples - 1) as f64
            };
            let row = match &self.kind {
                Kind::Mas(m) => vec![t, m.coupling(t)],
                _ => {
                    let th = self.theta_at(t)?;
                    vec![t, th[0], th[1], th[2]]
                }
            };
            rows.push(row);
        }
        Ok(ProfileTable { header, rows })
    }
}

/// Formats a float to 12 significant digits, as used in all CSV output.
pub fn format_sig12(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

/// Rounds a float to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    format_sig12(x).parse().expect("formatted float parses")
}

/// A tabulated profile, as emitted by [`emit_profile_csv`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ProfileTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_sig12(x)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty CSV".into()))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidInput(format!("CSV row {}: {e}", n + 2)))?;
            if row.len() != header.len() {
                return Err(Error::LengthMismatch(header.len(), row.len()));
            }
            rows.push(row);
        }
        Ok(ProfileTable { header, rows })
    }

    /// Builds a sampled profile (in rad/s) from a table with columns
    /// `t,theta1,theta2,theta3` or `t,D`.
    pub fn to_sampled_spec(&self) -> Result<ProfileSpec> {
        let times = self.rows.iter().map(|r| r[0]).collect();
        let theta = match self.header.len() {
            4 => self.rows.iter().map(|r| [r[1], r[2], r[3]]).collect(),
            2 => self
                .rows
                .iter()
                .map(|r| [2.0 * r[1].abs(), r[1].abs(), -r[1]])
                .collect(),
            n => {
                return Err(Error::InvalidInput(format!(
                    "profile CSV must have 2 or 4 columns, found {n}"
                )))
            }
        };
        Ok(ProfileSpec::Sampled {
            unit: FrequencyUnit::RadPerSecond,
            times,
            theta,
        })
    }
}

/// CSV tabulation of a profile over `[t0, t1]` with 12 significant digits.
pub fn emit_profile_csv(profile: &CouplingProfile, t0: f64, t1: f64, samples: usize) -> Result<String> {
    Ok(profile.table(t0, t1, samples)?.to_csv())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su4::{local_gate, pauli_pair};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn dipolar(d: f64) -> Mat4 {
        (pauli_pair(0, 0) + pauli_pair(1, 1) - pauli_pair(2, 2) * Complex64::from(2.0))
            * Complex64::from(d)
    }

    fn close3(a: &[f64; 3], b: &[f64; 3], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn constant_dipolar_theta() {
        let p = CouplingProfile::constant_hamiltonian(&dipolar(0.7)).unwrap();
        for t in [0.0, 1.0, 55.5] {
            assert!(close3(&p.theta_at(t).unwrap(), &[1.4, 0.7, -0.7], 1e-12));
        }
        let th = p.integrate_theta(2.0, 1e-12).unwrap();
        assert!(close3(&th.theta, &[2.8, 1.4, -1.4], 1e-12));
        assert_eq!(p.integrate_theta(0.0, 1e-12).unwrap().theta, [0.0; 3]);
        assert!(p.is_dipolar());
    }

    #[test]
    fn frame_reproduces_lab_hamiltonian() {
        let p = CouplingProfile::mas_dipolar(1.0, 10.0, FRAC_PI_4, 0.3).unwrap();
        for k in 0..40 {
            let t = 0.017 * k as f64;
            let l = local_gate(&p.frame_at(t).unwrap());
            let h = canonical_hamiltonian(&p.theta_at(t).unwrap());
            let lab = p.lab_hamiltonian(t).unwrap();
            assert!((l.adjoint() * h * l - lab).norm() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn mas_negative_branch() {
        let p = CouplingProfile::mas_dipolar(1.0, 1.0, FRAC_PI_4, 0.0).unwrap();
        let t = (0..1000)
            .map(|k| k as f64 * TAU / 1000.0)
            .find(|&t| p.dipolar_coupling(t).unwrap() < -0.1)
            .unwrap();
        let d = p.dipolar_coupling(t).unwrap();
        let th = p.theta_at(t).unwrap();
        assert!(close3(&th, &[-2.0 * d, -d, -d], 1e-14));
    }

    #[test]
    fn mas_scalar_value_at_half_turn() {
        let theta_m = magic_angle();
        let p = CouplingProfile::mas_dipolar(2.0, 3.0, theta_m, 0.0).unwrap();
        let c = theta_m.cos().powi(2) - theta_m.sin().powi(2);
        let expect = 2.0 * (3.0 * c * c - 1.0) / 2.0;
        let t = PI / 3.0;
        assert!((p.dipolar_coupling(t).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn mas_period_areas_match_reference() {
        let p = CouplingProfile::mas_dipolar(1.0, 1.0, FRAC_PI_4, 0.0).unwrap();
        let (s1, s2) = p.period_areas().unwrap();
        assert!((s1 - 1.4922).abs() / 1.4922 < 1e-3, "{s1}");
        assert!((s2 - 1.4922).abs() / 1.4922 < 1e-3, "{s2}");
        assert!((s1 - s2).abs() < 1e-10);
        let th = p.integrate_theta(TAU, 1e-10).unwrap();
        assert!(close3(&th.theta, &[2.0 * (s1 + s2), s1 + s2, 0.0], 1e-9));
    }

    #[test]
    fn mas_null_at_rotor_axis() {
        let p = CouplingProfile::mas_dipolar(1.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(p.period_areas().unwrap(), (0.0, 0.0));
        assert!(p.dipolar_coupling(0.4).unwrap().abs() < 1e-15);
    }

    #[test]
    fn mas_crossings_are_sign_changes() {
        let p = CouplingProfile::mas_dipolar(1.0, 2.0, FRAC_PI_4, 0.7).unwrap();
        let crossings = p.period_crossings().unwrap();
        assert_eq!(crossings.len(), 2);
        for &t in crossings {
            assert!(p.dipolar_coupling(t).unwrap().abs() < 1e-13);
            let (l, r) = (p.dipolar_coupling(t - 1e-6).unwrap(), p.dipolar_coupling(t + 1e-6).unwrap());
            assert!(l * r < 0.0);
        }
    }

    #[test]
    fn mas_is_periodic() {
        let p = CouplingProfile::mas_dipolar(1.3, 7.0, 0.9, 0.2).unwrap();
        let period = p.period().unwrap();
        for k in 0..50 {
            let t = 0.0123 * k as f64;
            let (a, b) = (p.theta_at(t).unwrap(), p.theta_at(t + period).unwrap());
            assert!(close3(&a, &b, 1e-12));
        }
    }

    #[test]
    fn sampled_interpolates_and_integrates() {
        let p = CouplingProfile::sampled(vec![0.0, 1.0, 3.0], vec![[1.0, 0.5, 0.0], [3.0, 1.0, -1.0], [1.0, 1.0, 1.0]])
            .unwrap();
        assert!(close3(&p.theta_at(0.5).unwrap(), &[2.0, 0.75, -0.5], 1e-15));
        let th = p.integrate_theta(3.0, 1e-12).unwrap();
        assert!(close3(&th.theta, &[2.0 + 4.0, 0.75 + 2.0, -0.5 + 0.0], 1e-14));
        assert!(matches!(p.theta_at(3.5), Err(Error::OutOfRange { .. })));
        assert!(CouplingProfile::sampled(vec![0.0, 1.0], vec![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn piecewise_profile() {
        let p = CouplingProfile::piecewise_constant(&[(1.0, dipolar(1.0)), (2.0, dipolar(-0.5))]).unwrap();
        assert!(close3(&p.theta_at(0.5).unwrap(), &[2.0, 1.0, -1.0], 1e-12));
        assert!(close3(&p.theta_at(2.0).unwrap(), &[1.0, 0.5, 0.5], 1e-12));
        let th = p.integrate_theta(3.0, 1e-12).unwrap();
        assert!(close3(&th.theta, &[4.0, 2.0, 0.0], 1e-12));
        let pieces = p.direction_pieces(0.0, 3.0).unwrap();
        assert_eq!(pieces.len(), 2);
        assert_eq!(p.domain_end(), 3.0);
    }

    #[test]
    fn hertz_scales_by_two_pi() {
        let json = r#"{"kind":"constant","unit":"Hz","theta":[1.0,0.5,0.0]}"#;
        let spec: ProfileSpec = serde_json::from_str(json).unwrap();
        let p = CouplingProfile::from_spec(&spec).unwrap();
        assert!(close3(&p.theta_at(0.0).unwrap(), &[TAU, PI, 0.0], 1e-12));
        let missing_unit = r#"{"kind":"constant","theta":[1.0,0.5,0.0]}"#;
        assert!(serde_json::from_str::<ProfileSpec>(missing_unit).is_err());
    }

    #[test]
    fn constant_needs_exactly_one_source() {
        let spec = ProfileSpec::Constant {
            unit: FrequencyUnit::RadPerSecond,
            theta: Some([1.0, 0.0, 0.0]),
            hamiltonian: None,
            coupling: Some([[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]),
        };
        assert!(CouplingProfile::from_spec(&spec).is_err());
    }

    #[test]
    fn csv_shapes_and_roundtrip() {
        let p = CouplingProfile::mas_dipolar(1.0, 1.0, FRAC_PI_4, 0.0).unwrap();
        let table = p.table(0.0, TAU, 1000).unwrap();
        let signs: Vec<bool> = table.rows.iter().map(|r| r[1] > 0.0).collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        assert_eq!(changes, 2);
        assert!(matches!(p.table(1.0, 1.0, 10), Err(Error::BadRange { .. })));

        let c = CouplingProfile::constant_theta([2.0, 1.0, -1.0]).unwrap();
        let csv = emit_profile_csv(&c, 0.0, 1.0, 5).unwrap();
        assert!(csv.lines().skip(1).all(|l| l.ends_with(",2,1,-1")));

        let s = CouplingProfile::sampled(
            vec![0.0, 0.125, 0.25],
            vec![[1.0 / 3.0, 0.2, 0.1], [0.5, 0.5, -0.25], [0.9, 0.1, 0.0]],
        )
        .unwrap();
        let csv = emit_profile_csv(&s, 0.0, 0.25, 3).unwrap();
        let back = CouplingProfile::from_spec(&ProfileTable::from_csv(&csv).unwrap().to_sampled_spec().unwrap())
            .unwrap();
        assert_eq!(emit_profile_csv(&back, 0.0, 0.25, 3).unwrap(), csv);
        assert_eq!(back.theta_at(0.125).unwrap(), [0.5, 0.5, -0.25]);
        assert_eq!(back.theta_at(0.0).unwrap()[0], round_sig12(1.0 / 3.0));
    }

    #[test]
    fn sig12_format() {
        assert_eq!(format_sig12(3.0 * PI / 16.0), "0.589048622548");
        assert_eq!(format_sig12(2.0), "2");
        assert_eq!(format_sig12(-1.0 / 3.0), "-0.333333333333");
    }
}
