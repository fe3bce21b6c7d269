//! Reachable-set membership and minimum gate time.
//!
//! A gate with canonical parameters `θ_U` (in the gate cell) can be made in
//! time `T` exactly when one of its two equivalent vectors is s-majorized by
//! the accumulated coupling `Θ(T)`. Each component of the s-majorization
//! margins is nondecreasing in `T`, so the minimum time is found by
//! bisection.

use serde::{Deserialize, Serialize};

use crate::canonical::{equivalent_gate_vectors, in_gate_cell, CELL_TOL};
use crate::error::{Error, Result};
use crate::majorization::{s_majorization_margins, S_MAJORIZATION_EPS};
use crate::profiles::CouplingProfile;

/// The two integer shifts that need to be considered, in the order used by
/// every `[_; 2]` array in this module.
pub const SHIFTS: [[i64; 3]; 2] = [[0, 0, 0], [-1, 0, 0]];

/// Multiplier on `1/max θ₁` giving the default search horizon.
pub const DEFAULT_HORIZON_FACTOR: f64 = 1e6;

/// Samples used to probe a profile for bracketing.
const PROBE_SAMPLES: usize = 257;

fn check_target(theta_u: &[f64; 3]) -> Result<()> {
    if theta_u.iter().all(|x| x.is_finite()) && in_gate_cell(theta_u, CELL_TOL) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "target {theta_u:?} is not in the gate cell π/4 ≥ θ₁ ≥ θ₂ ≥ |θ₃|"
        )))
    }
}

/// s-majorization margins of both equivalent target vectors against the
/// accumulated coupling at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    pub duration: f64,
    #[serde(rename = "Theta")]
    pub theta: [f64; 3],
    /// `margins[s][k]` is inequality `k` for shift `SHIFTS[s]`; feasible
    /// when all three are nonnegative.
    pub margins: [[f64; 3]; 2],
}

impl Margins {
    pub fn feasible_shift(&self, s: usize) -> bool {
        self.feasible_shift_with(s, S_MAJORIZATION_EPS)
    }

    pub fn feasible_shift_with(&self, s: usize, eps: f64) -> bool {
        self.margins[s].iter().all(|&m| m >= -eps)
    }

    pub fn feasible(&self) -> bool {
        self.feasible_with(S_MAJORIZATION_EPS)
    }

    pub fn feasible_with(&self, eps: f64) -> bool {
        (0..2).any(|s| self.feasible_shift_with(s, eps))
    }

    fn worst(&self, s: usize) -> f64 {
        self.margins[s].iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn total(&self, s: usize) -> f64 {
        self.margins[s].iter().sum()
    }

    /// The feasible shift with the larger total slack, if any.
    pub fn best_feasible_shift(&self) -> Option<usize> {
        (0..2)
            .filter(|&s| self.feasible_shift(s))
            .max_by(|&a, &b| self.total(a).total_cmp(&self.total(b)))
    }
}

/// Margins of `θ_U` against `Θ(T)` using the profile's default tolerance.
pub fn margins_at(theta_u: &[f64; 3], profile: &CouplingProfile, t: f64) -> Result<Margins> {
    check_target(theta_u)?;
    let theta = profile
        .integrate_theta(t, profile.default_tolerance(t))?
        .theta;
    let candidates = equivalent_gate_vectors(theta_u);
    Ok(Margins {
        duration: t,
        theta,
        margins: candidates.map(|beta| s_majorization_margins(&theta, &beta)),
    })
}

/// Whether the gate with canonical parameters `θ_U` is reachable in time
/// `t` under `profile`.
pub fn reachable(theta_u: &[f64; 3], profile: &CouplingProfile, t: f64) -> Result<bool> {
    Ok(margins_at(theta_u, profile, t)?.feasible())
}

/// Which of the three s-majorization inequalities is tightest, numbered
/// from one: `x₁ ≤ y₁`, `Σx ≤ Σy`, `x₁+x₂−x₃ ≤ y₁+y₂−y₃`.
pub type BindingInequality = u8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinTimeResult {
    #[serde(rename = "T_min")]
    pub t_min: f64,
    pub shift: [i64; 3],
    pub binding: BindingInequality,
    #[serde(rename = "Theta")]
    pub theta: [f64; 3],
    /// Margins at `T_min` for both shifts.
    pub margins: [[f64; 3]; 2],
    /// Whole rotor periods `⌈T_min / period⌉` for periodic profiles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<u64>,
    /// Set when θ vanishes just after `T_min`, so every time in a nonzero
    /// window is equally minimal; `T_min` is the leftmost one.
    pub flat: bool,
}

/// Settings for [`min_time_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinTimeSettings {
    /// Absolute tolerance on `T_min`.
    pub tol: f64,
    /// Upper limit on the search; `None` means `1e6 / max θ₁`, capped by
    /// the profile's domain.
    pub horizon: Option<f64>,
}

impl Default for MinTimeSettings {
    fn default() -> Self {
        MinTimeSettings {
            tol: 1e-10,
            horizon: None,
        }
    }
}

struct Probe {
    mean_theta1: f64,
    max_theta1: f64,
}

fn probe(profile: &CouplingProfile) -> Result<Probe> {
    let window = match (profile.period(), profile.domain_end()) {
        (Some(p), _) => p,
        (None, end) if end.is_finite() => end,
        _ => 1.0,
    };
    let mut max_theta1: f64 = 0.0;
    for k in 0..PROBE_SAMPLES {
        let t = window * k as f64 / (PROBE_SAMPLES - 1) as f64;
        max_theta1 = max_theta1.max(profile.theta_at(t)?[0]);
    }
    let integral = profile.integrate_theta(window, profile.default_tolerance(window))?;
    Ok(Probe {
        mean_theta1: integral.theta[0] / window,
        max_theta1: max_theta1.max(integral.theta[0] / window),
    })
}

/// Minimum time with default settings and the given tolerance on `T`.
pub fn min_time(theta_u: &[f64; 3], profile: &CouplingProfile, tol: f64) -> Result<MinTimeResult> {
    min_time_with(
        theta_u,
        profile,
        &MinTimeSettings {
            tol,
            ..Default::default()
        },
    )
}

pub fn min_time_with(
    theta_u: &[f64; 3],
    profile: &CouplingProfile,
    settings: &MinTimeSettings,
) -> Result<MinTimeResult> {
    check_target(theta_u)?;
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidInput("min_time tolerance must be positive".into()));
    }
    let t_min = if margins_at(theta_u, profile, 0.0)?.feasible() {
        0.0
    } else {
        let probe = probe(profile)?;
        if !(probe.max_theta1 > 0.0) {
            return Err(Error::HorizonExceeded {
                horizon: profile.domain_end(),
            });
        }
        // A margin slack of ε moves the boundary by about ε/θ₁, so the
        // search slack is tied to the requested time tolerance. Anything
        // feasible under it is feasible under the default slack too.
        let eps = (0.5 * settings.tol * probe.max_theta1).min(S_MAJORIZATION_EPS);
        let feasible = |t: f64| margins_at(theta_u, profile, t).map(|m| m.feasible_with(eps));
        let horizon = settings
            .horizon
            .unwrap_or(DEFAULT_HORIZON_FACTOR / probe.max_theta1)
            .min(profile.domain_end());
        let rate = probe.mean_theta1.max(1e-12 * probe.max_theta1);
        let mut lo = 0.0;
        let mut hi = (theta_u[0].max(1e-3) / rate).min(horizon);
        while !feasible(hi)? {
            if hi >= horizon {
                return Err(Error::HorizonExceeded { horizon });
            }
            lo = hi;
            hi = (2.0 * hi).min(horizon);
        }
        while hi - lo > settings.tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if feasible(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let m = margins_at(theta_u, profile, t_min)?;
    let active = (0..2)
        .filter(|&s| m.feasible_shift(s))
        .max_by(|&a, &b| m.worst(a).total_cmp(&m.worst(b)))
        .unwrap_or(0);
    let binding = (0..3)
        .min_by(|&a, &b| m.margins[active][a].total_cmp(&m.margins[active][b]))
        .expect("three inequalities") as u8
        + 1;
    let periods = profile.period().map(|p| {
        let ratio = t_min / p;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 {
            nearest as u64
        } else {
            ratio.ceil() as u64
        }
    });
    Ok(MinTimeResult {
        t_min,
        shift: SHIFTS[active],
        binding,
        theta: m.theta,
        margins: m.margins,
        periods,
        flat: is_flat_after(profile, t_min, settings.tol)?,
    })
}

fn is_flat_after(profile: &CouplingProfile, t: f64, tol: f64) -> Result<bool> {
    let end = profile.domain_end();
    // The ε-relaxed boundary may sit slightly left of where θ switches
    // off, so only the second half of the window is inspected.
    let window = (10.0 * tol).max(1e-8 * t.max(1.0));
    if t + window > end {
        return Ok(false);
    }
    let scale = profile.default_tolerance(1.0) * 1e-2;
    for k in 4..=8 {
        let s = t + window * k as f64 / 8.0;
        if profile.theta_at(s)?[0] > scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Scalar form of the condition for dipolar-shaped couplings
/// `θ(t) = |D(t)|·(2, 1, ∓1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipolarCondition {
    /// `∫(3|D| + D) dt = Θ₁ + Θ₂ − Θ₃`, compared against
    /// `β₁ + β₂ − β₃` for the shifted target.
    pub accumulated_plus: f64,
    pub threshold_plus: f64,
    /// `∫(3|D| − D) dt = Θ₁ + Θ₂ + Θ₃`, compared against `β₁ + β₂ + β₃`
    /// for the unshifted target.
    pub accumulated_minus: f64,
    pub threshold_minus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    #[serde(flatten)]
    pub margins: Margins,
    pub shifts: [[i64; 3]; 2],
    pub feasible: [bool; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipolar: Option<DipolarCondition>,
}

/// All s-majorization margins at time `t`, plus the scalar accumulated
/// coupling for dipolar-shaped profiles.
pub fn min_time_condition_report(
    theta_u: &[f64; 3],
    profile: &CouplingProfile,
    t: f64,
) -> Result<ConditionReport> {
    let margins = margins_at(theta_u, profile, t)?;
    let [plain, shifted] = equivalent_gate_vectors(theta_u);
    let th = margins.theta;
    let dipolar = profile.is_dipolar().then(|| DipolarCondition {
        accumulated_plus: th[0] + th[1] - th[2],
        threshold_plus: shifted[0] + shifted[1] - shifted[2],
        accumulated_minus: th[0] + th[1] + th[2],
        threshold_minus: plain[0] + plain[1] + plain[2],
    });
    Ok(ConditionReport {
        feasible: [margins.feasible_shift(0), margins.feasible_shift(1)],
        margins,
        shifts: SHIFTS,
        dipolar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    const SWAP: [f64; 3] = [FRAC_PI_4; 3];

    fn dipolar_constant(d: f64) -> CouplingProfile {
        CouplingProfile::constant_theta([2.0 * d, d, -d]).unwrap()
    }

    #[test]
    fn swap_reachability_boundary() {
        let p = dipolar_constant(1.0);
        let t = 3.0 * PI / 16.0;
        assert!(reachable(&SWAP, &p, t).unwrap());
        assert!(!reachable(&SWAP, &p, t * 0.999).unwrap());
    }

    #[test]
    fn identity_is_reachable_at_zero() {
        let p = CouplingProfile::mas_dipolar(1.0, 10.0, 0.3, 0.0).unwrap();
        assert!(reachable(&[0.0; 3], &p, 0.0).unwrap());
        let r = min_time(&[0.0; 3], &p, 1e-9).unwrap();
        assert_eq!(r.t_min, 0.0);
    }

    #[test]
    fn ising_cnot_class() {
        let d = 1.7;
        let p = CouplingProfile::constant_theta([d, 0.0, 0.0]).unwrap();
        let target = [FRAC_PI_4, 0.0, 0.0];
        let t = PI / (4.0 * d);
        assert!(reachable(&target, &p, t).unwrap());
        assert!(!reachable(&target, &p, t * (1.0 - 1e-6)).unwrap());
        let r = min_time(&target, &p, 1e-12).unwrap();
        assert!((r.t_min - t).abs() < 1e-11);
    }

    #[test]
    fn swap_min_time_constant() {
        let d = 2.5;
        let r = min_time(&SWAP, &dipolar_constant(d), 1e-12).unwrap();
        assert!((r.t_min - 3.0 * PI / (16.0 * d)).abs() < 1e-11);
        assert_eq!(r.shift, [-1, 0, 0]);
        assert_eq!(r.binding, 3);
        assert!(!r.flat);
        assert_eq!(r.periods, None);
    }

    #[test]
    fn gate_outside_cell_rejected() {
        let p = dipolar_constant(1.0);
        assert!(matches!(reachable(&[1.0, 0.0, 0.0], &p, 1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn null_profile_exceeds_horizon() {
        let p = CouplingProfile::mas_dipolar(1.0, 10.0, 0.0, 0.0).unwrap();
        assert!(matches!(min_time(&SWAP, &p, 1e-9), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn finite_domain_exceeded() {
        let p = CouplingProfile::sampled(vec![0.0, 0.1], vec![[2.0, 1.0, -1.0]; 2]).unwrap();
        assert!(matches!(min_time(&SWAP, &p, 1e-9), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn condition_report_examples() {
        let p = dipolar_constant(1.0);
        let r = min_time_condition_report(&SWAP, &p, 3.0 * PI / 16.0).unwrap();
        assert!(r.margins.margins[1][2].abs() < 1e-12);
        let dip = r.dipolar.unwrap();
        assert!((dip.accumulated_plus - 3.0 * PI / 4.0).abs() < 1e-12);
        assert!((dip.threshold_plus - 3.0 * PI / 4.0).abs() < 1e-15);

        let r = min_time_condition_report(&SWAP, &p, 0.0).unwrap();
        let [plain, shifted] = equivalent_gate_vectors(&SWAP);
        let expect = |b: [f64; 3]| [-b[0], -(b[0] + b[1] + b[2]), -(b[0] + b[1] - b[2])];
        assert_eq!(r.margins.margins, [expect(plain), expect(shifted)]);
    }

    #[test]
    fn mas_one_period_accumulation() {
        let omega = 100.0;
        let p = CouplingProfile::mas_dipolar(1.0, omega, FRAC_PI_4, 0.0).unwrap();
        let r = min_time_condition_report(&SWAP, &p, TAU / omega).unwrap();
        let acc = r.dipolar.unwrap().accumulated_plus;
        let expect = 6.0 * 1.4922 / omega;
        assert!((acc - expect).abs() / expect < 1e-3);
    }

    #[test]
    fn mas_swap_period_count() {
        let omega = 100.0;
        let p = CouplingProfile::mas_dipolar(1.0, omega, FRAC_PI_4, 0.0).unwrap();
        let r = min_time(&SWAP, &p, 1e-12).unwrap();
        let period = TAU / omega;
        assert_eq!(r.periods, Some(27));
        assert!(r.t_min > 26.0 * period && r.t_min <= 27.0 * period);
        let acc = r.theta[0] + r.theta[1] - r.theta[2];
        assert!((acc - 3.0 * PI / 4.0).abs() < 1e-9);
    }

    #[test]
    fn flat_boundary_flagged() {
        use crate::su4::{pauli_pair, Mat4};
        use num_complex::Complex64;
        // Ising coupling that reaches the CNOT class exactly at t = 0.5 and
        // then switches off for a while.
        let ising = pauli_pair(0, 0) * Complex64::from(PI / 2.0);
        let p = CouplingProfile::piecewise_constant(&[(0.5, ising), (1.0, Mat4::zeros()), (1.0, ising)])
            .unwrap();
        let r = min_time(&[FRAC_PI_4, 0.0, 0.0], &p, 1e-12).unwrap();
        assert!((r.t_min - 0.5).abs() < 1e-8);
        assert!(r.flat);
        let r = min_time(&[0.3, 0.0, 0.0], &p, 1e-12).unwrap();
        assert!(!r.flat);
    }
}
