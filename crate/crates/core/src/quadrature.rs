//! Scalar adaptive quadrature and bracketing root search.

use crate::error::{Error, Result};

/// Recursion depth cap for [`adaptive_simpson`].
pub const MAX_SIMPSON_DEPTH: u32 = 48;

/// Result of a quadrature: the value and an absolute error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;
    fn add(self, rhs: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement.
///
/// The error estimate is the Richardson difference `|S₂ − S₁| / 15` summed
/// over accepted panels. Returns [`Error::QuadratureFailure`] when some
/// panel still misses its share of `tol` at the depth cap.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature::default());
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    let mut failed = false;
    let q = refine(&f, a, b, fa, fm, fb, whole, tol, MAX_SIMPSON_DEPTH, &mut failed);
    if failed || !q.value.is_finite() {
        return Err(Error::QuadratureFailure { tol, estimate: q.error });
    }
    Ok(q)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    failed: &mut bool,
) -> Quadrature {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Depth 3 minimum guards against symmetric integrands fooling the
    // first comparison.
    let converged = delta.abs() <= 15.0 * tol && depth + 3 <= MAX_SIMPSON_DEPTH;
    if converged || depth == 0 {
        if !converged {
            *failed = true;
        }
        return Quadrature {
            value: left + right + delta / 15.0,
            error: delta.abs() / 15.0,
        };
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, failed)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, failed)
}

/// Bisection for a sign change of `f` on `[a, b]`, stopping when the
/// bracket is narrower than `xtol`. The endpoints must have opposite signs
/// (or one of them must be a root).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Numerical(format!(
            "bisection bracket [{a}, {b}] has no sign change"
        )));
    }
    while (b - a) > xtol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Smallest `t` in `[a, b]` where the nondecreasing function `f` reaches
/// `level`, to within `xtol`. Assumes `f(a) < level ≤ f(b)`.
pub fn invert_monotone<F: Fn(f64) -> Result<f64>>(
    f: F,
    mut a: f64,
    mut b: f64,
    level: f64,
    xtol: f64,
) -> Result<f64> {
    while (b - a) > xtol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m)? >= level {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b)
}
