use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use qtopt_core::canonical::{canon_hamiltonian, canon_unitary};
use qtopt_core::profiles::{emit_profile_csv, round_sig12};
use qtopt_core::reachability::min_time;
use qtopt_core::simulator::{distance_to_theta, verify, PropagationMethod, PropagationSettings};
use qtopt_core::su4::Tolerances;
use qtopt_core::synthesis::{synthesize, synthesize_gate};
use serde::Serialize;
use serde_json::Value;

use crate::inputs::{read_matrix, read_profile, read_schedule, read_target, Source, Target};
use crate::{CanonKind, MethodArg};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_THRESHOLD: f64 = 1e-6;
/// Largest accepted unitarity defect before projection.
pub const UNITARITY_LIMIT: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 201;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<qtopt_core::Error> for Failure {
    fn from(e: qtopt_core::Error) -> Self {
        Failure {
            code: if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL },
            message: e.to_string(),
        }
    }
}

pub enum Outcome {
    Success,
    VerificationFailed(String),
}

pub struct Context {
    pub tol: f64,
    pub output: Option<PathBuf>,
}

impl Context {
    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.output {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes())
                    .and_then(|_| out.flush())
                    .map_err(|e| Failure::validation(format!("cannot write output: {e}")))
            }
        }
    }

    fn check_tol(&self) -> Result<f64, Failure> {
        if self.tol > 0.0 && self.tol.is_finite() {
            Ok(self.tol)
        } else {
            Err(Failure::validation(format!("tolerance must be positive, got {}", self.tol)))
        }
    }
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig12(n.as_f64().expect("f64 number"));
            if let Some(r) = serde_json::Number::from_f64(x) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
fn rounded_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut v = serde_json::to_value(value).map_err(qtopt_core::Error::from)?;
    round_floats(&mut v);
    Ok(serde_json::to_string_pretty(&v).map_err(qtopt_core::Error::from)? + "\n")
}

fn full_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value).map_err(qtopt_core::Error::from)? + "\n")
}

fn with_kind<T: Serialize>(kind: &str, form: &T) -> Result<Value, Failure> {
    let mut v = serde_json::to_value(form).map_err(qtopt_core::Error::from)?;
    if let Value::Object(map) = &mut v {
        map.insert("kind".into(), Value::String(kind.into()));
    }
    Ok(v)
}

pub fn canon(ctx: &Context, input: Source, kind: CanonKind) -> Result<Outcome, Failure> {
    let m = read_matrix(&input)?;
    let value = match kind {
        CanonKind::Hamiltonian => with_kind("hamiltonian", &canon_hamiltonian(&m, &Tolerances::default())?)?,
        CanonKind::Unitary => with_kind("unitary", &canon_unitary(&m)?)?,
    };
    ctx.emit(&rounded_json(&value)?)?;
    Ok(Outcome::Success)
}

pub fn mintime(ctx: &Context, target: Source, profile: Source) -> Result<Outcome, Failure> {
    let theta = read_target(&target)?.cell_theta()?;
    let profile = read_profile(&profile)?;
    let result = min_time(&theta, &profile, ctx.check_tol()?)?;
    ctx.emit(&rounded_json(&result)?)?;
    Ok(Outcome::Success)
}

pub fn synth(ctx: &Context, target: Source, profile: Source, time: Option<f64>) -> Result<Outcome, Failure> {
    let target = read_target(&target)?;
    let profile = read_profile(&profile)?;
    let theta = target.cell_theta()?;
    let t = match time {
        Some(t) if t.is_finite() && t >= 0.0 => t,
        Some(t) => return Err(Failure::validation(format!("time must be nonnegative, got {t}"))),
        None => min_time(&theta, &profile, ctx.check_tol()?)?.t_min,
    };
    let schedule = match &target {
        Target::Gate(u) => synthesize_gate(u, &profile, t)?,
        Target::Theta(_) => synthesize(&theta, &profile, t)?,
    };
    ctx.emit(&full_json(&schedule)?)?;
    Ok(Outcome::Success)
}

pub struct SimulateArgs {
    pub schedule: Source,
    pub profile: Source,
    pub target: Option<Source>,
    pub max_step: Option<f64>,
    pub method: Option<MethodArg>,
    pub step_tol: Option<f64>,
    pub threshold: f64,
}

pub fn simulate(ctx: &Context, args: SimulateArgs) -> Result<Outcome, Failure> {
    let schedule = read_schedule(&args.schedule)?;
    let profile = read_profile(&args.profile)?;
    let mut settings = PropagationSettings::for_profile(&profile, schedule.duration);
    if let Some(h) = args.max_step {
        settings.max_step = h;
    }
    if let Some(t) = args.step_tol {
        settings.tolerance = t;
    }
    if let Some(m) = args.method {
        settings.method = match m {
            MethodArg::Magnus2 => PropagationMethod::Magnus2,
            MethodArg::Magnus4 => PropagationMethod::Magnus4,
        };
    }
    let mut report = verify(&schedule, &profile, &settings)?;
    if let Some(src) = &args.target {
        let theta = read_target(src)?.cell_theta()?;
        report.distance = Some(distance_to_theta(&report.unitary, &theta)?);
    }
    ctx.emit(&rounded_json(&report)?)?;

    let mut problems = Vec::new();
    if let Some(d) = report.distance {
        if d.is_nan() || d > args.threshold {
            problems.push(format!("distance {d:.3e} exceeds {:.3e}", args.threshold));
        }
    }
    if report.unitarity_defect.is_nan() || report.unitarity_defect > UNITARITY_LIMIT {
        problems.push(format!(
            "unitarity defect {:.3e} exceeds {UNITARITY_LIMIT:.0e}",
            report.unitarity_defect
        ));
    }
    Ok(if problems.is_empty() {
        Outcome::Success
    } else {
        Outcome::VerificationFailed(problems.join("; "))
    })
}

pub fn profile(
    ctx: &Context,
    profile: Source,
    start: Option<f64>,
    end: Option<f64>,
    samples: Option<usize>,
) -> Result<Outcome, Failure> {
    let profile = read_profile(&profile)?;
    let start = start.unwrap_or(0.0);
    let end = end.unwrap_or_else(|| match profile.period() {
        Some(p) => start + 2.0 * p,
        None if profile.domain_end().is_finite() => profile.domain_end(),
        None => start + 1.0,
    });
    let csv = emit_profile_csv(&profile, start, end, samples.unwrap_or(DEFAULT_SAMPLES))?;
    ctx.emit(&csv)?;
    Ok(Outcome::Success)
}
