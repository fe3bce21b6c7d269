//! Resolution of string or inline inputs into library values.

use std::path::{Path, PathBuf};

use qtopt_core::canonical::{canon_unitary, in_gate_cell, weyl_reduce, CELL_TOL};
use qtopt_core::gates;
use qtopt_core::profiles::{CouplingProfile, ProfileSpec, ProfileTable};
use qtopt_core::su4::{Mat4, MatrixJson};
use qtopt_core::synthesis::PulseSchedule;
use serde_json::Value;

use crate::commands::Failure;

/// Where an input value came from.
#[derive(Debug, Clone)]
pub enum Source {
    /// A command-line string: inline JSON, a path, or a name.
    Arg(String),
    /// A config-file value; strings are paths relative to `base`.
    Config { value: Value, base: Option<PathBuf> },
}

enum Loaded {
    Json(Value),
    Csv(String),
    /// Neither inline JSON nor an existing file.
    Word(String),
}

fn read_file(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "csv" => Ok(Loaded::Csv(text)),
        "toml" => toml::from_str(&text)
            .map(Loaded::Json)
            .map_err(|e| Failure::validation(format!("{}: {e}", path.display()))),
        _ => serde_json::from_str(&text)
            .map(Loaded::Json)
            .map_err(|e| Failure::validation(format!("{}: {e}", path.display()))),
    }
}

fn resolve_string(s: &str, base: Option<&Path>) -> Result<Loaded, Failure> {
    let trimmed = s.trim();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return serde_json::from_str(trimmed)
            .map(Loaded::Json)
            .map_err(|e| Failure::validation(format!("inline JSON: {e}")));
    }
    let path = match base {
        Some(b) if Path::new(trimmed).is_relative() => b.join(trimmed),
        _ => PathBuf::from(trimmed),
    };
    if path.exists() {
        read_file(&path)
    } else {
        Ok(Loaded::Word(trimmed.to_string()))
    }
}

impl Source {
    fn load(&self) -> Result<Loaded, Failure> {
        match self {
            Source::Arg(s) => resolve_string(s, None),
            Source::Config { value: Value::String(s), base } => resolve_string(s, base.as_deref()),
            Source::Config { value, .. } => Ok(Loaded::Json(value.clone())),
        }
    }

    fn load_json(&self, what: &str) -> Result<Value, Failure> {
        match self.load()? {
            Loaded::Json(v) => Ok(v),
            Loaded::Csv(_) => Err(Failure::validation(format!("{what} must be JSON or TOML, not CSV"))),
            Loaded::Word(w) => Err(Failure::validation(format!("{what}: no such file {w:?}"))),
        }
    }
}

fn from_value<T: serde::de::DeserializeOwned>(v: Value, what: &str) -> Result<T, Failure> {
    serde_json::from_value(v).map_err(|e| Failure::validation(format!("{what}: {e}")))
}

pub fn read_matrix(src: &Source) -> Result<Mat4, Failure> {
    let json: MatrixJson = from_value(src.load_json("matrix")?, "matrix")?;
    Ok(json.to_matrix::<4>()?)
}

/// A gate target: a full unitary or a canonical parameter vector.
pub enum Target {
    Gate(Box<Mat4>),
    Theta([f64; 3]),
}

impl Target {
    /// Gate-cell parameters of the target.
    pub fn cell_theta(&self) -> Result<[f64; 3], Failure> {
        match self {
            Target::Gate(u) => Ok(canon_unitary(u)?.theta),
            Target::Theta(t) if in_gate_cell(t, CELL_TOL) => Ok(*t),
            Target::Theta(t) => Ok(weyl_reduce(t).theta),
        }
    }
}

fn named_gate(name: &str) -> Option<Mat4> {
    match name.to_ascii_lowercase().as_str() {
        "identity" | "id" => Some(Mat4::identity()),
        "cnot" => Some(gates::cnot()),
        "swap" => Some(gates::swap()),
        _ => None,
    }
}

pub fn read_target(src: &Source) -> Result<Target, Failure> {
    let value = match src.load()? {
        Loaded::Json(v) => v,
        Loaded::Word(w) => {
            return named_gate(&w)
                .map(|g| Target::Gate(Box::new(g)))
                .ok_or_else(|| Failure::validation(format!("target {w:?} is neither a file nor a known gate")))
        }
        Loaded::Csv(_) => return Err(Failure::validation("target cannot be CSV")),
    };
    let theta_of = |v: &Value| -> Result<[f64; 3], Failure> {
        let t: [f64; 3] = from_value(v.clone(), "theta")?;
        if t.iter().all(|x| x.is_finite()) {
            Ok(t)
        } else {
            Err(Failure::validation("theta must be finite"))
        }
    };
    match &value {
        Value::Array(_) => Ok(Target::Theta(theta_of(&value)?)),
        Value::Object(map) if map.contains_key("re") && map.contains_key("im") => {
            let json: MatrixJson = from_value(value.clone(), "target matrix")?;
            Ok(Target::Gate(Box::new(json.to_matrix::<4>()?)))
        }
        Value::Object(map) if map.contains_key("theta") => Ok(Target::Theta(theta_of(&map["theta"])?)),
        Value::String(name) => named_gate(name)
            .map(|g| Target::Gate(Box::new(g)))
            .ok_or_else(|| Failure::validation(format!("unknown gate {name:?}"))),
        _ => Err(Failure::validation(
            "target must be a matrix {re, im}, a theta vector, or a gate name",
        )),
    }
}

pub fn read_profile(src: &Source) -> Result<CouplingProfile, Failure> {
    let spec: ProfileSpec = match src.load()? {
        Loaded::Json(v) => from_value(v, "profile")?,
        Loaded::Csv(text) => ProfileTable::from_csv(&text)?.to_sampled_spec()?,
        Loaded::Word(w) => return Err(Failure::validation(format!("profile: no such file {w:?}"))),
    };
    Ok(CouplingProfile::from_spec(&spec)?)
}

pub fn read_schedule(src: &Source) -> Result<PulseSchedule, Failure> {
    let schedule: PulseSchedule = from_value(src.load_json("schedule")?, "schedule")?;
    schedule.validate()?;
    Ok(schedule)
}
