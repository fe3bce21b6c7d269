//! Acceptance suite: one PASS/FAIL line per criterion.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Matrix4};
use qtopt_core::canonical::{canon_unitary, in_gate_cell, s_reorder, CELL_TOL};
use qtopt_core::majorization::{
    all_permutations4, birkhoff, doubly_stochastic_residual, permutation_matrix, phi_major_equiv_check,
    s_majorizes, schur_horn_rotation,
};
use qtopt_core::profiles::CouplingProfile;
use qtopt_core::random::{haar_su4, random_local_pair};
use qtopt_core::reachability::{min_time, reachable};
use qtopt_core::simulator::{propagate, random_schedule_sampler, LocalSampling, PropagationSettings};
use qtopt_core::su4::local_gate;
use rand::Rng;
use serde_json::Value;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

const CONSTANT: &str = r#"{"kind":"constant","unit":"rad/s","coupling":[[1,0,0],[0,1,0],[0,0,-2]]}"#;

fn qtopt(args: &[&str]) -> Result<(Option<i32>, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qtopt"))
        .args(args)
        .env_remove("QTOPT_TOL")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.stderr.is_empty() {
        eprint!("{}", String::from_utf8_lossy(&out.stderr));
    }
    Ok((out.status.code(), out.stdout))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn constant_swap_minimum_time() -> Check {
    let (code, stdout) = qtopt(&["mintime", "--target", "swap", "--profile", CONSTANT])?;
    ensure(code == Some(0), || format!("exit {code:?}"))?;
    let v: Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let t = v["T_min"].as_f64().ok_or("no T_min")?;
    let err = (t - 3.0 * PI / 16.0).abs();
    ensure(err <= 1e-9, || format!("T_min = {t}, error {err:.2e}"))?;
    Ok(format!("T_min = {t}"))
}

fn mas_period_areas() -> Check {
    let mut worst: f64 = 0.0;
    for (d, omega) in [(1.0, 100.0), (2.5, 40.0), (0.3, 7.0)] {
        let p = CouplingProfile::mas_dipolar(d, omega, PI / 4.0, 0.0).map_err(|e| e.to_string())?;
        let (s1, s2) = p.period_areas().map_err(|e| e.to_string())?;
        let want = 1.4922 * d / omega;
        for s in [s1, s2] {
            worst = worst.max(((s - want) / want).abs());
        }
    }
    ensure(worst < 1e-3, || format!("relative error {worst:.2e}"))?;
    Ok(format!("max relative error {worst:.2e}"))
}

fn mas_period_count() -> Check {
    let omega = 100.0;
    let p = CouplingProfile::mas_dipolar(1.0, omega, PI / 4.0, 0.0).map_err(|e| e.to_string())?;
    let swap = [PI / 4.0; 3];
    let r = min_time(&swap, &p, 1e-12).map_err(|e| e.to_string())?;
    let whole = (0.2632_f64 * omega).ceil() as u64;
    ensure(r.periods == Some(whole), || format!("periods {:?}, want {whole}", r.periods))?;
    let in_periods = r.t_min / (2.0 * PI / omega);
    ensure(in_periods > 26.0 && in_periods <= 27.0, || {
        format!("T_min spans {in_periods} periods")
    })?;
    Ok(format!("periods = {whole}, T_min = {} ({in_periods:.4} periods)", r.t_min))
}

fn worked_feasibility_flip() -> Check {
    let target = [PI / 4.0, PI / 4.0, -PI / 4.0];
    let feasible = |t: f64| s_majorizes(&[2.0 * t, t, -t], &target);
    let exact = 3.0 * PI / 16.0;
    ensure(!feasible(exact * (1.0 - 1e-9)), || "feasible below 3π/16".into())?;
    ensure(feasible(exact * (1.0 + 1e-9)), || "infeasible above 3π/16".into())?;
    let (mut lo, mut hi) = (0.0, 1.0);
    ensure(!feasible(lo) && feasible(hi), || "no flip on [0, 1]".into())?;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ensure((hi - exact).abs() <= 1e-9, || format!("flip at {hi}"))?;
    Ok(format!("flip at {hi}"))
}

fn end_to_end_swap() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("swap.json");
    let path = path.to_str().ok_or("temp path")?;
    let t = format!("{}", 3.0 * PI / 16.0);
    let (code, _) = qtopt(&["synth", "--target", "swap", "--profile", CONSTANT, "--time", &t, "-o", path])?;
    ensure(code == Some(0), || format!("synth exit {code:?}"))?;

    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let segments = s["segments"].as_array().ok_or("no segments")?;
    ensure(segments.len() == 3, || format!("{} segments", segments.len()))?;
    for seg in segments {
        let len = seg["end"].as_f64().ok_or("end")? - seg["start"].as_f64().ok_or("start")?;
        ensure((len - PI / 16.0).abs() <= 1e-9, || format!("segment length {len}"))?;
    }

    let (code, stdout) = qtopt(&["simulate", "--schedule", path, "--profile", CONSTANT, "--target", "swap"])?;
    ensure(code == Some(0), || format!("simulate exit {code:?}"))?;
    let report: Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let distance = report["distance"].as_f64().ok_or("no distance")?;
    ensure(distance < 1e-6, || format!("distance {distance:.2e}"))?;
    Ok(format!("3 segments of π/16, distance {distance:.2e}"))
}

fn random_schedules_stay_reachable() -> Check {
    let mut rng = common::rng(601);
    let mut violations = 0;
    let trials = 1000;
    for trial in 0..trials {
        let p = common::random_profile(&mut rng);
        let horizon = if p.domain_end().is_finite() { p.domain_end() } else { 3.0 };
        let t = rng.random_range(0.05..1.0) * horizon;
        let segments = rng.random_range(1..9);
        let locals = if trial % 2 == 0 {
            LocalSampling::Haar
        } else {
            LocalSampling::Permutations
        };
        let s = random_schedule_sampler(&p, t, segments, locals, &mut rng).map_err(|e| e.to_string())?;
        let out = propagate(&s, &p, &PropagationSettings::for_profile(&p, t)).map_err(|e| e.to_string())?;
        let theta = canon_unitary(&out.unitary).map_err(|e| e.to_string())?.theta;
        if !reachable(&theta, &p, t).map_err(|e| e.to_string())? {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} of {trials} outside the reachable set"))?;
    Ok(format!("{trials} schedules, 0 violations"))
}

fn s_majorization_matches_phi() -> Check {
    let mut rng = common::rng(701);
    let mut disagreements = 0;
    let mut majorized = 0;
    for i in 0..10_000 {
        let a = common::random_vec3(&mut rng, 2.0);
        let b = if i % 2 == 0 {
            common::random_vec3(&mut rng, 2.0)
        } else {
            s_reorder(&a).map(|x| 1.5 * x)
        };
        let (s, m) = phi_major_equiv_check(&a, &b);
        disagreements += (s != m) as usize;
        majorized += s as usize;
    }
    ensure(disagreements == 0, || format!("{disagreements} disagreements"))?;
    Ok(format!("10000 pairs ({majorized} majorized), 0 disagreements"))
}

fn sinkhorn<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let mut b = Matrix4::from_fn(|_, _| rng.random::<f64>() + 1e-3);
    for _ in 0..2000 {
        for i in 0..4 {
            let s = b.row(i).sum();
            b.row_mut(i).scale_mut(1.0 / s);
        }
        for j in 0..4 {
            let s = b.column(j).sum();
            b.column_mut(j).scale_mut(1.0 / s);
        }
        if doubly_stochastic_residual(&b) < 1e-15 {
            break;
        }
    }
    b
}

fn constructive_oracles() -> Check {
    let mut rng = common::rng(801);
    let mut worst_sh: f64 = 0.0;
    for _ in 0..1000 {
        let lambda = common::random_vec4(&mut rng, 3.0);
        let a = common::random_doubly_stochastic_image(&mut rng, &lambda);
        let k = schur_horn_rotation(&a, &lambda).map_err(|e| e.to_string())?;
        let m = k.transpose() * DMatrix::from_diagonal(&DVector::from_row_slice(&lambda)) * &k;
        let diag = (0..4).map(|i| (m[(i, i)] - a[i]).abs()).fold(0.0, f64::max);
        let orth = (k.transpose() * &k - DMatrix::<f64>::identity(4, 4)).abs().max();
        worst_sh = worst_sh.max(diag).max(orth);
    }

    let perms = all_permutations4();
    let mut worst_bvn: f64 = 0.0;
    let mut most_terms = 0;
    for i in 0..1000 {
        let b = if i % 2 == 0 {
            sinkhorn(&mut rng)
        } else {
            let k = rng.random_range(1..=8);
            let w = common::simplex_weights(&mut rng, k);
            w.iter()
                .map(|wi| permutation_matrix(&perms[rng.random_range(0..24)]) * *wi)
                .sum()
        };
        let d = birkhoff(&b).map_err(|e| e.to_string())?;
        worst_bvn = worst_bvn.max((d.reconstruct() - b).abs().max());
        most_terms = most_terms.max(d.terms.len());
    }
    ensure(worst_sh <= 1e-8, || format!("Schur-Horn residual {worst_sh:.2e}"))?;
    ensure(worst_bvn <= 1e-8, || format!("Birkhoff residual {worst_bvn:.2e}"))?;
    ensure(most_terms <= 10, || format!("{most_terms} Birkhoff terms"))?;
    Ok(format!(
        "Schur-Horn {worst_sh:.1e}, Birkhoff {worst_bvn:.1e} with at most {most_terms} terms"
    ))
}

fn canonical_roundtrip() -> Check {
    let mut rng = common::rng(901);
    let (mut worst_rec, mut worst_inv): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let u = haar_su4(&mut rng);
        let c = canon_unitary(&u).map_err(|e| e.to_string())?;
        ensure(in_gate_cell(&c.theta, CELL_TOL), || format!("{:?} outside the gate cell", c.theta))?;
        worst_rec = worst_rec.max((c.reconstruct() - u).norm());
        let dressed = local_gate(&random_local_pair(&mut rng)) * u * local_gate(&random_local_pair(&mut rng));
        let d = canon_unitary(&dressed).map_err(|e| e.to_string())?;
        for i in 0..3 {
            worst_inv = worst_inv.max((d.theta[i] - c.theta[i]).abs());
        }
    }
    ensure(worst_rec <= 1e-8, || format!("reconstruction {worst_rec:.2e}"))?;
    ensure(worst_inv <= 1e-8, || format!("local dressing moved θ by {worst_inv:.2e}"))?;
    Ok(format!("reconstruction {worst_rec:.1e}, dressing {worst_inv:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("constant-coupling swap minimum time", Duration::from_secs(1), constant_swap_minimum_time),
        ("MAS period areas", Duration::from_secs(1), mas_period_areas),
        ("MAS whole-period count", Duration::from_secs(10), mas_period_count),
        ("worked feasibility flip", Duration::from_secs(1), worked_feasibility_flip),
        ("end-to-end swap synthesis", Duration::from_secs(5), end_to_end_swap),
        ("random schedules stay reachable", Duration::from_secs(120), random_schedules_stay_reachable),
        ("s-majorization matches phi majorization", Duration::from_secs(10), s_majorization_matches_phi),
        ("Schur-Horn and Birkhoff oracles", Duration::from_secs(30), constructive_oracles),
        ("canonical decomposition roundtrip", Duration::from_secs(30), canonical_roundtrip),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let verdict = match result {
            Ok(detail) if elapsed <= *budget => format!("PASS {detail}"),
            Ok(detail) => format!("FAIL {detail}; took longer than {budget:?}"),
            Err(why) => format!("FAIL {why}"),
        };
        failed += verdict.starts_with("FAIL") as usize;
        println!("criterion {}: {name}: {verdict} [{:.3}s]", i + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
