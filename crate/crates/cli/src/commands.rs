use std::path::{Path, PathBuf};

use log::warn;
use repro_bound_core::archive::{read_run_dir, run_plan_with, write_run_dir};
use repro_bound_core::bounds::{
    default_delta_grid, default_gamma_grid, gamma_device, lemma_a1_check, plan_samples, verdict_from_gamma,
    LemmaReport, SamplePlan,
};
use repro_bound_core::estimator::{characterize, GammaMode};
use repro_bound_core::sampler::UniformDrift;
use repro_bound_core::tables::{
    characterization_csv, read_characterization, verdicts_csv, CharacterizationRow, VerdictRow,
    CHARACTERIZATION_FILE, VERDICTS_FILE,
};

use crate::calibration::{Calibration, CalibrationSnapshot, NORMALIZED_FILE};
use crate::config::DeviceConfig;
use crate::error::{CliError, CliResult};
use crate::{report, Cli, Command};

pub const LEMMA_REPORT_FILE: &str = "lemma_report.json";

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    let say = |line: String| {
        if !cli.quiet {
            println!("{line}");
        }
    };
    match &cli.command {
        Command::Simulate(a) => {
            let dir = a
                .run_dir
                .as_deref()
                .or(out)
                .ok_or_else(|| CliError::Input("simulate needs a run directory (positional or --out)".into()))?;
            let drift = match a.drift.as_deref() {
                Some(&[fidelity, theta]) => Some((fidelity, theta)),
                _ => None,
            };
            let blocks = simulate(&a.config, dir, cli.seed, drift)?;
            say(format!("wrote {blocks} blocks to {}", dir.display()));
        }
        Command::Characterize(a) => {
            let mode = if a.pooled { GammaMode::Pooled } else { GammaMode::PerExperiment };
            let path = out.map_or_else(|| a.run_dir.join(CHARACTERIZATION_FILE), Path::to_path_buf);
            let rows = characterize_run(&a.run_dir, mode, &path)?;
            let failed = rows.iter().filter(|r| !r.has_theta()).count();
            say(format!("{} qubits ({failed} failed) -> {}", rows.len(), path.display()));
        }
        Command::Verdict(a) => {
            let tolerance = match a.delta {
                Some(d) => Tolerance::Fixed(d),
                None => Tolerance::Observed,
            };
            let path = out.map_or_else(|| sibling(&a.input, VERDICTS_FILE), Path::to_path_buf);
            let rows = verdict_file(&a.input, tolerance, a.n, a.theta, &path)?;
            let ok = rows.iter().filter(|r| r.verdict.reproducible).count();
            say(format!("{ok}/{} reproducible -> {}", rows.len(), path.display()));
        }
        Command::ImportCalibration(a) => {
            let path = out.map_or_else(|| sibling(&a.snapshot, NORMALIZED_FILE), Path::to_path_buf);
            let cal = import_calibration(&a.snapshot, &path)?;
            say(format!("{} qubits -> {}", cal.qubits.len(), path.display()));
        }
        Command::PlanSamples(a) => {
            let plan = plan(a.p, a.precision, a.confidence)?;
            if let Some(path) = out {
                write(path, &json(&plan))?;
            }
            // the plan is the command's output, so it is printed even with --quiet
            println!("T = {}", plan.shots);
            println!("z = {}", plan.z);
        }
        Command::Report(a) => {
            let dir = report::write_report(&a.run_dir, out)?;
            say(format!("report -> {}", dir.display()));
        }
        Command::LemmaCheck(a) => {
            let path = out.map_or_else(|| PathBuf::from(LEMMA_REPORT_FILE), Path::to_path_buf);
            let report = lemma_check(a.grid)?;
            write(&path, &json(&report))?;
            say(format!(
                "{} pairs, {} on the boundary, {} counterexamples -> {}",
                report.pairs_checked,
                report.boundary_pairs,
                report.counterexamples.len(),
                path.display()
            ));
        }
    }
    Ok(())
}

fn sibling(input: &Path, name: &str) -> PathBuf {
    input.parent().map_or_else(|| PathBuf::from(name), |p| p.join(name))
}

fn write(path: &Path, content: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

/// Simulate the config into `dir`; returns the number of blocks written.
pub fn simulate(config: &Path, dir: &Path, seed: Option<u64>, drift: Option<(f64, f64)>) -> CliResult<usize> {
    let device = DeviceConfig::load(config)?;
    let plan = device.experiment_plan(seed);
    let hook = drift.map(|(fidelity, theta)| {
        for (name, v) in [("fidelity", fidelity), ("theta", theta)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Input(format!("--drift {name} amplitude {v} must be a finite non-negative number")));
            }
        }
        Ok(UniformDrift {
            seed: plan.seed,
            fidelity,
            theta,
        })
    });
    let hook = hook.transpose()?;
    let drift_arg = hook
        .as_ref()
        .map(|h| (h as &dyn repro_bound_core::sampler::DriftHook, format!("uniform fidelity={} theta={}", h.fidelity, h.theta)));
    let archive = run_plan_with(&plan, Some(&device.name), drift_arg)?;
    write_run_dir(&archive, dir)?;
    Ok(archive.blocks.len())
}

/// Characterize every qubit of a run directory and write the CSV to `out`.
pub fn characterize_run(run_dir: &Path, mode: GammaMode, out: &Path) -> CliResult<Vec<CharacterizationRow>> {
    let archive = read_run_dir(run_dir)?;
    let rows: Vec<CharacterizationRow> = characterize(&archive, mode)
        .into_iter()
        .map(|qc| match qc.result {
            Ok(est) => {
                for w in &est.warnings {
                    warn!("qubit {}: {w}", qc.qubit);
                }
                CharacterizationRow::from(&est)
            }
            Err(e) => {
                warn!("qubit {}: {e}", qc.qubit);
                CharacterizationRow::failed(qc.qubit, archive.plan.experiments, archive.plan.shots, e.to_string())
            }
        })
        .collect();
    write(out, &characterization_csv(&rows)?)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Fixed(f64),
    /// Each qubit's own mean observed distance.
    Observed,
}

struct VerdictInput {
    qubit: usize,
    eps: f64,
    theta: Option<f64>,
    f: f64,
    observed: Option<f64>,
}

fn verdict_inputs(input: &Path) -> CliResult<Vec<VerdictInput>> {
    let is_json = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let cal = Calibration::load(input)?;
        return Ok(cal
            .qubits
            .iter()
            .map(|q| VerdictInput {
                qubit: q.index,
                eps: q.eps(),
                theta: q.theta_rad,
                f: q.f(),
                observed: None,
            })
            .collect());
    }
    if !input.is_file() {
        return Err(CliError::Input(format!("{}: no such characterization file", input.display())));
    }
    Ok(read_characterization(input)?
        .iter()
        .map(|r| VerdictInput {
            qubit: r.qubit,
            eps: r.eps_mean,
            theta: r.has_theta().then_some(r.theta_hat_rad),
            f: r.f_mean,
            observed: r.d_mean.is_finite().then_some(r.d_mean),
        })
        .collect())
}

/// Verdict per qubit for a characterization CSV or a normalized calibration.
pub fn verdict_file(
    input: &Path,
    tolerance: Tolerance,
    n: u32,
    theta_fallback: Option<f64>,
    out: &Path,
) -> CliResult<Vec<VerdictRow>> {
    let rows = verdict_inputs(input)?
        .into_iter()
        .map(|q| {
            let theta = q.theta.or(theta_fallback).ok_or_else(|| {
                CliError::Input(format!("qubit {}: no θ available; pass --theta", q.qubit))
            })?;
            if !q.eps.is_finite() || !q.f.is_finite() {
                return Err(CliError::Input(format!("qubit {}: characterization failed", q.qubit)));
            }
            let delta = match tolerance {
                Tolerance::Fixed(d) => d,
                Tolerance::Observed => q.observed.ok_or_else(|| {
                    CliError::Input(format!("qubit {}: no observed distance in {}", q.qubit, input.display()))
                })?,
            };
            let verdict = verdict_from_gamma(n, delta, gamma_device(q.eps, theta, q.f))?;
            Ok(VerdictRow {
                qubit: q.qubit,
                verdict,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write(out, &verdicts_csv(&rows)?)?;
    Ok(rows)
}

pub fn import_calibration(snapshot: &Path, out: &Path) -> CliResult<Calibration> {
    let cal = CalibrationSnapshot::load(snapshot)?.normalize(&snapshot.display().to_string())?;
    for q in &cal.qubits {
        for flag in &q.flags {
            warn!("qubit {}: {flag}", q.index);
        }
    }
    write(out, &cal.to_json())?;
    Ok(cal)
}

pub fn plan(p: f64, precision: f64, confidence: f64) -> CliResult<SamplePlan> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(CliError::Input(format!("--confidence {confidence} is outside (0, 1)")));
    }
    Ok(plan_samples(p, precision, 1.0 - confidence)?)
}

pub fn lemma_check(grid: usize) -> CliResult<LemmaReport> {
    if grid < 2 {
        return Err(CliError::Input(format!("--grid {grid}: at least 2 points per axis are needed")));
    }
    Ok(lemma_a1_check(&default_delta_grid(grid), &default_gamma_grid(grid))?)
}
