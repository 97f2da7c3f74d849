//! Plot-ready CSV bundle built from a run directory's outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use repro_bound_core::archive::{group_counts, read_counts, CountRow, COUNTS_FILE};
use repro_bound_core::estimator::ExperimentSeries;
use repro_bound_core::sampler::CircuitKind;
use repro_bound_core::tables::{
    fmt_num, read_characterization, read_verdicts, CharacterizationRow, VerdictRow, CHARACTERIZATION_FILE,
    VERDICTS_FILE,
};

use crate::error::{CliError, CliResult};

pub const REPORT_DIR: &str = "report";

/// File name and content of every report table.
pub type Bundle = Vec<(&'static str, String)>;

fn require(dir: &Path, names: &[&str]) -> CliResult<()> {
    let missing: Vec<&str> = names.iter().copied().filter(|n| !dir.join(n).is_file()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Incomplete(format!(
            "{}: missing {}; run characterize and verdict first",
            dir.display(),
            missing.join(", ")
        )))
    }
}

fn finite_mean(values: impl Iterator<Item = f64>) -> f64 {
    let finite: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        f64::NAN
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

fn table(header: &str, rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    out
}

fn scatter(counts: &[CountRow]) -> CliResult<String> {
    let grouped = group_counts(counts);
    let mut qubits: Vec<usize> = grouped.keys().map(|(q, _)| *q).collect();
    qubits.dedup();
    let mut out = String::from("qubit,experiment,eps,d\n");
    for q in qubits {
        let series = |kind| grouped.get(&(q, kind)).map(Vec::as_slice).unwrap_or(&[]);
        let (s0, s1, c) = (series(CircuitKind::Spam0), series(CircuitKind::Spam1), series(CircuitKind::Circuit));
        if s0.len() != s1.len() || s0.len() != c.len() {
            return Err(CliError::Incomplete(format!(
                "{COUNTS_FILE}: qubit {q} has {} spam0, {} spam1 and {} c rows",
                s0.len(),
                s1.len(),
                c.len()
            )));
        }
        let Some(first) = s0.first() else { continue };
        let triples: Vec<(u64, u64, u64)> = (0..s0.len()).map(|l| (s0[l].ones, s1[l].ones, c[l].ones)).collect();
        let s = ExperimentSeries::from_counts(&triples, first.shots)?;
        for (l, row) in s0.iter().enumerate() {
            let _ = writeln!(out, "{q},{},{},{}", row.experiment, fmt_num(s.eps[l]), fmt_num(s.d[l]));
        }
    }
    Ok(out)
}

/// Build the report tables from in-memory inputs.
pub fn build(chars: &[CharacterizationRow], verdicts: &[VerdictRow], counts: &[CountRow]) -> CliResult<Bundle> {
    let verdict_of: BTreeMap<usize, &VerdictRow> = verdicts.iter().map(|v| (v.qubit, v)).collect();
    let theta_mean = finite_mean(chars.iter().map(|c| c.theta_hat_deg().abs()));
    let gamma_mean = finite_mean(verdicts.iter().map(|v| v.verdict.gamma_d));

    let table1 = table(
        "register,gamma_max,gamma_D",
        verdicts
            .iter()
            .map(|v| vec![v.qubit.to_string(), fmt_num(v.verdict.gamma_max), fmt_num(v.verdict.gamma_d)]),
    );
    let theta = table(
        "qubit,theta_abs_deg,register_mean_deg",
        chars
            .iter()
            .map(|c| vec![c.qubit.to_string(), fmt_num(c.theta_hat_deg().abs()), fmt_num(theta_mean)]),
    );
    let hellinger = table(
        "qubit,d_mean,d_sigma",
        chars
            .iter()
            .map(|c| vec![c.qubit.to_string(), fmt_num(c.d_mean), fmt_num(c.d_sigma)]),
    );
    let asymmetry = table(
        "qubit,eps_mean,eps_sigma",
        chars
            .iter()
            .map(|c| vec![c.qubit.to_string(), fmt_num(c.eps_mean), fmt_num(c.eps_sigma)]),
    );
    let gamma = table(
        "qubit,gamma_hat,gamma_D,register_mean_gamma_D",
        chars.iter().map(|c| {
            let gd = verdict_of.get(&c.qubit).map_or(f64::NAN, |v| v.verdict.gamma_d);
            vec![c.qubit.to_string(), fmt_num(c.gamma_hat), fmt_num(gd), fmt_num(gamma_mean)]
        }),
    );
    Ok(vec![
        ("table1.csv", table1),
        ("fig_theta.csv", theta),
        ("fig_hellinger.csv", hellinger),
        ("fig_asymmetry.csv", asymmetry),
        ("fig_gamma.csv", gamma),
        ("fig_scatter.csv", scatter(counts)?),
    ])
}

/// Read a run directory and write the bundle to `out` (default `<run>/report`).
pub fn write_report(run_dir: &Path, out: Option<&Path>) -> CliResult<PathBuf> {
    require(run_dir, &[CHARACTERIZATION_FILE, VERDICTS_FILE, COUNTS_FILE])?;
    let chars = read_characterization(&run_dir.join(CHARACTERIZATION_FILE))?;
    let verdicts = read_verdicts(&run_dir.join(VERDICTS_FILE))?;
    let counts = read_counts(run_dir)?;
    let bundle = build(&chars, &verdicts, &counts)?;

    let out = out.map_or_else(|| run_dir.join(REPORT_DIR), Path::to_path_buf);
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    for (name, content) in bundle {
        let path = out.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(out)
}
