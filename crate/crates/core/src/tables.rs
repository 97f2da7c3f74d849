//! Tabular outputs (`characterization.csv`, `verdicts.csv`) and the number
//! format shared by every CSV the toolkit writes.

use std::fs;
use std::path::Path;

use crate::bounds::ReproVerdict;
use crate::error::{Error, Result};
use crate::estimator::CharacterizationEstimate;

pub const CHARACTERIZATION_FILE: &str = "characterization.csv";
pub const VERDICTS_FILE: &str = "verdicts.csv";

pub const CHARACTERIZATION_HEADER: [&str; 14] = [
    "qubit",
    "f0_mean",
    "f1_mean",
    "eps_mean",
    "eps_sigma",
    "f_mean",
    "gamma_hat",
    "theta_hat_rad",
    "theta_hat_deg",
    "d_mean",
    "d_sigma",
    "L",
    "S",
    "warnings",
];

pub const VERDICTS_HEADER: [&str; 7] = [
    "qubit",
    "n",
    "delta",
    "gamma_D",
    "gamma_max",
    "margin",
    "reproducible",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_num(what: &str, field: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|e| Error::format(what, format!("field {field}: {raw:?}: {e}")))
}

fn parse_int(what: &str, field: &str, raw: &str) -> Result<usize> {
    raw.trim()
        .parse::<usize>()
        .map_err(|e| Error::format(what, format!("field {field}: {raw:?}: {e}")))
}

/// One row of `characterization.csv`. Qubits whose estimation failed keep a
/// row with `NaN` values and the failure in `warnings`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationRow {
    pub qubit: usize,
    pub f0_mean: f64,
    pub f1_mean: f64,
    pub eps_mean: f64,
    pub eps_sigma: f64,
    pub f_mean: f64,
    pub gamma_hat: f64,
    pub theta_hat_rad: f64,
    pub d_mean: f64,
    pub d_sigma: f64,
    pub experiments: usize,
    pub shots: usize,
    pub warnings: String,
}

impl CharacterizationRow {
    pub fn theta_hat_deg(&self) -> f64 {
        self.theta_hat_rad.to_degrees()
    }

    pub fn failed(qubit: usize, experiments: usize, shots: usize, reason: String) -> Self {
        Self {
            qubit,
            f0_mean: f64::NAN,
            f1_mean: f64::NAN,
            eps_mean: f64::NAN,
            eps_sigma: f64::NAN,
            f_mean: f64::NAN,
            gamma_hat: f64::NAN,
            theta_hat_rad: f64::NAN,
            d_mean: f64::NAN,
            d_sigma: f64::NAN,
            experiments,
            shots,
            warnings: reason,
        }
    }

    pub fn has_theta(&self) -> bool {
        self.theta_hat_rad.is_finite()
    }
}

impl From<&CharacterizationEstimate> for CharacterizationRow {
    fn from(e: &CharacterizationEstimate) -> Self {
        Self {
            qubit: e.qubit,
            f0_mean: e.f0_mean,
            f1_mean: e.f1_mean,
            eps_mean: e.eps_mean,
            eps_sigma: e.eps_sigma,
            f_mean: e.f_mean,
            gamma_hat: e.gamma_hat,
            theta_hat_rad: e.theta_hat,
            d_mean: e.d_mean,
            d_sigma: e.d_sigma,
            experiments: e.experiments,
            shots: e.shots,
            warnings: e.warnings.join("; "),
        }
    }
}

fn to_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::format("csv", e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| Error::format("csv", e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format("csv", e))?;
    String::from_utf8(bytes).map_err(|e| Error::format("csv", e))
}

pub fn characterization_csv(rows: &[CharacterizationRow]) -> Result<String> {
    to_csv(
        CHARACTERIZATION_HEADER,
        rows.iter().map(|r| {
            vec![
                r.qubit.to_string(),
                fmt_num(r.f0_mean),
                fmt_num(r.f1_mean),
                fmt_num(r.eps_mean),
                fmt_num(r.eps_sigma),
                fmt_num(r.f_mean),
                fmt_num(r.gamma_hat),
                fmt_num(r.theta_hat_rad),
                fmt_num(r.theta_hat_deg()),
                fmt_num(r.d_mean),
                fmt_num(r.d_sigma),
                r.experiments.to_string(),
                r.shots.to_string(),
                r.warnings.clone(),
            ]
        }),
    )
}

fn read_records(path: &Path, what: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| Error::format(what, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::format(
            what,
            format!("header {:?} does not match {:?}", found.iter().collect::<Vec<_>>(), header),
        ));
    }
    reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::format(what, e))
}

pub fn read_characterization(path: &Path) -> Result<Vec<CharacterizationRow>> {
    let what = CHARACTERIZATION_FILE;
    read_records(path, what, &CHARACTERIZATION_HEADER)?
        .iter()
        .map(|r| {
            let num = |i: usize| parse_num(what, CHARACTERIZATION_HEADER[i], &r[i]);
            Ok(CharacterizationRow {
                qubit: parse_int(what, "qubit", &r[0])?,
                f0_mean: num(1)?,
                f1_mean: num(2)?,
                eps_mean: num(3)?,
                eps_sigma: num(4)?,
                f_mean: num(5)?,
                gamma_hat: num(6)?,
                theta_hat_rad: num(7)?,
                d_mean: num(9)?,
                d_sigma: num(10)?,
                experiments: parse_int(what, "L", &r[11])?,
                shots: parse_int(what, "S", &r[12])?,
                warnings: r[13].to_string(),
            })
        })
        .collect()
}

/// One row of `verdicts.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictRow {
    pub qubit: usize,
    pub verdict: ReproVerdict,
}

pub fn verdicts_csv(rows: &[VerdictRow]) -> Result<String> {
    to_csv(
        VERDICTS_HEADER,
        rows.iter().map(|r| {
            let v = &r.verdict;
            vec![
                r.qubit.to_string(),
                v.n.to_string(),
                fmt_num(v.delta),
                fmt_num(v.gamma_d),
                fmt_num(v.gamma_max),
                fmt_num(v.margin),
                v.reproducible.to_string(),
            ]
        }),
    )
}

pub fn read_verdicts(path: &Path) -> Result<Vec<VerdictRow>> {
    let what = VERDICTS_FILE;
    read_records(path, what, &VERDICTS_HEADER)?
        .iter()
        .map(|r| {
            let num = |i: usize| parse_num(what, VERDICTS_HEADER[i], &r[i]);
            let reproducible = match r[6].trim() {
                "true" => true,
                "false" => false,
                other => return Err(Error::format(what, format!("field reproducible: {other:?}"))),
            };
            Ok(VerdictRow {
                qubit: parse_int(what, "qubit", &r[0])?,
                verdict: ReproVerdict {
                    n: parse_int(what, "n", &r[1])? as u32,
                    delta: num(2)?,
                    gamma_d: num(3)?,
                    gamma_max: num(4)?,
                    margin: num(5)?,
                    reproducible,
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_num(-0.04), "-4.0000000000000001e-2");
        assert_eq!(fmt_num(f64::NAN), "NaN");
    }

    proptest! {
        #[test]
        fn fmt_num_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn characterization_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            CharacterizationRow {
                qubit: 0,
                f0_mean: 0.99,
                f1_mean: 0.95,
                eps_mean: 0.04,
                eps_sigma: 1e-4,
                f_mean: 0.97,
                gamma_hat: 0.001,
                theta_hat_rad: 0.0213,
                d_mean: 0.01,
                d_sigma: 1e-3,
                experiments: 203,
                shots: 8192,
                warnings: "a, b; c".into(),
            },
            CharacterizationRow::failed(1, 203, 8192, "singular fidelity".into()),
        ];
        let path = dir.path().join(CHARACTERIZATION_FILE);
        fs::write(&path, characterization_csv(&rows).unwrap()).unwrap();
        let back = read_characterization(&path).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(!back[1].has_theta());
        assert_eq!(back[1].warnings, "singular fidelity");
    }

    #[test]
    fn verdict_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![VerdictRow {
            qubit: 3,
            verdict: crate::bounds::verdict(1, 0.05, 0.04, 0.0, 0.97).unwrap(),
        }];
        let path = dir.path().join(VERDICTS_FILE);
        fs::write(&path, verdicts_csv(&rows).unwrap()).unwrap();
        assert_eq!(read_verdicts(&path).unwrap(), rows);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(VERDICTS_FILE);
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_verdicts(&path), Err(Error::Format { .. })));
    }
}
