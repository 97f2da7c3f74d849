//! Estimators that turn SPAM(0), SPAM(1) and `H`-circuit shot blocks into
//! per-qubit readout fidelities, readout asymmetry, the composite parameter
//! `γ̂`, the gate-angle error `θ̂` and the observed Hellinger distance, each
//! with the standard deviation of its population mean over `L` experiments.

use log::warn;
use rayon::prelude::*;

use crate::archive::RunArchive;
use crate::distance::{compensated_sum, Distribution};
use crate::error::{Error, Result};
use crate::sampler::{CircuitKind, ShotBlock};

/// `|2f̂ - 1|` below this makes `θ` unidentifiable.
pub const SINGULAR_FIDELITY_GUARD: f64 = 1e-6;
/// arcsin-argument overshoot absorbed silently.
pub const CLAMP_SILENT: f64 = 1e-9;
/// arcsin-argument overshoot above which the model is rejected.
pub const CLAMP_HARD: f64 = 0.01;

fn expect_kind(block: &ShotBlock, kind: CircuitKind) -> Result<()> {
    if block.id.kind != kind {
        return Err(Error::Misuse(format!(
            "expected a {kind} block, got {}",
            block.id.kind
        )));
    }
    if block.shots() == 0 {
        return Err(Error::EmptyData(format!("{} block has no shots", block.id.file_stem())));
    }
    Ok(())
}

fn ones_fraction(block: &ShotBlock) -> f64 {
    block.ones() as f64 / block.shots() as f64
}

/// `f̂1 = Σ b / S` over a SPAM(1) block.
pub fn estimate_f1(block: &ShotBlock) -> Result<f64> {
    expect_kind(block, CircuitKind::Spam1)?;
    Ok(ones_fraction(block))
}

/// `f̂0 = 1 - Σ b / S` over a SPAM(0) block.
pub fn estimate_f0(block: &ShotBlock) -> Result<f64> {
    expect_kind(block, CircuitKind::Spam0)?;
    Ok(1.0 - ones_fraction(block))
}

/// `(P̂r(0), P̂r(1))` from an `H`-circuit block.
pub fn estimate_pr(block: &ShotBlock) -> Result<Distribution> {
    expect_kind(block, CircuitKind::Circuit)?;
    let one = ones_fraction(block);
    Distribution::binary(1.0 - one, one)
}

/// Hellinger distance of a two-outcome distribution from the uniform one:
/// `√(1 - √(Pr(0)/2) - √(Pr(1)/2))`.
pub fn hellinger_single(pr: &Distribution) -> Result<f64> {
    if pr.n() != 1 {
        return Err(Error::Shape(format!("expected one qubit, got n={}", pr.n())));
    }
    Ok(hellinger_from_p0(pr.prob(0)))
}

fn hellinger_from_p0(p0: f64) -> f64 {
    let p1 = 1.0 - p0;
    (1.0 - (p0 / 2.0).sqrt() - (p1 / 2.0).sqrt()).max(0.0).sqrt()
}

/// Sample mean and standard deviation of the population mean,
/// `σ(x̄) = √(Σ (x_l - x̄)² / (L (L - 1)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationStats {
    pub mean: f64,
    pub sigma_of_mean: f64,
}

pub fn population_stats(values: &[f64]) -> Result<PopulationStats> {
    let l = values.len();
    if l < 2 {
        return Err(Error::InsufficientData { needed: 2, got: l });
    }
    let lf = l as f64;
    let mean = compensated_sum(values.iter().copied()) / lf;
    let ss = compensated_sum(values.iter().map(|x| (x - mean) * (x - mean)));
    Ok(PopulationStats {
        mean,
        sigma_of_mean: (ss / (lf * (lf - 1.0))).sqrt(),
    })
}

/// Result of inverting `γ = ε - 2 sin 2θ (f - ½)` for `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaInversion {
    pub theta: f64,
    /// The unclamped arcsin argument `(ε - γ) / (2f - 1)`.
    pub argument: f64,
    /// How far `|argument|` exceeded 1, if at all.
    pub overshoot: f64,
}

impl ThetaInversion {
    pub fn clamped(&self) -> bool {
        self.overshoot > 0.0
    }

    pub fn warning(&self) -> Option<String> {
        (self.overshoot > CLAMP_SILENT).then(|| {
            format!(
                "arcsin argument {:.6} clamped (overshoot {:.3e})",
                self.argument, self.overshoot
            )
        })
    }
}

/// `θ̂ = ½ arcsin((ε̂ - γ̂) / (2f̂ - 1))`.
///
/// Overshoot of the argument beyond ±1 is absorbed silently up to
/// [`CLAMP_SILENT`], clamped with a warning up to [`CLAMP_HARD`], and
/// rejected as a model mismatch beyond that.
pub fn invert_theta(gamma_hat: f64, eps_hat: f64, f_hat: f64) -> Result<ThetaInversion> {
    let denom = 2.0 * f_hat - 1.0;
    if !denom.is_finite() || denom.abs() < SINGULAR_FIDELITY_GUARD {
        return Err(Error::SingularFidelity { value: denom });
    }
    let argument = (eps_hat - gamma_hat) / denom;
    if !argument.is_finite() {
        return Err(Error::param("gamma_hat", "non-finite arcsin argument"));
    }
    let overshoot = (argument.abs() - 1.0).max(0.0);
    if overshoot > CLAMP_HARD {
        return Err(Error::ModelMismatch { argument, overshoot });
    }
    let inv = ThetaInversion {
        theta: 0.5 * argument.clamp(-1.0, 1.0).asin(),
        argument,
        overshoot,
    };
    if let Some(w) = inv.warning() {
        warn!("{w}");
    }
    Ok(inv)
}

/// How `γ̂` is formed from the `H`-circuit blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum GammaMode {
    /// `2 · mean_l P̂r_l(0) - 1`.
    #[default]
    PerExperiment,
    /// `2 · (zeros over all L·S shots) / (L·S) - 1`.
    Pooled,
}

/// Per-experiment values behind one qubit's estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSeries {
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
    pub eps: Vec<f64>,
    pub pr0: Vec<f64>,
    pub d: Vec<f64>,
}

impl ExperimentSeries {
    /// Build from per-experiment count triples `(spam0 ones, spam1 ones, c ones)`
    /// with `shots` shots each.
    pub fn from_counts(counts: &[(u64, u64, u64)], shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::EmptyData("experiments have no shots".into()));
        }
        let s = shots as f64;
        let mut out = Self {
            f0: Vec::with_capacity(counts.len()),
            f1: Vec::with_capacity(counts.len()),
            eps: Vec::with_capacity(counts.len()),
            pr0: Vec::with_capacity(counts.len()),
            d: Vec::with_capacity(counts.len()),
        };
        for &(z, o, c) in counts {
            let f0 = 1.0 - z as f64 / s;
            let f1 = o as f64 / s;
            let pr0 = 1.0 - c as f64 / s;
            out.f0.push(f0);
            out.f1.push(f1);
            out.eps.push(f0 - f1);
            out.pr0.push(pr0);
            out.d.push(hellinger_from_p0(pr0));
        }
        Ok(out)
    }

    fn from_blocks(spam0: &[&ShotBlock], spam1: &[&ShotBlock], circuit: &[&ShotBlock]) -> Result<Self> {
        let l = spam0.len();
        if spam1.len() != l || circuit.len() != l {
            return Err(Error::Shape(format!(
                "unequal experiment counts: {l} spam0, {} spam1, {} c",
                spam1.len(),
                circuit.len()
            )));
        }
        let mut out = Self {
            f0: Vec::with_capacity(l),
            f1: Vec::with_capacity(l),
            eps: Vec::with_capacity(l),
            pr0: Vec::with_capacity(l),
            d: Vec::with_capacity(l),
        };
        for ((z, o), c) in spam0.iter().zip(spam1).zip(circuit) {
            let f0 = estimate_f0(z)?;
            let f1 = estimate_f1(o)?;
            let pr = estimate_pr(c)?;
            out.f0.push(f0);
            out.f1.push(f1);
            out.eps.push(f0 - f1);
            out.pr0.push(pr.prob(0));
            out.d.push(hellinger_single(&pr)?);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }
}

/// Per-qubit characterization with error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationEstimate {
    pub qubit: usize,
    pub f0_mean: f64,
    pub f0_sigma: f64,
    pub f1_mean: f64,
    pub f1_sigma: f64,
    pub eps_mean: f64,
    pub eps_sigma: f64,
    pub f_mean: f64,
    pub gamma_hat: f64,
    pub gamma_sigma: f64,
    pub theta_hat: f64,
    /// Linearized standard deviation of `θ̂`.
    pub theta_sigma: f64,
    pub d_mean: f64,
    pub d_sigma: f64,
    pub experiments: usize,
    pub shots: usize,
    pub warnings: Vec<String>,
}

impl CharacterizationEstimate {
    pub fn theta_hat_deg(&self) -> f64 {
        self.theta_hat.to_degrees()
    }
}

/// Characterize one qubit from its per-experiment series.
pub fn characterize_series(
    qubit: usize,
    series: &ExperimentSeries,
    shots: usize,
    mode: GammaMode,
) -> Result<CharacterizationEstimate> {
    let f0 = population_stats(&series.f0)?;
    let f1 = population_stats(&series.f1)?;
    let eps = population_stats(&series.eps)?;
    let d = population_stats(&series.d)?;
    let gammas: Vec<f64> = series.pr0.iter().map(|p| 2.0 * p - 1.0).collect();
    let gamma_stats = population_stats(&gammas)?;
    let gamma_hat = match mode {
        GammaMode::PerExperiment => 2.0 * population_stats(&series.pr0)?.mean - 1.0,
        // every experiment has the same S, so the pooled fraction is the plain mean
        GammaMode::Pooled => 2.0 * (series.pr0.iter().sum::<f64>() / series.len() as f64) - 1.0,
    };
    let f_mean = (f0.mean + f1.mean) / 2.0;
    let inversion = invert_theta(gamma_hat, eps.mean, f_mean)?;

    // delta-method spread of θ̂ from the per-experiment (ε, γ, f) triples
    let denom = 2.0 * f_mean - 1.0;
    let x = inversion.argument;
    let linearized: Vec<f64> = (0..series.len())
        .map(|l| {
            let f_l = (series.f0[l] + series.f1[l]) / 2.0;
            x + ((series.eps[l] - eps.mean) - (gammas[l] - gamma_stats.mean)) / denom
                - x * 2.0 * (f_l - f_mean) / denom
        })
        .collect();
    let x_sigma = population_stats(&linearized)?.sigma_of_mean;
    let slope = 0.5 / (1.0 - x.clamp(-1.0, 1.0).powi(2)).sqrt();
    let theta_sigma = if slope.is_finite() { x_sigma * slope } else { f64::INFINITY };

    Ok(CharacterizationEstimate {
        qubit,
        f0_mean: f0.mean,
        f0_sigma: f0.sigma_of_mean,
        f1_mean: f1.mean,
        f1_sigma: f1.sigma_of_mean,
        eps_mean: eps.mean,
        eps_sigma: eps.sigma_of_mean,
        f_mean,
        gamma_hat,
        gamma_sigma: gamma_stats.sigma_of_mean,
        theta_hat: inversion.theta,
        theta_sigma,
        d_mean: d.mean,
        d_sigma: d.sigma_of_mean,
        experiments: series.len(),
        shots,
        warnings: inversion.warning().into_iter().collect(),
    })
}

/// Per-qubit outcome of [`characterize`]; failures do not abort other qubits.
#[derive(Debug)]
pub struct QubitCharacterization {
    pub qubit: usize,
    pub result: Result<CharacterizationEstimate>,
}

/// Characterize every qubit of an archive.
pub fn characterize(archive: &RunArchive, mode: GammaMode) -> Vec<QubitCharacterization> {
    archive
        .plan
        .qubits
        .par_iter()
        .map(|q| {
            let series = |kind| archive.series(q.index, kind);
            let result = ExperimentSeries::from_blocks(
                &series(CircuitKind::Spam0),
                &series(CircuitKind::Spam1),
                &series(CircuitKind::Circuit),
            )
            .and_then(|s| characterize_series(q.index, &s, archive.plan.shots, mode));
            QubitCharacterization {
                qubit: q.index,
                result,
            }
        })
        .collect()
}
