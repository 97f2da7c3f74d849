//! Reproducibility decision for the `H^{⊗n}` circuit.
//!
//! A device with composite parameter `γ_D` reproduces the uniform output
//! within Hellinger distance `δ` when `γ_D ≤ γ_max(n, δ)`, where
//!
//! ```text
//! γ_max(n, δ) = 2 (1-δ²)^{1/n} √(1 - (1-δ²)^{2/n})
//! ```
//!
//! The squaring step that produces `γ_max` needs `(1-δ²)^{2/n} ≥ ½`, so `δ`
//! is restricted to `δ ≤ δ*(n) = √(1 - 2^{-n/2})`. Inside that regime the
//! test is exact for identical qubits, not merely sufficient.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on the validity ceiling so that `δ*(n)` computed along a different
/// floating-point path is still admitted.
const CEILING_SLACK: f64 = 1e-12;

/// Two sides of a comparison closer than this are treated as ties when
/// auditing the `γ` test against the direct distance test.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `γ_D = |ε - 2 sin 2θ (f - ½)|`.
pub fn gamma_device(eps: f64, theta: f64, f: f64) -> f64 {
    (eps - 2.0 * (2.0 * theta).sin() * (f - 0.5)).abs()
}

/// Largest admissible tolerance `δ*(n) = √(1 - 2^{-n/2})`.
pub fn delta_ceiling(n: u32) -> f64 {
    let half_power = if n.is_multiple_of(2) {
        (-((n / 2) as f64)).exp2()
    } else {
        FRAC_1_SQRT_2 * (-(((n - 1) / 2) as f64)).exp2()
    };
    (1.0 - half_power).sqrt()
}

fn check_regime(n: u32, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "qubit count must be at least 1"));
    }
    let ceiling = delta_ceiling(n);
    if !delta.is_finite() || delta < 0.0 || delta > ceiling + CEILING_SLACK {
        return Err(Error::OutOfRegime { delta, n, ceiling });
    }
    Ok(())
}

/// `γ_max(n, δ)`; errors outside `0 ≤ δ ≤ δ*(n)`.
pub fn gamma_max(n: u32, delta: f64) -> Result<f64> {
    check_regime(n, delta)?;
    let base = (1.0 - delta * delta).powf(1.0 / n as f64);
    Ok(2.0 * base * (1.0 - base * base).max(0.0).sqrt())
}

/// Outcome of the reproducibility test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproVerdict {
    pub n: u32,
    pub delta: f64,
    pub gamma_d: f64,
    pub gamma_max: f64,
    pub reproducible: bool,
    /// `γ_max - γ_D`; larger leaves more room for drift.
    pub margin: f64,
}

/// Test a device characterized by `(ε, θ, f)` against tolerance `δ`.
/// Ties count as reproducible.
pub fn verdict(n: u32, delta: f64, eps: f64, theta: f64, f: f64) -> Result<ReproVerdict> {
    verdict_from_gamma(n, delta, gamma_device(eps, theta, f))
}

pub fn verdict_from_gamma(n: u32, delta: f64, gamma_d: f64) -> Result<ReproVerdict> {
    let gamma_max = gamma_max(n, delta)?;
    let gamma_d = gamma_d.abs();
    Ok(ReproVerdict {
        n,
        delta,
        gamma_d,
        gamma_max,
        reproducible: gamma_d <= gamma_max,
        margin: gamma_max - gamma_d,
    })
}

/// Small-`δ` tolerance floor `½ √(n/2) γ_D`: tolerances below this will
/// almost surely fail the distance test on this device.
pub fn min_delta(n: u32, gamma_d: f64) -> f64 {
    0.5 * (n as f64 / 2.0).sqrt() * gamma_d.abs()
}

/// Exact single-qubit Hellinger distance from uniform for composite
/// parameter `γ`: `√(1 - (√(1+γ) + √(1-γ))/2)`.
pub fn exact_hellinger_1q(gamma: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma.abs() > 1.0 {
        return Err(Error::param("gamma", format!("{gamma} is outside [-1, 1]")));
    }
    let bc = ((1.0 + gamma).sqrt() + (1.0 - gamma).sqrt()) / 2.0;
    Ok((1.0 - bc).max(0.0).sqrt())
}

/// One `(δ, γ)` pair where the two tests disagree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCounterexample {
    pub delta: f64,
    pub gamma: f64,
    pub gamma_max: f64,
    pub distance: f64,
    pub gamma_test: bool,
    pub distance_test: bool,
}

/// Audit of `(γ ≤ γ_max(1, δ)) ⇔ (d(γ) ≤ δ)` over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: u32,
    pub delta_ceiling: f64,
    pub tie_tolerance: f64,
    pub pairs_checked: usize,
    /// Pairs where either comparison sits within [`TIE_TOLERANCE`] of equality.
    pub boundary_pairs: usize,
    pub counterexamples: Vec<LemmaCounterexample>,
}

impl LemmaReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Check the single-qubit equivalence of the `γ` test and the distance test
/// on every `(δ, γ)` pair. Disagreements are returned as data; pairs that sit
/// on a tie within [`TIE_TOLERANCE`] are counted separately.
pub fn lemma_a1_check(delta_grid: &[f64], gamma_grid: &[f64]) -> Result<LemmaReport> {
    for &d in delta_grid {
        check_regime(1, d)?;
    }
    if let Some(g) = gamma_grid.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::param("gamma_grid", format!("{g} is outside [0, 1]")));
    }
    let mut boundary_pairs = 0;
    let mut counterexamples = Vec::new();
    let distances = gamma_grid
        .iter()
        .map(|&g| exact_hellinger_1q(g))
        .collect::<Result<Vec<_>>>()?;
    for &delta in delta_grid {
        let gmax = gamma_max(1, delta)?;
        for (&gamma, &distance) in gamma_grid.iter().zip(&distances) {
            let gamma_test = gamma <= gmax;
            let distance_test = distance <= delta;
            let tie = (gamma - gmax).abs() <= TIE_TOLERANCE || (distance - delta).abs() <= TIE_TOLERANCE;
            if tie {
                boundary_pairs += 1;
            } else if gamma_test != distance_test {
                counterexamples.push(LemmaCounterexample {
                    delta,
                    gamma,
                    gamma_max: gmax,
                    distance,
                    gamma_test,
                    distance_test,
                });
            }
        }
    }
    Ok(LemmaReport {
        n: 1,
        delta_ceiling: delta_ceiling(1),
        tie_tolerance: TIE_TOLERANCE,
        pairs_checked: delta_grid.len() * gamma_grid.len(),
        boundary_pairs,
        counterexamples,
    })
}

/// `count` evenly spaced tolerances in `(0, δ*(1)]`, ending on the ceiling.
pub fn default_delta_grid(count: usize) -> Vec<f64> {
    let top = delta_ceiling(1);
    (1..=count).map(|i| top * i as f64 / count as f64).collect()
}

/// `count` evenly spaced values in `[0, 1]`.
pub fn default_gamma_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|j| j as f64 / (count - 1) as f64).collect(),
    }
}

// Acklam's rational approximation of the standard normal quantile
// (relative error below 1.15e-9 over the whole open interval).
#[allow(clippy::excessive_precision)]
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_690e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const ACKLAM_LOW: f64 = 0.02425;

/// Standard normal quantile `Φ⁻¹(p)` for `0 < p < 1`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param("p", format!("{p} is outside (0, 1)")));
    }
    let [a0, a1, a2, a3, a4, a5] = ACKLAM_A;
    let [b0, b1, b2, b3, b4] = ACKLAM_B;
    let [c0, c1, c2, c3, c4, c5] = ACKLAM_C;
    let [d0, d1, d2, d3] = ACKLAM_D;
    let tail = |q: f64| {
        (((((c0 * q + c1) * q + c2) * q + c3) * q + c4) * q + c5)
            / ((((d0 * q + d1) * q + d2) * q + d3) * q + 1.0)
    };
    let z = if p < ACKLAM_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - ACKLAM_LOW {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((a0 * r + a1) * r + a2) * r + a3) * r + a4) * r + a5) * q
            / (((((b0 * r + b1) * r + b2) * r + b3) * r + b4) * r + 1.0)
    };
    Ok(z)
}

/// Shot budget for estimating an outcome probability `p_s` to relative
/// precision `ε` at significance `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub p_s: f64,
    pub epsilon_rel: f64,
    pub alpha: f64,
    /// Upper `α/2` standard-normal quantile.
    pub z: f64,
    /// `ceil((1/p_s - 1) z² / ε²)`, at least 1.
    pub shots: u64,
}

pub fn plan_samples(p_s: f64, epsilon_rel: f64, alpha: f64) -> Result<SamplePlan> {
    let open_unit = |name: &'static str, v: f64| {
        if v > 0.0 && v < 1.0 {
            Ok(())
        } else {
            Err(Error::param(name, format!("{v} is outside (0, 1)")))
        }
    };
    open_unit("p_s", p_s)?;
    open_unit("epsilon_rel", epsilon_rel)?;
    open_unit("alpha", alpha)?;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let raw = (1.0 / p_s - 1.0) * z * z / (epsilon_rel * epsilon_rel);
    if !raw.is_finite() || raw >= u64::MAX as f64 {
        return Err(Error::Capacity(format!("required shot count {raw:e} does not fit")));
    }
    Ok(SamplePlan {
        p_s,
        epsilon_rel,
        alpha,
        z,
        shots: (raw.ceil() as u64).max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{hellinger, product_noisy, uniform_ideal, GammaVector};
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn gamma_device_examples() {
        assert_eq!(gamma_device(0.0, 0.0, 0.97), 0.0);
        assert_abs_diff_eq!(gamma_device(0.04, 0.0, 0.97), 0.04, epsilon = 1e-15);
        let theta = 0.5 * (0.04f64 / 0.94).asin();
        assert_abs_diff_eq!(gamma_device(0.04, theta, 0.97), 0.0, epsilon = 1e-15);
        assert!(gamma_device(-0.04, 0.0, 0.97) > 0.0);
    }

    #[test]
    fn delta_ceiling_values() {
        assert_abs_diff_eq!(delta_ceiling(1), (1.0 - FRAC_1_SQRT_2).sqrt(), epsilon = 0.0);
        for n in 1..=12 {
            assert_abs_diff_eq!(delta_ceiling(n), (1.0 - (-(n as f64) / 2.0).exp2()).sqrt(), epsilon = 1e-15);
        }
    }

    #[test]
    fn gamma_max_examples() {
        assert_eq!(gamma_max(1, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(gamma_max(1, delta_ceiling(1)).unwrap(), 1.0, epsilon = 1e-12);
        let expected = 2.0 * 0.99 * (1.0f64 - 0.9801).sqrt();
        assert_abs_diff_eq!(gamma_max(1, 0.1).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.279_313_372_397_384_7, epsilon = 1e-15);
        match gamma_max(1, 0.6) {
            Err(Error::OutOfRegime { ceiling, n: 1, .. }) => {
                assert_abs_diff_eq!(ceiling, 0.541196, epsilon = 1e-6)
            }
            other => panic!("expected out-of-regime, got {other:?}"),
        }
        assert!(gamma_max(1, -0.1).is_err());
        assert!(gamma_max(0, 0.1).is_err());
    }

    #[test]
    fn gamma_max_strictly_increasing() {
        for n in 1..=10 {
            let top = delta_ceiling(n);
            let mut last = gamma_max(n, 0.0).unwrap();
            for k in 1..500 {
                let g = gamma_max(n, top * k as f64 / 500.0).unwrap();
                assert!(g > last, "n={n} k={k}");
                last = g;
            }
        }
    }

    #[test]
    fn verdict_examples() {
        let v = verdict(1, 0.1, 0.0, 0.0, 1.0).unwrap();
        assert!(v.reproducible);
        assert_eq!(v.margin, v.gamma_max);

        let v = verdict(1, 0.01, 0.04, 0.0, 0.97).unwrap();
        assert_abs_diff_eq!(v.gamma_max, 0.02828, epsilon = 1e-5);
        assert!(!v.reproducible);
        assert!(v.margin < 0.0);

        let v = verdict(1, 0.05, 0.04, 0.0, 0.97).unwrap();
        assert!(v.gamma_max > 0.14 && v.reproducible);

        assert!(matches!(verdict(1, 0.9, 0.0, 0.0, 1.0), Err(Error::OutOfRegime { .. })));
        // tie counts as reproducible
        let gmax = gamma_max(1, 0.2).unwrap();
        assert!(verdict_from_gamma(1, 0.2, gmax).unwrap().reproducible);
    }

    #[test]
    fn min_delta_examples() {
        assert_eq!(min_delta(1, 0.0), 0.0);
        assert_eq!(min_delta(2, 0.1), 0.05);
        assert_abs_diff_eq!(min_delta(1, 0.04), 0.014142, epsilon = 1e-6);
    }

    #[test]
    fn small_delta_first_order_agreement() {
        for n in 1..=10u32 {
            for k in 1..=50 {
                let delta = 0.05 * k as f64 / 50.0;
                let exact = gamma_max(n, delta).unwrap();
                // γ at which min_delta(n, γ) = δ
                let first_order = delta / min_delta(n, 1.0);
                assert!(((exact - first_order) / first_order).abs() < 0.05);
            }
        }
    }

    #[test]
    fn exact_hellinger_examples() {
        assert_eq!(exact_hellinger_1q(0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(exact_hellinger_1q(1.0).unwrap(), (1.0 - 2f64.sqrt() / 2.0).sqrt(), epsilon = 1e-15);
        let ideal = uniform_ideal(1).unwrap();
        for g in [0.04, -0.3, 0.77, 1.0, -1.0] {
            let general = hellinger(&ideal, &product_noisy(&GammaVector::new(vec![g]).unwrap()).unwrap()).unwrap();
            assert_abs_diff_eq!(exact_hellinger_1q(g).unwrap(), general, epsilon = 1e-12);
        }
        assert!(exact_hellinger_1q(1.5).is_err());
    }

    #[test]
    fn lemma_grid_has_no_counterexamples() {
        let report = lemma_a1_check(&default_delta_grid(100), &default_gamma_grid(100)).unwrap();
        assert_eq!(report.pairs_checked, 10_000);
        assert!(report.holds(), "{:?}", report.counterexamples.first());
        assert!(report.boundary_pairs >= 1);
    }

    #[test]
    fn lemma_rejects_out_of_regime_and_bad_gamma() {
        assert!(matches!(lemma_a1_check(&[0.6], &[0.5]), Err(Error::OutOfRegime { .. })));
        assert!(lemma_a1_check(&[0.1], &[1.2]).is_err());
    }

    #[test]
    fn lemma_report_json_shape() {
        let report = lemma_a1_check(&[0.1, 0.2], &[0.0, 0.5, 1.0]).unwrap();
        let json: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(json["pairs_checked"], 6);
        assert_eq!(json["n"], 1);
        assert!(json["counterexamples"].as_array().unwrap().is_empty());
    }

    #[test]
    fn multi_qubit_gamma_test_is_exact() {
        for n in 2..=6u32 {
            let ideal = uniform_ideal(n).unwrap();
            let top = delta_ceiling(n);
            for i in 1..=20 {
                let delta = top * i as f64 / 20.0;
                let gmax = gamma_max(n, delta).unwrap();
                for j in 0..=40 {
                    let g = j as f64 / 40.0;
                    let gv = GammaVector::uniform(n as usize, g).unwrap();
                    let d = hellinger(&ideal, &product_noisy(&gv).unwrap()).unwrap();
                    let bc = crate::distance::bc_uniform_closed_form(&gv);
                    if (g - gmax).abs() <= 1e-9 || (d - delta).abs() <= 1e-9 {
                        continue;
                    }
                    assert_eq!(1.0 - bc <= delta * delta, d <= delta, "n={n} δ={delta} γ={g}");
                    assert_eq!(g <= gmax, d <= delta, "n={n} δ={delta} γ={g}");
                }
            }
        }
    }

    #[test]
    fn normal_quantile_matches_reference() {
        let reference = Normal::standard();
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let z = normal_quantile(p).unwrap();
            assert_abs_diff_eq!(z, reference.inverse_cdf(p), epsilon = 1e-8);
        }
        for p in [1e-10, 1e-6, 0.001, 0.999, 1.0 - 1e-6] {
            assert_abs_diff_eq!(normal_quantile(p).unwrap(), reference.inverse_cdf(p), epsilon = 1e-8);
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn plan_samples_examples() {
        let plan = plan_samples(0.5, 0.01, 0.05).unwrap();
        assert_abs_diff_eq!(plan.z, 1.959_963_985, epsilon = 1e-8);
        // (1/0.5 - 1) · 1.959964² / 0.01² = 38414.59
        assert_eq!(plan.shots, 38415);
        assert_eq!(plan_samples(0.5, 0.02, 0.05).unwrap().shots, 9604);

        let t8 = plan_samples((-8f64).exp2(), 0.01, 0.05).unwrap().shots as f64;
        let t4 = plan_samples((-4f64).exp2(), 0.01, 0.05).unwrap().shots as f64;
        assert_abs_diff_eq!(t8 / t4, 255.0 / 15.0, epsilon = 1e-3);

        assert_eq!(plan_samples(0.5, 0.5, 1.0 - 1e-9).unwrap().shots, 1);
        assert!(plan_samples(0.0, 0.01, 0.05).is_err());
        assert!(plan_samples(1.0, 0.01, 0.05).is_err());
        assert!(plan_samples(0.5, 0.01, 1.0).is_err());
    }
}
