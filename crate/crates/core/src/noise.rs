//! Single-qubit noise primitives for the `H` circuit: the noisy Hadamard
//! with gate-angle error `θ`, the control-error rotation, and the asymmetric
//! readout channel in both its classical (matrix) and Kraus forms.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distance::Distribution;
use crate::error::{Error, Result};

/// Real 2×2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

/// Complex 2×2 matrix, row-major.
pub type DensityMatrix = [[Complex64; 2]; 2];

const DENSITY_TOLERANCE: f64 = 1e-10;
const NORM_TOLERANCE: f64 = 1e-12;

/// Admissible range for the gate-angle error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaRegion {
    pub max_abs: f64,
    pub inclusive: bool,
}

impl Default for ThetaRegion {
    /// `|θ| < π/4`, where `sin 2θ` is injective and `θ` can be recovered.
    fn default() -> Self {
        Self {
            max_abs: FRAC_PI_4,
            inclusive: false,
        }
    }
}

impl ThetaRegion {
    /// `|θ| ≤ π/4`, admitting the fully rotated boundary case.
    pub fn closed() -> Self {
        Self {
            max_abs: FRAC_PI_4,
            inclusive: true,
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        if self.inclusive {
            theta.abs() <= self.max_abs
        } else {
            theta.abs() < self.max_abs
        }
    }
}

/// Ground-truth noise of one register element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitNoiseParams {
    /// Probability of reading 0 after preparing `|0⟩`.
    pub f0: f64,
    /// Probability of reading 1 after preparing `|1⟩`.
    pub f1: f64,
    /// Hadamard implementation error in radians.
    pub theta: f64,
}

impl QubitNoiseParams {
    pub fn new(f0: f64, f1: f64, theta: f64) -> Result<Self> {
        Self::with_region(f0, f1, theta, ThetaRegion::default())
    }

    pub fn with_region(f0: f64, f1: f64, theta: f64, region: ThetaRegion) -> Result<Self> {
        check_fidelity("f0", f0)?;
        check_fidelity("f1", f1)?;
        check_finite("theta", theta)?;
        if !region.contains(theta) {
            return Err(Error::param(
                "theta",
                format!(
                    "{theta} rad is outside |θ| {} {}",
                    if region.inclusive { "≤" } else { "<" },
                    region.max_abs
                ),
            ));
        }
        Ok(Self { f0, f1, theta })
    }

    /// A noiseless device.
    pub fn perfect() -> Self {
        Self {
            f0: 1.0,
            f1: 1.0,
            theta: 0.0,
        }
    }

    /// Re-check the invariants, e.g. after deserialization.
    pub fn validate(&self, region: ThetaRegion) -> Result<()> {
        Self::with_region(self.f0, self.f1, self.theta, region).map(|_| ())
    }

    pub fn derived(&self) -> DerivedReadout {
        DerivedReadout::from_fidelities(self.f0, self.f1)
    }
}

/// Average readout fidelity and readout asymmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedReadout {
    pub f: f64,
    pub eps: f64,
}

impl DerivedReadout {
    pub fn from_fidelities(f0: f64, f1: f64) -> Self {
        Self {
            f: (f0 + f1) / 2.0,
            eps: f0 - f1,
        }
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} is not finite")))
    }
}

fn check_fidelity(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{value} is outside [0, 1]")))
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Ideal Hadamard `(1/√2)[[1, 1], [1, -1]]`.
pub fn hadamard() -> Mat2 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[h, h], [h, -h]]
}

/// Hadamard implemented with angle error `θ`:
/// `[[cos(π/4+θ), sin(π/4+θ)], [sin(π/4+θ), -cos(π/4+θ)]]`.
pub fn noisy_hadamard(theta: f64) -> Result<Mat2> {
    check_finite("theta", theta)?;
    let (s, c) = (FRAC_PI_4 + theta).sin_cos();
    Ok([[c, s], [s, -c]])
}

/// Unitary control error `E = H̃(θ) Hᵀ`, a rotation by `θ`.
pub fn control_error_operator(theta: f64) -> Result<Mat2> {
    check_finite("theta", theta)?;
    let (s, c) = theta.sin_cos();
    Ok([[c, -s], [s, c]])
}

/// Outcome probabilities of `H̃(θ)|0⟩` before readout:
/// `((1 - sin 2θ)/2, (1 + sin 2θ)/2)`.
pub fn pre_readout_probs(theta: f64) -> Result<Distribution> {
    check_finite("theta", theta)?;
    let s = (2.0 * theta).sin();
    Distribution::binary((1.0 - s) / 2.0, (1.0 + s) / 2.0)
}

/// Column-stochastic readout channel; entry `(i, j)` is the probability of
/// reading `i` when the channel input is `|j⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutMatrix(Mat2);

impl ReadoutMatrix {
    pub fn entries(&self) -> &Mat2 {
        &self.0
    }

    /// `P_obs = Λ P_true` for a single-qubit distribution.
    pub fn apply(&self, p_true: &Distribution) -> Result<Distribution> {
        if p_true.n() != 1 {
            return Err(Error::Shape(format!(
                "readout matrix acts on one qubit, got n={}",
                p_true.n()
            )));
        }
        let m = &self.0;
        let (a, b) = (p_true.prob(0), p_true.prob(1));
        Distribution::binary(m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b)
    }
}

/// `Λ = [[f0, 1 - f1], [1 - f0, f1]]`.
pub fn readout_matrix(params: &QubitNoiseParams) -> Result<ReadoutMatrix> {
    check_fidelity("f0", params.f0)?;
    check_fidelity("f1", params.f1)?;
    let (f0, f1) = (params.f0, params.f1);
    Ok(ReadoutMatrix([[f0, 1.0 - f1], [1.0 - f0, f1]]))
}

/// Composite parameter `γ = ε - 2 sin 2θ (f - ½)`.
pub fn gamma_of(params: &QubitNoiseParams) -> f64 {
    let DerivedReadout { f, eps } = params.derived();
    eps - 2.0 * (2.0 * params.theta).sin() * (f - 0.5)
}

/// Observed outcome probabilities of the noisy `H` circuit:
/// `((1 + γ)/2, (1 - γ)/2)`.
pub fn observed_probs(params: &QubitNoiseParams) -> Result<Distribution> {
    let g = gamma_of(params).clamp(-1.0, 1.0);
    Distribution::binary((1.0 + g) / 2.0, (1.0 - g) / 2.0)
}

/// Computational-basis amplitudes of one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleQubitState([Complex64; 2]);

impl SingleQubitState {
    pub fn new(a0: Complex64, a1: Complex64) -> Result<Self> {
        let norm = a0.norm_sqr() + a1.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(Self([a0, a1]))
    }

    pub fn zero() -> Self {
        Self([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.0
    }

    /// Apply a real (orthogonal) gate.
    pub fn apply(&self, gate: &Mat2) -> Result<Self> {
        let [a0, a1] = self.0;
        Self::new(gate[0][0] * a0 + gate[0][1] * a1, gate[1][0] * a0 + gate[1][1] * a1)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityMatrix {
        let a = self.0;
        [
            [a[0] * a[0].conj(), a[0] * a[1].conj()],
            [a[1] * a[0].conj(), a[1] * a[1].conj()],
        ]
    }
}

fn validate_density(rho: &DensityMatrix) -> Result<()> {
    if rho.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("non-finite density matrix entry".into()));
    }
    if (rho[0][1] - rho[1][0].conj()).norm() > DENSITY_TOLERANCE
        || rho[0][0].im.abs() > DENSITY_TOLERANCE
        || rho[1][1].im.abs() > DENSITY_TOLERANCE
    {
        return Err(Error::InvalidState("density matrix is not Hermitian".into()));
    }
    let trace = rho[0][0].re + rho[1][1].re;
    if (trace - 1.0).abs() > DENSITY_TOLERANCE {
        return Err(Error::InvalidState(format!("trace {trace} is not 1")));
    }
    // smallest eigenvalue of a Hermitian 2×2
    let (a, d) = (rho[0][0].re, rho[1][1].re);
    let min_eig = (trace - ((a - d).powi(2) + 4.0 * rho[0][1].norm_sqr()).sqrt()) / 2.0;
    if min_eig < -DENSITY_TOLERANCE {
        return Err(Error::InvalidState(format!(
            "density matrix has negative eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

/// Readout Kraus operators `(M0, M1)`:
/// `M0 = √f0 |0⟩⟨0| + √(1-f1) |1⟩⟨1|`, `M1 = √(1-f0) |0⟩⟨0| + √f1 |1⟩⟨1|`.
pub fn readout_kraus(params: &QubitNoiseParams) -> Result<[DensityMatrix; 2]> {
    check_fidelity("f0", params.f0)?;
    check_fidelity("f1", params.f1)?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let zero = c(0.0);
    Ok([
        [[c(params.f0.sqrt()), zero], [zero, c((1.0 - params.f1).sqrt())]],
        [[c((1.0 - params.f0).sqrt()), zero], [zero, c(params.f1.sqrt())]],
    ])
}

fn cmul(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn dagger(a: &DensityMatrix) -> DensityMatrix {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Readout statistics of a density matrix through the Kraus channel:
/// `Pr(i) = Tr{M_i† M_i ρ}`.
pub fn kraus_readout(params: &QubitNoiseParams, rho: &DensityMatrix) -> Result<Distribution> {
    validate_density(rho)?;
    let kraus = readout_kraus(params)?;
    let probs: Vec<f64> = kraus
        .iter()
        .map(|m| {
            let effect = cmul(&dagger(m), m);
            let prod = cmul(&effect, rho);
            (prod[0][0] + prod[1][1]).re.max(0.0)
        })
        .collect();
    Distribution::binary(probs[0], probs[1])
}
