//! Distributions over n-bit outcomes and the two statistics used to compare
//! them: the Bhattacharyya coefficient and the Hellinger distance.
//!
//! # Bit order
//!
//! Outcome index `s` encodes the bitstring `(s_{n-1} ... s_1 s_0)` as
//! `s = Σ 2^i s_i`, i.e. qubit `i` is bit `i` of the index and qubit 0 is the
//! least significant bit. Bitstrings written as text are read with the
//! highest qubit first, so `"01"` means qubit 1 reads 0 and qubit 0 reads 1
//! (index 1). Vendors disagree on this; everything in this crate uses the
//! convention above.

use log::debug;

use crate::error::{Error, Result};
use crate::sampler::ShotBlock;

/// Largest register held as a dense probability vector (2^20 entries).
pub const MAX_QUBITS: u32 = 20;

const SUM_TOLERANCE: f64 = 1e-9;

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Probability vector over the `2^n` outcomes of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    n: u32,
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(n: u32, probs: Vec<f64>) -> Result<Self> {
        check_qubits(n)?;
        let expected = 1usize << n;
        if probs.len() != expected {
            return Err(Error::Shape(format!(
                "{} probabilities for n={n}, expected {expected}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::param(
                "probs",
                format!("entry {i} is {p}, must be finite and non-negative"),
            ));
        }
        let total = compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::param("probs", format!("sum is {total}, not 1")));
        }
        Ok(Self { n, probs })
    }

    /// Two-outcome distribution `(Pr(0), Pr(1))`.
    pub fn binary(p0: f64, p1: f64) -> Result<Self> {
        Self::new(1, vec![p0, p1])
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_qubits(n: u32) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "n={n} qubits is outside the supported range 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Per-register composite noise parameters `γ_i`, one per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaVector(Vec<f64>);

impl GammaVector {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::EmptyData("gamma vector has no entries".into()));
        }
        if let Some((i, g)) = gammas
            .iter()
            .enumerate()
            .find(|(_, g)| !g.is_finite() || g.abs() > 1.0)
        {
            return Err(Error::param(
                "gammas",
                format!("entry {i} is {g}, must lie in [-1, 1]"),
            ));
        }
        Ok(Self(gammas))
    }

    /// `n` copies of the same `γ`.
    pub fn uniform(n: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Output distribution of the ideal `H^{⊗n}` circuit: every outcome `2^-n`.
pub fn uniform_ideal(n: u32) -> Result<Distribution> {
    check_qubits(n)?;
    let size = 1usize << n;
    Ok(Distribution {
        n,
        probs: vec![(-(n as f64)).exp2(); size],
    })
}

/// Noisy output distribution in the absence of cross-talk: a product of
/// per-qubit `((1+γ_i)/2, (1-γ_i)/2)` pairs.
pub fn product_noisy(gammas: &GammaVector) -> Result<Distribution> {
    let n = u32::try_from(gammas.len())
        .map_err(|_| Error::Capacity("gamma vector too long".into()))?;
    check_qubits(n)?;
    let mut probs = Vec::with_capacity(1usize << n);
    probs.push(1.0);
    for &g in gammas.as_slice() {
        let zero = (1.0 + g) / 2.0;
        let one = (1.0 - g) / 2.0;
        // qubit i becomes bit i: the new high half is the s_i = 1 branch
        let lower: Vec<f64> = probs.iter().map(|p| p * zero).collect();
        let upper: Vec<f64> = probs.iter().map(|p| p * one).collect();
        probs = lower;
        probs.extend(upper);
    }
    Ok(Distribution { n, probs })
}

/// `BC(p, q) = Σ √(p_i q_i)`, clamped to `[0, 1]`.
pub fn bhattacharyya(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::Shape(format!(
            "distributions over {} and {} qubits",
            p.n, q.n
        )));
    }
    let raw = compensated_sum(
        p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a * b).sqrt()),
    );
    let bc = raw.clamp(0.0, 1.0);
    if bc != raw {
        debug!("bhattacharyya coefficient {raw:e} clamped to {bc}");
    }
    Ok(bc)
}

/// `d(p, q) = √(1 - BC(p, q))`.
///
/// Evaluated as `√(½ Σ (√p_i - √q_i)²)`, which equals `1 - BC` for normalized
/// inputs but stays exactly zero for identical distributions instead of
/// picking up `√(ulp)` noise from `1 - BC`.
pub fn hellinger(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::Shape(format!(
            "distributions over {} and {} qubits",
            p.n, q.n
        )));
    }
    let half_sq = 0.5
        * compensated_sum(p.probs.iter().zip(&q.probs).map(|(a, b)| {
            let diff = a.sqrt() - b.sqrt();
            diff * diff
        }));
    let clamped = half_sq.clamp(0.0, 1.0);
    if clamped != half_sq {
        debug!("squared hellinger distance {half_sq:e} clamped to {clamped}");
    }
    Ok(clamped.sqrt())
}

/// Closed form of `BC(uniform_ideal(n), product_noisy(γ))`:
/// `∏_i (√(1+γ_i) + √(1-γ_i)) / 2`. With identical `γ_i = γ` this is the
/// binomial collapse `((√(1+γ) + √(1-γ)) / 2)^n`.
pub fn bc_uniform_closed_form(gammas: &GammaVector) -> f64 {
    gammas
        .as_slice()
        .iter()
        .map(|g| ((1.0 + g).sqrt() + (1.0 - g).sqrt()) / 2.0)
        .product()
}

/// Histogram of outcome indices; `outcomes` are already-encoded `s` values.
pub fn empirical_from_outcomes(outcomes: &[u64], n: u32) -> Result<Distribution> {
    check_qubits(n)?;
    if outcomes.is_empty() {
        return Err(Error::EmptyData("no shots".into()));
    }
    let size = 1usize << n;
    let mut counts = vec![0u64; size];
    for &s in outcomes {
        let idx = usize::try_from(s)
            .ok()
            .filter(|i| *i < size)
            .ok_or_else(|| Error::Shape(format!("outcome {s} does not fit in {n} bits")))?;
        counts[idx] += 1;
    }
    Ok(from_counts(n, &counts, outcomes.len() as u64))
}

/// Histogram of textual bitstrings written highest qubit first (`"01"` is
/// qubit 1 = 0, qubit 0 = 1).
pub fn empirical_from_bitstrings<S: AsRef<str>>(shots: &[S], n: u32) -> Result<Distribution> {
    let outcomes = shots
        .iter()
        .map(|s| {
            let s = s.as_ref();
            if s.len() != n as usize {
                return Err(Error::Shape(format!("bitstring {s:?} does not have {n} bits")));
            }
            s.chars().try_fold(0u64, |acc, c| match c {
                '0' => Ok(acc << 1),
                '1' => Ok((acc << 1) | 1),
                other => Err(Error::Shape(format!("invalid bit {other:?} in {s:?}"))),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    empirical_from_outcomes(&outcomes, n)
}

/// Joint histogram over `n` qubits from one [`ShotBlock`] per qubit. Block
/// `i` supplies bit `i` of each shot; all blocks must hold the same number
/// of shots.
pub fn empirical_distribution(blocks: &[ShotBlock], n: u32) -> Result<Distribution> {
    check_qubits(n)?;
    if blocks.len() != n as usize {
        return Err(Error::Shape(format!(
            "{} shot blocks for n={n} qubits",
            blocks.len()
        )));
    }
    let shots = blocks[0].shots();
    if shots == 0 {
        return Err(Error::EmptyData("shot blocks are empty".into()));
    }
    if let Some(b) = blocks.iter().find(|b| b.shots() != shots) {
        return Err(Error::Shape(format!(
            "block for qubit {} has {} shots, expected {shots}",
            b.id.qubit,
            b.shots()
        )));
    }
    let mut counts = vec![0u64; 1usize << n];
    for s in 0..shots {
        let idx = blocks
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, b)| acc | (usize::from(b.bits.get(s)) << i));
        counts[idx] += 1;
    }
    Ok(from_counts(n, &counts, shots as u64))
}

fn from_counts(n: u32, counts: &[u64], total: u64) -> Distribution {
    let total = total as f64;
    Distribution {
        n,
        probs: counts.iter().map(|&c| c as f64 / total).collect(),
    }
}
