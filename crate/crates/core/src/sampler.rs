//! Monte Carlo emulation of the characterization protocol: `L` experiments of
//! `S` shots for each of the SPAM(0), SPAM(1) and `H` circuits on every qubit.
//!
//! Every block draws from its own ChaCha8 stream. The key is the master seed
//! and the stream id packs `(kind, qubit, experiment)`, so a block's bits do
//! not depend on scheduling or on any other block.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Bernoulli, Distribution as _};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{observed_probs, QubitNoiseParams, ThetaRegion};

const QUBIT_BITS: u32 = 22;
const EXPERIMENT_BITS: u32 = 40;
const DRIFT_TAG: u64 = 3;

/// Which of the three per-qubit circuits produced a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CircuitKind {
    /// Prepare `|0⟩`, measure.
    #[serde(rename = "spam0")]
    Spam0,
    /// Prepare `|1⟩`, measure.
    #[serde(rename = "spam1")]
    Spam1,
    /// Prepare `|0⟩`, apply the (noisy) Hadamard, measure.
    #[serde(rename = "c")]
    Circuit,
}

impl CircuitKind {
    pub const ALL: [CircuitKind; 3] = [CircuitKind::Spam0, CircuitKind::Spam1, CircuitKind::Circuit];

    pub fn as_str(&self) -> &'static str {
        match self {
            CircuitKind::Spam0 => "spam0",
            CircuitKind::Spam1 => "spam1",
            CircuitKind::Circuit => "c",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            CircuitKind::Spam0 => 0,
            CircuitKind::Spam1 => 1,
            CircuitKind::Circuit => 2,
        }
    }
}

impl fmt::Display for CircuitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CircuitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spam0" => Ok(CircuitKind::Spam0),
            "spam1" => Ok(CircuitKind::Spam1),
            "c" => Ok(CircuitKind::Circuit),
            other => Err(Error::format("circuit kind", format!("unknown kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId {
    pub kind: CircuitKind,
    pub qubit: usize,
    pub experiment: usize,
}

impl BlockId {
    /// `<kind>_<qubit>_<experiment>`, the block's file stem in a run directory.
    pub fn file_stem(&self) -> String {
        format!("{}_{}_{}", self.kind, self.qubit, self.experiment)
    }
}

/// Shot outcomes packed eight per byte; shot `s` is bit `s % 8` of byte `s / 8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedBits {
    len: usize,
    ones: u64,
    bytes: Vec<u8>,
}

impl PackedBits {
    pub fn from_bools(bits: &[bool]) -> Self {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (s, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
            bytes[s / 8] |= 1 << (s % 8);
        }
        Self {
            len: bits.len(),
            ones: bits.iter().filter(|b| **b).count() as u64,
            bytes,
        }
    }

    /// Rebuild from packed storage. Padding bits past `len` must be zero.
    pub fn from_bytes(len: usize, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(Error::format(
                "packed bits",
                format!("{} bytes cannot hold exactly {len} shots", bytes.len()),
            ));
        }
        if !len.is_multiple_of(8) {
            let last = bytes[bytes.len() - 1];
            if last >> (len % 8) != 0 {
                return Err(Error::format("packed bits", "non-zero padding bits"));
            }
        }
        let ones = bytes.iter().map(|b| u64::from(b.count_ones())).sum();
        Ok(Self { len, ones, bytes })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> u64 {
        self.ones
    }

    pub fn get(&self, shot: usize) -> bool {
        assert!(shot < self.len, "shot {shot} out of range {}", self.len);
        self.bytes[shot / 8] >> (shot % 8) & 1 == 1
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |s| self.get(s))
    }
}

/// `S` binary outcomes for one (circuit kind, qubit, experiment) triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotBlock {
    pub id: BlockId,
    pub bits: PackedBits,
}

impl ShotBlock {
    pub fn shots(&self) -> usize {
        self.bits.len()
    }

    pub fn ones(&self) -> u64 {
        self.bits.ones()
    }
}

/// One qubit of an experiment plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedQubit {
    pub index: usize,
    #[serde(flatten)]
    pub params: QubitNoiseParams,
}

/// `L` experiments of `S` shots on each listed qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub experiments: usize,
    pub shots: usize,
    pub qubits: Vec<PlannedQubit>,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.experiments < 2 {
            return Err(Error::param(
                "experiments",
                format!("L={} but at least 2 experiments are needed", self.experiments),
            ));
        }
        if self.experiments as u64 >= 1 << EXPERIMENT_BITS {
            return Err(Error::param("experiments", "too many experiments"));
        }
        if self.shots == 0 {
            return Err(Error::param("shots", "S must be at least 1"));
        }
        if self.qubits.is_empty() {
            return Err(Error::param("qubits", "plan has no qubits"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for q in &self.qubits {
            if q.index as u64 >= 1 << QUBIT_BITS {
                return Err(Error::param("qubits", format!("qubit index {} too large", q.index)));
            }
            if !seen.insert(q.index) {
                return Err(Error::param("qubits", format!("duplicate qubit index {}", q.index)));
            }
            q.params.validate(ThetaRegion::closed())?;
        }
        Ok(())
    }

    /// Block ids in archive order: qubit, then kind, then experiment.
    pub fn block_ids(&self) -> Vec<BlockId> {
        let mut ids = Vec::with_capacity(3 * self.experiments * self.qubits.len());
        for q in &self.qubits {
            for kind in CircuitKind::ALL {
                for experiment in 0..self.experiments {
                    ids.push(BlockId {
                        kind,
                        qubit: q.index,
                        experiment,
                    });
                }
            }
        }
        ids
    }

    pub fn params_for(&self, qubit: usize) -> Option<QubitNoiseParams> {
        self.qubits.iter().find(|q| q.index == qubit).map(|q| q.params)
    }
}

fn stream_id(tag: u64, qubit: usize, experiment: usize) -> u64 {
    (tag << (QUBIT_BITS + EXPERIMENT_BITS))
        | ((qubit as u64) << EXPERIMENT_BITS)
        | experiment as u64
}

/// The independent random stream of one block.
pub fn block_stream(seed: u64, id: BlockId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(id.kind.tag(), id.qubit, id.experiment));
    rng
}

fn drift_stream(seed: u64, qubit: usize, experiment: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(DRIFT_TAG, qubit, experiment));
    rng
}

fn bernoulli_bits<R: Rng + ?Sized>(p_one: f64, shots: usize, rng: &mut R) -> PackedBits {
    let dist = Bernoulli::new(p_one.clamp(0.0, 1.0)).expect("probability clamped to [0, 1]");
    let mut bytes = vec![0u8; shots.div_ceil(8)];
    let mut ones = 0u64;
    for s in 0..shots {
        if dist.sample(rng) {
            bytes[s / 8] |= 1 << (s % 8);
            ones += 1;
        }
    }
    PackedBits {
        len: shots,
        ones,
        bytes,
    }
}

/// SPAM(0): each shot reads 1 with probability `1 - f0`.
pub fn run_spam0<R: Rng + ?Sized>(params: &QubitNoiseParams, shots: usize, rng: &mut R) -> PackedBits {
    bernoulli_bits(1.0 - params.f0, shots, rng)
}

/// SPAM(1): each shot reads 1 with probability `f1`.
pub fn run_spam1<R: Rng + ?Sized>(params: &QubitNoiseParams, shots: usize, rng: &mut R) -> PackedBits {
    bernoulli_bits(params.f1, shots, rng)
}

/// Noisy `H` circuit: each shot reads 0 with probability `(1 + γ)/2`.
pub fn run_circuit_c<R: Rng + ?Sized>(
    params: &QubitNoiseParams,
    shots: usize,
    rng: &mut R,
) -> PackedBits {
    let p = observed_probs(params).expect("valid params give a valid distribution");
    bernoulli_bits(p.prob(1), shots, rng)
}

/// Simulate one block from its own stream.
pub fn sample_block(seed: u64, id: BlockId, params: &QubitNoiseParams, shots: usize) -> ShotBlock {
    let mut rng = block_stream(seed, id);
    let bits = match id.kind {
        CircuitKind::Spam0 => run_spam0(params, shots, &mut rng),
        CircuitKind::Spam1 => run_spam1(params, shots, &mut rng),
        CircuitKind::Circuit => run_circuit_c(params, shots, &mut rng),
    };
    ShotBlock { id, bits }
}

/// Per-experiment perturbation of a qubit's parameters.
pub trait DriftHook: Sync {
    fn perturb(&self, qubit: usize, experiment: usize, base: &QubitNoiseParams) -> QubitNoiseParams;
}

/// Uniform jitter of `f0`, `f1` (by up to `fidelity`) and `θ` (by up to
/// `theta` radians), drawn from a dedicated stream per (qubit, experiment).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDrift {
    pub seed: u64,
    pub fidelity: f64,
    pub theta: f64,
}

impl DriftHook for UniformDrift {
    fn perturb(&self, qubit: usize, experiment: usize, base: &QubitNoiseParams) -> QubitNoiseParams {
        let mut rng = drift_stream(self.seed, qubit, experiment);
        let mut jitter = |amp: f64| if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 };
        let limit = std::f64::consts::FRAC_PI_4;
        QubitNoiseParams {
            f0: (base.f0 + jitter(self.fidelity)).clamp(0.0, 1.0),
            f1: (base.f1 + jitter(self.fidelity)).clamp(0.0, 1.0),
            theta: (base.theta + jitter(self.theta)).clamp(-limit, limit),
        }
    }
}

/// Run every block of `plan`. Blocks are simulated in parallel on the
/// current rayon pool; the result is identical for any thread count.
pub fn run_blocks(plan: &ExperimentPlan, drift: Option<&dyn DriftHook>) -> Result<Vec<ShotBlock>> {
    plan.validate()?;
    let blocks = plan
        .block_ids()
        .into_par_iter()
        .map(|id| {
            let base = plan.params_for(id.qubit).expect("id built from plan");
            let params = match drift {
                Some(hook) => hook.perturb(id.qubit, id.experiment, &base),
                None => base,
            };
            sample_block(plan.seed, id, &params, plan.shots)
        })
        .collect();
    Ok(blocks)
}
