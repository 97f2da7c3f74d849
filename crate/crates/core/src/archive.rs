//! Run archives and their on-disk layout.
//!
//! ```text
//! <run-dir>/
//!   manifest.json                 plan, seed, toolkit version, UTC timestamps
//!   counts.csv                    kind,qubit,experiment,ones,shots
//!   blocks/<kind>_<q>_<l>.bin     u64 LE shot count, then packed bits
//! ```
//!
//! The manifest is written first with `complete: false` and rewritten with
//! `complete: true` only after every block and `counts.csv` are on disk, so
//! an interrupted run leaves a partial-run marker behind.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{run_blocks, BlockId, CircuitKind, DriftHook, ExperimentPlan, PackedBits, ShotBlock};

pub const RUN_SCHEMA: &str = "repro-bound/run/v1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const COUNTS_FILE: &str = "counts.csv";
pub const BLOCKS_DIR: &str = "blocks";

/// Provenance of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub toolkit_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
    pub seed: u64,
    pub plan: ExperimentPlan,
    pub block_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<String>,
    pub started_utc: String,
    #[serde(default)]
    pub finished_utc: Option<String>,
    pub complete: bool,
}

/// All blocks of one simulated (or recorded) plan.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArchive {
    pub plan: ExperimentPlan,
    pub blocks: Vec<ShotBlock>,
    pub manifest: Manifest,
}

fn now_utc() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunArchive {
    pub fn block(&self, id: BlockId) -> Option<&ShotBlock> {
        self.blocks.iter().find(|b| b.id == id)
    }

    /// Blocks of one qubit and kind, ordered by experiment.
    pub fn series(&self, qubit: usize, kind: CircuitKind) -> Vec<&ShotBlock> {
        let mut out: Vec<_> = self
            .blocks
            .iter()
            .filter(|b| b.id.qubit == qubit && b.id.kind == kind)
            .collect();
        out.sort_by_key(|b| b.id.experiment);
        out
    }

    pub fn total_bits(&self) -> usize {
        self.blocks.iter().map(ShotBlock::shots).sum()
    }
}

/// Simulate `plan` into an in-memory archive.
pub fn run_plan(plan: &ExperimentPlan) -> Result<RunArchive> {
    run_plan_with(plan, None, None)
}

pub fn run_plan_with(
    plan: &ExperimentPlan,
    device: Option<&str>,
    drift: Option<(&dyn DriftHook, String)>,
) -> Result<RunArchive> {
    let started = now_utc();
    let (hook, drift_label) = match drift {
        Some((hook, label)) => (Some(hook), Some(label)),
        None => (None, None),
    };
    let blocks = run_blocks(plan, hook)?;
    let manifest = Manifest {
        schema: RUN_SCHEMA.to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        device: device.map(str::to_string),
        seed: plan.seed,
        plan: plan.clone(),
        block_count: blocks.len(),
        drift: drift_label,
        started_utc: started,
        finished_utc: Some(now_utc()),
        complete: true,
    };
    Ok(RunArchive {
        plan: plan.clone(),
        blocks,
        manifest,
    })
}

fn block_path(dir: &Path, id: BlockId) -> PathBuf {
    dir.join(BLOCKS_DIR).join(format!("{}.bin", id.file_stem()))
}

fn encode_block(block: &ShotBlock) -> Vec<u8> {
    let mut buf = Vec::with_capacity(8 + block.bits.as_bytes().len());
    buf.extend_from_slice(&(block.shots() as u64).to_le_bytes());
    buf.extend_from_slice(block.bits.as_bytes());
    buf
}

fn decode_block(id: BlockId, raw: &[u8], expected_shots: usize) -> std::result::Result<ShotBlock, String> {
    let header: [u8; 8] = raw
        .get(..8)
        .and_then(|h| h.try_into().ok())
        .ok_or_else(|| "missing length header".to_string())?;
    let shots = u64::from_le_bytes(header) as usize;
    if shots != expected_shots {
        return Err(format!("header says {shots} shots, plan says {expected_shots}"));
    }
    let bits = PackedBits::from_bytes(shots, raw[8..].to_vec()).map_err(|e| e.to_string())?;
    Ok(ShotBlock { id, bits })
}

fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).map_err(|e| Error::format("manifest", e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

/// `counts.csv` content for a set of blocks, in archive order.
pub fn counts_csv(blocks: &[ShotBlock]) -> String {
    let mut out = String::from("kind,qubit,experiment,ones,shots\n");
    for b in blocks {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            b.id.kind,
            b.id.qubit,
            b.id.experiment,
            b.ones(),
            b.shots()
        ));
    }
    out
}

/// Persist an archive as a run directory.
pub fn write_run_dir(archive: &RunArchive, dir: &Path) -> Result<()> {
    let blocks_dir = dir.join(BLOCKS_DIR);
    fs::create_dir_all(&blocks_dir).map_err(|e| Error::io(&blocks_dir, e))?;

    let mut pending = archive.manifest.clone();
    pending.complete = false;
    pending.finished_utc = None;
    write_manifest(dir, &pending)?;

    archive.blocks.par_iter().try_for_each(|b| {
        let path = block_path(dir, b.id);
        let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        file.write_all(&encode_block(b)).map_err(|e| Error::io(&path, e))
    })?;

    let counts = dir.join(COUNTS_FILE);
    fs::write(&counts, counts_csv(&archive.blocks)).map_err(|e| Error::io(&counts, e))?;

    let mut done = archive.manifest.clone();
    done.complete = true;
    done.finished_utc = Some(now_utc());
    write_manifest(dir, &done)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::IncompleteArchive {
                dir: dir.to_path_buf(),
                missing: vec![MANIFEST_FILE.to_string()],
            })
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::format(MANIFEST_FILE, e))?;
    if manifest.schema != RUN_SCHEMA {
        return Err(Error::format(
            MANIFEST_FILE,
            format!("unsupported schema {:?}, expected {RUN_SCHEMA:?}", manifest.schema),
        ));
    }
    Ok(manifest)
}

/// Load a run directory, verifying that every planned block is present and
/// intact. Missing or damaged blocks are reported together.
pub fn read_run_dir(dir: &Path) -> Result<RunArchive> {
    let manifest = read_manifest(dir)?;
    let plan = manifest.plan.clone();
    plan.validate()?;
    let ids = plan.block_ids();
    let loaded: Vec<std::result::Result<ShotBlock, String>> = ids
        .par_iter()
        .map(|&id| {
            let path = block_path(dir, id);
            let raw = fs::read(&path).map_err(|e| format!("{}: {e}", id.file_stem()))?;
            decode_block(id, &raw, plan.shots).map_err(|e| format!("{}: {e}", id.file_stem()))
        })
        .collect();

    let mut missing = Vec::new();
    if !manifest.complete {
        missing.push(format!("{MANIFEST_FILE}: partial-run marker set"));
    }
    let mut blocks = Vec::with_capacity(ids.len());
    for r in loaded {
        match r {
            Ok(b) => blocks.push(b),
            Err(reason) => missing.push(reason),
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteArchive {
            dir: dir.to_path_buf(),
            missing,
        });
    }
    Ok(RunArchive {
        plan,
        blocks,
        manifest,
    })
}

/// One row of `counts.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRow {
    pub kind: CircuitKind,
    pub qubit: usize,
    pub experiment: usize,
    pub ones: u64,
    pub shots: u64,
}

pub fn read_counts(dir: &Path) -> Result<Vec<CountRow>> {
    let path = dir.join(COUNTS_FILE);
    if !path.exists() {
        return Err(Error::IncompleteArchive {
            dir: dir.to_path_buf(),
            missing: vec![COUNTS_FILE.to_string()],
        });
    }
    let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::format(COUNTS_FILE, e))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<CountRow>, _>>()
        .map_err(|e| Error::format(COUNTS_FILE, e))
}

/// Per-qubit, per-kind count series ordered by experiment.
pub fn group_counts(rows: &[CountRow]) -> BTreeMap<(usize, CircuitKind), Vec<CountRow>> {
    let mut map: BTreeMap<(usize, CircuitKind), Vec<CountRow>> = BTreeMap::new();
    for r in rows {
        map.entry((r.qubit, r.kind)).or_default().push(*r);
    }
    for series in map.values_mut() {
        series.sort_by_key(|r| r.experiment);
    }
    map
}
