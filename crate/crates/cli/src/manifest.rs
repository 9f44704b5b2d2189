//! Dataset-level corruption builds: applies a (type x severity) grid to
//! every video, writing corrupted `.fseq` files plus a manifest whose
//! FNV-1a checksums make the build verifiable byte-for-byte.
//!
//! Per-cell seeds derive from `hash(master_seed, video_id, ctype, level)`,
//! so partial rebuilds and reordering cannot change any output.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use trbench_core::corrupt::{CorruptionSpec, CorruptionType, SeverityLevel, WindowLog};
use trbench_core::hash::{fnv1a, Fnv1a};
use trbench_core::types::Dataset;

use crate::fseq;
use crate::{Error, Result};

/// One (corruption type, severity) grid cell.
pub type GridCell = (CorruptionType, SeverityLevel);

/// The full core grid: 5 corruption types x 3 severity levels.
pub fn core_grid() -> Vec<GridCell> {
    CorruptionType::CORE
        .into_iter()
        .flat_map(|c| SeverityLevel::ALL.map(|s| (c, s)))
        .collect()
}

/// Core plus the four extended types: 9 x 3 cells.
pub fn extended_grid() -> Vec<GridCell> {
    let mut grid = core_grid();
    grid.extend(
        CorruptionType::EXTENDED.into_iter().flat_map(|c| SeverityLevel::ALL.map(|s| (c, s))),
    );
    grid
}

/// Seed for one (video, cell) output.
pub fn cell_seed(master_seed: u64, video_id: &str, ctype: CorruptionType, level: u8) -> u64 {
    let mut h = Fnv1a::new();
    h.write_u64(master_seed).write_str(video_id).write_str(ctype.name()).write_u64(level as u64);
    h.finish()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestEntry {
    pub video_id: String,
    pub ctype: String,
    pub level: u8,
    /// Output path relative to the manifest location.
    pub output: String,
    pub bytes: u64,
    /// FNV-1a 64 of the file content, lowercase hex.
    pub checksum: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BuildError {
    pub video_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridCellSpec {
    pub ctype: String,
    pub level: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BenchmarkManifest {
    pub source_dataset: String,
    pub master_seed: u64,
    pub grid: Vec<GridCellSpec>,
    pub entries: Vec<ManifestEntry>,
    /// Videos that could not be processed (e.g. missing frame container);
    /// the build continues past them.
    pub errors: Vec<BuildError>,
}

fn checksum_hex(data: &[u8]) -> String {
    format!("{:016x}", fnv1a(data))
}

/// Builds the corrupted dataset: one `.fseq` per (video, grid cell) under
/// `out_dir/<ctype>_l<level>/<video_id>.fseq`, plus `manifest.json` and a
/// JSON-lines corruption log. Missing frame containers are collected as
/// errors without aborting the build.
pub fn build_benchmark(
    dataset: &Dataset,
    frames_root: &Path,
    grid: &[GridCell],
    master_seed: u64,
    out_dir: &Path,
) -> Result<BenchmarkManifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (ctype, severity) in grid {
        let dir = out_dir.join(cell_dir(*ctype, severity.level()));
        fs::create_dir_all(&dir).map_err(|e| Error::io(dir.clone(), e))?;
    }

    // Fan out over videos; each video covers its full grid row so the
    // source container is read once.
    let results: Vec<std::result::Result<(Vec<ManifestEntry>, Vec<WindowLog>), BuildError>> =
        dataset
            .videos
            .par_iter()
            .map(|video| {
                let src = frames_root.join(fseq::container_name(&video.id));
                let seq = fseq::read_file(&src).map_err(|e| BuildError {
                    video_id: video.id.clone(),
                    error: e.to_string(),
                })?;
                if seq.frame_count() != video.frame_count {
                    return Err(BuildError {
                        video_id: video.id.clone(),
                        error: format!(
                            "container has {} frames, annotations say {}",
                            seq.frame_count(),
                            video.frame_count
                        ),
                    });
                }
                let mut entries = Vec::with_capacity(grid.len());
                let mut logs = Vec::new();
                for (ctype, severity) in grid {
                    let seed = cell_seed(master_seed, &video.id, *ctype, severity.level());
                    let spec = CorruptionSpec::new(*ctype, *severity, seed);
                    let (corrupted, windows) =
                        trbench_core::corrupt::corrupt_video(video, &seq, &spec).map_err(|e| {
                            BuildError { video_id: video.id.clone(), error: e.to_string() }
                        })?;
                    let rel = format!(
                        "{}/{}",
                        cell_dir(*ctype, severity.level()),
                        fseq::container_name(&video.id)
                    );
                    let bytes = fseq::to_bytes(&corrupted);
                    let out_path = out_dir.join(&rel);
                    fs::write(&out_path, &bytes).map_err(|e| BuildError {
                        video_id: video.id.clone(),
                        error: format!("{}: {e}", out_path.display()),
                    })?;
                    entries.push(ManifestEntry {
                        video_id: video.id.clone(),
                        ctype: ctype.name().into(),
                        level: severity.level(),
                        output: rel,
                        bytes: bytes.len() as u64,
                        checksum: checksum_hex(&bytes),
                    });
                    logs.extend(windows);
                }
                Ok((entries, logs))
            })
            .collect();

    let mut entries = Vec::new();
    let mut errors = Vec::new();
    let mut logs = Vec::new();
    for r in results {
        match r {
            Ok((e, l)) => {
                entries.extend(e);
                logs.extend(l);
            }
            Err(e) => errors.push(e),
        }
    }
    // Deterministic order regardless of the parallel schedule.
    entries.sort_by(|a, b| {
        (&a.video_id, &a.ctype, a.level).cmp(&(&b.video_id, &b.ctype, b.level))
    });
    errors.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    logs.sort_by(|a, b| (&a.video_id, a.window, a.seed).cmp(&(&b.video_id, b.window, b.seed)));

    let manifest = BenchmarkManifest {
        source_dataset: dataset.name.clone(),
        master_seed,
        grid: grid
            .iter()
            .map(|(c, s)| GridCellSpec { ctype: c.name().into(), level: s.level() })
            .collect(),
        entries,
        errors,
    };
    save_manifest(&manifest, &out_dir.join("manifest.json"))?;

    let log_path = out_dir.join("corruption_log.jsonl");
    let mut log_file = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    for log in &logs {
        let line = serde_json::json!({
            "video_id": log.video_id,
            "window": [log.window.0, log.window.1],
            "types": log.types.iter().map(|t| t.name()).collect::<Vec<_>>(),
            "severity": log.severity,
            "seed": log.seed,
        });
        writeln!(log_file, "{line}").map_err(|e| Error::io(&log_path, e))?;
    }
    Ok(manifest)
}

fn cell_dir(ctype: CorruptionType, level: u8) -> String {
    format!("{}_l{level}", ctype.name())
}

pub fn save_manifest(manifest: &BenchmarkManifest, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Json { path: path.into(), source: e })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_manifest(path: &Path) -> Result<BenchmarkManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })
}

/// Per-entry verification outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum EntryStatus {
    Match,
    Missing,
    SizeMismatch { expected: u64, actual: u64 },
    ChecksumMismatch { expected: String, actual: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub matches: usize,
    pub mismatches: Vec<(String, EntryStatus)>,
}

impl VerifyReport {
    pub fn all_match(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Recomputes checksums for every manifest entry. `root` is the directory
/// entry paths are relative to (normally the manifest's parent).
pub fn verify_manifest(manifest: &BenchmarkManifest, root: &Path) -> VerifyReport {
    let mut matches = 0usize;
    let mut mismatches = Vec::new();
    for entry in &manifest.entries {
        let path = root.join(&entry.output);
        let status = match fs::read(&path) {
            Err(_) => EntryStatus::Missing,
            Ok(data) => {
                if data.len() as u64 != entry.bytes {
                    EntryStatus::SizeMismatch { expected: entry.bytes, actual: data.len() as u64 }
                } else {
                    let actual = checksum_hex(&data);
                    if actual != entry.checksum {
                        EntryStatus::ChecksumMismatch {
                            expected: entry.checksum.clone(),
                            actual,
                        }
                    } else {
                        EntryStatus::Match
                    }
                }
            }
        };
        match status {
            EntryStatus::Match => matches += 1,
            other => mismatches.push((entry.output.clone(), other)),
        }
    }
    VerifyReport { matches, mismatches }
}

/// Checks the grid-completeness invariant: every (video, cell) pair appears
/// exactly once among entries + errors.
pub fn grid_complete(manifest: &BenchmarkManifest, dataset: &Dataset) -> bool {
    let failed: BTreeSet<&str> = manifest.errors.iter().map(|e| e.video_id.as_str()).collect();
    let mut seen = BTreeSet::new();
    for e in &manifest.entries {
        if !seen.insert((e.video_id.as_str(), e.ctype.as_str(), e.level)) {
            return false;
        }
    }
    let expected: usize = dataset
        .videos
        .iter()
        .filter(|v| !failed.contains(v.id.as_str()))
        .count()
        * manifest.grid.len();
    seen.len() == expected
}
