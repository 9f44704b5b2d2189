//! Annotation and prediction JSON files.
//!
//! Annotation schema:
//! `{"version": "1.0", "label_set": [...], "videos": [{"id", "fps",
//! "frame_count", "duration_sec", "annotations": [{"label",
//! "segment_sec": [s, e]}]}]}`
//!
//! Prediction schema:
//! `{"results": {"<video_id>": [{"label", "segment_sec": [s, e],
//! "score"}]}}`

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use trbench_core::types::{ActionInstance, Dataset, Prediction, ValidationError, VideoRecord};

use crate::{Error, Result};

pub const ANNOTATION_VERSION: &str = "1.0";

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationFile {
    version: String,
    label_set: Vec<String>,
    videos: Vec<VideoEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VideoEntry {
    id: String,
    fps: f64,
    frame_count: usize,
    duration_sec: f64,
    annotations: Vec<AnnotationEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationEntry {
    label: String,
    segment_sec: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionFile {
    results: BTreeMap<String, Vec<PredictionEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionEntry {
    label: String,
    segment_sec: [f64; 2],
    score: f64,
}

/// Loads and validates an annotation file. The dataset name is the file
/// stem.
pub fn load_annotations(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: AnnotationFile =
        serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })?;
    if file.version != ANNOTATION_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported annotation version {:?}", file.version),
        ));
    }
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut videos = Vec::with_capacity(file.videos.len());
    for v in file.videos {
        let annotations = v
            .annotations
            .into_iter()
            .map(|a| ActionInstance::new(a.segment_sec[0], a.segment_sec[1], a.label))
            .collect();
        videos.push(VideoRecord::new(v.id, v.fps, v.frame_count, v.duration_sec, annotations)?);
    }
    Ok(Dataset::new(name, file.label_set, videos)?)
}

/// Writes a dataset back out in the annotation schema.
pub fn save_annotations(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = AnnotationFile {
        version: ANNOTATION_VERSION.into(),
        label_set: dataset.label_set.clone(),
        videos: dataset
            .videos
            .iter()
            .map(|v| VideoEntry {
                id: v.id.clone(),
                fps: v.fps,
                frame_count: v.frame_count,
                duration_sec: v.duration_sec,
                annotations: v
                    .annotations
                    .iter()
                    .map(|a| AnnotationEntry {
                        label: a.label.clone(),
                        segment_sec: [a.start_sec, a.end_sec],
                    })
                    .collect(),
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Json { path: path.into(), source: e })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a prediction file. Labels are not checked against any label set
/// (open-vocabulary outputs score zero against every ground truth instead
/// of failing the load).
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: PredictionFile =
        serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })?;
    let mut out = Vec::new();
    for (video_id, entries) in file.results {
        for p in entries {
            if !(p.segment_sec[0] < p.segment_sec[1]) {
                return Err(Error::Validation(ValidationError::SegmentOrder {
                    video_id,
                    start_sec: p.segment_sec[0],
                    end_sec: p.segment_sec[1],
                }));
            }
            if !(0.0..=1.0).contains(&p.score) {
                return Err(Error::Validation(ValidationError::ScoreRange {
                    video_id,
                    score: p.score,
                }));
            }
            out.push(Prediction {
                video_id: video_id.clone(),
                start_sec: p.segment_sec[0],
                end_sec: p.segment_sec[1],
                label: p.label,
                score: p.score,
            });
        }
    }
    Ok(out)
}

/// Writes predictions in the prediction schema.
pub fn save_predictions(preds: &[Prediction], path: &Path) -> Result<()> {
    let mut results: BTreeMap<String, Vec<PredictionEntry>> = BTreeMap::new();
    for p in preds {
        results.entry(p.video_id.clone()).or_default().push(PredictionEntry {
            label: p.label.clone(),
            segment_sec: [p.start_sec, p.end_sec],
            score: p.score,
        });
    }
    let text = serde_json::to_string_pretty(&PredictionFile { results })
        .map_err(|e| Error::Json { path: path.into(), source: e })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
