//! Decodes raw per-timestep detector outputs into scored segment
//! predictions: softmax class selection, offset-based boundaries, greedy
//! per-class NMS.

use alloc::string::String;
use alloc::vec::Vec;

use crate::metrics::tiou;
use crate::types::Prediction;

use super::model::{softmax, softplus, ToyModelConfig};

/// Candidate segment at timestep `t` in timestep units:
/// `[t - softplus(o_s), t + softplus(o_e)]`.
pub(crate) fn candidate_segment(row: &[f64], t: usize, config: &ToyModelConfig) -> (f64, f64) {
    let d_s = softplus(row[config.classes + 1]);
    let d_e = softplus(row[config.classes + 2]);
    (t as f64 - d_s, t as f64 + d_e)
}

/// Greedy per-class NMS: higher scores suppress overlapping segments with
/// tIoU above the threshold.
pub fn nms(mut preds: Vec<Prediction>, nms_tiou: f64) -> Vec<Prediction> {
    preds.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.start_sec.partial_cmp(&b.start_sec).unwrap())
            .then_with(|| a.label.cmp(&b.label))
    });
    let mut kept: Vec<Prediction> = Vec::new();
    'candidates: for p in preds {
        for k in &kept {
            if k.label == p.label
                && k.video_id == p.video_id
                && tiou(k.segment(), p.segment()) > nms_tiou
            {
                continue 'candidates;
            }
        }
        kept.push(p);
    }
    kept
}

/// Decodes one video's raw head outputs (`timesteps x head_dim`) into
/// predictions sorted by descending score.
///
/// A timestep emits a candidate when its argmax class is not background and
/// the class probability clears the score threshold. Offsets are in
/// timestep units; segments convert to seconds via the stride and fps.
/// `labels` maps class indices to dataset labels.
pub fn decode_predictions(
    outputs: &[f64],
    timesteps: usize,
    config: &ToyModelConfig,
    labels: &[String],
    video_id: &str,
    fps: f64,
    stride: usize,
) -> Vec<Prediction> {
    let head = config.head_dim();
    debug_assert_eq!(outputs.len(), timesteps * head);
    assert_eq!(labels.len(), config.classes, "label set size must match class count");
    let to_sec = stride as f64 / fps;
    let mut candidates = Vec::new();
    for t in 0..timesteps {
        let row = &outputs[t * head..(t + 1) * head];
        let probs = softmax(&row[..config.classes + 1]);
        let (argmax, &score) = probs
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
            .unwrap();
        if argmax == config.background() || score < config.score_threshold {
            continue;
        }
        let (start, end) = candidate_segment(row, t, config);
        candidates.push(Prediction {
            video_id: String::from(video_id),
            start_sec: start * to_sec,
            end_sec: end * to_sec,
            label: labels[argmax].clone(),
            score,
        });
    }
    nms(candidates, config.nms_tiou)
}
