//! Synthetic desk-scale detection task: feature sequences with
//! class-specific smooth templates planted over noise, plus the
//! feature-space corruptions used to evaluate trained models.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

// Float resolves f64 math in no_std builds; when a workspace build links
// std, the inherent methods win and this import goes quiet.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corrupt::{placement_window, sweep_window, CorruptError, SeverityLevel};
use crate::hash::Fnv1a;
use crate::types::{frame_span, ActionInstance, Dataset, VideoRecord};

use super::FeatureSequence;

/// Template amplitude over unit-variance background noise.
const TEMPLATE_AMP: f64 = 2.0;
/// Attempts at non-overlapping span packing before falling back to even
/// placement.
const PACK_RETRIES: usize = 32;

/// Generator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_videos: usize,
    /// Timesteps per video (>= 64).
    pub timesteps: usize,
    pub feature_dim: usize,
    /// Action classes (>= 2).
    pub num_classes: usize,
    pub actions_per_video: usize,
    /// Noise standard deviation; 1.0 keeps the background unit-variance.
    pub noise_level: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_videos: 400,
            timesteps: 256,
            feature_dim: 16,
            num_classes: 4,
            actions_per_video: 3,
            noise_level: 1.0,
        }
    }
}

/// Generated dataset plus aligned features and the 80/20 video split.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    /// One feature sequence per dataset video, same order.
    pub features: Vec<FeatureSequence>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    /// Videos whose span packing fell back to even placement.
    pub packing_fallbacks: usize,
}

impl SynthOutput {
    pub fn items(&self, indices: &[usize]) -> Vec<(&VideoRecord, &FeatureSequence)> {
        indices.iter().map(|&i| (&self.dataset.videos[i], &self.features[i])).collect()
    }

    /// Dataset restricted to the given video indices.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let videos = indices.iter().map(|&i| self.dataset.videos[i].clone()).collect();
        Dataset::new(self.dataset.name.clone(), self.dataset.label_set.clone(), videos)
            .expect("subset of a valid dataset stays valid")
    }
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the algorithm is pinned here so generated datasets stay
    // bit-stable across dependency upgrades.
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Class template value at dim `d` and absolute frame `t`.
///
/// The template runs on video time rather than position within the action,
/// so action boundaries are only detectable as signal onset/offset edges;
/// a timestep's phase says nothing about where the action starts or ends.
fn template(class: usize, d: usize, t: usize) -> f64 {
    let period = 8.0 + 4.0 * class as f64;
    let phase = core::f64::consts::TAU * (0.618 * (class + 1) as f64 + 0.37 * d as f64);
    TEMPLATE_AMP * (core::f64::consts::TAU * t as f64 / period + phase).sin()
}

/// Packs `count` non-overlapping spans (in frames) with at least one
/// background frame between them. Falls back to even placement when
/// rejection sampling runs out of retries.
fn pack_spans(
    rng: &mut ChaCha8Rng,
    timesteps: usize,
    count: usize,
    min_len: usize,
    max_len: usize,
) -> (Vec<(usize, usize)>, bool) {
    'attempt: for _ in 0..PACK_RETRIES {
        let mut spans: Vec<(usize, usize)> = (0..count)
            .map(|_| {
                let len = rng.gen_range(min_len..=max_len);
                let start = rng.gen_range(0..=timesteps - len);
                (start, start + len - 1)
            })
            .collect();
        spans.sort_unstable();
        let mut ok = true;
        for pair in spans.windows(2) {
            if pair[1].0 <= pair[0].1 + 1 {
                ok = false;
                break;
            }
        }
        if !ok {
            continue 'attempt;
        }
        return (spans, false);
    }
    // Even placement always fits under the config contract.
    let slot = timesteps / count.max(1);
    let spans = (0..count)
        .map(|i| {
            let start = i * slot + (slot - min_len) / 2;
            (start, start + min_len - 1)
        })
        .collect();
    (spans, true)
}

/// Generates the synthetic dataset: background is noise, each action adds a
/// class-specific sinusoid template over its span. Deterministic given the
/// seed; videos split 80/20 into train/test by index.
pub fn generate_synthetic_dataset(config: &SynthConfig, seed: u64) -> SynthOutput {
    assert!(config.timesteps >= 64, "timesteps must be >= 64");
    assert!(config.num_classes >= 2, "need at least 2 classes");
    let t = config.timesteps;
    let min_len = 8usize;
    let max_len = (t / 4).max(min_len);
    assert!(
        config.actions_per_video == 0 || config.actions_per_video * (max_len + 2) <= t,
        "cannot pack {} actions of up to {} frames into {} timesteps",
        config.actions_per_video,
        max_len,
        t
    );

    let label_set: Vec<String> =
        (0..config.num_classes).map(|c| format!("class{c:02}")).collect();

    let mut videos = Vec::with_capacity(config.num_videos);
    let mut features = Vec::with_capacity(config.num_videos);
    let mut fallbacks = 0usize;
    for v in 0..config.num_videos {
        let mut h = Fnv1a::new();
        h.write_u64(seed).write_str("synth-video").write_u64(v as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());

        let (spans, fell_back) = if config.actions_per_video == 0 {
            (Vec::new(), false)
        } else {
            pack_spans(&mut rng, t, config.actions_per_video, min_len, max_len)
        };
        if fell_back {
            fallbacks += 1;
        }
        let classes: Vec<usize> =
            spans.iter().map(|_| rng.gen_range(0..config.num_classes)).collect();

        let mut values = Vec::with_capacity(t * config.feature_dim);
        for _ in 0..t * config.feature_dim {
            values.push(config.noise_level * standard_normal(&mut rng));
        }
        for (&(f0, f1), &class) in spans.iter().zip(&classes) {
            for frame in f0..=f1 {
                for d in 0..config.feature_dim {
                    values[frame * config.feature_dim + d] += template(class, d, frame);
                }
            }
        }

        // Annotate in seconds at fps 1. Frame f covers [f, f+1), so an end
        // of f1 + 0.5 floors back to the last covered frame.
        let annotations: Vec<ActionInstance> = spans
            .iter()
            .zip(&classes)
            .map(|(&(f0, f1), &class)| {
                ActionInstance::new(f0 as f64, f1 as f64 + 0.5, label_set[class].clone())
            })
            .collect();
        let record = VideoRecord::new(format!("synth{v:04}"), 1.0, t, t as f64, annotations)
            .expect("generated record is valid");
        videos.push(record);
        features.push(FeatureSequence::from_values(t, config.feature_dim, values));
    }

    let dataset = Dataset::new("synthetic", label_set, videos).expect("generated dataset is valid");
    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for i in 0..config.num_videos {
        if i % 5 == 4 {
            test_indices.push(i);
        } else {
            train_indices.push(i);
        }
    }
    SynthOutput { dataset, features, train_indices, test_indices, packing_fallbacks: fallbacks }
}

/// Feature-space analogue of black-frame corruption: zeroes the central
/// `l%` window of every annotated action.
pub fn black_corrupt_features(
    record: &VideoRecord,
    features: &FeatureSequence,
    severity: SeverityLevel,
) -> FeatureSequence {
    let mut out = features.clone();
    for a in &record.annotations {
        let span = frame_span(a, record.fps, record.frame_count);
        let (w0, w1) = placement_window(span, severity);
        for frame in w0..=w1 {
            out.zero_row(frame);
        }
    }
    out
}

/// Feature-space position sweep: zeroes a 5-frame window at `fraction` of
/// every action. Errors when any action is shorter than the sweep window,
/// in which case the video is excluded from the sweep.
pub fn sweep_corrupt_features(
    record: &VideoRecord,
    features: &FeatureSequence,
    fraction: f64,
) -> Result<FeatureSequence, CorruptError> {
    let mut out = features.clone();
    for a in &record.annotations {
        let span = frame_span(a, record.fps, record.frame_count);
        let (w0, w1) = sweep_window(span, fraction).map_err(|e| match e {
            CorruptError::SweepActionTooShort { action_frames, .. } => {
                CorruptError::SweepActionTooShort {
                    video_id: record.id.clone(),
                    action_frames,
                }
            }
            other => other,
        })?;
        for frame in w0..=w1 {
            out.zero_row(frame);
        }
    }
    Ok(out)
}
