//! Orchestration for the synthetic detection task: config files, training
//! entry points, black-frame evaluation at every severity, and the
//! position sweep. Shared by the `bench` subcommands and the acceptance
//! suite.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use trbench_core::corrupt::SeverityLevel;
use trbench_core::metrics::{mean_ap, relative_robustness, EvalProtocol};
use trbench_core::train::model::{ToyModel, ToyModelConfig};
use trbench_core::train::synth::{
    black_corrupt_features, generate_synthetic_dataset, sweep_corrupt_features, SynthConfig,
    SynthOutput,
};
use trbench_core::train::trainer::{
    predict_items, train_toy_model, FrameDrop, TrainOptions, TrainingLog,
};
use trbench_core::train::trc::{AlignmentLoss, SamplingStrategy, TrcConfig};
use trbench_core::train::FeatureSequence;
use trbench_core::types::{frame_span, VideoRecord};

use crate::{Error, Result};

/// The tIoU threshold the synthetic task reports mAP at.
pub const TOY_THRESHOLD: f64 = 0.5;

/// Optional JSON config for the synthetic task; every field falls back to
/// the built-in defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfigFile {
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub num_videos: Option<usize>,
    pub timesteps: Option<usize>,
    pub feature_dim: Option<usize>,
    pub num_classes: Option<usize>,
    pub actions_per_video: Option<usize>,
    pub noise_level: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub layers: Option<usize>,
    pub channels: Option<usize>,
    pub kernel: Option<usize>,
    pub nms_tiou: Option<f64>,
    pub score_threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
}

impl ToyConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Json { path: p.into(), source: e })
            }
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        let d = SynthConfig::default();
        SynthConfig {
            num_videos: self.synth.num_videos.unwrap_or(d.num_videos),
            timesteps: self.synth.timesteps.unwrap_or(d.timesteps),
            feature_dim: self.synth.feature_dim.unwrap_or(d.feature_dim),
            num_classes: self.synth.num_classes.unwrap_or(d.num_classes),
            actions_per_video: self.synth.actions_per_video.unwrap_or(d.actions_per_video),
            noise_level: self.synth.noise_level.unwrap_or(d.noise_level),
        }
    }

    pub fn model_config(&self, seed: u64) -> ToyModelConfig {
        let synth = self.synth_config();
        let mut cfg = ToyModelConfig::new(synth.feature_dim, synth.num_classes, seed);
        if let Some(v) = self.model.layers {
            cfg.layers = v;
        }
        if let Some(v) = self.model.channels {
            cfg.channels = v;
        }
        if let Some(v) = self.model.kernel {
            cfg.kernel = v;
        }
        if let Some(v) = self.model.nms_tiou {
            cfg.nms_tiou = v;
        }
        if let Some(v) = self.model.score_threshold {
            cfg.score_threshold = v;
        }
        cfg
    }

    pub fn train_options(&self, seed: u64) -> TrainOptions {
        let mut opts = TrainOptions { seed, ..TrainOptions::default() };
        if let Some(v) = self.train.epochs {
            opts.epochs = v;
        }
        if let Some(v) = self.train.learning_rate {
            opts.learning_rate = v;
        }
        opts
    }
}

/// Parses the `--trc` flag value: comma-separated `key=value` pairs with
/// keys `k`, `loss` (trc|kl|mse), `sampling` (center|action|video),
/// `epsilon`, `weight`.
pub fn parse_trc_flag(flag: &str) -> Result<TrcConfig> {
    let mut cfg = TrcConfig::default();
    for part in flag.split(',').filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("--trc: expected key=value, got {part:?}")))?;
        match key.trim().to_ascii_lowercase().as_str() {
            "k" => {
                cfg.k = value
                    .parse()
                    .map_err(|_| Error::Invalid(format!("--trc: bad K value {value:?}")))?;
                if cfg.k == 0 {
                    return Err(Error::Invalid("--trc: K must be >= 1".into()));
                }
            }
            "loss" => {
                cfg.loss = match value.trim().to_ascii_lowercase().as_str() {
                    "trc" => AlignmentLoss::Trc,
                    "kl" | "plainkl" => AlignmentLoss::PlainKl,
                    "mse" => AlignmentLoss::Mse,
                    other => {
                        return Err(Error::Invalid(format!("--trc: unknown loss {other:?}")))
                    }
                };
            }
            "sampling" => {
                cfg.sampling = match value.trim().to_ascii_lowercase().as_str() {
                    "center" | "actioncenter" => SamplingStrategy::ActionCenter,
                    "action" | "fullaction" => SamplingStrategy::FullAction,
                    "video" | "fullvideo" => SamplingStrategy::FullVideo,
                    other => {
                        return Err(Error::Invalid(format!("--trc: unknown sampling {other:?}")))
                    }
                };
            }
            "epsilon" => {
                cfg.epsilon = value
                    .parse()
                    .map_err(|_| Error::Invalid(format!("--trc: bad epsilon {value:?}")))?;
            }
            "weight" => {
                cfg.weight = value
                    .parse()
                    .map_err(|_| Error::Invalid(format!("--trc: bad weight {value:?}")))?;
            }
            other => return Err(Error::Invalid(format!("--trc: unknown key {other:?}"))),
        }
    }
    Ok(cfg)
}

/// Trains a model on the synthetic task. One seed drives dataset
/// generation, weight init, and the training schedule.
pub fn train(
    config: &ToyConfigFile,
    seed: u64,
    framedrop: FrameDrop,
    trc: Option<TrcConfig>,
) -> Result<(ToyModel, TrainingLog, SynthOutput)> {
    let synth = generate_synthetic_dataset(&config.synth_config(), seed);
    let model_cfg = config.model_config(seed);
    let mut options = config.train_options(seed);
    options.framedrop = framedrop;
    options.trc = trc;
    let items = synth.items(&synth.train_indices);
    let (model, log) = train_toy_model(&items, &synth.dataset.label_set, &model_cfg, &options)?;
    Ok((model, log, synth))
}

/// mAP at [`TOY_THRESHOLD`] of one model over the given videos.
pub fn eval_map(
    model: &ToyModel,
    items: &[(&VideoRecord, &FeatureSequence)],
    dataset: &trbench_core::types::Dataset,
) -> f64 {
    let preds = predict_items(model, items, &dataset.label_set);
    mean_ap(&preds, dataset, &EvalProtocol::single(TOY_THRESHOLD)).aggregate
}

/// Test-set evaluation: clean mAP, black-frame corrupted mAP per severity,
/// their mean, and the relative robustness.
#[derive(Debug, Clone, Serialize)]
pub struct BlackFrameEval {
    pub clean_map: f64,
    pub per_level_map: [f64; 3],
    pub corrupted_map: f64,
    pub gamma: f64,
}

pub fn evaluate_black(model: &ToyModel, synth: &SynthOutput) -> Result<BlackFrameEval> {
    let test_items = synth.items(&synth.test_indices);
    let test_set = synth.subset(&synth.test_indices);
    let clean_map = eval_map(model, &test_items, &test_set);
    let mut per_level_map = [0.0f64; 3];
    for (i, severity) in SeverityLevel::ALL.into_iter().enumerate() {
        let corrupted: Vec<FeatureSequence> = test_items
            .iter()
            .map(|(record, features)| black_corrupt_features(record, features, severity))
            .collect();
        let items: Vec<(&VideoRecord, &FeatureSequence)> =
            test_items.iter().zip(&corrupted).map(|((r, _), f)| (*r, f)).collect();
        per_level_map[i] = eval_map(model, &items, &test_set);
    }
    let corrupted_map = per_level_map.iter().sum::<f64>() / 3.0;
    let gamma = relative_robustness(clean_map, corrupted_map)?;
    Ok(BlackFrameEval { clean_map, per_level_map, corrupted_map, gamma })
}

/// A position-sweep curve: per-fraction mAP with the clean reference.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCurve {
    pub clean_map: f64,
    /// (fraction, mAP) in fraction order.
    pub points: Vec<(f64, f64)>,
    /// Test videos excluded because an action was shorter than the
    /// 5-frame sweep window.
    pub excluded_videos: usize,
}

/// The standard sweep fractions 0.1..=0.9.
pub fn sweep_fractions() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

pub fn sweep_curve(
    model: &ToyModel,
    synth: &SynthOutput,
    fractions: &[f64],
) -> Result<SweepCurve> {
    // Videos with any action shorter than the window are excluded from the
    // sweep entirely; the clean reference uses the same filtered subset so
    // the curve and the reference line are comparable.
    let eligible: Vec<usize> = synth
        .test_indices
        .iter()
        .copied()
        .filter(|&i| {
            let v = &synth.dataset.videos[i];
            v.annotations.iter().all(|a| {
                let (s, e) = frame_span(a, v.fps, v.frame_count);
                e - s + 1 >= 5
            })
        })
        .collect();
    let excluded_videos = synth.test_indices.len() - eligible.len();
    if eligible.is_empty() {
        return Err(Error::Invalid(
            "position sweep: every test video has an action shorter than 5 frames".into(),
        ));
    }
    let items = synth.items(&eligible);
    let subset = synth.subset(&eligible);
    let clean_map = eval_map(model, &items, &subset);
    let mut points = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let corrupted: Vec<FeatureSequence> = items
            .iter()
            .map(|(record, features)| sweep_corrupt_features(record, features, fraction))
            .collect::<std::result::Result<_, _>>()?;
        let corrupted_items: Vec<(&VideoRecord, &FeatureSequence)> =
            items.iter().zip(&corrupted).map(|((r, _), f)| (*r, f)).collect();
        points.push((fraction, eval_map(model, &corrupted_items, &subset)));
    }
    Ok(SweepCurve { clean_map, points, excluded_videos })
}

/// `fraction,map` CSV with a `clean` reference row (fractions + 1 rows).
pub fn sweep_csv(curve: &SweepCurve) -> String {
    let mut out = String::from("fraction,map\n");
    out.push_str(&format!("clean,{:.4}\n", curve.clean_map));
    for (fraction, map) in &curve.points {
        out.push_str(&format!("{fraction:.1},{map:.4}\n"));
    }
    out
}
