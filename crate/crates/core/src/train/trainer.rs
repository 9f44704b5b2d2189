//! Training loop for the toy detector: per-timestep cross-entropy plus
//! 1-tIoU boundary regression on both the clean and FrameDropped branches,
//! with the consistency loss coupling the branches per ground-truth
//! instance. Single-threaded and bit-reproducible given the seed.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

// Float resolves f64 math in no_std builds; when a workspace build links
// std, the inherent methods win and this import goes quiet.
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::types::{frame_span, Prediction, VideoRecord};

use super::decode::{candidate_segment, decode_predictions};
use super::model::{softmax, softplus, softplus_grad, ForwardPass, Gradients, ToyModel, ToyModelConfig};
use super::pairs::{framedrop_indices, segment_ab_pairs, DropScope};
use super::trc::{alignment_loss, normalize_backward, normalize_tious, sample_segments, TrcConfig};
use super::FeatureSequence;

/// FrameDrop switch for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDrop {
    Off,
    On(DropScope),
}

/// Training options; model shape lives in [`ToyModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub framedrop: FrameDrop,
    pub trc: Option<TrcConfig>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epochs: 12,
            learning_rate: 3e-3,
            seed: 0,
            framedrop: FrameDrop::Off,
            trc: None,
        }
    }
}

/// Per-epoch mean losses over videos.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub det_loss: f64,
    pub trc_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// Loss became non-finite.
    Diverged { epoch: usize, video_id: String },
    LabelNotInSet { label: String },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Diverged { epoch, video_id } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}, video {video_id}")
            }
            Self::LabelNotInSet { label } => {
                write!(f, "annotation label {label:?} missing from the training label set")
            }
        }
    }
}

/// Per-timestep supervision targets for one video, in timestep units.
pub(crate) struct Supervision {
    /// Class target per timestep; `classes` means background.
    targets: Vec<usize>,
    /// Covering annotation segment for action timesteps.
    segments: Vec<Option<(f64, f64)>>,
    /// Annotated instance segments, for the consistency term.
    instances: Vec<(f64, f64)>,
    action_steps: usize,
}

fn build_supervision(
    record: &VideoRecord,
    label_index: &BTreeMap<&str, usize>,
    timesteps: usize,
    background: usize,
) -> Result<Supervision, TrainError> {
    let mut targets = alloc::vec![background; timesteps];
    let mut segments: Vec<Option<(f64, f64)>> = alloc::vec![None; timesteps];
    let mut instances = Vec::with_capacity(record.annotations.len());
    let mut action_steps = 0usize;
    for a in &record.annotations {
        let class = *label_index
            .get(a.label.as_str())
            .ok_or_else(|| TrainError::LabelNotInSet { label: a.label.clone() })?;
        let seg = (a.start_sec * record.fps, a.end_sec * record.fps);
        instances.push(seg);
        let (f0, f1) = frame_span(a, record.fps, timesteps);
        for t in f0..=f1 {
            if segments[t].is_none() {
                targets[t] = class;
                segments[t] = Some(seg);
                action_steps += 1;
            }
        }
    }
    Ok(Supervision { targets, segments, instances, action_steps })
}

/// tIoU of `pred` against `gt` with partial derivatives w.r.t. the
/// prediction's start and end. Zero everywhere when disjoint.
fn tiou_partials(pred: (f64, f64), gt: (f64, f64)) -> (f64, f64, f64) {
    let (ps, pe) = pred;
    let (gs, ge) = gt;
    let inter = pe.min(ge) - ps.max(gs);
    if inter <= 0.0 || pe <= ps {
        return (0.0, 0.0, 0.0);
    }
    let union = (pe - ps) + (ge - gs) - inter;
    let t = inter / union;
    let di_dps = if ps > gs { -1.0 } else { 0.0 };
    let di_dpe = if pe < ge { 1.0 } else { 0.0 };
    // d(pe - ps)/dps = -1, so dU/dps = -1 - dI/dps; symmetrically for pe.
    let du_dps = -1.0 - di_dps;
    let du_dpe = 1.0 - di_dpe;
    let dt_dps = (di_dps * union - inter * du_dps) / (union * union);
    let dt_dpe = (di_dpe * union - inter * du_dpe) / (union * union);
    (t, dt_dps, dt_dpe)
}

/// Detection losses (cross-entropy + 1-tIoU regression) for one branch,
/// accumulating `weight`-scaled gradients into `d_out`.
fn branch_detection(
    config: &ToyModelConfig,
    pass: &ForwardPass,
    sup: &Supervision,
    weight: f64,
    d_out: &mut [f64],
) -> (f64, f64) {
    let head = config.head_dim();
    let t_count = pass.timesteps as f64;
    let mut cls_loss = 0.0;
    let mut reg_loss = 0.0;
    let reg_norm = sup.action_steps.max(1) as f64;
    for t in 0..pass.timesteps {
        let row = pass.output_row(t);
        let probs = softmax(&row[..config.classes + 1]);
        let target = sup.targets[t];
        cls_loss += -probs[target].max(1e-300).ln() / t_count;
        let d_row = &mut d_out[t * head..(t + 1) * head];
        for (c, &p) in probs.iter().enumerate() {
            let indicator = if c == target { 1.0 } else { 0.0 };
            d_row[c] += weight * (p - indicator) / t_count;
        }

        if let Some(gt) = sup.segments[t] {
            let (o_s, o_e) = (row[config.classes + 1], row[config.classes + 2]);
            let pred = (t as f64 - softplus(o_s), t as f64 + softplus(o_e));
            let (tiou, dt_dps, dt_dpe) = tiou_partials(pred, gt);
            reg_loss += (1.0 - tiou) / reg_norm;
            // L = 1 - tIoU; pred start = t - softplus(o_s)
            d_row[config.classes + 1] +=
                weight * (dt_dps * softplus_grad(o_s)) / reg_norm;
            d_row[config.classes + 2] +=
                weight * (-dt_dpe * softplus_grad(o_e)) / reg_norm;
        }
    }
    (cls_loss, reg_loss)
}

/// All per-timestep candidate segments of one branch, in timestep units.
fn branch_candidates(config: &ToyModelConfig, pass: &ForwardPass) -> Vec<(f64, f64)> {
    (0..pass.timesteps).map(|t| candidate_segment(pass.output_row(t), t, config)).collect()
}

/// Deferred gradient contribution of one consistency term: raw-tIoU
/// gradients for the selected candidate slots of one branch.
struct TrcContribution {
    gt: (f64, f64),
    /// Candidate index per distribution slot; `None` slots are padding.
    slots: Vec<Option<usize>>,
    d_raw: Vec<f64>,
    corrupted_branch: bool,
}

/// Consistency term over ground-truth instances. Gradients flow through the
/// tIoU distributions into the selected candidates' offsets; candidate
/// selection itself is discrete and carries no gradient. Returns the
/// unweighted mean loss over instances.
#[allow(clippy::too_many_arguments)]
fn trc_terms(
    trc: &TrcConfig,
    config: &ToyModelConfig,
    candidates_corrupted: &[(f64, f64)],
    candidates_clean: &[(f64, f64)],
    pass_corrupted: &ForwardPass,
    pass_clean: &ForwardPass,
    sup: &Supervision,
    d_out_corrupted: &mut [f64],
    d_out_clean: &mut [f64],
) -> f64 {
    if sup.instances.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    let mut terms = 0usize;
    let mut contributions: Vec<TrcContribution> = Vec::new();
    for &gt in &sup.instances {
        let idx_c = sample_segments(candidates_corrupted, gt, trc.sampling, trc.k);
        let idx_d = sample_segments(candidates_clean, gt, trc.sampling, trc.k);
        if idx_c.is_empty() && idx_d.is_empty() {
            continue;
        }
        // Shorter branches pad with zero raw tIoU (epsilon mass after
        // normalization), keeping the two distributions the same length.
        let len = idx_c.len().max(idx_d.len());
        let pad = |idx: &[usize], cands: &[(f64, f64)]| -> (Vec<Option<usize>>, Vec<f64>) {
            let mut slots: Vec<Option<usize>> = idx.iter().copied().map(Some).collect();
            slots.resize(len, None);
            let raws = slots
                .iter()
                .map(|slot| slot.map_or(0.0, |i| crate::metrics::tiou(cands[i], gt)))
                .collect();
            (slots, raws)
        };
        let (slots_c, raw_c) = pad(&idx_c, candidates_corrupted);
        let (slots_d, raw_d) = pad(&idx_d, candidates_clean);
        let p_c = normalize_tious(&raw_c, trc.epsilon);
        let p_d = normalize_tious(&raw_d, trc.epsilon);
        let out = alignment_loss(trc.loss, &p_c, &p_d)
            .expect("epsilon-smoothed distributions are valid");
        total += out.loss;
        terms += 1;

        contributions.push(TrcContribution {
            gt,
            slots: slots_c,
            d_raw: normalize_backward(&raw_c, trc.epsilon, &out.d_corrupted),
            corrupted_branch: true,
        });
        contributions.push(TrcContribution {
            gt,
            slots: slots_d,
            d_raw: normalize_backward(&raw_d, trc.epsilon, &out.d_clean),
            corrupted_branch: false,
        });
    }
    if terms == 0 {
        return 0.0;
    }

    // The loss is weight * mean over instances; apply the scale now that
    // the term count is known.
    let scale = trc.weight / terms as f64;
    let head = config.head_dim();
    for c in contributions {
        let (candidates, pass, d_out) = if c.corrupted_branch {
            (candidates_corrupted, pass_corrupted, &mut *d_out_corrupted)
        } else {
            (candidates_clean, pass_clean, &mut *d_out_clean)
        };
        for (slot, &g) in c.slots.iter().zip(&c.d_raw) {
            let Some(t) = *slot else { continue };
            if g == 0.0 {
                continue;
            }
            let (_, dt_dps, dt_dpe) = tiou_partials(candidates[t], c.gt);
            if dt_dps == 0.0 && dt_dpe == 0.0 {
                continue;
            }
            let row = pass.output_row(t);
            let (o_s, o_e) = (row[config.classes + 1], row[config.classes + 2]);
            let d_row = &mut d_out[t * head..(t + 1) * head];
            // candidate start = t - softplus(o_s), end = t + softplus(o_e)
            d_row[config.classes + 1] += scale * g * dt_dps * (-softplus_grad(o_s));
            d_row[config.classes + 2] += scale * g * dt_dpe * softplus_grad(o_e);
        }
    }
    total / terms as f64
}

/// Losses from one optimization step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepOutcome {
    pub cls_loss: f64,
    pub reg_loss: f64,
    pub trc_loss: f64,
    pub total: f64,
}

/// One video's forward/backward: detection losses on both branches (halved
/// each when two branches run) plus the weighted consistency term.
/// Gradients accumulate into `grads`.
pub(crate) fn video_step(
    model: &ToyModel,
    sup: &Supervision,
    clean: &FeatureSequence,
    dropped: Option<&FeatureSequence>,
    trc: Option<&TrcConfig>,
    grads: &mut Gradients,
) -> StepOutcome {
    let config = &model.config;
    let pass_clean = model.forward(clean);
    let pass_dropped = dropped.map(|f| model.forward(f));
    let two_branches = pass_dropped.is_some() || trc.is_some();
    let branch_weight = if two_branches { 0.5 } else { 1.0 };
    let pass_corrupted = pass_dropped.as_ref().unwrap_or(&pass_clean);

    let mut d_clean = alloc::vec![0.0; pass_clean.outputs.len()];
    let mut d_corrupted = alloc::vec![0.0; pass_clean.outputs.len()];

    let (cls_d, reg_d) = branch_detection(config, &pass_clean, sup, branch_weight, &mut d_clean);
    let (cls_c, reg_c) = if two_branches {
        branch_detection(config, pass_corrupted, sup, branch_weight, &mut d_corrupted)
    } else {
        (cls_d, reg_d)
    };

    let trc_loss = match trc {
        Some(cfg) => {
            let cands_c = branch_candidates(config, pass_corrupted);
            let cands_d = branch_candidates(config, &pass_clean);
            trc_terms(
                cfg,
                config,
                &cands_c,
                &cands_d,
                pass_corrupted,
                &pass_clean,
                sup,
                &mut d_corrupted,
                &mut d_clean,
            )
        }
        None => 0.0,
    };

    match pass_dropped.as_ref() {
        Some(pass_c) => {
            model.backward(pass_c, &d_corrupted, grads);
            model.backward(&pass_clean, &d_clean, grads);
        }
        None => {
            // Branches share one forward pass; fold the gradients together.
            for (a, b) in d_clean.iter_mut().zip(&d_corrupted) {
                *a += b;
            }
            model.backward(&pass_clean, &d_clean, grads);
        }
    }

    let cls_loss = if two_branches { 0.5 * (cls_c + cls_d) } else { cls_d };
    let reg_loss = if two_branches { 0.5 * (reg_c + reg_d) } else { reg_d };
    let weight = trc.map_or(0.0, |c| c.weight);
    StepOutcome {
        cls_loss,
        reg_loss,
        trc_loss,
        total: cls_loss + reg_loss + weight * trc_loss,
    }
}

/// Adam state mirroring the model parameters.
struct Adam {
    m: Gradients,
    v: Gradients,
    step: usize,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(model: &ToyModel) -> Self {
        Self { m: model.zero_grads(), v: model.zero_grads(), step: 0 }
    }

    fn update(&mut self, model: &mut ToyModel, grads: &Gradients, lr: f64) {
        self.step += 1;
        let bias1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
        let bias2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
        for (l, layer) in model.layers.iter_mut().enumerate() {
            let g = &grads.layers[l];
            let m = &mut self.m.layers[l];
            let v = &mut self.v.layers[l];
            for i in 0..layer.weights.len() {
                m.weights[i] = ADAM_BETA1 * m.weights[i] + (1.0 - ADAM_BETA1) * g.weights[i];
                v.weights[i] =
                    ADAM_BETA2 * v.weights[i] + (1.0 - ADAM_BETA2) * g.weights[i] * g.weights[i];
                let m_hat = m.weights[i] / bias1;
                let v_hat = v.weights[i] / bias2;
                layer.weights[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
            for i in 0..layer.bias.len() {
                m.bias[i] = ADAM_BETA1 * m.bias[i] + (1.0 - ADAM_BETA1) * g.bias[i];
                v.bias[i] = ADAM_BETA2 * v.bias[i] + (1.0 - ADAM_BETA2) * g.bias[i] * g.bias[i];
                let m_hat = m.bias[i] / bias1;
                let v_hat = v.bias[i] / bias2;
                layer.bias[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Trains the detector. `items` pairs each video record with its feature
/// sequence; `labels` fixes the class-index mapping (shared with decoding).
///
/// Each step runs the clean sequence and, with FrameDrop on, its dropped
/// counterpart; detection losses are averaged over branches and the
/// consistency loss couples them per ground-truth instance. With FrameDrop
/// off and no consistency config this reduces to the plain baseline
/// trainer. Bit-reproducible given the seed.
pub fn train_toy_model(
    items: &[(&VideoRecord, &FeatureSequence)],
    labels: &[String],
    model_config: &ToyModelConfig,
    options: &TrainOptions,
) -> Result<(ToyModel, TrainingLog), TrainError> {
    assert_eq!(model_config.classes, labels.len(), "label set size must match class count");
    let label_index: BTreeMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();

    let mut model = ToyModel::init(model_config.clone());
    let mut log = TrainingLog::default();
    if options.epochs == 0 || items.is_empty() {
        return Ok((model, log));
    }

    let supervision: Result<Vec<Supervision>, TrainError> = items
        .iter()
        .map(|(record, features)| {
            build_supervision(record, &label_index, features.timesteps(), model_config.background())
        })
        .collect();
    let supervision = supervision?;
    let ab_pairs: Vec<_> = items
        .iter()
        .map(|(record, features)| segment_ab_pairs(record, record.fps, features.timesteps()).0)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut adam = Adam::new(&model);
    let mut grads = model.zero_grads();
    let mut order: Vec<usize> = (0..items.len()).collect();
    for epoch in 0..options.epochs {
        order.shuffle(&mut rng);
        let mut det_sum = 0.0;
        let mut trc_sum = 0.0;
        for &i in &order {
            let (record, features) = items[i];
            let dropped = match options.framedrop {
                FrameDrop::Off => None,
                FrameDrop::On(scope) => {
                    let indices = framedrop_indices(&ab_pairs[i], &mut rng, scope);
                    let mut seq = (*features).clone();
                    for &t in &indices {
                        seq.zero_row(t);
                    }
                    Some(seq)
                }
            };
            let outcome = video_step(
                &model,
                &supervision[i],
                features,
                dropped.as_ref(),
                options.trc.as_ref(),
                &mut grads,
            );
            if !outcome.total.is_finite() {
                return Err(TrainError::Diverged { epoch, video_id: record.id.clone() });
            }
            det_sum += outcome.cls_loss + outcome.reg_loss;
            trc_sum += outcome.trc_loss;
            adam.update(&mut model, &grads, options.learning_rate);
            grads.zero();
        }
        log.epochs.push(EpochStats {
            epoch,
            det_loss: det_sum / items.len() as f64,
            trc_loss: trc_sum / items.len() as f64,
        });
    }
    Ok((model, log))
}

/// Runs the detector on one video and decodes predictions.
pub fn predict_video(
    model: &ToyModel,
    record: &VideoRecord,
    features: &FeatureSequence,
    labels: &[String],
) -> Vec<Prediction> {
    let pass = model.forward(features);
    decode_predictions(
        &pass.outputs,
        pass.timesteps,
        &model.config,
        labels,
        &record.id,
        record.fps,
        features.stride(),
    )
}

/// Concatenated predictions over a set of videos.
pub fn predict_items(
    model: &ToyModel,
    items: &[(&VideoRecord, &FeatureSequence)],
    labels: &[String],
) -> Vec<Prediction> {
    let mut out = Vec::new();
    for (record, features) in items {
        out.extend(predict_video(model, record, features, labels));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::synth::{generate_synthetic_dataset, SynthConfig};
    use crate::train::trc::{AlignmentLoss, SamplingStrategy};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn tiny_synth(seed: u64) -> crate::train::synth::SynthOutput {
        let cfg = SynthConfig {
            num_videos: 5,
            timesteps: 64,
            feature_dim: 4,
            num_classes: 2,
            actions_per_video: 1,
            noise_level: 1.0,
        };
        generate_synthetic_dataset(&cfg, seed)
    }

    fn tiny_model_config() -> ToyModelConfig {
        ToyModelConfig {
            layers: 2,
            channels: 6,
            kernel: 3,
            classes: 2,
            input_dim: 4,
            nms_tiou: 0.5,
            score_threshold: 0.3,
            seed: 1,
        }
    }

    fn tiny_options(epochs: usize) -> TrainOptions {
        TrainOptions { epochs, learning_rate: 1e-3, seed: 7, ..TrainOptions::default() }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let synth = tiny_synth(1);
        let items = synth.items(&synth.train_indices);
        let (model, log) =
            train_toy_model(&items, &synth.dataset.label_set, &tiny_model_config(), &tiny_options(0))
                .unwrap();
        assert_eq!(model.flat_params(), ToyModel::init(tiny_model_config()).flat_params());
        assert!(log.epochs.is_empty());
    }

    #[test]
    fn training_is_bit_reproducible() {
        let synth = tiny_synth(2);
        let items = synth.items(&synth.train_indices);
        let mut options = tiny_options(2);
        options.framedrop = FrameDrop::On(DropScope::AbPair);
        options.trc = Some(TrcConfig { k: 4, ..TrcConfig::default() });
        let run = || {
            train_toy_model(&items, &synth.dataset.label_set, &tiny_model_config(), &options)
                .unwrap()
        };
        let (a, log_a) = run();
        let (b, log_b) = run();
        assert_eq!(a.flat_params(), b.flat_params());
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn trc_with_identical_branches_matches_baseline() {
        // FrameDrop off: the corrupted branch equals the clean branch, the
        // consistency term vanishes, and training matches the baseline.
        let synth = tiny_synth(3);
        let items = synth.items(&synth.train_indices);
        let baseline = train_toy_model(
            &items,
            &synth.dataset.label_set,
            &tiny_model_config(),
            &tiny_options(2),
        )
        .unwrap()
        .0;
        let mut options = tiny_options(2);
        options.trc = Some(TrcConfig { k: 4, ..TrcConfig::default() });
        let (with_trc, log) =
            train_toy_model(&items, &synth.dataset.label_set, &tiny_model_config(), &options)
                .unwrap();
        for stats in &log.epochs {
            assert!(stats.trc_loss.abs() < 1e-12, "trc loss {}", stats.trc_loss);
        }
        for (a, b) in baseline.flat_params().iter().zip(with_trc.flat_params()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let synth = tiny_synth(4);
        let items = synth.items(&synth.train_indices);
        let mut options = tiny_options(3);
        // an absurd rate overflows the weights to infinity within a step
        options.learning_rate = 1e308;
        let err =
            train_toy_model(&items, &synth.dataset.label_set, &tiny_model_config(), &options)
                .unwrap_err();
        assert!(matches!(err, TrainError::Diverged { .. }));
    }

    #[test]
    fn unknown_label_is_reported() {
        let synth = tiny_synth(5);
        let items = synth.items(&synth.train_indices);
        let labels = vec![String::from("zzz"), String::from("yyy")];
        let err = train_toy_model(&items, &labels, &tiny_model_config(), &tiny_options(1))
            .unwrap_err();
        assert!(matches!(err, TrainError::LabelNotInSet { .. }));
    }

    #[test]
    fn tiou_partials_match_finite_differences() {
        let cases = [
            ((3.0, 9.0), (2.0, 10.0)),  // pred inside gt
            ((1.0, 11.0), (2.0, 10.0)), // gt inside pred
            ((1.0, 7.0), (4.0, 10.0)),  // staggered
            ((5.0, 12.0), (2.0, 9.0)),  // staggered the other way
        ];
        let h = 1e-7;
        for (pred, gt) in cases {
            let (t0, dps, dpe) = tiou_partials(pred, gt);
            assert!(t0 > 0.0);
            let fd_ps = (crate::metrics::tiou((pred.0 + h, pred.1), gt)
                - crate::metrics::tiou((pred.0 - h, pred.1), gt))
                / (2.0 * h);
            let fd_pe = (crate::metrics::tiou((pred.0, pred.1 + h), gt)
                - crate::metrics::tiou((pred.0, pred.1 - h), gt))
                / (2.0 * h);
            assert_abs_diff_eq!(dps, fd_ps, epsilon = 1e-5);
            assert_abs_diff_eq!(dpe, fd_pe, epsilon = 1e-5);
        }
    }

    /// Full-step gradient check: analytic gradients from `video_step` match
    /// central finite differences of its total loss.
    #[test]
    fn step_gradients_match_finite_differences() {
        let synth = tiny_synth(6);
        let (record, features) = (&synth.dataset.videos[0], &synth.features[0]);
        let label_index: BTreeMap<&str, usize> = synth
            .dataset
            .label_set
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let config = tiny_model_config();
        let sup =
            build_supervision(record, &label_index, features.timesteps(), config.background())
                .unwrap();
        let mut dropped = features.clone();
        dropped.zero_row(10);
        dropped.zero_row(40);
        // FullVideo sampling keeps the candidate set fixed (top-K selection
        // is a step function of the weights), and the MSE alignment has no
        // stop-gradient target, so plain finite differences see the same
        // function the backward pass differentiates. The frozen-target
        // gradient of the default loss has its own check in the trc module.
        let trc = TrcConfig {
            sampling: SamplingStrategy::FullVideo,
            loss: AlignmentLoss::Mse,
            ..TrcConfig::default()
        };

        let model = ToyModel::init(config.clone());
        let mut grads = model.zero_grads();
        let outcome =
            video_step(&model, &sup, features, Some(&dropped), Some(&trc), &mut grads);
        assert!(outcome.total.is_finite());

        let loss_of = |m: &ToyModel| -> f64 {
            let mut scratch = m.zero_grads();
            video_step(m, &sup, features, Some(&dropped), Some(&trc), &mut scratch).total
        };

        let flat = model.flat_params();
        let mut flat_grads: Vec<f64> = Vec::new();
        for l in &grads.layers {
            flat_grads.extend_from_slice(&l.weights);
            flat_grads.extend_from_slice(&l.bias);
        }
        let h = 1e-6;
        let probes: Vec<usize> = (0..flat.len()).step_by(flat.len() / 31).collect();
        for idx in probes {
            let mut params = flat.clone();
            params[idx] += h;
            let mut up = model.clone();
            up.load_flat_params(&params);
            params[idx] -= 2.0 * h;
            let mut down = model.clone();
            down.load_flat_params(&params);
            let fd = (loss_of(&up) - loss_of(&down)) / (2.0 * h);
            let analytic = flat_grads[idx];
            let tol = 1e-4 * analytic.abs().max(1e-2);
            assert!(
                (fd - analytic).abs() <= tol,
                "param {idx}: fd {fd} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn variants_and_scopes_train() {
        // Smoke coverage: every sampling strategy and loss kind completes.
        let synth = tiny_synth(8);
        let items = synth.items(&synth.train_indices);
        for sampling in [
            SamplingStrategy::ActionCenter,
            SamplingStrategy::FullAction,
            SamplingStrategy::FullVideo,
        ] {
            for loss in [AlignmentLoss::Trc, AlignmentLoss::PlainKl, AlignmentLoss::Mse] {
                let mut options = tiny_options(1);
                options.framedrop = FrameDrop::On(DropScope::AbPair);
                options.trc = Some(TrcConfig { k: 4, sampling, loss, ..TrcConfig::default() });
                let (_, log) = train_toy_model(
                    &items,
                    &synth.dataset.label_set,
                    &tiny_model_config(),
                    &options,
                )
                .unwrap();
                assert_eq!(log.epochs.len(), 1);
            }
        }
        let mut options = tiny_options(1);
        options.framedrop = FrameDrop::On(DropScope::ActionOnly);
        train_toy_model(&items, &synth.dataset.label_set, &tiny_model_config(), &options)
            .unwrap();
    }
}
