//! Action-centric prediction sampling, tIoU distributions, and the
//! consistency loss aligning clean-branch and corrupted-branch predictions.
//!
//! The loss treats the average of the two distributions as a fixed target:
//! `L = (KL[target || corrupted] + KL[target || clean]) / 2`, with the
//! closed-form gradient `dL/dp_k = -target_k / (2 p_k)` on each branch.
//! Ablation variants (plain KL, MSE) share the interface.

use alloc::vec::Vec;
use core::fmt;

// Float resolves f64 math in no_std builds; when a workspace build links
// std, the inherent methods win and this import goes quiet.
#[allow(unused_imports)]
use num_traits::Float;

use crate::metrics::tiou;
use crate::types::{ActionInstance, Prediction};

/// How candidate predictions are chosen for the consistency term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// Top-K predictions whose centers are nearest the ground-truth center
    /// (default).
    ActionCenter,
    /// Every prediction whose center falls inside the ground-truth span.
    FullAction,
    /// All predictions, unsampled.
    FullVideo,
}

/// Which alignment loss couples the two branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentLoss {
    /// Symmetric KL against the averaged target distribution (default).
    Trc,
    /// One-sided KL of the clean distribution against the corrupted one,
    /// halved for weight comparability.
    PlainKl,
    /// Half mean squared difference of the distributions.
    Mse,
}

/// Consistency-loss configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TrcConfig {
    /// Sample size for action-centric sampling.
    pub k: usize,
    pub sampling: SamplingStrategy,
    pub loss: AlignmentLoss,
    /// Smoothing constant added to raw tIoU values before normalization.
    pub epsilon: f64,
    /// Loss weight relative to the detection losses.
    pub weight: f64,
}

impl Default for TrcConfig {
    fn default() -> Self {
        Self {
            k: 16,
            sampling: SamplingStrategy::ActionCenter,
            loss: AlignmentLoss::Trc,
            epsilon: 1e-6,
            weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrcError {
    EmptyPredictions,
    LengthMismatch { left: usize, right: usize },
    NonPositiveEntry { index: usize, value: f64 },
}

impl fmt::Display for TrcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyPredictions => write!(f, "cannot sample from an empty prediction list"),
            Self::LengthMismatch { left, right } => {
                write!(f, "distribution lengths differ: {left} vs {right}")
            }
            Self::NonPositiveEntry { index, value } => {
                write!(f, "distribution entry {index} = {value} is not positive")
            }
        }
    }
}

/// Result of sampling: indices into the input predictions, in order of
/// ascending center distance, plus whether a full K were available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampledIndices {
    pub indices: Vec<usize>,
    /// False when fewer than K predictions existed; callers pad the
    /// resulting distribution with epsilon mass.
    pub complete: bool,
}

/// Selects the K predictions whose centers lie nearest the ground-truth
/// center. Ties break by earlier start, then input order.
pub fn action_centric_sample(
    preds: &[Prediction],
    gt: &ActionInstance,
    k: usize,
) -> Result<SampledIndices, TrcError> {
    if preds.is_empty() {
        return Err(TrcError::EmptyPredictions);
    }
    let target = gt.center_sec();
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&i, &j| {
        let di = (preds[i].center_sec() - target).abs();
        let dj = (preds[j].center_sec() - target).abs();
        di.partial_cmp(&dj)
            .unwrap()
            .then_with(|| preds[i].start_sec.partial_cmp(&preds[j].start_sec).unwrap())
            .then_with(|| i.cmp(&j))
    });
    let complete = order.len() >= k;
    order.truncate(k);
    Ok(SampledIndices { indices: order, complete })
}

/// Selects predictions by strategy, with segments given directly.
///
/// Used by the trainer where candidates are per-timestep segments; ordering
/// follows the same convention as [`action_centric_sample`] so both
/// branches pair by rank.
pub fn sample_segments(
    segments: &[(f64, f64)],
    gt: (f64, f64),
    strategy: SamplingStrategy,
    k: usize,
) -> Vec<usize> {
    let target = 0.5 * (gt.0 + gt.1);
    let center = |s: &(f64, f64)| 0.5 * (s.0 + s.1);
    match strategy {
        SamplingStrategy::FullVideo => (0..segments.len()).collect(),
        SamplingStrategy::FullAction => (0..segments.len())
            .filter(|&i| {
                let c = center(&segments[i]);
                c >= gt.0 && c <= gt.1
            })
            .collect(),
        SamplingStrategy::ActionCenter => {
            let mut order: Vec<usize> = (0..segments.len()).collect();
            order.sort_by(|&i, &j| {
                let di = (center(&segments[i]) - target).abs();
                let dj = (center(&segments[j]) - target).abs();
                di.partial_cmp(&dj)
                    .unwrap()
                    .then_with(|| segments[i].0.partial_cmp(&segments[j].0).unwrap())
                    .then_with(|| i.cmp(&j))
            });
            order.truncate(k);
            order
        }
    }
}

/// Epsilon-smoothed, sum-normalized probability vector from raw tIoU
/// values: `p_k = (raw_k + eps) / sum(raw + eps)`.
pub fn normalize_tious(raws: &[f64], epsilon: f64) -> Vec<f64> {
    debug_assert!(epsilon > 0.0 && !raws.is_empty());
    let sum: f64 = raws.iter().map(|r| r + epsilon).sum();
    raws.iter().map(|r| (r + epsilon) / sum).collect()
}

/// tIoU distribution of selected prediction segments against one ground
/// truth.
pub fn tiou_distribution(segments: &[(f64, f64)], gt: (f64, f64), epsilon: f64) -> Vec<f64> {
    let raws: Vec<f64> = segments.iter().map(|s| tiou(*s, gt)).collect();
    normalize_tious(&raws, epsilon)
}

/// Backpropagates distribution gradients to raw tIoU gradients through the
/// smoothing-and-normalization map.
///
/// With `S = sum(raw + eps)` and `p_k = (raw_k + eps)/S`:
/// `dL/draw_j = (dL/dp_j - sum_k dL/dp_k * p_k) / S`.
pub fn normalize_backward(raws: &[f64], epsilon: f64, d_p: &[f64]) -> Vec<f64> {
    let sum: f64 = raws.iter().map(|r| r + epsilon).sum();
    let p: Vec<f64> = raws.iter().map(|r| (r + epsilon) / sum).collect();
    let dot: f64 = d_p.iter().zip(&p).map(|(g, pk)| g * pk).sum();
    d_p.iter().map(|g| (g - dot) / sum).collect()
}

/// Loss value with gradients w.r.t. both input distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAndGrads {
    pub loss: f64,
    pub d_corrupted: Vec<f64>,
    pub d_clean: Vec<f64>,
}

fn check_inputs(p_corrupted: &[f64], p_clean: &[f64]) -> Result<(), TrcError> {
    if p_corrupted.len() != p_clean.len() || p_corrupted.is_empty() {
        return Err(TrcError::LengthMismatch {
            left: p_corrupted.len(),
            right: p_clean.len(),
        });
    }
    for (i, &v) in p_corrupted.iter().chain(p_clean).enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(TrcError::NonPositiveEntry { index: i % p_corrupted.len(), value: v });
        }
    }
    debug_assert!((p_corrupted.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    debug_assert!((p_clean.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    Ok(())
}

/// Temporal-robust consistency loss.
///
/// The averaged target is a stop-gradient constant, so
/// `dL/dp_corrupted_k = -target_k / (2 * p_corrupted_k)` and symmetrically
/// for the clean branch.
pub fn trc_loss(p_corrupted: &[f64], p_clean: &[f64]) -> Result<LossAndGrads, TrcError> {
    check_inputs(p_corrupted, p_clean)?;
    let mut loss = 0.0;
    let mut d_corrupted = Vec::with_capacity(p_corrupted.len());
    let mut d_clean = Vec::with_capacity(p_clean.len());
    for (&pc, &pd) in p_corrupted.iter().zip(p_clean) {
        let pt = 0.5 * (pc + pd);
        loss += 0.5 * pt * ((pt / pc).ln() + (pt / pd).ln());
        d_corrupted.push(-pt / (2.0 * pc));
        d_clean.push(-pt / (2.0 * pd));
    }
    Ok(LossAndGrads { loss, d_corrupted, d_clean })
}

/// Ablation: one-sided KL of the clean distribution (target) against the
/// corrupted one, halved. Gradient flows to the corrupted branch only.
pub fn plain_kl_loss(p_corrupted: &[f64], p_clean: &[f64]) -> Result<LossAndGrads, TrcError> {
    check_inputs(p_corrupted, p_clean)?;
    let mut loss = 0.0;
    let mut d_corrupted = Vec::with_capacity(p_corrupted.len());
    for (&pc, &pd) in p_corrupted.iter().zip(p_clean) {
        loss += 0.5 * pd * (pd / pc).ln();
        d_corrupted.push(-pd / (2.0 * pc));
    }
    Ok(LossAndGrads { loss, d_corrupted, d_clean: alloc::vec![0.0; p_clean.len()] })
}

/// Ablation: half mean squared difference; gradients on both branches.
pub fn mse_loss(p_corrupted: &[f64], p_clean: &[f64]) -> Result<LossAndGrads, TrcError> {
    check_inputs(p_corrupted, p_clean)?;
    let k = p_corrupted.len() as f64;
    let mut loss = 0.0;
    let mut d_corrupted = Vec::with_capacity(p_corrupted.len());
    let mut d_clean = Vec::with_capacity(p_clean.len());
    for (&pc, &pd) in p_corrupted.iter().zip(p_clean) {
        let diff = pc - pd;
        loss += 0.5 * diff * diff / k;
        d_corrupted.push(diff / k);
        d_clean.push(-diff / k);
    }
    Ok(LossAndGrads { loss, d_corrupted, d_clean })
}

/// Dispatches on the configured alignment loss.
pub fn alignment_loss(
    kind: AlignmentLoss,
    p_corrupted: &[f64],
    p_clean: &[f64],
) -> Result<LossAndGrads, TrcError> {
    match kind {
        AlignmentLoss::Trc => trc_loss(p_corrupted, p_clean),
        AlignmentLoss::PlainKl => plain_kl_loss(p_corrupted, p_clean),
        AlignmentLoss::Mse => mse_loss(p_corrupted, p_clean),
    }
}
