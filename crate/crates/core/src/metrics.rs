//! Detection metrics: temporal IoU, interpolated average precision, mAP
//! under dataset-specific threshold conventions, and relative robustness.
//!
//! Conventions pinned here (reference evaluators differ in the details):
//! all-point interpolated AP, greedy highest-tIoU matching with `tIoU >=
//! threshold`, deterministic score-tie breaking by earlier start then video
//! id, and classes without ground truth excluded from the mean.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::corrupt::{CorruptionType, SeverityLevel};
use crate::types::{Dataset, Prediction};

/// Temporal IoU of two segments on the real line; 0 when disjoint or
/// degenerate.
pub fn tiou(a: (f64, f64), b: (f64, f64)) -> f64 {
    if a.0 >= a.1 || b.0 >= b.1 {
        return 0.0;
    }
    let inter = a.1.min(b.1) - a.0.max(b.0);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    inter / union
}

/// How per-threshold mAP values collapse into one headline number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregation {
    SingleThreshold(f64),
    AverageOverThresholds,
}

/// tIoU thresholds plus the aggregation rule.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub thresholds: Vec<f64>,
    pub aggregation: Aggregation,
}

impl EvalProtocol {
    /// THUMOS-style: thresholds 0.1..0.5, headline mAP at tIoU 0.5.
    pub fn thumos() -> Self {
        Self {
            thresholds: alloc::vec![0.1, 0.2, 0.3, 0.4, 0.5],
            aggregation: Aggregation::SingleThreshold(0.5),
        }
    }

    /// ActivityNet-style: thresholds 0.5..0.95 step 0.05, averaged.
    pub fn activitynet() -> Self {
        let thresholds = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
        Self { thresholds, aggregation: Aggregation::AverageOverThresholds }
    }

    /// Single-threshold evaluation, e.g. mAP@0.5 for the synthetic task.
    pub fn single(threshold: f64) -> Self {
        Self {
            thresholds: alloc::vec![threshold],
            aggregation: Aggregation::SingleThreshold(threshold),
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.thresholds.is_empty() {
            return Err(MetricsError::InvalidThresholds);
        }
        for pair in self.thresholds.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(MetricsError::InvalidThresholds);
            }
        }
        if self.thresholds.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
            return Err(MetricsError::InvalidThresholds);
        }
        if let Aggregation::SingleThreshold(t) = self.aggregation {
            if !self.thresholds.iter().any(|&x| x == t) {
                return Err(MetricsError::InvalidThresholds);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// Thresholds must be strictly increasing, each in (0, 1], and contain
    /// the single-threshold aggregation point.
    InvalidThresholds,
    /// Relative robustness is undefined for zero clean mAP.
    UndefinedRobustness,
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidThresholds => write!(f, "invalid tIoU threshold list"),
            Self::UndefinedRobustness => {
                write!(f, "relative robustness undefined: clean mAP is zero")
            }
        }
    }
}

/// Deterministic ranking: score descending, ties by earlier start, then
/// video id, then original index.
pub(crate) fn rank_by_score(preds: &[&Prediction]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (preds[i], preds[j]);
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.start_sec.partial_cmp(&b.start_sec).unwrap())
            .then_with(|| a.video_id.cmp(&b.video_id))
            .then_with(|| i.cmp(&j))
    });
    order
}

/// Greedy matching outcome for one ranked prediction list.
pub(crate) struct MatchOutcome {
    /// true-positive flags, in rank order.
    pub tp: Vec<bool>,
}

/// Runs the greedy matcher for one class: each ranked prediction claims the
/// unm matched same-video ground truth with the highest tIoU at or above the
/// threshold (ties: earlier start, then list order).
pub(crate) fn match_greedy(
    preds: &[&Prediction],
    order: &[usize],
    gts: &BTreeMap<&str, Vec<(f64, f64)>>,
    threshold: f64,
) -> MatchOutcome {
    let mut taken: BTreeMap<&str, Vec<bool>> =
        gts.iter().map(|(k, v)| (*k, alloc::vec![false; v.len()])).collect();
    let mut tp = Vec::with_capacity(order.len());
    for &idx in order {
        let p = preds[idx];
        let mut best: Option<(usize, f64)> = None;
        if let Some(segs) = gts.get(p.video_id.as_str()) {
            let used = &taken[p.video_id.as_str()];
            for (g, seg) in segs.iter().enumerate() {
                if used[g] {
                    continue;
                }
                let t = tiou(p.segment(), *seg);
                if t < threshold {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bg, bt)) => {
                        t > bt || (t == bt && segs[g].0 < segs[bg].0)
                    }
                };
                if better {
                    best = Some((g, t));
                }
            }
        }
        match best {
            Some((g, _)) => {
                taken.get_mut(p.video_id.as_str()).unwrap()[g] = true;
                tp.push(true);
            }
            None => tp.push(false),
        }
    }
    MatchOutcome { tp }
}

/// All-point interpolated AP from rank-ordered TP flags.
pub(crate) fn interpolated_ap(tp: &[bool], gt_count: usize) -> f64 {
    debug_assert!(gt_count > 0);
    if tp.is_empty() {
        return 0.0;
    }
    let n = tp.len();
    let mut precision = Vec::with_capacity(n);
    let mut recall = Vec::with_capacity(n);
    let mut hits = 0usize;
    for (i, &is_tp) in tp.iter().enumerate() {
        if is_tp {
            hits += 1;
        }
        precision.push(hits as f64 / (i + 1) as f64);
        recall.push(hits as f64 / gt_count as f64);
    }
    // precision envelope, then sum over recall increments
    for i in (0..n - 1).rev() {
        if precision[i + 1] > precision[i] {
            precision[i] = precision[i + 1];
        }
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for i in 0..n {
        if recall[i] > prev_recall {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    ap
}

/// Average precision for one class at one tIoU threshold.
///
/// `gts` maps video id to that class's ground-truth segments. Returns `None`
/// when the class has no ground truth anywhere (the class is excluded from
/// the mean, regardless of predictions).
pub fn average_precision(
    preds: &[Prediction],
    gts: &BTreeMap<&str, Vec<(f64, f64)>>,
    threshold: f64,
) -> Option<f64> {
    let gt_count: usize = gts.values().map(Vec::len).sum();
    if gt_count == 0 {
        return None;
    }
    let refs: Vec<&Prediction> = preds.iter().collect();
    let order = rank_by_score(&refs);
    let outcome = match_greedy(&refs, &order, gts, threshold);
    Some(interpolated_ap(&outcome.tp, gt_count))
}

/// Per-threshold mAP table plus the protocol aggregate, in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanAp {
    /// (threshold, mAP%) rows in threshold order.
    pub per_threshold: Vec<(f64, f64)>,
    /// Aggregate per the protocol (single threshold or mean), percent.
    pub aggregate: f64,
    /// Predictions referencing video ids absent from the dataset are
    /// skipped; this counts them so callers can warn.
    pub skipped_unknown_videos: usize,
}

/// Mean average precision over classes with ground truth.
pub fn mean_ap(preds: &[Prediction], dataset: &Dataset, protocol: &EvalProtocol) -> MeanAp {
    debug_assert!(protocol.validate().is_ok());

    // class -> video -> GT segments
    let mut gt_by_class: BTreeMap<&str, BTreeMap<&str, Vec<(f64, f64)>>> = BTreeMap::new();
    for v in &dataset.videos {
        for a in &v.annotations {
            gt_by_class
                .entry(a.label.as_str())
                .or_default()
                .entry(v.id.as_str())
                .or_default()
                .push(a.segment());
        }
    }

    let mut skipped = 0usize;
    let mut preds_by_class: BTreeMap<&str, Vec<&Prediction>> = BTreeMap::new();
    for p in preds {
        if dataset.video(&p.video_id).is_none() {
            skipped += 1;
            continue;
        }
        preds_by_class.entry(p.label.as_str()).or_default().push(p);
    }

    let empty: Vec<&Prediction> = Vec::new();
    let mut per_threshold = Vec::with_capacity(protocol.thresholds.len());
    for &threshold in &protocol.thresholds {
        let mut sum = 0.0;
        let mut classes = 0usize;
        for (label, gts) in &gt_by_class {
            let class_preds = preds_by_class.get(label).unwrap_or(&empty);
            let gt_count: usize = gts.values().map(Vec::len).sum();
            debug_assert!(gt_count > 0);
            let order = rank_by_score(class_preds);
            let outcome = match_greedy(class_preds, &order, gts, threshold);
            sum += interpolated_ap(&outcome.tp, gt_count);
            classes += 1;
        }
        let map = if classes == 0 { 0.0 } else { 100.0 * sum / classes as f64 };
        per_threshold.push((threshold, map));
    }

    let aggregate = match protocol.aggregation {
        Aggregation::SingleThreshold(t) => {
            per_threshold.iter().find(|(thr, _)| *thr == t).map(|(_, m)| *m).unwrap_or(0.0)
        }
        Aggregation::AverageOverThresholds => {
            per_threshold.iter().map(|(_, m)| m).sum::<f64>() / per_threshold.len() as f64
        }
    };
    MeanAp { per_threshold, aggregate, skipped_unknown_videos: skipped }
}

/// Relative robustness in percent: `100 * corrupted / clean`, algebraically
/// `1 - (clean - corrupted) / clean` scaled to percent.
pub fn relative_robustness(m_clean: f64, m_corrupted: f64) -> Result<f64, MetricsError> {
    if !(m_clean > 0.0) {
        return Err(MetricsError::UndefinedRobustness);
    }
    Ok(100.0 * m_corrupted / m_clean)
}

/// A grid-cell key: corruption type at a severity level.
pub type GridCell = (CorruptionType, u8);

/// Clean mAP, the per-cell corrupted mAP grid, per-cell and overall relative
/// robustness. All values are percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub clean_map: f64,
    pub cell_map: BTreeMap<GridCell, f64>,
    pub cell_gamma: BTreeMap<GridCell, f64>,
    /// Arithmetic mean of per-cell gamma over populated cells.
    pub gamma_overall: f64,
    /// Mean corrupted mAP over populated cells; `100 * mean / clean` equals
    /// `gamma_overall` since the clean mAP is constant across cells.
    pub mean_corrupted_map: f64,
    /// Grid cells that were expected but not supplied.
    pub missing_cells: Vec<GridCell>,
}

/// Builds a robustness report from already-computed mAP values.
///
/// `expected` lists the grid; cells absent from `cell_map` are flagged as
/// missing and omitted from the averages.
pub fn robustness_report_from_maps(
    clean_map: f64,
    cell_map: BTreeMap<GridCell, f64>,
    expected: &[(CorruptionType, SeverityLevel)],
) -> Result<RobustnessReport, MetricsError> {
    if !(clean_map > 0.0) {
        return Err(MetricsError::UndefinedRobustness);
    }
    let missing_cells: Vec<GridCell> = expected
        .iter()
        .map(|(c, s)| (*c, s.level()))
        .filter(|cell| !cell_map.contains_key(cell))
        .collect();
    let mut cell_gamma = BTreeMap::new();
    for (cell, &m) in &cell_map {
        cell_gamma.insert(*cell, relative_robustness(clean_map, m)?);
    }
    let n = cell_map.len().max(1) as f64;
    let gamma_overall = cell_gamma.values().sum::<f64>() / n;
    let mean_corrupted_map = cell_map.values().sum::<f64>() / n;
    Ok(RobustnessReport {
        clean_map,
        cell_map,
        cell_gamma,
        gamma_overall,
        mean_corrupted_map,
        missing_cells,
    })
}

/// Evaluates clean and per-cell predictions under one protocol and builds
/// the robustness report.
pub fn robustness_report(
    clean_preds: &[Prediction],
    corrupted_preds_by_cell: &BTreeMap<GridCell, Vec<Prediction>>,
    dataset: &Dataset,
    protocol: &EvalProtocol,
    expected: &[(CorruptionType, SeverityLevel)],
) -> Result<RobustnessReport, MetricsError> {
    let clean = mean_ap(clean_preds, dataset, protocol).aggregate;
    let cell_map = corrupted_preds_by_cell
        .iter()
        .map(|(cell, preds)| (*cell, mean_ap(preds, dataset, protocol).aggregate))
        .collect();
    robustness_report_from_maps(clean, cell_map, expected)
}
