//! False-positive diagnosis: assigns every non-matched prediction to one of
//! five error categories and measures the mAP gained by deleting a category.
//!
//! Categories follow the DETAD band convention. A false positive's maximum
//! tIoU against same-label ground truth (`g_same`) and against any-label
//! ground truth (`g_any`, over all labels) place it in exactly one band:
//!
//! | category        | band                                              |
//! |-----------------|---------------------------------------------------|
//! | DoubleDetection | `g_same >= threshold` (its ground truth is taken) |
//! | WrongLabel      | `g_same < threshold <= g_any`                     |
//! | Localization    | `background_tiou <= g_same < threshold`           |
//! | Confusion       | `g_same < background_tiou <= g_any < threshold`   |
//! | Background      | `g_any < background_tiou`                         |
//!
//! Note: some write-ups gloss Localization as "wrong category" and
//! WrongLabel as "correct category"; the band definitions above are the
//! operative ones here and match the categories' names.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::metrics::{mean_ap, match_greedy, rank_by_score, tiou, EvalProtocol};
use crate::types::{Dataset, Prediction};

/// Default tIoU boundary below which overlap counts as background.
pub const BACKGROUND_TIOU: f64 = 0.1;

/// The five false-positive causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FpCategory {
    Background,
    Confusion,
    Localization,
    WrongLabel,
    DoubleDetection,
}

impl FpCategory {
    pub const ALL: [FpCategory; 5] = [
        Self::Background,
        Self::Confusion,
        Self::Localization,
        Self::WrongLabel,
        Self::DoubleDetection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Background => "background",
            Self::Confusion => "confusion",
            Self::Localization => "localization",
            Self::WrongLabel => "wrong_label",
            Self::DoubleDetection => "double_detection",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Outcome tag for one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionTag {
    TruePositive,
    FalsePositive(FpCategory),
}

/// Tags every prediction as TP or one FP category, in input order.
///
/// Matching runs the same greedy rule as the evaluator at `threshold`;
/// category bands then use each FP's best same-label and any-label tIoU.
pub fn classify_false_positives(
    preds: &[Prediction],
    dataset: &Dataset,
    threshold: f64,
    background_tiou: f64,
) -> Vec<PredictionTag> {
    debug_assert!(background_tiou < threshold);

    // Greedy matching is per class, so group prediction indices by label.
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        by_class.entry(p.label.as_str()).or_default().push(i);
    }

    let mut tags: Vec<PredictionTag> =
        alloc::vec![PredictionTag::FalsePositive(FpCategory::Background); preds.len()];
    for (label, indices) in by_class {
        let mut gts: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for v in &dataset.videos {
            let segs: Vec<(f64, f64)> = v
                .annotations
                .iter()
                .filter(|a| a.label == label)
                .map(|a| a.segment())
                .collect();
            if !segs.is_empty() {
                gts.insert(v.id.as_str(), segs);
            }
        }
        let refs: Vec<&Prediction> = indices.iter().map(|&i| &preds[i]).collect();
        let order = rank_by_score(&refs);
        let outcome = match_greedy(&refs, &order, &gts, threshold);
        for (rank, &local) in order.iter().enumerate() {
            let global = indices[local];
            if outcome.tp[rank] {
                tags[global] = PredictionTag::TruePositive;
            } else {
                tags[global] = PredictionTag::FalsePositive(categorize(
                    &preds[global],
                    dataset,
                    threshold,
                    background_tiou,
                ));
            }
        }
    }
    tags
}

fn categorize(
    p: &Prediction,
    dataset: &Dataset,
    threshold: f64,
    background_tiou: f64,
) -> FpCategory {
    let mut g_same: f64 = 0.0;
    let mut g_any: f64 = 0.0;
    if let Some(video) = dataset.video(&p.video_id) {
        for a in &video.annotations {
            let t = tiou(p.segment(), a.segment());
            if a.label == p.label && t > g_same {
                g_same = t;
            }
            if t > g_any {
                g_any = t;
            }
        }
    }
    if g_same >= threshold {
        FpCategory::DoubleDetection
    } else if g_any >= threshold {
        FpCategory::WrongLabel
    } else if g_same >= background_tiou {
        FpCategory::Localization
    } else if g_any >= background_tiou {
        FpCategory::Confusion
    } else {
        FpCategory::Background
    }
}

/// Counts per tag, for reports.
pub fn tag_counts(tags: &[PredictionTag]) -> (usize, BTreeMap<FpCategory, usize>) {
    let mut tp = 0usize;
    let mut counts: BTreeMap<FpCategory, usize> =
        FpCategory::ALL.into_iter().map(|c| (c, 0)).collect();
    for tag in tags {
        match tag {
            PredictionTag::TruePositive => tp += 1,
            PredictionTag::FalsePositive(c) => *counts.get_mut(c).unwrap() += 1,
        }
    }
    (tp, counts)
}

/// mAP gained (percentage points) by deleting every prediction tagged with
/// `category` and re-evaluating. Never negative up to float tolerance:
/// false positives only hurt precision.
pub fn error_impact(
    preds: &[Prediction],
    tags: &[PredictionTag],
    dataset: &Dataset,
    protocol: &EvalProtocol,
    category: FpCategory,
) -> f64 {
    debug_assert_eq!(preds.len(), tags.len());
    let kept: Vec<Prediction> = preds
        .iter()
        .zip(tags)
        .filter(|(_, tag)| **tag != PredictionTag::FalsePositive(category))
        .map(|(p, _)| p.clone())
        .collect();
    let base = mean_ap(preds, dataset, protocol).aggregate;
    let cleaned = mean_ap(&kept, dataset, protocol).aggregate;
    cleaned - base
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ActionInstance, VideoRecord};
    use alloc::vec;

    fn pred(video: &str, s: f64, e: f64, label: &str, score: f64) -> Prediction {
        Prediction {
            video_id: video.into(),
            start_sec: s,
            end_sec: e,
            label: label.into(),
            score,
        }
    }

    /// One GT "a" at [10, 20] and one GT "b" at [40, 50] in a 100 s video.
    fn dataset() -> Dataset {
        let v = VideoRecord::new(
            "v0",
            10.0,
            1000,
            100.0,
            vec![
                ActionInstance::new(10.0, 20.0, "a"),
                ActionInstance::new(40.0, 50.0, "b"),
            ],
        )
        .unwrap();
        Dataset::new("d", vec!["a".into(), "b".into()], vec![v]).unwrap()
    }

    #[test]
    fn fp_with_zero_overlap_is_background() {
        let preds = vec![pred("v0", 70.0, 80.0, "a", 0.9)];
        let tags = classify_false_positives(&preds, &dataset(), 0.5, BACKGROUND_TIOU);
        assert_eq!(tags, vec![PredictionTag::FalsePositive(FpCategory::Background)]);
    }

    #[test]
    fn duplicate_prediction_is_double_detection() {
        let preds = vec![
            pred("v0", 10.0, 20.0, "a", 0.9),
            pred("v0", 10.0, 20.0, "a", 0.8),
        ];
        let tags = classify_false_positives(&preds, &dataset(), 0.5, BACKGROUND_TIOU);
        assert_eq!(tags[0], PredictionTag::TruePositive);
        assert_eq!(tags[1], PredictionTag::FalsePositive(FpCategory::DoubleDetection));
    }

    #[test]
    fn same_label_band_is_localization() {
        // tIoU vs "a" gt: [10,20] vs [16,26] -> 4/16 = 0.25, in [0.1, 0.5)
        let preds = vec![pred("v0", 16.0, 26.0, "a", 0.9)];
        let tags = classify_false_positives(&preds, &dataset(), 0.5, BACKGROUND_TIOU);
        assert_eq!(tags, vec![PredictionTag::FalsePositive(FpCategory::Localization)]);
    }

    #[test]
    fn cross_label_bands() {
        // high overlap with "b" gt while labeled "a": wrong label
        let wrong = vec![pred("v0", 40.0, 50.0, "a", 0.9)];
        let tags = classify_false_positives(&wrong, &dataset(), 0.5, BACKGROUND_TIOU);
        assert_eq!(tags, vec![PredictionTag::FalsePositive(FpCategory::WrongLabel)]);

        // mediocre overlap with "b" only: confusion
        let conf = vec![pred("v0", 46.0, 56.0, "a", 0.9)];
        let tags = classify_false_positives(&conf, &dataset(), 0.5, BACKGROUND_TIOU);
        assert_eq!(tags, vec![PredictionTag::FalsePositive(FpCategory::Confusion)]);
    }

    #[test]
    fn partition_property() {
        let preds = vec![
            pred("v0", 10.0, 20.0, "a", 0.9),
            pred("v0", 10.0, 20.0, "a", 0.85),
            pred("v0", 16.0, 26.0, "a", 0.8),
            pred("v0", 40.0, 50.0, "a", 0.7),
            pred("v0", 46.0, 56.0, "a", 0.6),
            pred("v0", 70.0, 80.0, "a", 0.5),
            pred("v0", 40.0, 50.0, "b", 0.4),
        ];
        let tags = classify_false_positives(&preds, &dataset(), 0.5, BACKGROUND_TIOU);
        let (tp, counts) = tag_counts(&tags);
        assert_eq!(tp + counts.values().sum::<usize>(), preds.len());
        assert_eq!(tp, 2);
    }

    #[test]
    fn impact_absent_category_is_zero() {
        let preds = vec![pred("v0", 10.0, 20.0, "a", 0.9)];
        let tags = classify_false_positives(&preds, &dataset(), 0.5, BACKGROUND_TIOU);
        let d = error_impact(&preds, &tags, &dataset(), &EvalProtocol::single(0.5), FpCategory::Background);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn removing_high_ranked_fp_raises_map() {
        // background FP outranks the only TP for class "a"
        let preds = vec![
            pred("v0", 70.0, 80.0, "a", 0.95),
            pred("v0", 10.0, 20.0, "a", 0.9),
            pred("v0", 40.0, 50.0, "b", 0.9),
        ];
        let tags = classify_false_positives(&preds, &dataset(), 0.5, BACKGROUND_TIOU);
        let protocol = EvalProtocol::single(0.5);
        let d = error_impact(&preds, &tags, &dataset(), &protocol, FpCategory::Background);
        assert!(d > 0.0, "delta = {d}");

        // removing every category reaches the TP-only ceiling
        let mut cleaned = preds.clone();
        let mut kept_tags = tags.clone();
        for cat in FpCategory::ALL {
            let keep: Vec<bool> = kept_tags
                .iter()
                .map(|t| *t != PredictionTag::FalsePositive(cat))
                .collect();
            cleaned = cleaned
                .into_iter()
                .zip(keep.iter())
                .filter(|(_, k)| **k)
                .map(|(p, _)| p)
                .collect();
            kept_tags = kept_tags.into_iter().zip(keep).filter(|(_, k)| *k).map(|(t, _)| t).collect();
        }
        let ceiling = mean_ap(&cleaned, &dataset(), &protocol).aggregate;
        assert_eq!(ceiling, 100.0);
    }
}
