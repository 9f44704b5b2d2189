//! Action-background pairing and the FrameDrop augmentation.
//!
//! Each annotated action is paired with the background gap that follows it
//! (up to the next action or the video end); background before the first
//! action joins the first pair. Every frame of the video belongs to at most
//! one pair. FrameDrop replaces exactly one frame per pair with a black
//! frame (or a zeroed feature timestep).

use alloc::vec::Vec;

use rand::Rng;

use crate::types::{frame_span, FrameSequence, VideoRecord};

use super::FeatureSequence;

/// An action span grouped with its adjacent background frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbPair {
    /// Inclusive action frame range.
    pub action: (usize, usize),
    /// Background frame ranges (the gap following the action; the first
    /// pair may also carry the leading background). May be empty.
    pub background: Vec<(usize, usize)>,
}

impl AbPair {
    pub fn action_len(&self) -> usize {
        self.action.1 - self.action.0 + 1
    }

    pub fn background_len(&self) -> usize {
        self.background.iter().map(|(a, b)| b - a + 1).sum()
    }

    pub fn frame_count(&self) -> usize {
        self.action_len() + self.background_len()
    }

    /// The j-th frame of the pair: action frames first, then background.
    fn nth(&self, j: usize) -> usize {
        if j < self.action_len() {
            return self.action.0 + j;
        }
        let mut rest = j - self.action_len();
        for &(a, b) in &self.background {
            let len = b - a + 1;
            if rest < len {
                return a + rest;
            }
            rest -= len;
        }
        unreachable!("index {j} out of pair bounds");
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.action.0..=self.action.1).contains(&frame)
            || self.background.iter().any(|&(a, b)| (a..=b).contains(&frame))
    }
}

/// Splits a video into action-background pairs.
///
/// Overlapping annotations are merged into one action span first; the
/// returned count says how many merges happened so callers can log them.
pub fn segment_ab_pairs(
    record: &VideoRecord,
    fps: f64,
    frame_count: usize,
) -> (Vec<AbPair>, usize) {
    let mut spans: Vec<(usize, usize)> = record
        .annotations
        .iter()
        .map(|a| frame_span(a, fps, frame_count))
        .collect();
    spans.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    let mut merges = 0usize;
    for s in spans {
        match merged.last_mut() {
            Some(last) if s.0 <= last.1 => {
                last.1 = last.1.max(s.1);
                merges += 1;
            }
            _ => merged.push(s),
        }
    }
    if merged.is_empty() {
        return (Vec::new(), merges);
    }

    let mut pairs = Vec::with_capacity(merged.len());
    for (i, &action) in merged.iter().enumerate() {
        let gap_end = if i + 1 < merged.len() { merged[i + 1].0 - 1 } else { frame_count - 1 };
        let mut background = Vec::new();
        if action.1 < gap_end {
            background.push((action.1 + 1, gap_end));
        }
        if i == 0 && merged[0].0 > 0 {
            background.push((0, merged[0].0 - 1));
        }
        pairs.push(AbPair { action, background });
    }
    (pairs, merges)
}

/// Which frames FrameDrop may pick from within a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropScope {
    /// Uniform over the whole pair, action and background alike (default;
    /// keeps the model from learning that drops imply an action).
    AbPair,
    /// Uniform over action frames only.
    ActionOnly,
}

/// Picks one frame to drop per pair. Deterministic given the RNG state.
pub fn framedrop_indices(
    pairs: &[AbPair],
    rng: &mut impl Rng,
    scope: DropScope,
) -> Vec<usize> {
    pairs
        .iter()
        .map(|pair| match scope {
            DropScope::AbPair => pair.nth(rng.gen_range(0..pair.frame_count())),
            DropScope::ActionOnly => pair.action.0 + rng.gen_range(0..pair.action_len()),
        })
        .collect()
}

/// FrameDrop over pixel frames: one black frame per pair.
pub fn framedrop_frames(
    seq: &FrameSequence,
    pairs: &[AbPair],
    rng: &mut impl Rng,
    scope: DropScope,
) -> (FrameSequence, Vec<usize>) {
    let indices = framedrop_indices(pairs, rng, scope);
    let mut out = seq.clone();
    for &i in &indices {
        out.frame_mut(i).fill(0);
    }
    (out, indices)
}

/// FrameDrop over feature timesteps: one zeroed row per pair.
pub fn framedrop_features(
    seq: &FeatureSequence,
    pairs: &[AbPair],
    rng: &mut impl Rng,
    scope: DropScope,
) -> (FeatureSequence, Vec<usize>) {
    let indices = framedrop_indices(pairs, rng, scope);
    let mut out = seq.clone();
    for &i in &indices {
        out.zero_row(i);
    }
    (out, indices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ActionInstance;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(annotations: Vec<ActionInstance>, frame_count: usize) -> VideoRecord {
        VideoRecord::new("v0", 1.0, frame_count, frame_count as f64, annotations).unwrap()
    }

    #[test]
    fn single_action_takes_leading_and_trailing_background() {
        let rec = record(vec![ActionInstance::new(20.0, 80.0, "a")], 200);
        let (pairs, merges) = segment_ab_pairs(&rec, 1.0, 200);
        assert_eq!(merges, 0);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].action, (20, 80));
        assert_eq!(pairs[0].background, vec![(81, 199), (0, 19)]);
        assert_eq!(pairs[0].frame_count(), 200);
    }

    #[test]
    fn back_to_back_actions_leave_empty_background() {
        let rec = record(
            vec![ActionInstance::new(10.0, 20.0, "a"), ActionInstance::new(21.0, 99.0, "a")],
            100,
        );
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 100);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].action, (21, 99));
        assert_eq!(pairs[1].background_len(), 0);
    }

    #[test]
    fn two_actions_partition_the_video() {
        let rec = record(
            vec![ActionInstance::new(10.0, 20.0, "a"), ActionInstance::new(50.0, 60.0, "a")],
            100,
        );
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 100);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].action, (10, 20));
        assert_eq!(pairs[0].background, vec![(21, 49), (0, 9)]);
        assert_eq!(pairs[1].action, (50, 60));
        assert_eq!(pairs[1].background, vec![(61, 99)]);
        // every frame in exactly one pair
        for f in 0..100 {
            assert_eq!(pairs.iter().filter(|p| p.contains(f)).count(), 1, "frame {f}");
        }
    }

    #[test]
    fn overlapping_annotations_merge() {
        let rec = record(
            vec![ActionInstance::new(10.0, 30.0, "a"), ActionInstance::new(20.0, 40.0, "b")],
            100,
        );
        let (pairs, merges) = segment_ab_pairs(&rec, 1.0, 100);
        assert_eq!(merges, 1);
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].action, (10, 40));
    }

    #[test]
    fn no_annotations_no_pairs() {
        let rec = record(vec![], 100);
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 100);
        assert!(pairs.is_empty());
    }

    #[test]
    fn framedrop_one_index_per_pair() {
        let rec = record(
            vec![ActionInstance::new(10.0, 20.0, "a"), ActionInstance::new(50.0, 60.0, "a")],
            100,
        );
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let indices = framedrop_indices(&pairs, &mut rng, DropScope::AbPair);
        assert_eq!(indices.len(), pairs.len());
        for (i, &idx) in indices.iter().enumerate() {
            assert!(pairs[i].contains(idx));
        }
    }

    #[test]
    fn framedrop_deterministic() {
        let rec = record(vec![ActionInstance::new(10.0, 20.0, "a")], 100);
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 100);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            framedrop_indices(&pairs, &mut rng, DropScope::AbPair)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn action_only_scope_stays_in_actions() {
        let rec = record(
            vec![ActionInstance::new(10.0, 20.0, "a"), ActionInstance::new(50.0, 60.0, "a")],
            100,
        );
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            for (i, &idx) in framedrop_indices(&pairs, &mut rng, DropScope::ActionOnly)
                .iter()
                .enumerate()
            {
                let (a0, a1) = pairs[i].action;
                assert!((a0..=a1).contains(&idx));
            }
        }
    }

    #[test]
    fn ab_scope_drop_frequency_balanced() {
        // One pair with equal action and background footage: drops land in
        // the action about half the time.
        let rec = record(vec![ActionInstance::new(0.0, 49.0, "a")], 100);
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 100);
        assert_eq!(pairs[0].action_len(), 50);
        assert_eq!(pairs[0].background_len(), 50);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut inside = 0usize;
        for _ in 0..trials {
            let idx = framedrop_indices(&pairs, &mut rng, DropScope::AbPair)[0];
            if idx <= 49 {
                inside += 1;
            }
        }
        let freq = inside as f64 / trials as f64;
        assert!((0.47..=0.53).contains(&freq), "action-drop frequency {freq}");
    }

    #[test]
    fn framedrop_applies_to_frames_and_features() {
        let rec = record(vec![ActionInstance::new(2.0, 5.0, "a")], 10);
        let (pairs, _) = segment_ab_pairs(&rec, 1.0, 10);
        let frames = FrameSequence::from_raw(2, 2, vec![9u8; 2 * 2 * 3 * 10]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (dropped, idx) = framedrop_frames(&frames, &pairs, &mut rng, DropScope::AbPair);
        assert!(dropped.frame(idx[0]).iter().all(|&v| v == 0));

        let feats = FeatureSequence::from_values(10, 3, vec![1.0; 30]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (dropped, idx2) = framedrop_features(&feats, &pairs, &mut rng, DropScope::AbPair);
        assert_eq!(idx, idx2, "same rng state picks the same indices");
        assert!(dropped.row(idx2[0]).iter().all(|&v| v == 0.0));
    }
}
