//! Domain types for untrimmed-video action detection and the time/frame
//! conversions the rest of the toolkit builds on.
//!
//! Time is canonical in seconds; frame indices are always derived via
//! [`sec_to_frame`], never stored. All types are immutable after
//! construction and safe to share read-only across parallel workers.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

// Float resolves f64 math in no_std builds; when a workspace build links
// std, the inherent methods win and this import goes quiet.
#[allow(unused_imports)]
use num_traits::Float;


/// A single annotated action: `[start_sec, end_sec)` with a category label.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionInstance {
    pub start_sec: f64,
    pub end_sec: f64,
    pub label: String,
}

impl ActionInstance {
    pub fn new(start_sec: f64, end_sec: f64, label: impl Into<String>) -> Self {
        Self { start_sec, end_sec, label: label.into() }
    }

    pub fn segment(&self) -> (f64, f64) {
        (self.start_sec, self.end_sec)
    }

    /// Timestamp of the instance center, the reference point for
    /// action-centric prediction sampling.
    pub fn center_sec(&self) -> f64 {
        0.5 * (self.start_sec + self.end_sec)
    }
}

/// One untrimmed video: timing metadata plus its sorted annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoRecord {
    pub id: String,
    pub fps: f64,
    pub frame_count: usize,
    pub duration_sec: f64,
    pub annotations: Vec<ActionInstance>,
}

/// A named dataset: label vocabulary plus videos sorted by id.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub label_set: Vec<String>,
    pub videos: Vec<VideoRecord>,
}

/// A scored detection output.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub video_id: String,
    pub start_sec: f64,
    pub end_sec: f64,
    pub label: String,
    pub score: f64,
}

impl Prediction {
    pub fn segment(&self) -> (f64, f64) {
        (self.start_sec, self.end_sec)
    }

    pub fn center_sec(&self) -> f64 {
        0.5 * (self.start_sec + self.end_sec)
    }
}

/// Decoded video frames: fixed geometry, 8-bit RGB, row-major interleaved.
///
/// Frames are stored in one contiguous buffer; `frame(i)` views the i-th
/// `width * height * 3` byte plane.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

/// RGB is the only supported pixel layout.
pub const CHANNELS: usize = 3;

impl FrameSequence {
    /// Builds a sequence from a contiguous frame buffer.
    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ValidationError> {
        let frame_len = width as usize * height as usize * CHANNELS;
        if frame_len == 0 || !data.len().is_multiple_of(frame_len) {
            return Err(ValidationError::FrameGeometry {
                width,
                height,
                byte_len: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    /// An all-zero (black) sequence of `frame_count` frames.
    pub fn black(width: u32, height: u32, frame_count: usize) -> Self {
        let frame_len = width as usize * height as usize * CHANNELS;
        Self { width, height, data: alloc::vec![0u8; frame_len * frame_count] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn frame_len(&self) -> usize {
        self.width as usize * self.height as usize * CHANNELS
    }

    pub fn frame_count(&self) -> usize {
        self.data.len() / self.frame_len()
    }

    pub fn frame(&self, index: usize) -> &[u8] {
        let len = self.frame_len();
        &self.data[index * len..(index + 1) * len]
    }

    pub fn frame_mut(&mut self, index: usize) -> &mut [u8] {
        let len = self.frame_len();
        &mut self.data[index * len..(index + 1) * len]
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }
}

/// Invariant violations raised while constructing domain values.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationError {
    /// start_sec must be strictly below end_sec.
    SegmentOrder { video_id: String, start_sec: f64, end_sec: f64 },
    /// An annotation must end within its video.
    SegmentPastEnd { video_id: String, end_sec: f64, duration_sec: f64 },
    /// fps must be positive and finite.
    InvalidFps { video_id: String, fps: f64 },
    /// frame_count must be at least 1.
    EmptyVideo { video_id: String },
    /// |duration - frame_count/fps| must be within one frame period.
    DurationMismatch { video_id: String, duration_sec: f64, derived_sec: f64 },
    /// Video ids must be unique within a dataset.
    DuplicateVideoId { video_id: String },
    /// Every annotation label must belong to the dataset label set.
    UnknownLabel { video_id: String, label: String },
    /// Prediction scores live in [0, 1].
    ScoreRange { video_id: String, score: f64 },
    /// Frame buffer length must be a whole number of non-empty frames.
    FrameGeometry { width: u32, height: u32, byte_len: usize },
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SegmentOrder { video_id, start_sec, end_sec } => write!(
                f,
                "video {video_id}: segment start {start_sec} must be < end {end_sec}"
            ),
            Self::SegmentPastEnd { video_id, end_sec, duration_sec } => write!(
                f,
                "video {video_id}: segment end {end_sec} exceeds duration {duration_sec}"
            ),
            Self::InvalidFps { video_id, fps } => {
                write!(f, "video {video_id}: fps {fps} must be positive and finite")
            }
            Self::EmptyVideo { video_id } => {
                write!(f, "video {video_id}: frame_count must be >= 1")
            }
            Self::DurationMismatch { video_id, duration_sec, derived_sec } => write!(
                f,
                "video {video_id}: duration {duration_sec} disagrees with frame_count/fps = {derived_sec}"
            ),
            Self::DuplicateVideoId { video_id } => {
                write!(f, "duplicate video id {video_id}")
            }
            Self::UnknownLabel { video_id, label } => {
                write!(f, "video {video_id}: label {label:?} is not in the dataset label set")
            }
            Self::ScoreRange { video_id, score } => {
                write!(f, "video {video_id}: prediction score {score} outside [0, 1]")
            }
            Self::FrameGeometry { width, height, byte_len } => write!(
                f,
                "frame buffer of {byte_len} bytes is not a whole number of {width}x{height} RGB frames"
            ),
        }
    }
}

impl VideoRecord {
    /// Validates and normalizes a record: annotations get sorted by start
    /// time (overlaps are permitted, multi-label datasets have them).
    pub fn new(
        id: impl Into<String>,
        fps: f64,
        frame_count: usize,
        duration_sec: f64,
        mut annotations: Vec<ActionInstance>,
    ) -> Result<Self, ValidationError> {
        let id = id.into();
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(ValidationError::InvalidFps { video_id: id, fps });
        }
        if frame_count == 0 {
            return Err(ValidationError::EmptyVideo { video_id: id });
        }
        let derived = frame_count as f64 / fps;
        if (duration_sec - derived).abs() > 1.0 / fps {
            return Err(ValidationError::DurationMismatch {
                video_id: id,
                duration_sec,
                derived_sec: derived,
            });
        }
        for a in &annotations {
            if !(a.start_sec < a.end_sec) || a.start_sec < 0.0 {
                return Err(ValidationError::SegmentOrder {
                    video_id: id,
                    start_sec: a.start_sec,
                    end_sec: a.end_sec,
                });
            }
            if a.end_sec > duration_sec {
                return Err(ValidationError::SegmentPastEnd {
                    video_id: id,
                    end_sec: a.end_sec,
                    duration_sec,
                });
            }
        }
        annotations.sort_by(|a, b| {
            a.start_sec
                .partial_cmp(&b.start_sec)
                .unwrap()
                .then_with(|| a.end_sec.partial_cmp(&b.end_sec).unwrap())
        });
        Ok(Self { id, fps, frame_count, duration_sec, annotations })
    }
}

impl Dataset {
    /// Validates and normalizes a dataset: videos get sorted by id, ids must
    /// be unique, and every annotation label must be in the label set.
    pub fn new(
        name: impl Into<String>,
        label_set: Vec<String>,
        mut videos: Vec<VideoRecord>,
    ) -> Result<Self, ValidationError> {
        videos.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in videos.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(ValidationError::DuplicateVideoId { video_id: pair[0].id.clone() });
            }
        }
        for v in &videos {
            for a in &v.annotations {
                if !label_set.iter().any(|l| *l == a.label) {
                    return Err(ValidationError::UnknownLabel {
                        video_id: v.id.clone(),
                        label: a.label.clone(),
                    });
                }
            }
        }
        Ok(Self { name: name.into(), label_set, videos })
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.id == id)
    }
}

/// Maps a timestamp to a frame index: `clamp(floor(t * fps), 0, count - 1)`.
pub fn sec_to_frame(t: f64, fps: f64, count: usize) -> usize {
    debug_assert!(fps > 0.0 && count >= 1);
    let raw = (t * fps).floor();
    if raw <= 0.0 {
        0
    } else {
        (raw as usize).min(count - 1)
    }
}

/// Inclusive frame index range covered by an action instance.
pub fn frame_span(a: &ActionInstance, fps: f64, count: usize) -> (usize, usize) {
    let start = sec_to_frame(a.start_sec, fps, count);
    let end = sec_to_frame(a.end_sec, fps, count);
    (start, end.max(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn sec_to_frame_examples() {
        assert_eq!(sec_to_frame(0.0, 30.0, 300), 0);
        // floor(9.999 * 30) = floor(299.97) = 299
        assert_eq!(sec_to_frame(9.999, 30.0, 300), 299);
        assert_eq!(sec_to_frame(100.0, 30.0, 300), 299);
    }

    #[test]
    fn frame_span_examples() {
        let a = ActionInstance::new(2.0, 8.0, "jump");
        assert_eq!(frame_span(&a, 10.0, 200), (20, 80));

        let whole = ActionInstance::new(0.0, 20.0, "jump");
        assert_eq!(frame_span(&whole, 10.0, 200), (0, 199));

        // Both endpoints floor to frame 0: a single-frame span.
        let tiny = ActionInstance::new(0.05, 0.09, "jump");
        assert_eq!(frame_span(&tiny, 10.0, 100), (0, 0));
    }

    #[test]
    fn record_rejects_reversed_segment() {
        let err = VideoRecord::new(
            "v0",
            10.0,
            100,
            10.0,
            vec![ActionInstance::new(8.0, 2.0, "jump")],
        )
        .unwrap_err();
        assert!(matches!(err, ValidationError::SegmentOrder { .. }));
    }

    #[test]
    fn record_rejects_segment_past_duration() {
        let err = VideoRecord::new(
            "v0",
            10.0,
            100,
            10.0,
            vec![ActionInstance::new(2.0, 11.0, "jump")],
        )
        .unwrap_err();
        assert!(matches!(err, ValidationError::SegmentPastEnd { .. }));
    }

    #[test]
    fn record_sorts_annotations_by_start() {
        let rec = VideoRecord::new(
            "v0",
            10.0,
            100,
            10.0,
            vec![
                ActionInstance::new(5.0, 7.0, "b"),
                ActionInstance::new(1.0, 3.0, "a"),
            ],
        )
        .unwrap();
        assert_eq!(rec.annotations[0].label, "a");
        assert_eq!(rec.annotations[1].label, "b");
    }

    #[test]
    fn dataset_sorts_videos_and_rejects_duplicates() {
        let mk = |id: &str| VideoRecord::new(id, 10.0, 100, 10.0, vec![]).unwrap();
        let ds = Dataset::new("d", vec![], vec![mk("b"), mk("a")]).unwrap();
        assert_eq!(ds.videos[0].id, "a");

        let err = Dataset::new("d", vec![], vec![mk("a"), mk("a")]).unwrap_err();
        assert!(matches!(err, ValidationError::DuplicateVideoId { .. }));
    }

    #[test]
    fn dataset_rejects_unknown_label() {
        let rec = VideoRecord::new(
            "v0",
            10.0,
            100,
            10.0,
            vec![ActionInstance::new(1.0, 2.0, "swim")],
        )
        .unwrap();
        let err = Dataset::new("d", vec!["jump".into()], vec![rec]).unwrap_err();
        assert!(matches!(err, ValidationError::UnknownLabel { .. }));
    }

    #[test]
    fn frame_sequence_geometry() {
        let seq = FrameSequence::from_raw(2, 2, vec![0u8; 2 * 2 * 3 * 4]).unwrap();
        assert_eq!(seq.frame_count(), 4);
        assert_eq!(seq.frame(3).len(), 12);
        assert!(FrameSequence::from_raw(2, 2, vec![0u8; 13]).is_err());
    }
}
