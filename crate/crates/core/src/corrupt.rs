//! Temporal corruption synthesis: frame-level transforms plus the placement
//! logic that decides which frames of an action instance get corrupted.
//!
//! All randomness derives from `(spec seed, video id, frame index)` (or the
//! window start, for state shared across a window), never from execution
//! order, so corruption of a video is reproducible byte-for-byte and videos
//! can be processed in parallel.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

// Float resolves f64 math in no_std builds; when a workspace build links
// std, the inherent methods win and this import goes quiet.
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hash::{frame_seed, window_seed};
use crate::types::{frame_span, FrameSequence, VideoRecord};

/// The nine frame corruption transforms.
///
/// The first five are the core set used for benchmark grids; the last four
/// are extended types. `FrameRate`, `SlowMotion` and `TimeLapse` are
/// temporal: they remap frames within the corruption window instead of
/// altering pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorruptionType {
    BlackFrame,
    PacketLoss,
    Overexposure,
    MotionBlur,
    Occlusion,
    Jittering,
    FrameRate,
    SlowMotion,
    TimeLapse,
}

impl CorruptionType {
    pub const CORE: [CorruptionType; 5] = [
        Self::BlackFrame,
        Self::PacketLoss,
        Self::Overexposure,
        Self::MotionBlur,
        Self::Occlusion,
    ];

    pub const EXTENDED: [CorruptionType; 4] =
        [Self::Jittering, Self::FrameRate, Self::SlowMotion, Self::TimeLapse];

    pub fn is_core(self) -> bool {
        Self::CORE.contains(&self)
    }

    /// Temporal types reorder frames within the window rather than
    /// transforming pixels.
    pub fn is_temporal(self) -> bool {
        matches!(self, Self::FrameRate | Self::SlowMotion | Self::TimeLapse)
    }

    /// Whether the transform consumes random state. Seed changes leave
    /// seed-independent transforms byte-identical.
    pub fn is_seeded(self) -> bool {
        matches!(self, Self::PacketLoss | Self::Occlusion | Self::Jittering)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::BlackFrame => "black_frame",
            Self::PacketLoss => "packet_loss",
            Self::Overexposure => "overexposure",
            Self::MotionBlur => "motion_blur",
            Self::Occlusion => "occlusion",
            Self::Jittering => "jittering",
            Self::FrameRate => "frame_rate",
            Self::SlowMotion => "slow_motion",
            Self::TimeLapse => "time_lapse",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        let all = [
            Self::BlackFrame,
            Self::PacketLoss,
            Self::Overexposure,
            Self::MotionBlur,
            Self::Occlusion,
            Self::Jittering,
            Self::FrameRate,
            Self::SlowMotion,
            Self::TimeLapse,
        ];
        all.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for CorruptionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Severity level 1..=3, mapping to the corrupted fraction of an action's
/// frames: 1% / 5% / 10%.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeverityLevel {
    level: u8,
}

impl SeverityLevel {
    pub const ALL: [SeverityLevel; 3] =
        [SeverityLevel { level: 1 }, SeverityLevel { level: 2 }, SeverityLevel { level: 3 }];

    pub fn new(level: u8) -> Option<Self> {
        (1..=3).contains(&level).then_some(Self { level })
    }

    pub fn level(self) -> u8 {
        self.level
    }

    pub fn percent(self) -> u32 {
        match self.level {
            1 => 1,
            2 => 5,
            _ => 10,
        }
    }
}

/// Where the corruption window lands inside each action instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlacementPolicy {
    /// The central `l%` of each action's frames (benchmark default).
    CenterOfAction,
    /// A 5-frame window centered at the given fraction of the action,
    /// for position sweeps.
    FixedFraction(f64),
    /// One explicit frame window, ignoring annotations.
    ExplicitWindow(usize, usize),
}

/// How a second corruption type combines with the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionMode {
    /// Both transforms applied sequentially to every window frame.
    Spatial,
    /// First type on the first half of the window, second on the rest.
    Temporal,
}

/// A fully-determined corruption application.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    pub ctype: CorruptionType,
    pub severity: SeverityLevel,
    pub placement: PlacementPolicy,
    pub seed: u64,
    pub composition: Option<(CorruptionType, CompositionMode)>,
}

impl CorruptionSpec {
    pub fn new(ctype: CorruptionType, severity: SeverityLevel, seed: u64) -> Self {
        Self { ctype, severity, placement: PlacementPolicy::CenterOfAction, seed, composition: None }
    }

    /// Adds a second corruption type. Only two distinct core types compose.
    pub fn with_composition(
        mut self,
        second: CorruptionType,
        mode: CompositionMode,
    ) -> Result<Self, CorruptError> {
        if !self.ctype.is_core() || !second.is_core() || second == self.ctype {
            return Err(CorruptError::InvalidComposition { first: self.ctype, second });
        }
        self.composition = Some((second, mode));
        Ok(self)
    }

    /// The transform types applied by this spec, in application order.
    pub fn types(&self) -> Vec<CorruptionType> {
        let mut t = alloc::vec![self.ctype];
        if let Some((second, _)) = self.composition {
            t.push(second);
        }
        t
    }
}

/// One corrupted window, as recorded in the corruption log.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowLog {
    pub video_id: String,
    pub window: (usize, usize),
    pub types: Vec<CorruptionType>,
    pub severity: u8,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorruptError {
    InvalidComposition { first: CorruptionType, second: CorruptionType },
    WindowOutOfBounds { window: (usize, usize), frame_count: usize },
    FrameCountMismatch { expected: usize, actual: usize },
    /// An action is too short for the 5-frame sweep window; the video is
    /// excluded from the sweep.
    SweepActionTooShort { video_id: String, action_frames: usize },
}

impl fmt::Display for CorruptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidComposition { first, second } => {
                write!(f, "composition requires two distinct core types, got {first} + {second}")
            }
            Self::WindowOutOfBounds { window, frame_count } => {
                write!(f, "window [{}, {}] outside 0..{frame_count}", window.0, window.1)
            }
            Self::FrameCountMismatch { expected, actual } => {
                write!(f, "frame sequence has {actual} frames, record says {expected}")
            }
            Self::SweepActionTooShort { video_id, action_frames } => write!(
                f,
                "video {video_id}: action of {action_frames} frames is shorter than the 5-frame sweep window"
            ),
        }
    }
}

/// round-half-up, the deterministic rounding used for window sizing.
pub(crate) fn round_half_up(x: f64) -> usize {
    debug_assert!(x >= 0.0);
    (x + 0.5).floor() as usize
}

/// Central corruption window for an action: `n = max(1, round(l% * N_a))`
/// frames centered in the action span.
pub fn placement_window(action_frames: (usize, usize), severity: SeverityLevel) -> (usize, usize) {
    let (a0, a1) = action_frames;
    debug_assert!(a1 >= a0);
    let n_a = a1 - a0 + 1;
    let n = round_half_up(severity.percent() as f64 * n_a as f64 / 100.0).max(1);
    let start = a0 + (n_a - n) / 2;
    (start, start + n - 1)
}

/// 5-frame sweep window centered at `fraction` of the action, clamped inside
/// the action span. Errors when the action has fewer than 5 frames.
pub fn sweep_window(
    action_frames: (usize, usize),
    fraction: f64,
) -> Result<(usize, usize), CorruptError> {
    const SWEEP_LEN: usize = 5;
    let (a0, a1) = action_frames;
    let n_a = a1 - a0 + 1;
    if n_a < SWEEP_LEN {
        return Err(CorruptError::SweepActionTooShort {
            video_id: String::new(),
            action_frames: n_a,
        });
    }
    let center = a0 + round_half_up(fraction * (n_a - 1) as f64);
    let mut start = center.saturating_sub(SWEEP_LEN / 2).max(a0);
    if start + SWEEP_LEN - 1 > a1 {
        start = a1 - (SWEEP_LEN - 1);
    }
    Ok((start, start + SWEEP_LEN - 1))
}

/// Per-frame context for transforms that need more than the frame itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrameContext<'a> {
    /// The original (pre-corruption) previous frame; `None` at index 0.
    /// Packet loss copies stale blocks from here.
    pub prev_frame: Option<&'a [u8]>,
    /// Window-stable occlusion rectangle. When absent, a rectangle is drawn
    /// from `rng` (callers that corrupt whole windows pass a window-seeded
    /// rectangle so every frame shares it).
    pub occlusion: Option<OcclusionRect>,
}

/// An occlusion rectangle in pixel coordinates, top-left inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OcclusionRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

/// Fraction of frame area the occlusion rectangle covers.
const OCCLUSION_AREA: f64 = 0.40;
/// Gray fill value for occlusions.
const OCCLUSION_FILL: u8 = 128;
/// Gamma and gain of the overexposure transfer curve.
const OVEREXPOSE_GAMMA: f64 = 0.45;
const OVEREXPOSE_GAIN: f64 = 1.6;
/// Horizontal box-blur tap count.
const BLUR_TAPS: usize = 15;
/// Edge length of packet-loss blocks, and per-block corruption probability.
const BLOCK: usize = 16;
const BLOCK_PROB: f64 = 0.3;
/// Maximum |shift| in pixels for packet-loss block offsets and jitter.
const MAX_SHIFT: i32 = 8;

impl OcclusionRect {
    /// Samples the rectangle position for a frame geometry. Side lengths are
    /// fixed by the target area fraction; only the position is random.
    pub fn sample(width: u32, height: u32, rng: &mut impl Rng) -> Self {
        let side = OCCLUSION_AREA.sqrt();
        let w = ((width as f64 * side).round() as u32).clamp(1, width);
        let h = ((height as f64 * side).round() as u32).clamp(1, height);
        let x = rng.gen_range(0..=width - w);
        let y = rng.gen_range(0..=height - h);
        Self { x, y, w, h }
    }
}

/// Applies one corruption transform to a single frame.
///
/// Pure in `(frame, ctype, rng state, ctx)`. Temporal types return the frame
/// unchanged (they act on window ordering, not pixels; see
/// [`corrupt_window`]).
pub fn corrupt_frame(
    frame: &[u8],
    width: u32,
    height: u32,
    ctype: CorruptionType,
    rng: &mut ChaCha8Rng,
    ctx: FrameContext<'_>,
) -> Vec<u8> {
    debug_assert_eq!(frame.len(), width as usize * height as usize * 3);
    match ctype {
        CorruptionType::BlackFrame => alloc::vec![0u8; frame.len()],
        CorruptionType::Overexposure => overexpose(frame),
        CorruptionType::MotionBlur => motion_blur(frame, width, height),
        CorruptionType::Occlusion => {
            let rect = ctx.occlusion.unwrap_or_else(|| OcclusionRect::sample(width, height, rng));
            occlude(frame, width, rect)
        }
        CorruptionType::PacketLoss => packet_loss(frame, ctx.prev_frame, width, height, rng),
        CorruptionType::Jittering => jitter(frame, width, height, rng),
        CorruptionType::FrameRate | CorruptionType::SlowMotion | CorruptionType::TimeLapse => {
            frame.to_vec()
        }
    }
}

fn overexpose(frame: &[u8]) -> Vec<u8> {
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        let lifted = (v as f64 / 255.0).powf(OVEREXPOSE_GAMMA) * OVEREXPOSE_GAIN;
        *out = (255.0 * lifted + 0.5).floor().min(255.0) as u8;
    }
    frame.iter().map(|&v| lut[v as usize]).collect()
}

fn motion_blur(frame: &[u8], width: u32, height: u32) -> Vec<u8> {
    let (w, h) = (width as usize, height as usize);
    let half = (BLUR_TAPS / 2) as isize;
    let mut out = Vec::with_capacity(frame.len());
    for y in 0..h {
        let row = &frame[y * w * 3..(y + 1) * w * 3];
        for x in 0..w as isize {
            for c in 0..3 {
                let mut sum = 0u32;
                for dx in -half..=half {
                    let sx = (x + dx).clamp(0, w as isize - 1) as usize;
                    sum += u32::from(row[sx * 3 + c]);
                }
                out.push(((sum as f64 / BLUR_TAPS as f64) + 0.5).floor() as u8);
            }
        }
    }
    out
}

fn occlude(frame: &[u8], width: u32, rect: OcclusionRect) -> Vec<u8> {
    let w = width as usize;
    let mut out = frame.to_vec();
    for y in rect.y..rect.y + rect.h {
        let row = y as usize * w * 3;
        let x0 = row + rect.x as usize * 3;
        let x1 = x0 + rect.w as usize * 3;
        out[x0..x1].fill(OCCLUSION_FILL);
    }
    out
}

fn packet_loss(
    frame: &[u8],
    prev: Option<&[u8]>,
    width: u32,
    height: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<u8> {
    let (w, h) = (width as usize, height as usize);
    let mut out = frame.to_vec();
    for by in (0..h).step_by(BLOCK) {
        for bx in (0..w).step_by(BLOCK) {
            if rng.gen::<f64>() >= BLOCK_PROB {
                continue;
            }
            let dx = rng.gen_range(-MAX_SHIFT..=MAX_SHIFT);
            let dy = rng.gen_range(-MAX_SHIFT..=MAX_SHIFT);
            let bh = BLOCK.min(h - by);
            let bw = BLOCK.min(w - bx);
            for y in by..by + bh {
                for x in bx..bx + bw {
                    let idx = (y * w + x) * 3;
                    match prev {
                        Some(p) => {
                            let sy = (y as isize + dy as isize).clamp(0, h as isize - 1) as usize;
                            let sx = (x as isize + dx as isize).clamp(0, w as isize - 1) as usize;
                            let src = (sy * w + sx) * 3;
                            out[idx..idx + 3].copy_from_slice(&p[src..src + 3]);
                        }
                        None => out[idx..idx + 3].fill(0),
                    }
                }
            }
        }
    }
    out
}

fn jitter(frame: &[u8], width: u32, height: u32, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let (w, h) = (width as usize, height as usize);
    let dx = rng.gen_range(-MAX_SHIFT..=MAX_SHIFT) as isize;
    let dy = rng.gen_range(-MAX_SHIFT..=MAX_SHIFT) as isize;
    let mut out = Vec::with_capacity(frame.len());
    for y in 0..h as isize {
        let sy = (y - dy).clamp(0, h as isize - 1) as usize;
        for x in 0..w as isize {
            let sx = (x - dx).clamp(0, w as isize - 1) as usize;
            let src = (sy * w + sx) * 3;
            out.extend_from_slice(&frame[src..src + 3]);
        }
    }
    out
}

/// Corrupts the frames of `window` (inclusive) per the spec, leaving all
/// other frames byte-identical. Temporal types remap frames within the
/// window only; frame count is always preserved.
pub fn corrupt_window(
    seq: &FrameSequence,
    window: (usize, usize),
    spec: &CorruptionSpec,
    video_id: &str,
) -> Result<(FrameSequence, WindowLog), CorruptError> {
    if window.0 > window.1 || window.1 >= seq.frame_count() {
        return Err(CorruptError::WindowOutOfBounds { window, frame_count: seq.frame_count() });
    }
    let mut out = seq.clone();
    apply_window(&mut out, seq, window, spec, video_id);
    let log = WindowLog {
        video_id: String::from(video_id),
        window,
        types: spec.types(),
        severity: spec.severity.level(),
        seed: spec.seed,
    };
    Ok((out, log))
}

fn apply_window(
    out: &mut FrameSequence,
    input: &FrameSequence,
    window: (usize, usize),
    spec: &CorruptionSpec,
    video_id: &str,
) {
    match spec.composition {
        Some((second, CompositionMode::Temporal)) => {
            // First type takes the first half (rounded up), second the rest.
            let len = window.1 - window.0 + 1;
            let first_len = len - len / 2;
            apply_single(out, input, (window.0, window.0 + first_len - 1), spec.ctype, spec, video_id);
            if len > first_len {
                apply_single(out, input, (window.0 + first_len, window.1), second, spec, video_id);
            }
        }
        Some((second, CompositionMode::Spatial)) => {
            apply_composed(out, input, window, spec.ctype, second, spec, video_id);
        }
        None => apply_single(out, input, window, spec.ctype, spec, video_id),
    }
}

fn window_rng(spec: &CorruptionSpec, video_id: &str, window_start: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(window_seed(spec.seed, video_id, window_start))
}

fn frame_rng(spec: &CorruptionSpec, video_id: &str, frame: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(frame_seed(spec.seed, video_id, frame))
}

fn apply_single(
    out: &mut FrameSequence,
    input: &FrameSequence,
    window: (usize, usize),
    ctype: CorruptionType,
    spec: &CorruptionSpec,
    video_id: &str,
) {
    if ctype.is_temporal() {
        let (a, b) = window;
        let m = b - a + 1;
        for j in 0..m {
            let src = match ctype {
                CorruptionType::FrameRate => a + (j / 3) * 3,
                CorruptionType::SlowMotion => a + j / 2,
                // Keep every 2nd frame, then repeat the last kept one.
                CorruptionType::TimeLapse => a + (2 * j).min(2 * ((m - 1) / 2)),
                _ => unreachable!(),
            };
            let frame = input.frame(src).to_vec();
            out.frame_mut(a + j).copy_from_slice(&frame);
        }
        return;
    }

    let occlusion = (ctype == CorruptionType::Occlusion).then(|| {
        let mut rng = window_rng(spec, video_id, window.0);
        OcclusionRect::sample(input.width(), input.height(), &mut rng)
    });
    for idx in window.0..=window.1 {
        let ctx = FrameContext {
            prev_frame: (idx > 0).then(|| input.frame(idx - 1)),
            occlusion,
        };
        let mut rng = frame_rng(spec, video_id, idx);
        let frame = corrupt_frame(input.frame(idx), input.width(), input.height(), ctype, &mut rng, ctx);
        out.frame_mut(idx).copy_from_slice(&frame);
    }
}

fn apply_composed(
    out: &mut FrameSequence,
    input: &FrameSequence,
    window: (usize, usize),
    first: CorruptionType,
    second: CorruptionType,
    spec: &CorruptionSpec,
    video_id: &str,
) {
    let mk_occlusion = |ctype: CorruptionType, salt: usize| {
        (ctype == CorruptionType::Occlusion).then(|| {
            let mut rng = window_rng(spec, video_id, window.0 + salt);
            OcclusionRect::sample(input.width(), input.height(), &mut rng)
        })
    };
    let occ_first = mk_occlusion(first, 0);
    let occ_second = mk_occlusion(second, 1);
    for idx in window.0..=window.1 {
        let prev = (idx > 0).then(|| input.frame(idx - 1));
        let mut rng = frame_rng(spec, video_id, idx);
        let stage1 = corrupt_frame(
            input.frame(idx),
            input.width(),
            input.height(),
            first,
            &mut rng,
            FrameContext { prev_frame: prev, occlusion: occ_first },
        );
        let stage2 = corrupt_frame(
            &stage1,
            input.width(),
            input.height(),
            second,
            &mut rng,
            FrameContext { prev_frame: prev, occlusion: occ_second },
        );
        out.frame_mut(idx).copy_from_slice(&stage2);
    }
}

/// Merges intersecting inclusive ranges. Adjacent-but-disjoint windows stay
/// separate (they came from distinct actions and keep their own transforms).
fn union_windows(mut windows: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    windows.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(windows.len());
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
            _ => merged.push(w),
        }
    }
    merged
}

/// Corrupts one video per its annotations and the spec's placement policy.
///
/// Overlapping placement windows are unioned and corrupted once, so the
/// result does not depend on annotation order.
pub fn corrupt_video(
    record: &VideoRecord,
    seq: &FrameSequence,
    spec: &CorruptionSpec,
) -> Result<(FrameSequence, Vec<WindowLog>), CorruptError> {
    if seq.frame_count() != record.frame_count {
        return Err(CorruptError::FrameCountMismatch {
            expected: record.frame_count,
            actual: seq.frame_count(),
        });
    }
    let windows = match spec.placement {
        PlacementPolicy::CenterOfAction => union_windows(
            record
                .annotations
                .iter()
                .map(|a| placement_window(frame_span(a, record.fps, record.frame_count), spec.severity))
                .collect(),
        ),
        PlacementPolicy::FixedFraction(fraction) => {
            let mut ws = Vec::with_capacity(record.annotations.len());
            for a in &record.annotations {
                let span = frame_span(a, record.fps, record.frame_count);
                match sweep_window(span, fraction) {
                    Ok(w) => ws.push(w),
                    Err(CorruptError::SweepActionTooShort { action_frames, .. }) => {
                        return Err(CorruptError::SweepActionTooShort {
                            video_id: record.id.clone(),
                            action_frames,
                        })
                    }
                    Err(e) => return Err(e),
                }
            }
            union_windows(ws)
        }
        PlacementPolicy::ExplicitWindow(a, b) => alloc::vec![(a, b)],
    };

    let mut out = seq.clone();
    let mut logs = Vec::with_capacity(windows.len());
    for window in windows {
        if window.0 > window.1 || window.1 >= seq.frame_count() {
            return Err(CorruptError::WindowOutOfBounds { window, frame_count: seq.frame_count() });
        }
        apply_window(&mut out, seq, window, spec, &record.id);
        logs.push(WindowLog {
            video_id: record.id.clone(),
            window,
            types: spec.types(),
            severity: spec.severity.level(),
            seed: spec.seed,
        });
    }
    Ok((out, logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ActionInstance;
    use alloc::vec;

    fn sev(level: u8) -> SeverityLevel {
        SeverityLevel::new(level).unwrap()
    }

    fn noise_seq(width: u32, height: u32, frames: usize, seed: u64) -> FrameSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = width as usize * height as usize * 3 * frames;
        let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        FrameSequence::from_raw(width, height, data).unwrap()
    }

    #[test]
    fn placement_window_examples() {
        // N_a = 200, l = 5 -> n = 10 centered
        assert_eq!(placement_window((100, 299), sev(2)), (195, 204));
        // N_a = 50, l = 1 -> round_half_up(0.5) = 1
        assert_eq!(placement_window((0, 49), sev(1)), (24, 24));
        assert_eq!(placement_window((10, 59), sev(1)), (34, 34));
        // single-frame action
        for level in 1..=3 {
            assert_eq!(placement_window((7, 7), sev(level)), (7, 7));
        }
    }

    #[test]
    fn placement_window_severity_monotone() {
        for n_a in 1..400usize {
            let action = (100, 100 + n_a - 1);
            let mut prev = 0usize;
            for level in 1..=3 {
                let (s, e) = placement_window(action, sev(level));
                let n = e - s + 1;
                assert!(s >= action.0 && e <= action.1, "window inside action");
                assert!(n >= prev, "larger severity shrank the window");
                prev = n;
            }
        }
    }

    #[test]
    fn sweep_window_examples() {
        assert_eq!(sweep_window((0, 100), 0.5).unwrap(), (48, 52));
        assert_eq!(sweep_window((0, 100), 0.1).unwrap(), (8, 12));
        // clamped at the action end
        assert_eq!(sweep_window((0, 5), 0.9).unwrap(), (1, 5));
        assert!(matches!(
            sweep_window((0, 3), 0.5),
            Err(CorruptError::SweepActionTooShort { .. })
        ));
    }

    #[test]
    fn black_frame_zeroes() {
        let seq = noise_seq(8, 6, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = corrupt_frame(
            seq.frame(0), 8, 6, CorruptionType::BlackFrame, &mut rng, FrameContext::default(),
        );
        assert!(out.iter().all(|&v| v == 0));
        assert_eq!(out.len(), seq.frame(0).len());
    }

    #[test]
    fn overexposure_fixed_point_at_zero() {
        let zero = vec![0u8; 8 * 6 * 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = corrupt_frame(&zero, 8, 6, CorruptionType::Overexposure, &mut rng, FrameContext::default());
        assert_eq!(out, zero);
    }

    #[test]
    fn overexposure_brightens_midtones() {
        let mid = vec![100u8; 4 * 4 * 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = corrupt_frame(&mid, 4, 4, CorruptionType::Overexposure, &mut rng, FrameContext::default());
        assert!(out[0] > 100);
        assert!(out.iter().all(|&v| v == out[0]));
    }

    #[test]
    fn motion_blur_constant_frame_unchanged() {
        let flat = vec![100u8; 32 * 4 * 3];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = corrupt_frame(&flat, 32, 4, CorruptionType::MotionBlur, &mut rng, FrameContext::default());
        assert_eq!(out, flat);
    }

    #[test]
    fn packet_loss_deterministic() {
        let seq = noise_seq(64, 64, 2, 3);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            corrupt_frame(
                seq.frame(1), 64, 64, CorruptionType::PacketLoss, &mut rng,
                FrameContext { prev_frame: Some(seq.frame(0)), occlusion: None },
            )
        };
        assert_eq!(run(), run());
        assert_ne!(run(), seq.frame(1).to_vec());
    }

    #[test]
    fn occlusion_changes_bounded_area() {
        let seq = noise_seq(20, 10, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let out = corrupt_frame(seq.frame(0), 20, 10, CorruptionType::Occlusion, &mut rng, FrameContext::default());
        let changed = out
            .chunks_exact(3)
            .zip(seq.frame(0).chunks_exact(3))
            .filter(|(a, b)| a != b)
            .count();
        // 40% of area plus rectangle rounding slack
        assert!(changed <= (20.0 * 10.0 * 0.45) as usize, "changed {changed} pixels");
        assert!(changed > 0);
    }

    #[test]
    fn corrupt_window_black_locality() {
        let seq = noise_seq(8, 6, 300, 7);
        let spec = CorruptionSpec::new(CorruptionType::BlackFrame, sev(2), 11);
        let (out, log) = corrupt_window(&seq, (195, 204), &spec, "v0").unwrap();
        for i in 0..300 {
            if (195..=204).contains(&i) {
                assert!(out.frame(i).iter().all(|&v| v == 0), "frame {i} not black");
            } else {
                assert_eq!(out.frame(i), seq.frame(i), "frame {i} touched");
            }
        }
        assert_eq!(log.window, (195, 204));
        assert_eq!(log.types, vec![CorruptionType::BlackFrame]);
    }

    #[test]
    fn occlusion_rectangle_stable_across_window() {
        let seq = noise_seq(24, 18, 12, 9);
        let spec = CorruptionSpec::new(CorruptionType::Occlusion, sev(3), 77);
        let (out, _) = corrupt_window(&seq, (2, 9), &spec, "v0").unwrap();
        let mask = |i: usize| -> Vec<bool> {
            out.frame(i)
                .chunks_exact(3)
                .zip(seq.frame(i).chunks_exact(3))
                .map(|(a, b)| a != b)
                .collect()
        };
        let changed_any: Vec<bool> = (2..=9)
            .map(mask)
            .reduce(|acc, m| acc.iter().zip(&m).map(|(a, b)| a | b).collect())
            .unwrap();
        // every frame covers the same rectangle: a pixel outside one
        // frame's changed set must be outside all of them (pixels that
        // happen to already be gray can hide inside the rectangle)
        for i in 2..=9 {
            let m = mask(i);
            for (px, (&any, &this)) in changed_any.iter().zip(&m).enumerate() {
                if !this {
                    continue;
                }
                assert!(any, "pixel {px} changed in frame {i} only");
                assert_eq!(&out.frame(i)[px * 3..px * 3 + 3], &[128, 128, 128], "fill value");
            }
        }
    }

    #[test]
    fn packet_loss_first_frame_zeroes_blocks() {
        let seq = noise_seq(64, 64, 1, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let out = corrupt_frame(
            seq.frame(0), 64, 64, CorruptionType::PacketLoss, &mut rng,
            FrameContext::default(),
        );
        let mut zeroed = 0;
        for by in (0..64).step_by(16) {
            for bx in (0..64).step_by(16) {
                let mut all_zero = true;
                let mut untouched = true;
                for y in by..by + 16 {
                    for x in bx..bx + 16 {
                        let i = (y * 64 + x) * 3;
                        if out[i..i + 3].iter().any(|&v| v != 0) {
                            all_zero = false;
                        }
                        if out[i..i + 3] != seq.frame(0)[i..i + 3] {
                            untouched = false;
                        }
                    }
                }
                assert!(all_zero || untouched, "block ({bx},{by}) must be zeroed or untouched");
                if all_zero {
                    zeroed += 1;
                }
            }
        }
        assert!(zeroed > 0, "seed 4 should corrupt at least one block");
    }

    #[test]
    fn corrupt_window_out_of_bounds() {
        let seq = noise_seq(8, 6, 10, 7);
        let spec = CorruptionSpec::new(CorruptionType::BlackFrame, sev(1), 0);
        assert!(matches!(
            corrupt_window(&seq, (5, 10), &spec, "v0"),
            Err(CorruptError::WindowOutOfBounds { .. })
        ));
    }

    #[test]
    fn temporal_composition_splits_window() {
        let seq = noise_seq(8, 6, 40, 13);
        let spec = CorruptionSpec::new(CorruptionType::BlackFrame, sev(3), 17)
            .with_composition(CorruptionType::Occlusion, CompositionMode::Temporal)
            .unwrap();
        let (out, _) = corrupt_window(&seq, (10, 19), &spec, "v0").unwrap();
        for i in 10..=14 {
            assert!(out.frame(i).iter().all(|&v| v == 0), "frame {i} should be black");
        }
        for i in 15..=19 {
            assert!(out.frame(i).iter().any(|&v| v != 0), "frame {i} should be occluded, not black");
            assert_ne!(out.frame(i), seq.frame(i));
        }
    }

    #[test]
    fn spatial_composition_applies_both() {
        let seq = noise_seq(8, 6, 10, 13);
        let spec = CorruptionSpec::new(CorruptionType::Overexposure, sev(3), 17)
            .with_composition(CorruptionType::Occlusion, CompositionMode::Spatial)
            .unwrap();
        let (out, _) = corrupt_window(&seq, (2, 5), &spec, "v0").unwrap();
        // occluded pixels are gray, the rest overexposed
        let gray = out.frame(3).chunks_exact(3).filter(|px| px == &[128, 128, 128]).count();
        assert!(gray > 0);
        assert_ne!(out.frame(3), seq.frame(3));
    }

    #[test]
    fn composition_requires_distinct_core_types() {
        let spec = CorruptionSpec::new(CorruptionType::BlackFrame, sev(1), 0);
        assert!(spec.clone().with_composition(CorruptionType::BlackFrame, CompositionMode::Spatial).is_err());
        assert!(spec.clone().with_composition(CorruptionType::Jittering, CompositionMode::Spatial).is_err());
        assert!(spec.with_composition(CorruptionType::Occlusion, CompositionMode::Spatial).is_ok());
    }

    #[test]
    fn frame_rate_remap_example() {
        // 9-frame window k..k+8 becomes k,k,k,k+3,k+3,k+3,k+6,k+6,k+6
        let k = 4usize;
        let seq = noise_seq(4, 4, 20, 21);
        let mut spec = CorruptionSpec::new(CorruptionType::FrameRate, sev(3), 0);
        spec.placement = PlacementPolicy::ExplicitWindow(k, k + 8);
        let (out, _) = corrupt_window(&seq, (k, k + 8), &spec, "v0").unwrap();
        for (j, src) in [0, 0, 0, 3, 3, 3, 6, 6, 6].into_iter().enumerate() {
            assert_eq!(out.frame(k + j), seq.frame(k + src), "offset {j}");
        }
        assert_eq!(out.frame_count(), seq.frame_count());
    }

    #[test]
    fn slow_motion_and_time_lapse_remaps() {
        let seq = noise_seq(4, 4, 20, 22);
        let window = (2usize, 10usize); // 9 frames
        let spec = CorruptionSpec::new(CorruptionType::SlowMotion, sev(3), 0);
        let (out, _) = corrupt_window(&seq, window, &spec, "v0").unwrap();
        for (j, src) in [0, 0, 1, 1, 2, 2, 3, 3, 4].into_iter().enumerate() {
            assert_eq!(out.frame(window.0 + j), seq.frame(window.0 + src), "slowmo offset {j}");
        }

        let spec = CorruptionSpec::new(CorruptionType::TimeLapse, sev(3), 0);
        let (out, _) = corrupt_window(&seq, window, &spec, "v0").unwrap();
        for (j, src) in [0, 2, 4, 6, 8, 8, 8, 8, 8].into_iter().enumerate() {
            assert_eq!(out.frame(window.0 + j), seq.frame(window.0 + src), "timelapse offset {j}");
        }
    }

    fn record(annotations: Vec<ActionInstance>) -> VideoRecord {
        VideoRecord::new("v0", 10.0, 200, 20.0, annotations).unwrap()
    }

    #[test]
    fn corrupt_video_no_annotations_is_identity() {
        let rec = record(vec![]);
        let seq = noise_seq(8, 6, 200, 31);
        let spec = CorruptionSpec::new(CorruptionType::BlackFrame, sev(3), 0);
        let (out, logs) = corrupt_video(&rec, &seq, &spec).unwrap();
        assert_eq!(out, seq);
        assert!(logs.is_empty());
    }

    #[test]
    fn corrupt_video_two_disjoint_actions() {
        let rec = record(vec![
            ActionInstance::new(2.0, 8.0, "a"),
            ActionInstance::new(12.0, 18.0, "a"),
        ]);
        let seq = noise_seq(8, 6, 200, 33);
        let spec = CorruptionSpec::new(CorruptionType::BlackFrame, sev(1), 0);
        let (out, logs) = corrupt_video(&rec, &seq, &spec).unwrap();
        assert_eq!(logs.len(), 2);
        let mut black = 0;
        for i in 0..200 {
            if out.frame(i).iter().all(|&v| v == 0) && seq.frame(i).iter().any(|&v| v != 0) {
                black += 1;
            }
        }
        assert_eq!(black, 2, "level 1 on 61-frame actions corrupts 1 frame each");
    }

    #[test]
    fn corrupt_video_deterministic_given_seed() {
        let rec = record(vec![ActionInstance::new(2.0, 8.0, "a")]);
        let seq = noise_seq(16, 16, 200, 35);
        let spec = CorruptionSpec::new(CorruptionType::PacketLoss, sev(3), 123);
        let (a, _) = corrupt_video(&rec, &seq, &spec).unwrap();
        let (b, _) = corrupt_video(&rec, &seq, &spec).unwrap();
        assert_eq!(a.as_bytes(), b.as_bytes());

        let spec2 = CorruptionSpec::new(CorruptionType::PacketLoss, sev(3), 124);
        let (c, _) = corrupt_video(&rec, &seq, &spec2).unwrap();
        assert_ne!(a.as_bytes(), c.as_bytes(), "different seed must change packet loss");
    }

    #[test]
    fn overlapping_actions_corrupted_once() {
        let rec = record(vec![
            ActionInstance::new(2.0, 10.0, "a"),
            ActionInstance::new(2.5, 9.5, "a"),
        ]);
        let seq = noise_seq(8, 6, 200, 41);
        let spec = CorruptionSpec::new(CorruptionType::BlackFrame, sev(3), 0);
        let (_, logs) = corrupt_video(&rec, &seq, &spec).unwrap();
        // the two central windows intersect and merge into one
        assert_eq!(logs.len(), 1);
    }

    #[test]
    fn count_preserved_for_all_types() {
        let rec = record(vec![ActionInstance::new(2.0, 18.0, "a")]);
        let seq = noise_seq(16, 16, 200, 55);
        let all = [
            CorruptionType::BlackFrame,
            CorruptionType::PacketLoss,
            CorruptionType::Overexposure,
            CorruptionType::MotionBlur,
            CorruptionType::Occlusion,
            CorruptionType::Jittering,
            CorruptionType::FrameRate,
            CorruptionType::SlowMotion,
            CorruptionType::TimeLapse,
        ];
        for ctype in all {
            let spec = CorruptionSpec::new(ctype, sev(3), 7);
            let (out, _) = corrupt_video(&rec, &seq, &spec).unwrap();
            assert_eq!(out.frame_count(), seq.frame_count(), "{ctype}");
        }
    }
}
