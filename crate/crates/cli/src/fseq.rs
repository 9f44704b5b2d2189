//! The `.fseq` frame container: a bit-exact little-endian binary holding
//! decoded RGB video frames.
//!
//! Layout: magic `FSEQ`, `u32` version (1), `u32` width, `u32` height,
//! `u32` channels (3), `u32` frame_count, then `frame_count` frames of
//! `width * height * 3` bytes, row-major, RGB order.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use trbench_core::types::{FrameSequence, CHANNELS};

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"FSEQ";
const VERSION: u32 = 1;

/// Serializes a frame sequence to the container bytes.
pub fn to_bytes(seq: &FrameSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + seq.as_bytes().len());
    out.extend_from_slice(MAGIC);
    for value in [VERSION, seq.width(), seq.height(), CHANNELS as u32, seq.frame_count() as u32] {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out.extend_from_slice(seq.as_bytes());
    out
}

/// Parses container bytes.
pub fn from_bytes(data: &[u8], path: &Path) -> Result<FrameSequence> {
    let header = 4 + 5 * 4;
    if data.len() < header {
        return Err(Error::format(path, "truncated header"));
    }
    if &data[..4] != MAGIC {
        return Err(Error::format(path, "bad magic, not an fseq file"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(data[4 + i * 4..8 + i * 4].try_into().unwrap());
    let (version, width, height, channels, frame_count) =
        (u32_at(0), u32_at(1), u32_at(2), u32_at(3), u32_at(4));
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    if channels != CHANNELS as u32 {
        return Err(Error::format(path, format!("expected 3 channels, got {channels}")));
    }
    let expected = width as usize * height as usize * CHANNELS * frame_count as usize;
    let payload = &data[header..];
    if payload.len() != expected {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, header implies {expected}", payload.len()),
        ));
    }
    FrameSequence::from_raw(width, height, payload.to_vec()).map_err(Error::from)
}

pub fn write_file(seq: &FrameSequence, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&to_bytes(seq)).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<FrameSequence> {
    let mut data = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    from_bytes(&data, path)
}

/// Imports a directory of zero-padded numbered 8-bit RGB images (e.g.
/// `000001.png`) as a frame sequence, ordered by filename.
pub fn import_image_dir(dir: &Path) -> Result<FrameSequence> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("png") | Some("jpg") | Some("jpeg")
            )
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::format(dir, "no png/jpg frames found"));
    }
    paths.sort();

    let mut geometry: Option<(u32, u32)> = None;
    let mut data = Vec::new();
    for path in &paths {
        let img = image::open(path)
            .map_err(|e| Error::format(path, format!("image decode failed: {e}")))?
            .into_rgb8();
        let (w, h) = img.dimensions();
        match geometry {
            None => geometry = Some((w, h)),
            Some(g) if g != (w, h) => {
                return Err(Error::format(
                    path,
                    format!("frame geometry {w}x{h} differs from first frame {}x{}", g.0, g.1),
                ));
            }
            _ => {}
        }
        data.extend_from_slice(img.as_raw());
    }
    let (w, h) = geometry.unwrap();
    FrameSequence::from_raw(w, h, data).map_err(Error::from)
}

/// Conventional file name for a video's frame container.
pub fn container_name(video_id: &str) -> String {
    format!("{video_id}.fseq")
}
