//! Toy-detector model files: versioned little-endian binary of layer
//! shapes followed by f32 weights, plus the training-log CSV.
//!
//! Layout: magic `TMDL`, `u32` version (1), `u32` layer count, then per
//! layer `u32 {in_dim, out_dim, kernel, dilation}`, then every parameter
//! (weights then bias, layer by layer) as little-endian f32.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use trbench_core::train::model::{ToyModel, ToyModelConfig};
use trbench_core::train::trainer::TrainingLog;

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TMDL";
const VERSION: u32 = 1;

pub fn save_model(model: &ToyModel, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(model.layers.len() as u32).to_le_bytes());
    for layer in &model.layers {
        for v in [layer.in_dim, layer.out_dim, layer.kernel, layer.dilation] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    for param in model.flat_params() {
        out.extend_from_slice(&(param as f32).to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Loads a model file. Decode-time settings (NMS tIoU, score threshold)
/// are not stored in the file and come from the caller.
pub fn load_model(path: &Path, nms_tiou: f64, score_threshold: f64) -> Result<ToyModel> {
    let mut data = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(|e| Error::io(path, e))?;
    let need = |at: usize, n: usize| -> Result<&[u8]> {
        data.get(at..at + n).ok_or_else(|| Error::format(path, "truncated model file"))
    };
    if need(0, 4)? != MAGIC {
        return Err(Error::format(path, "bad magic, not a model file"));
    }
    let u32_at = |at: usize| -> Result<u32> {
        Ok(u32::from_le_bytes(need(at, 4)?.try_into().unwrap()))
    };
    if u32_at(4)? != VERSION {
        return Err(Error::format(path, format!("unsupported model version {}", u32_at(4)?)));
    }
    let layer_count = u32_at(8)? as usize;
    if layer_count < 2 {
        return Err(Error::format(path, "model needs at least one hidden layer and a head"));
    }
    let mut shapes = Vec::with_capacity(layer_count);
    let mut at = 12usize;
    for _ in 0..layer_count {
        let in_dim = u32_at(at)? as usize;
        let out_dim = u32_at(at + 4)? as usize;
        let kernel = u32_at(at + 8)? as usize;
        let dilation = u32_at(at + 12)? as usize;
        shapes.push((in_dim, out_dim, kernel, dilation));
        at += 16;
    }
    let head_out = shapes.last().unwrap().1;
    if head_out < 3 + 1 {
        return Err(Error::format(path, "head output too small for classes + offsets"));
    }
    let config = ToyModelConfig {
        layers: layer_count - 1,
        channels: shapes[0].1,
        kernel: shapes[0].2,
        classes: head_out - 3,
        input_dim: shapes[0].0,
        nms_tiou,
        score_threshold,
        seed: 0,
    };
    let mut model = ToyModel::init(config);
    // The reconstructed architecture must match the stored shapes.
    for (layer, &(in_dim, out_dim, kernel, dilation)) in model.layers.iter().zip(&shapes) {
        if (layer.in_dim, layer.out_dim, layer.kernel, layer.dilation)
            != (in_dim, out_dim, kernel, dilation)
        {
            return Err(Error::format(
                path,
                format!(
                    "layer shape {in_dim}x{out_dim} k{kernel} d{dilation} does not follow the \
                     doubling-dilation architecture"
                ),
            ));
        }
    }
    let count = model.param_count();
    let params_bytes = need(at, count * 4)?;
    if data.len() != at + count * 4 {
        return Err(Error::format(path, "trailing bytes after parameters"));
    }
    let params: Vec<f64> = params_bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    model.load_flat_params(&params);
    Ok(model)
}

/// `epoch,det_loss,trc_loss` rows.
pub fn training_log_csv(log: &TrainingLog) -> String {
    let mut out = String::from("epoch,det_loss,trc_loss\n");
    for e in &log.epochs {
        out.push_str(&format!("{},{:.6},{:.6}\n", e.epoch, e.det_loss, e.trc_loss));
    }
    out
}

pub fn write_training_log(log: &TrainingLog, path: &Path) -> Result<()> {
    fs::write(path, training_log_csv(log)).map_err(|e| Error::io(path, e))
}
