//! Robust-training machinery: action/background pairing, the FrameDrop
//! augmentation, action-centric sampling with the consistency loss and its
//! ablation variants, and a synthetic desk-scale detection task (feature
//! generator, tiny temporal conv detector, trainer, decoder) that exercises
//! the method end to end.

pub mod decode;
pub mod model;
pub mod pairs;
pub mod synth;
pub mod trainer;
pub mod trc;

use alloc::vec::Vec;

/// A feature time series: `timesteps x dim` values, one timestep per source
/// frame (or per fixed-stride frame group; the stride is recorded).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    timesteps: usize,
    dim: usize,
    stride: usize,
    values: Vec<f64>,
}

impl FeatureSequence {
    pub fn zeros(timesteps: usize, dim: usize) -> Self {
        Self { timesteps, dim, stride: 1, values: alloc::vec![0.0; timesteps * dim] }
    }

    pub fn from_values(timesteps: usize, dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), timesteps * dim);
        assert!(values.iter().all(|v| v.is_finite()));
        Self { timesteps, dim, stride: 1, values }
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// Zeroes one timestep, the feature-space equivalent of a black frame.
    pub fn zero_row(&mut self, t: usize) {
        self.row_mut(t).fill(0.0);
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
