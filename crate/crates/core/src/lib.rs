//! Core algorithms for temporal-robustness benchmarking of action detection.
//!
//! Everything in this crate is pure computation over in-memory data: domain
//! types and time/frame conversion ([`types`]), seeded frame corruption and
//! placement ([`corrupt`]), detection metrics ([`metrics`]), false-positive
//! profiling ([`profile`]), and the robust-training machinery with a
//! desk-scale synthetic detection task ([`train`]).
//!
//! File formats, the dataset builder, and the `bench` CLI live in the
//! companion `trbench-cli` crate. This crate is `no_std` (with `alloc`).

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corrupt;
pub mod hash;
pub mod metrics;
pub mod profile;
pub mod train;
pub mod types;

pub use corrupt::{CompositionMode, CorruptionSpec, CorruptionType, PlacementPolicy, SeverityLevel};
pub use metrics::{EvalProtocol, RobustnessReport};
pub use types::{ActionInstance, Dataset, FrameSequence, Prediction, VideoRecord};
