//! Reference temporal depth completion.
//!
//! Each frame fuses its lidar input with the previous prediction warped
//! into the current camera, fills the gaps by inverse-distance
//! interpolation, and refines the result by guided affinity propagation
//! with the fused samples as anchors. The prediction is then warped into
//! the next camera together with a decaying confidence.

mod config;
mod cspn;
mod fuse;
mod pipeline;
mod spatial;

pub use config::{FuseMode, PipelineConfig};
pub use cspn::cspn_refine;
pub use fuse::{fuse_temporal, TemporalState};
pub use pipeline::{advance_state, predict, run_sequence, step, FrameResult, SequenceRun, StepOutput};
pub use spatial::spatial_complete;
