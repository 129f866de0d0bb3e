//! Synthetic scenes, trajectories and lidar-like sampling with exact ground
//! truth.

mod lidar;
mod scene;
mod sequence;

pub use lidar::{sample_lidar_pattern, simulate_scan, BeamModel, LidarPattern, DENSITY_TOLERANCE};
pub use scene::{render, render_depth, Hit, MovingBox, Primitive, SceneSpec, Shape};
pub use sequence::{frame_name, make_sequence, SyntheticFrame, SyntheticSequence, Trajectory};
