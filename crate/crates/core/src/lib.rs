//! Geometric and evaluation core for temporal depth completion.
//!
//! - [`geometry`]: pinhole camera, rigid transforms, z-buffered forward warp
//!   and its backward pass.
//! - [`kitti`]: 16-bit depth PNGs, calibration and OXTS files, lidar
//!   projection, sequence manifests.
//! - [`synth`]: ray-cast scenes with known poses and lidar-like sampling.
//! - [`completion`]: the non-learned recurrent completion pipeline.
//! - [`eval`]: KITTI metrics, block difference maps, per-frame curves.

pub mod completion;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod grid;
pub mod kitti;
pub mod sequence;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{Intrinsics, PointCloud, RigidTransform, WarpCorrespondence};
pub use grid::{CropOffset, DepthMap, Grid, Intensity};
pub use sequence::{Frame, Sequence};
