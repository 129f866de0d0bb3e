//! Pinhole projection and pose-based forward warping.

mod camera;
mod transform;
mod warp;

pub use camera::{project, unproject, Intrinsics, PointCloud, ProjectedPoint, Projection, Z_MIN};
pub use transform::{RigidTransform, ROTATION_TOLERANCE};
pub use warp::{warp_backward, warp_depth, warp_depth_subpixel, WarpCorrespondence, WarpSample};

pub(crate) use warp::scatter_min;
