//! KITTI raw / depth-completion file formats.

mod calib;
mod lidar;
mod manifest;
mod oxts;
mod png_io;

pub use calib::{relative_camera_pose, CalibBundle, CAM_TO_CAM, IMU_TO_VELO, VELO_TO_CAM};
pub use lidar::{project_lidar, read_velodyne_bin, write_velodyne_bin, LidarScan};
pub use manifest::{FrameEntry, Manifest, SequenceIndex};
pub use oxts::{
    inverse_mercator, mercator, mercator_scale, oxts_to_world_pose, world_poses, GeoOrigin,
    OxtsRecord, EARTH_RADIUS, OXTS_FIELDS,
};
pub use png_io::{
    decode_depth_png_bytes, encode_depth_png, quantize, read_depth_png, read_intensity_png,
    write_depth_png, write_intensity_png, write_rgb_png, DEPTH_SCALE,
};
