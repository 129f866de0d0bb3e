use std::path::Path;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::calib::CalibBundle;
use crate::error::{Error, Result};
use crate::geometry::{scatter_min, PointCloud};
use crate::grid::{DepthMap, Grid};

/// A velodyne sweep: points in the lidar frame and their reflectances.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LidarScan {
    pub cloud: PointCloud,
    pub reflectance: Vec<f32>,
}

/// Reads a KITTI `.bin` scan: little-endian `f32` quadruples `(x, y, z, r)`.
pub fn read_velodyne_bin(path: impl AsRef<Path>) -> Result<LidarScan> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 16 != 0 {
        return Err(Error::format(
            path,
            format!("{} bytes is not a whole number of points", bytes.len()),
        ));
    }
    let mut points = Vec::with_capacity(bytes.len() / 16);
    let mut reflectance = Vec::with_capacity(bytes.len() / 16);
    for rec in bytes.chunks_exact(16) {
        let f = |i: usize| f32::from_le_bytes(rec[i * 4..i * 4 + 4].try_into().unwrap());
        points.push(Vector3::new(f(0) as f64, f(1) as f64, f(2) as f64));
        reflectance.push(f(3));
    }
    let cloud = PointCloud::new(points).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(LidarScan { cloud, reflectance })
}

pub fn write_velodyne_bin(path: impl AsRef<Path>, scan: &LidarScan) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(scan.cloud.len() * 16);
    for (i, p) in scan.cloud.points.iter().enumerate() {
        let r = scan.reflectance.get(i).copied().unwrap_or(0.0);
        for v in [p.x as f32, p.y as f32, p.z as f32, r] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Projects a lidar-frame cloud into the calibrated camera with the same
/// nearest-pixel, minimum-depth rule as the depth warp.
pub fn project_lidar(scan: &PointCloud, calib: &CalibBundle) -> DepthMap {
    let k = &calib.intrinsics;
    let cam_from_lidar = calib.camera_from_lidar();
    let samples = scan.points.par_iter().map(|p| {
        let q = k.project(&cam_from_lidar.transform_point(p))?;
        Some((k.rasterize(q.u, q.v)?, q.depth))
    });
    let scatter = scatter_min(k.width() * k.height(), samples)
        .expect("point count fits the scatter index range");
    let grid = Grid::from_vec(k.width(), k.height(), scatter.depth).expect("sized by intrinsics");
    DepthMap::from_grid_unchecked(grid)
}
