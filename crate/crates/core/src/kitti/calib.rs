//! KITTI raw calibration files and the camera/lidar/IMU transform chain.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, RigidTransform};
use crate::grid::CropOffset;

pub const CAM_TO_CAM: &str = "calib_cam_to_cam.txt";
pub const VELO_TO_CAM: &str = "calib_velo_to_cam.txt";
pub const IMU_TO_VELO: &str = "calib_imu_to_velo.txt";

/// Calibration of one rectified camera relative to the lidar and IMU.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibBundle {
    /// Rectified intrinsics of the target camera.
    pub intrinsics: Intrinsics,
    /// `R_rect_00`: unrectified camera-0 frame to the common rectified frame.
    pub rectification: RigidTransform,
    /// Lidar to unrectified camera 0.
    pub lidar_to_camera: RigidTransform,
    pub imu_to_lidar: RigidTransform,
    /// Offset of the target camera in the rectified frame, `K⁻¹·p₄` of its
    /// 3×4 projection matrix (meters).
    pub baseline: Vector3<f64>,
}

impl CalibBundle {
    /// Identity extrinsics: camera, lidar and IMU frames coincide.
    pub fn identity(intrinsics: Intrinsics) -> Self {
        CalibBundle {
            intrinsics,
            rectification: RigidTransform::identity(),
            lidar_to_camera: RigidTransform::identity(),
            imu_to_lidar: RigidTransform::identity(),
            baseline: Vector3::zeros(),
        }
    }

    /// Reads the three calibration files from `dir` for camera `camera`
    /// (2 is the left color camera).
    pub fn read_dir(dir: impl AsRef<Path>, camera: u8) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        Self::parse(&read(CAM_TO_CAM)?, &read(VELO_TO_CAM)?, &read(IMU_TO_VELO)?, camera)
            .map_err(|e| Error::format(dir, e.to_string()))
    }

    pub fn parse(cam_to_cam: &str, velo_to_cam: &str, imu_to_velo: &str, camera: u8) -> Result<Self> {
        if camera > 3 {
            return Err(Error::InvalidArgument(format!("no camera {camera}")));
        }
        let cam = parse_key_values(cam_to_cam);
        let velo = parse_key_values(velo_to_cam);
        let imu = parse_key_values(imu_to_velo);

        let p = field(&cam, &format!("P_rect_0{camera}"), 12)?;
        let size = field(&cam, &format!("S_rect_0{camera}"), 2)?;
        let intrinsics = Intrinsics::new(
            p[0],
            p[5],
            p[2],
            p[6],
            size[0].round() as usize,
            size[1].round() as usize,
        )?;
        let k = intrinsics.matrix();
        let p4 = Vector3::new(p[3], p[7], p[11]);
        let baseline = k
            .try_inverse()
            .ok_or_else(|| Error::Parse("singular projection matrix".into()))?
            * p4;

        let r_rect = field(&cam, "R_rect_00", 9)?;
        let rectification = RigidTransform::from_approx_rotation(rot(r_rect), Vector3::zeros())?;
        Ok(CalibBundle {
            intrinsics,
            rectification,
            lidar_to_camera: rigid(&velo)?,
            imu_to_lidar: rigid(&imu)?,
            baseline,
        })
    }

    /// Writes the three files in the KITTI layout; the inverse of
    /// [`read_dir`](Self::read_dir) for `camera`.
    pub fn write_dir(&self, dir: impl AsRef<Path>, camera: u8) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let k = &self.intrinsics;
        let p4 = k.matrix() * self.baseline;
        let mut cam = String::new();
        let size = [k.width() as f64, k.height() as f64];
        writeln!(cam, "S_rect_0{camera}: {}", join(&size)).unwrap();
        writeln!(
            cam,
            "P_rect_0{camera}: {}",
            join(&[
                k.fx(), 0.0, k.cx(), p4.x, 0.0, k.fy(), k.cy(), p4.y, 0.0, 0.0, 1.0, p4.z
            ])
        )
        .unwrap();
        writeln!(cam, "R_rect_00: {}", join(&row_major(self.rectification.rotation()))).unwrap();
        let rigid_text = |t: &RigidTransform| {
            format!(
                "R: {}\nT: {}\n",
                join(&row_major(t.rotation())),
                join(t.translation().as_slice())
            )
        };
        let write = |name: &str, text: &str| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        write(CAM_TO_CAM, &cam)?;
        write(VELO_TO_CAM, &rigid_text(&self.lidar_to_camera))?;
        write(IMU_TO_VELO, &rigid_text(&self.imu_to_lidar))
    }

    /// Lidar coordinates to rectified target-camera coordinates.
    pub fn camera_from_lidar(&self) -> RigidTransform {
        RigidTransform::from_translation(self.baseline)
            .compose(&self.rectification)
            .compose(&self.lidar_to_camera)
    }

    pub fn camera_from_imu(&self) -> RigidTransform {
        self.camera_from_lidar().compose(&self.imu_to_lidar)
    }

    pub fn cropped(&self, offset: CropOffset, width: usize, height: usize) -> Result<Self> {
        Ok(CalibBundle {
            intrinsics: self.intrinsics.cropped(offset, width, height)?,
            ..self.clone()
        })
    }

    /// Same calibration for an image of a different size (KITTI drives from
    /// different days are 1241..1242 × 374..376).
    pub fn with_image_size(&self, width: usize, height: usize) -> Result<Self> {
        let k = &self.intrinsics;
        Ok(CalibBundle {
            intrinsics: Intrinsics::new(k.fx(), k.fy(), k.cx(), k.cy(), width, height)?,
            ..self.clone()
        })
    }
}

/// Pose mapping rectified-camera coordinates of frame `a` into frame `b`,
/// given the world-from-IMU poses of both frames.
pub fn relative_camera_pose(
    world_a: &RigidTransform,
    world_b: &RigidTransform,
    calib: &CalibBundle,
) -> RigidTransform {
    let cam_from_imu = calib.camera_from_imu();
    cam_from_imu
        .compose(&world_b.inverse())
        .compose(world_a)
        .compose(&cam_from_imu.inverse())
}

fn parse_key_values(text: &str) -> HashMap<String, Vec<f64>> {
    text.lines()
        .filter_map(|line| {
            let (key, rest) = line.split_once(':')?;
            let values = rest
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .ok()?;
            Some((key.trim().to_string(), values))
        })
        .collect()
}

fn field<'a>(map: &'a HashMap<String, Vec<f64>>, key: &str, len: usize) -> Result<&'a [f64]> {
    let v = map
        .get(key)
        .ok_or_else(|| Error::Parse(format!("missing calibration key {key}")))?;
    if v.len() != len {
        return Err(Error::Parse(format!(
            "calibration key {key} has {} values, expected {len}",
            v.len()
        )));
    }
    Ok(v)
}

fn rot(v: &[f64]) -> Matrix3<f64> {
    Matrix3::from_row_slice(v)
}

fn rigid(map: &HashMap<String, Vec<f64>>) -> Result<RigidTransform> {
    let r = field(map, "R", 9)?;
    let t = field(map, "T", 3)?;
    RigidTransform::from_approx_rotation(rot(r), Vector3::from_row_slice(t))
}

fn row_major(m: &Matrix3<f64>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[r * 3 + c] = m[(r, c)];
        }
    }
    out
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_chain_collapses() {
        let calib = CalibBundle::identity(Intrinsics::kitti_cropped());
        let a = RigidTransform::identity();
        let b = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let p = relative_camera_pose(&a, &b, &calib);
        assert!((p.translation().norm() - 1.0).abs() < 1e-12);
        assert!(relative_camera_pose(&b, &b, &calib).identity_error() < 1e-12);
    }

    #[test]
    fn write_then_read_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let calib = CalibBundle {
            intrinsics: Intrinsics::new(700.0, 710.0, 600.5, 170.25, 1242, 375).unwrap(),
            rectification: RigidTransform::from_euler_zyx(0.01, 0.0, -0.005, Vector3::zeros()),
            lidar_to_camera: RigidTransform::from_euler_zyx(0.3, 0.1, 1.5, Vector3::new(0.1, -0.07, -0.27)),
            imu_to_lidar: RigidTransform::from_translation(Vector3::new(-0.8, 0.32, -0.8)),
            baseline: Vector3::new(0.06, -3e-4, 2.7e-3),
        };
        calib.write_dir(dir.path(), 2).unwrap();
        let back = CalibBundle::read_dir(dir.path(), 2).unwrap();
        assert_eq!(back.intrinsics, calib.intrinsics);
        assert!(back.camera_from_imu().approx_eq(&calib.camera_from_imu(), 1e-12));
        assert!(CalibBundle::read_dir(dir.path(), 3).is_err());
    }

    #[test]
    fn missing_key_is_reported() {
        let err = CalibBundle::parse("S_rect_02: 10 10\n", "R: 1 0 0 0 1 0 0 0 1\nT: 0 0 0", "", 2)
            .unwrap_err();
        assert!(err.to_string().contains("P_rect_02"));
    }
}
