use std::path::{Path, PathBuf};

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::lidar::{sample_lidar_pattern, LidarPattern};
use super::scene::{render, SceneSpec};
use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, RigidTransform};
use crate::grid::{DepthMap, Intensity};
use crate::kitti::{
    write_depth_png, write_intensity_png, CalibBundle, FrameEntry, GeoOrigin, Manifest, OxtsRecord,
};
use crate::sequence::{Frame, Sequence};

/// World-from-camera poses, one per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub poses: Vec<RigidTransform>,
}

impl Trajectory {
    /// Camera advancing `step` meters per frame along its optical axis.
    pub fn straight(frames: usize, step: f64) -> Self {
        Self::turning(frames, step, 0.0)
    }

    /// Camera advancing `step` meters per frame while yawing
    /// `yaw_per_frame` radians about its vertical axis.
    pub fn turning(frames: usize, step: f64, yaw_per_frame: f64) -> Self {
        let mut pose = RigidTransform::identity();
        let mut poses = Vec::with_capacity(frames);
        let advance = RigidTransform::from_translation(Vector3::new(0.0, 0.0, step));
        let turn = RigidTransform::from_rotation(Rotation3::from_axis_angle(&Vector3::y_axis(), yaw_per_frame));
        for _ in 0..frames {
            poses.push(pose);
            pose = pose.compose(&advance).compose(&turn);
        }
        Trajectory { poses }
    }

    /// Parses `forward:FRAMES:STEP` or `turn:FRAMES:STEP:YAW_DEG`.
    pub fn from_generator(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("trajectory {spec:?}: {e}")))
        };
        let frames = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("trajectory {spec:?}: {e}")))
        };
        match parts.as_slice() {
            ["forward", n, step] => Ok(Self::straight(frames(n)?, num(step)?)),
            ["turn", n, step, yaw] => Ok(Self::turning(frames(n)?, num(step)?, num(yaw)?.to_radians())),
            _ => Err(Error::Parse(format!(
                "unknown trajectory {spec:?} (expected forward:N:STEP or turn:N:STEP:YAW_DEG)"
            ))),
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Camera-`i` to camera-`i+1` transforms.
    pub fn relative_poses(&self) -> Vec<RigidTransform> {
        self.poses
            .windows(2)
            .map(|w| w[1].inverse().compose(&w[0]))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticFrame {
    pub groundtruth: DepthMap,
    pub sparse: DepthMap,
    pub guide: Intensity,
}

#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub intrinsics: Intrinsics,
    pub trajectory: Trajectory,
    pub frames: Vec<SyntheticFrame>,
    pub poses_to_next: Vec<RigidTransform>,
}

/// Renders every frame of `trajectory` and samples a lidar pattern from it.
pub fn make_sequence(
    scene: &SceneSpec,
    trajectory: &Trajectory,
    k: &Intrinsics,
    pattern: &LidarPattern,
    seed: u64,
) -> Result<SyntheticSequence> {
    if trajectory.is_empty() {
        return Err(Error::InvalidArgument("trajectory has no poses".into()));
    }
    scene.validate()?;
    let frames = trajectory
        .poses
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            let (groundtruth, guide) = render(&scene.at_frame(i), pose, k);
            let sparse = sample_lidar_pattern(&groundtruth, pattern.density, pattern.beam_rows, frame_seed(seed, i))?;
            Ok(SyntheticFrame {
                groundtruth,
                sparse,
                guide,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticSequence {
        intrinsics: *k,
        trajectory: trajectory.clone(),
        frames,
        poses_to_next: trajectory.relative_poses(),
    })
}

fn frame_seed(seed: u64, frame: usize) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add((frame as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn frame_name(i: usize) -> String {
    format!("{i:010}")
}

impl SyntheticSequence {
    pub fn to_sequence(&self) -> Sequence {
        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| Frame {
                name: frame_name(i),
                sparse: f.sparse.clone(),
                groundtruth: Some(f.groundtruth.clone()),
                guide: Some(f.guide.clone()),
            })
            .collect();
        Sequence::new(self.intrinsics, frames, Some(self.poses_to_next.clone()))
            .expect("frames rendered with these intrinsics")
    }

    /// Writes the KITTI depth-completion layout under `dir` and returns the
    /// manifest path:
    ///
    /// ```text
    /// calib/calib_{cam_to_cam,velo_to_cam,imu_to_velo}.txt
    /// proj_depth/velodyne_raw/image_02/NNNNNNNNNN.png
    /// proj_depth/groundtruth/image_02/NNNNNNNNNN.png
    /// image_02/data/NNNNNNNNNN.png
    /// oxts/data/NNNNNNNNNN.txt
    /// poses.txt
    /// manifest.json
    /// ```
    ///
    /// The calibration chain is the identity, so the OXTS records carry the
    /// camera poses directly.
    pub fn write_kitti_layout(&self, dir: impl AsRef<Path>, origin: &GeoOrigin) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let sub = |p: &str| -> Result<PathBuf> {
            let d = dir.join(p);
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            Ok(d)
        };
        CalibBundle::identity(self.intrinsics).write_dir(sub("calib")?, 2)?;
        let sparse_dir = "proj_depth/velodyne_raw/image_02";
        let gt_dir = "proj_depth/groundtruth/image_02";
        let image_dir = "image_02/data";
        let oxts_dir = "oxts/data";
        for d in [sparse_dir, gt_dir, image_dir, oxts_dir] {
            sub(d)?;
        }
        let first = self.trajectory.poses[0].translation();
        let recenter = RigidTransform::from_translation(-first);
        let mut entries = Vec::with_capacity(self.frames.len());
        let mut pose_lines = String::new();
        for (i, (frame, pose)) in self.frames.iter().zip(&self.trajectory.poses).enumerate() {
            let name = frame_name(i);
            let png = format!("{name}.png");
            let sparse = Path::new(sparse_dir).join(&png);
            let gt = Path::new(gt_dir).join(&png);
            let image = Path::new(image_dir).join(&png);
            write_depth_png(dir.join(&sparse), &frame.sparse)?;
            write_depth_png(dir.join(&gt), &frame.groundtruth)?;
            write_intensity_png(dir.join(&image), &frame.guide)?;
            let local = recenter.compose(pose);
            let line = OxtsRecord::from_world_pose(&local, origin)?.to_line();
            let oxts_path = dir.join(oxts_dir).join(format!("{name}.txt"));
            std::fs::write(&oxts_path, format!("{line}\n")).map_err(|e| Error::io(&oxts_path, e))?;
            let row: Vec<String> = local.to_row_major_3x4().iter().map(|v| format!("{v:e}")).collect();
            pose_lines.push_str(&row.join(" "));
            pose_lines.push('\n');
            entries.push(FrameEntry {
                timestamp: i as u64,
                sparse,
                groundtruth: Some(gt),
                image: Some(image),
                oxts: Some(line),
            });
        }
        let poses_path = dir.join("poses.txt");
        std::fs::write(&poses_path, pose_lines).map_err(|e| Error::io(&poses_path, e))?;
        let manifest = Manifest {
            calib_dir: Some("calib".into()),
            camera: 2,
            intrinsics: None,
            frames: entries,
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
