//! JSON sequence manifests.
//!
//! ```json
//! {
//!   "calib_dir": "calib",
//!   "camera": 2,
//!   "frames": [
//!     {
//!       "timestamp": 0,
//!       "sparse": "proj_depth/velodyne_raw/image_02/0000000000.png",
//!       "groundtruth": "proj_depth/groundtruth/image_02/0000000000.png",
//!       "image": "image_02/data/0000000000.png",
//!       "oxts": "49.015 8.434 116.43 0.0357 0.009 -2.608 ..."
//!     }
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest's directory. `groundtruth`, `image`
//! and `oxts` are optional per frame; `calib_dir` may be replaced by an
//! inline `intrinsics` object when no poses are needed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::calib::{relative_camera_pose, CalibBundle};
use super::oxts::{world_poses, OxtsRecord};
use super::png_io::{read_depth_png, read_intensity_png};
use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, RigidTransform};
use crate::sequence::{Frame, Sequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub timestamp: u64,
    pub sparse: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groundtruth: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oxts: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calib_dir: Option<PathBuf>,
    #[serde(default = "default_camera")]
    pub camera: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsics: Option<Intrinsics>,
    pub frames: Vec<FrameEntry>,
}

fn default_camera() -> u8 {
    2
}

/// A validated manifest with paths resolved against its directory.
#[derive(Debug, Clone)]
pub struct SequenceIndex {
    pub root: PathBuf,
    pub manifest: Manifest,
    records: Vec<Option<OxtsRecord>>,
}

impl SequenceIndex {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::from_manifest(root, manifest)
    }

    pub fn from_manifest(root: PathBuf, manifest: Manifest) -> Result<Self> {
        if manifest.frames.is_empty() {
            return Err(Error::InvalidArgument("manifest lists no frames".into()));
        }
        for pair in manifest.frames.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(Error::InvalidArgument(format!(
                    "timestamps must increase strictly ({} after {})",
                    pair[1].timestamp, pair[0].timestamp
                )));
            }
        }
        let index = SequenceIndex {
            root,
            manifest,
            records: Vec::new(),
        };
        for f in &index.manifest.frames {
            let files = [Some(&f.sparse), f.groundtruth.as_ref(), f.image.as_ref()];
            for p in files.into_iter().flatten() {
                let full = index.resolve(p);
                if !full.is_file() {
                    return Err(Error::io(
                        full,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "listed file is missing"),
                    ));
                }
            }
        }
        if let Some(dir) = &index.manifest.calib_dir {
            let dir = index.resolve(dir);
            if !dir.is_dir() {
                return Err(Error::io(
                    dir,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "calibration directory is missing"),
                ));
            }
        }
        let records = index
            .manifest
            .frames
            .iter()
            .map(|f| f.oxts.as_deref().map(OxtsRecord::parse).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(SequenceIndex { records, ..index })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    pub fn len(&self) -> usize {
        self.manifest.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.frames.is_empty()
    }

    pub fn calib(&self) -> Result<Option<CalibBundle>> {
        self.manifest
            .calib_dir
            .as_ref()
            .map(|d| CalibBundle::read_dir(self.resolve(d), self.manifest.camera))
            .transpose()
    }

    pub fn oxts_records(&self) -> &[Option<OxtsRecord>] {
        &self.records
    }

    /// Relative camera poses between consecutive frames, or `None` when the
    /// calibration or any OXTS record is missing.
    pub fn poses_to_next(&self) -> Result<Option<Vec<RigidTransform>>> {
        let Some(calib) = self.calib()? else {
            return Ok(None);
        };
        let Some(records) = self.records.iter().cloned().collect::<Option<Vec<_>>>() else {
            return Ok(None);
        };
        let world = world_poses(&records)?;
        Ok(Some(
            world
                .windows(2)
                .map(|w| relative_camera_pose(&w[0], &w[1], &calib))
                .collect(),
        ))
    }

    /// Reads every listed file.
    pub fn load(&self) -> Result<Sequence> {
        let frames = self
            .manifest
            .frames
            .iter()
            .map(|f| {
                let name = f
                    .sparse
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| f.timestamp.to_string());
                Ok(Frame {
                    name,
                    sparse: read_depth_png(self.resolve(&f.sparse))?,
                    groundtruth: f
                        .groundtruth
                        .as_ref()
                        .map(|p| read_depth_png(self.resolve(p)))
                        .transpose()?,
                    guide: f
                        .image
                        .as_ref()
                        .map(|p| read_intensity_png(self.resolve(p)))
                        .transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (w, h) = frames[0].sparse.dims();
        let intrinsics = match (self.calib()?, self.manifest.intrinsics) {
            (Some(calib), _) => calib.with_image_size(w, h)?.intrinsics,
            (None, Some(k)) => k,
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "manifest needs either calib_dir or intrinsics".into(),
                ))
            }
        };
        Sequence::new(intrinsics, frames, self.poses_to_next()?)
    }
}
