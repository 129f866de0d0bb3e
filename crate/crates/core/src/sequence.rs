//! In-memory frame sequences consumed by the completion pipeline.

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, RigidTransform};
use crate::grid::{DepthMap, Intensity};

#[derive(Debug, Clone)]
pub struct Frame {
    pub name: String,
    pub sparse: DepthMap,
    pub groundtruth: Option<DepthMap>,
    pub guide: Option<Intensity>,
}

/// Ordered frames sharing one camera. `poses_to_next[i]` maps camera
/// coordinates of frame `i` into frame `i + 1`.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub intrinsics: Intrinsics,
    pub frames: Vec<Frame>,
    pub poses_to_next: Option<Vec<RigidTransform>>,
}

impl Sequence {
    pub fn new(
        intrinsics: Intrinsics,
        frames: Vec<Frame>,
        poses_to_next: Option<Vec<RigidTransform>>,
    ) -> Result<Self> {
        for f in &frames {
            Error::check_dims(intrinsics.dims(), f.sparse.dims())?;
            if let Some(gt) = &f.groundtruth {
                Error::check_dims(intrinsics.dims(), gt.dims())?;
            }
            if let Some(g) = &f.guide {
                Error::check_dims(intrinsics.dims(), g.dims())?;
            }
        }
        if let Some(poses) = &poses_to_next {
            if poses.len() + 1 != frames.len() && !(frames.is_empty() && poses.is_empty()) {
                return Err(Error::InvalidArgument(format!(
                    "{} frames need {} relative poses, got {}",
                    frames.len(),
                    frames.len().saturating_sub(1),
                    poses.len()
                )));
            }
        }
        Ok(Sequence {
            intrinsics,
            frames,
            poses_to_next,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn pose_to_next(&self, i: usize) -> Option<&RigidTransform> {
        self.poses_to_next.as_ref().and_then(|p| p.get(i))
    }

    /// Bottom-center crop of every frame with matching intrinsics.
    pub fn cropped(&self, out_w: usize, out_h: usize) -> Result<Sequence> {
        let frames = self
            .frames
            .iter()
            .map(|f| {
                Ok(Frame {
                    name: f.name.clone(),
                    sparse: f.sparse.bottom_center_crop(out_w, out_h)?.0,
                    groundtruth: f
                        .groundtruth
                        .as_ref()
                        .map(|g| g.bottom_center_crop(out_w, out_h).map(|c| c.0))
                        .transpose()?,
                    guide: f
                        .guide
                        .as_ref()
                        .map(|g| g.bottom_center_crop(out_w, out_h).map(|c| c.0))
                        .transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let offset = crate::grid::CropOffset::bottom_center(self.intrinsics.dims(), out_w, out_h)?;
        Sequence::new(
            self.intrinsics.cropped(offset, out_w, out_h)?,
            frames,
            self.poses_to_next.clone(),
        )
    }
}
