use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CropOffset, DepthMap};

/// Points at or closer than this (meters, along the optical axis) are not
/// projected.
pub const Z_MIN: f64 = 1e-3;

/// Pinhole camera parameters in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntrinsicsRepr", into = "IntrinsicsRepr")]
pub struct Intrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

#[derive(Serialize, Deserialize)]
struct IntrinsicsRepr {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
}

impl TryFrom<IntrinsicsRepr> for Intrinsics {
    type Error = Error;

    fn try_from(r: IntrinsicsRepr) -> Result<Self> {
        Intrinsics::new(r.fx, r.fy, r.cx, r.cy, r.width, r.height)
    }
}

impl From<Intrinsics> for IntrinsicsRepr {
    fn from(k: Intrinsics) -> Self {
        IntrinsicsRepr {
            fx: k.fx,
            fy: k.fy,
            cx: k.cx,
            cy: k.cy,
            width: k.width,
            height: k.height,
        }
    }
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let finite = [fx, fy, cx, cy].iter().all(|v| v.is_finite());
        if !finite || fx <= 0.0 || fy <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "focal lengths must be positive and finite (fx = {fx}, fy = {fy})"
            )));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::InvalidArgument(format!(
                "principal point ({cx}, {cy}) outside the {width}x{height} image"
            )));
        }
        Ok(Intrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Rectified camera 2 of the 2011_09_26 KITTI drives after the
    /// 1216×352 bottom-center crop.
    pub fn kitti_cropped() -> Self {
        Intrinsics {
            fx: 721.5377,
            fy: 721.5377,
            cx: 609.5593 - 13.0,
            cy: 172.854 - 23.0,
            width: 1216,
            height: 352,
        }
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }

    pub fn fy(&self) -> f64 {
        self.fy
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }

    pub fn cy(&self) -> f64 {
        self.cy
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Intrinsics of a `width`×`height` window starting at `offset`.
    pub fn cropped(&self, offset: CropOffset, width: usize, height: usize) -> Result<Self> {
        Intrinsics::new(
            self.fx,
            self.fy,
            self.cx - offset.left as f64,
            self.cy - offset.top as f64,
            width,
            height,
        )
    }

    /// Scales the image by `factor` (e.g. 0.5 halves the resolution).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let width = (self.width as f64 * factor).round() as usize;
        let height = (self.height as f64 * factor).round() as usize;
        Intrinsics::new(
            self.fx * factor,
            self.fy * factor,
            (self.cx + 0.5) * factor - 0.5,
            (self.cy + 0.5) * factor - 0.5,
            width,
            height,
        )
    }

    /// Unit-depth ray `((u − cx)/fx, (v − cy)/fy, 1)` through pixel `(u, v)`.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    #[inline]
    pub fn back_project(&self, u: f64, v: f64, depth: f64) -> Vector3<f64> {
        self.ray(u, v) * depth
    }

    /// Continuous image coordinates and depth, or `None` when `z ≤ Z_MIN`.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Option<ProjectedPoint> {
        if p.z > Z_MIN {
            Some(ProjectedPoint {
                u: self.fx * p.x / p.z + self.cx,
                v: self.fy * p.y / p.z + self.cy,
                depth: p.z,
            })
        } else {
            None
        }
    }

    /// Nearest integer pixel `(floor(u + 0.5), floor(v + 0.5))` as a row-major
    /// index, or `None` outside the image.
    #[inline]
    pub fn rasterize(&self, u: f64, v: f64) -> Option<usize> {
        let x = (u + 0.5).floor();
        let y = (v + 0.5).floor();
        if x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64 {
            Some(y as usize * self.width + x as usize)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument(format!("non-finite point {p:?}")));
        }
        Ok(PointCloud { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Projection {
    /// Projections of the kept points, in input order.
    pub points: Vec<ProjectedPoint>,
    /// Points dropped for lying at or behind the `Z_MIN` plane.
    pub dropped: usize,
}

/// Back-projects every valid pixel, row-major.
pub fn unproject(depth: &DepthMap, k: &Intrinsics) -> Result<PointCloud> {
    Error::check_dims(k.dims(), depth.dims())?;
    let mut points = Vec::with_capacity(depth.valid_count());
    for (y, row) in depth.rows().enumerate() {
        for (x, &d) in row.iter().enumerate() {
            if d > 0.0 {
                points.push(k.back_project(x as f64, y as f64, d));
            }
        }
    }
    Ok(PointCloud { points })
}

pub fn project(cloud: &PointCloud, k: &Intrinsics) -> Projection {
    let mut out = Projection::default();
    for p in &cloud.points {
        match k.project(p) {
            Some(q) => out.points.push(q),
            None => out.dropped += 1,
        }
    }
    out
}
