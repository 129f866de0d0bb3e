use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, RigidTransform};
use crate::grid::{DepthMap, Grid, Intensity};

const T_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Plane { point: [f64; 3], normal: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
    /// Axis-aligned in the scene frame.
    Box { min: [f64; 3], max: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    /// Reflectance in `[0, 1]` used for the guide image.
    #[serde(default = "default_albedo")]
    pub albedo: f64,
}

fn default_albedo() -> f64 {
    0.5
}

/// A box that moves by `velocity` meters per frame. Its motion is not part
/// of the camera egomotion, so it breaks warp consistency on purpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub velocity: [f64; 3],
    #[serde(default = "default_albedo")]
    pub albedo: f64,
}

/// Static primitives in world coordinates, meters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moving_box: Option<MovingBox>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals z-depth for camera rays with unit z.
    pub t: f64,
    pub normal: Vector3<f64>,
    pub albedo: f64,
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64; 3]| v.iter().all(|c| c.is_finite());
        match self {
            Shape::Plane { point, normal } => {
                if !finite(point) || !finite(normal) || Vector3::from(*normal).norm() == 0.0 {
                    return Err(Error::InvalidArgument("plane needs a finite nonzero normal".into()));
                }
            }
            Shape::Sphere { center, radius } => {
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidArgument(format!("sphere radius {radius} must be positive")));
                }
            }
            Shape::Box { min, max } => {
                if !finite(min) || !finite(max) || (0..3).any(|i| min[i] >= max[i]) {
                    return Err(Error::InvalidArgument(format!(
                        "box min {min:?} must be below max {max:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Nearest intersection with `t > 0` along `origin + t·dir`.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        match self {
            Shape::Plane { point, normal } => {
                let n = Vector3::from(*normal);
                let denom = n.dot(dir);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = n.dot(&(Vector3::from(*point) - origin)) / denom;
                (t > T_EPS).then(|| (t, n.normalize()))
            }
            Shape::Sphere { center, radius } => {
                let c = Vector3::from(*center);
                let oc = origin - c;
                let a = dir.norm_squared();
                let half_b = oc.dot(dir);
                let disc = half_b * half_b - a * (oc.norm_squared() - radius * radius);
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let t = [(-half_b - sq) / a, (-half_b + sq) / a]
                    .into_iter()
                    .find(|t| *t > T_EPS)?;
                Some((t, (origin + dir * t - c) / *radius))
            }
            Shape::Box { min, max } => {
                let mut t_near = f64::NEG_INFINITY;
                let mut t_far = f64::INFINITY;
                let mut axis_near = 0;
                let mut axis_far = 0;
                for i in 0..3 {
                    if dir[i] == 0.0 {
                        if origin[i] < min[i] || origin[i] > max[i] {
                            return None;
                        }
                        continue;
                    }
                    let a = (min[i] - origin[i]) / dir[i];
                    let b = (max[i] - origin[i]) / dir[i];
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    if lo > t_near {
                        t_near = lo;
                        axis_near = i;
                    }
                    if hi < t_far {
                        t_far = hi;
                        axis_far = i;
                    }
                }
                if t_near > t_far {
                    return None;
                }
                let (t, axis) = if t_near > T_EPS {
                    (t_near, axis_near)
                } else if t_far > T_EPS {
                    (t_far, axis_far)
                } else {
                    return None;
                };
                let mut n = Vector3::zeros();
                n[axis] = -dir[axis].signum();
                Some((t, n))
            }
        }
    }

    fn transformed(&self, q: &RigidTransform) -> Result<Shape> {
        let p = |v: &[f64; 3]| {
            let r = q.transform_point(&Vector3::from(*v));
            [r.x, r.y, r.z]
        };
        Ok(match self {
            Shape::Plane { point, normal } => {
                let n = q.rotation() * Vector3::from(*normal);
                Shape::Plane {
                    point: p(point),
                    normal: [n.x, n.y, n.z],
                }
            }
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: p(center),
                radius: *radius,
            },
            Shape::Box { min, max } => {
                if q.rotation().amax() != 1.0 || (q.rotation().abs().sum() - 3.0) != 0.0 {
                    return Err(Error::InvalidArgument(
                        "axis-aligned boxes only support axis permutations".into(),
                    ));
                }
                let (a, b) = (p(min), p(max));
                Shape::Box {
                    min: [a[0].min(b[0]), a[1].min(b[1]), a[2].min(b[2])],
                    max: [a[0].max(b[0]), a[1].max(b[1]), a[2].max(b[2])],
                }
            }
        })
    }
}

impl SceneSpec {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        let scene = SceneSpec {
            primitives,
            moving_box: None,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.primitives.is_empty() && self.moving_box.is_none() {
            return Err(Error::InvalidArgument("scene has no primitives".into()));
        }
        for p in &self.primitives {
            p.shape.validate()?;
        }
        if let Some(m) = &self.moving_box {
            Shape::Box { min: m.min, max: m.max }.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: SceneSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("scene: {e}")))?;
        scene.validate()?;
        Ok(scene)
    }

    /// Static primitives plus the moving box at its position in `frame`.
    pub fn at_frame(&self, frame: usize) -> SceneSpec {
        let mut primitives = self.primitives.clone();
        if let Some(m) = &self.moving_box {
            let shift = |v: &[f64; 3]| std::array::from_fn(|i| v[i] + frame as f64 * m.velocity[i]);
            primitives.push(Primitive {
                shape: Shape::Box {
                    min: shift(&m.min),
                    max: shift(&m.max),
                },
                albedo: m.albedo,
            });
        }
        SceneSpec {
            primitives,
            moving_box: None,
        }
    }

    /// Every primitive mapped through `q`. Boxes allow translations only.
    pub fn transformed(&self, q: &RigidTransform) -> Result<SceneSpec> {
        let primitives = self
            .primitives
            .iter()
            .map(|p| {
                Ok(Primitive {
                    shape: p.shape.transformed(q)?,
                    albedo: p.albedo,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SceneSpec {
            primitives,
            moving_box: None,
        })
    }

    pub fn cast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        self.primitives
            .iter()
            .filter_map(|p| {
                p.shape.intersect(origin, dir).map(|(t, normal)| Hit {
                    t,
                    normal,
                    albedo: p.albedo,
                })
            })
            .min_by(|a, b| a.t.total_cmp(&b.t))
    }

    /// A street canyon in camera-aligned coordinates (x right, y down,
    /// z forward), camera 1.65 m above the ground at the origin: ground,
    /// two facades, a far wall, parked cars, poles and round bushes.
    pub fn street(seed: u64) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ground_y = 1.65;
        let left = -rng.gen_range(5.0..8.0);
        let right = rng.gen_range(5.0..8.0);
        let far = rng.gen_range(70.0..110.0);
        let mut primitives = vec![
            Primitive {
                shape: Shape::Plane { point: [0.0, ground_y, 0.0], normal: [0.0, -1.0, 0.0] },
                albedo: 0.35,
            },
            Primitive {
                shape: Shape::Plane { point: [left, 0.0, 0.0], normal: [1.0, 0.0, 0.0] },
                albedo: rng.gen_range(0.55..0.8),
            },
            Primitive {
                shape: Shape::Plane { point: [right, 0.0, 0.0], normal: [-1.0, 0.0, 0.0] },
                albedo: rng.gen_range(0.55..0.8),
            },
            Primitive {
                shape: Shape::Plane { point: [0.0, 0.0, far], normal: [0.0, 0.0, -1.0] },
                albedo: 0.9,
            },
        ];
        let cars = rng.gen_range(4..9);
        for _ in 0..cars {
            let side: f64 = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
            let x = side * rng.gen_range(2.2..3.8);
            let z = rng.gen_range(6.0..60.0);
            let (w, h, l) = (rng.gen_range(1.6..1.9), rng.gen_range(1.4..1.8), rng.gen_range(3.8..4.8));
            primitives.push(Primitive {
                shape: Shape::Box {
                    min: [x - w / 2.0, ground_y - h, z],
                    max: [x + w / 2.0, ground_y, z + l],
                },
                albedo: rng.gen_range(0.05..0.95),
            });
        }
        let poles = rng.gen_range(2..6);
        for _ in 0..poles {
            let x = if rng.gen_bool(0.5) { left + 0.8 } else { right - 0.8 };
            let z = rng.gen_range(5.0..70.0);
            primitives.push(Primitive {
                shape: Shape::Box {
                    min: [x - 0.1, ground_y - rng.gen_range(3.0..6.0), z],
                    max: [x + 0.1, ground_y, z + 0.2],
                },
                albedo: 0.15,
            });
        }
        let bushes = rng.gen_range(2..6);
        for _ in 0..bushes {
            let r = rng.gen_range(0.5..1.6);
            let x = if rng.gen_bool(0.5) { left + r } else { right - r };
            primitives.push(Primitive {
                shape: Shape::Sphere {
                    center: [x, ground_y - r * 0.8, rng.gen_range(8.0..70.0)],
                    radius: r,
                },
                albedo: rng.gen_range(0.1..0.4),
            });
        }
        SceneSpec {
            primitives,
            moving_box: None,
        }
    }
}

/// Z-depth of the nearest surface for each pixel, `0` where nothing is hit.
pub fn render_depth(scene: &SceneSpec, world_from_camera: &RigidTransform, k: &Intrinsics) -> DepthMap {
    let (depth, _) = render(scene, world_from_camera, k);
    depth
}

/// Depth plus a flat-shaded intensity image (albedo times a headlight
/// Lambert term; misses are black).
pub fn render(scene: &SceneSpec, world_from_camera: &RigidTransform, k: &Intrinsics) -> (DepthMap, Intensity) {
    let (w, h) = k.dims();
    let origin = *world_from_camera.translation();
    let rot = world_from_camera.rotation();
    let pixels: Vec<(f64, f64)> = (0..w * h)
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let ray = k.ray((i % w) as f64, (i / w) as f64);
            let dir = rot * ray;
            match scene.cast(&origin, &dir) {
                Some(hit) => {
                    let lambert = hit.normal.dot(&dir).abs() / dir.norm();
                    (hit.t, hit.albedo * (0.25 + 0.75 * lambert))
                }
                None => (0.0, 0.0),
            }
        })
        .collect();
    let (depth, shade): (Vec<f64>, Vec<f64>) = pixels.into_iter().unzip();
    (
        DepthMap::from_grid_unchecked(Grid::from_vec(w, h, depth).expect("sized by intrinsics")),
        Grid::from_vec(w, h, shade).expect("sized by intrinsics"),
    )
}
