#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use recurdepth::geometry::Z_MIN;
use recurdepth::{DepthMap, Intrinsics, RigidTransform};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn calib_dir() -> PathBuf {
    fixture_dir().join("2011_09_26")
}

pub fn small_k() -> Intrinsics {
    Intrinsics::new(120.0, 118.0, 47.3, 31.8, 96, 64).unwrap()
}

/// Random map with roughly `density` valid pixels, depths in `[lo, hi)`.
pub fn random_depth(rng: &mut impl Rng, w: usize, h: usize, density: f64, lo: f64, hi: f64) -> DepthMap {
    DepthMap::from_fn(w, h, |_, _| if rng.gen_bool(density) { rng.gen_range(lo..hi) } else { 0.0 }).unwrap()
}

/// Tilted plane plus a gentle ripple; every pixel valid.
pub fn smooth_depth(w: usize, h: usize, base: f64, a: f64, b: f64) -> DepthMap {
    DepthMap::from_fn(w, h, |x, y| {
        let (x, y) = (x as f64, y as f64);
        base + a * x + b * y + 0.3 * (0.05 * x).sin() * (0.07 * y).cos()
    })
    .unwrap()
}

pub fn random_pose(rng: &mut impl Rng, angle: f64, shift: f64) -> RigidTransform {
    RigidTransform::from_euler_zyx(
        rng.gen_range(-angle..angle),
        rng.gen_range(-angle..angle),
        rng.gen_range(-angle..angle),
        Vector3::new(
            rng.gen_range(-shift..shift),
            rng.gen_range(-shift..shift),
            rng.gen_range(-shift..shift),
        ),
    )
}

/// Single-threaded reference of the forward warp: row-major visit, strict
/// `<` so the earliest source keeps a tie.
pub fn sequential_warp(prev: &DepthMap, k: &Intrinsics, pose: &RigidTransform) -> (DepthMap, Vec<Option<usize>>) {
    let (w, h) = prev.dims();
    let mut out = vec![0.0; w * h];
    let mut winner = vec![None; w * h];
    for y in 0..h {
        for x in 0..w {
            let d = *prev.get(x, y);
            if d <= 0.0 {
                continue;
            }
            let ray = Vector3::new((x as f64 - k.cx()) / k.fx(), (y as f64 - k.cy()) / k.fy(), 1.0);
            let p = pose.transform_point(&(ray * d));
            if p.z <= Z_MIN {
                continue;
            }
            let u = k.fx() * p.x / p.z + k.cx();
            let v = k.fy() * p.y / p.z + k.cy();
            let (tx, ty) = ((u + 0.5).floor(), (v + 0.5).floor());
            if tx < 0.0 || ty < 0.0 || tx >= w as f64 || ty >= h as f64 {
                continue;
            }
            let t = ty as usize * w + tx as usize;
            if winner[t].is_none() || p.z < out[t] {
                out[t] = p.z;
                winner[t] = Some(y * w + x);
            }
        }
    }
    (DepthMap::from_vec(w, h, out).unwrap(), winner)
}

/// Lidar axes (x forward, y left, z up) expressed in a camera-aligned world
/// (x right, y down, z forward).
pub fn lidar_axes() -> Matrix3<f64> {
    Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Applies `f` to every valid pixel.
pub fn map_valid(d: &DepthMap, mut f: impl FnMut(f64) -> f64) -> DepthMap {
    let values = d.as_slice().iter().map(|&v| if v > 0.0 { f(v) } else { 0.0 }).collect();
    DepthMap::from_vec(d.width(), d.height(), values).unwrap()
}
