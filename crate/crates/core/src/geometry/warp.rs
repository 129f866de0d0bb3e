//! Forward warping of depth maps with z-buffered scatter.
//!
//! Every valid source pixel is back-projected, moved by the relative pose and
//! projected into the target view, then written to its nearest target pixel.
//! Collisions keep the smallest depth; among equal depths the lowest
//! row-major source index wins. The reduction runs in parallel but is
//! order-independent: it is a `fetch_min` over the depth bit pattern (positive
//! IEEE doubles order like their bits) followed by a `fetch_min` over source
//! indices that reached the minimum.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rayon::prelude::*;

use super::camera::Intrinsics;
use super::transform::RigidTransform;
use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid};

const NO_WINNER: u32 = u32::MAX;
const PAR_MIN_LEN: usize = 4096;

/// Where one valid source pixel ended up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpSample {
    /// Continuous target coordinates.
    pub u: f64,
    pub v: f64,
    /// Depth in the target camera.
    pub depth: f64,
    /// Row-major target pixel, `None` when the sample left the image.
    pub target: Option<usize>,
    /// `∂depth/∂source_depth` for this sample.
    pub depth_gradient: f64,
}

/// Bookkeeping from [`warp_depth`] needed by [`warp_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct WarpCorrespondence {
    width: usize,
    height: usize,
    winners: Vec<Option<u32>>,
    samples: Vec<Option<WarpSample>>,
}

impl WarpCorrespondence {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Winning source index for each target pixel.
    pub fn winners(&self) -> &[Option<u32>] {
        &self.winners
    }

    pub fn winner(&self, target: usize) -> Option<usize> {
        self.winners[target].map(|s| s as usize)
    }

    /// Per source pixel: `None` for invalid pixels and samples dropped at the
    /// `Z_MIN` plane.
    pub fn samples(&self) -> &[Option<WarpSample>] {
        &self.samples
    }

    /// Pulls a per-source channel through the warp: target pixels take the
    /// value of their winner, unhit pixels take `fill`.
    pub fn gather<T: Clone + Send + Sync>(&self, source: &Grid<T>, fill: T) -> Result<Grid<T>> {
        Error::check_dims(self.dims(), source.dims())?;
        let data = self
            .winners
            .par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|w| match w {
                Some(s) => source[*s as usize].clone(),
                None => fill.clone(),
            })
            .collect();
        Grid::from_vec(self.width, self.height, data)
    }
}

/// Warps `prev` (seen by a camera with intrinsics `k`) into the camera
/// `pose · X`. `pose` maps previous-frame camera coordinates to current-frame
/// camera coordinates.
pub fn warp_depth(
    prev: &DepthMap,
    k: &Intrinsics,
    pose: &RigidTransform,
) -> Result<(DepthMap, WarpCorrespondence)> {
    warp_impl(prev, None, k, pose)
}

/// [`warp_depth`] with each source sample taken at its pixel center plus
/// `offsets`, in pixels.
pub fn warp_depth_subpixel(
    prev: &DepthMap,
    offsets: &Grid<[f64; 2]>,
    k: &Intrinsics,
    pose: &RigidTransform,
) -> Result<(DepthMap, WarpCorrespondence)> {
    Error::check_dims(prev.dims(), offsets.dims())?;
    warp_impl(prev, Some(offsets), k, pose)
}

fn warp_impl(
    prev: &DepthMap,
    offsets: Option<&Grid<[f64; 2]>>,
    k: &Intrinsics,
    pose: &RigidTransform,
) -> Result<(DepthMap, WarpCorrespondence)> {
    Error::check_dims(k.dims(), prev.dims())?;
    let width = prev.width();
    let row3 = pose.rotation().row(2).transpose();

    let samples: Vec<Option<WarpSample>> = prev
        .as_slice()
        .par_iter()
        .with_min_len(PAR_MIN_LEN)
        .enumerate()
        .map(|(i, &d)| {
            if d <= 0.0 {
                return None;
            }
            let (mut x, mut y) = ((i % width) as f64, (i / width) as f64);
            if let Some(o) = offsets {
                x += o[i][0];
                y += o[i][1];
            }
            let ray = k.ray(x, y);
            let moved = pose.transform_point(&(ray * d));
            let q = k.project(&moved)?;
            Some(WarpSample {
                u: q.u,
                v: q.v,
                depth: q.depth,
                target: k.rasterize(q.u, q.v),
                depth_gradient: row3.dot(&ray),
            })
        })
        .collect();

    let scatter = scatter_min(
        prev.len(),
        samples
            .par_iter()
            .map(|s| s.and_then(|s| Some((s.target?, s.depth)))),
    )?;
    let out = DepthMap::from_grid_unchecked(Grid::from_vec(width, prev.height(), scatter.depth)?);
    let corr = WarpCorrespondence {
        width,
        height: prev.height(),
        winners: scatter.winners,
        samples,
    };
    Ok((out, corr))
}

/// Routes `grad_out` (gradient w.r.t. the warped depth) back to the source
/// depths. Sources that lost the z-test or left the image get zero.
pub fn warp_backward(grad_out: &Grid<f64>, corr: &WarpCorrespondence) -> Result<Grid<f64>> {
    Error::check_dims(corr.dims(), grad_out.dims())?;
    let mut grad_in = Grid::filled(corr.width, corr.height, 0.0);
    for (t, w) in corr.winners.iter().enumerate() {
        if let Some(s) = w {
            let s = *s as usize;
            let sample = corr.samples[s].expect("winner has a sample");
            // a source lands on at most one target, so no accumulation
            grad_in[s] = grad_out[t] * sample.depth_gradient;
        }
    }
    Ok(grad_in)
}

pub(crate) struct Scatter {
    pub depth: Vec<f64>,
    pub winners: Vec<Option<u32>>,
}

/// Min-depth scatter of indexed `(target, depth)` samples onto `len` pixels.
/// Depths must be positive and finite.
pub(crate) fn scatter_min<I>(len: usize, samples: I) -> Result<Scatter>
where
    I: IndexedParallelIterator<Item = Option<(usize, f64)>>,
{
    if samples.len() >= NO_WINNER as usize {
        return Err(Error::InvalidArgument(format!(
            "{} samples exceed the scatter index range",
            samples.len()
        )));
    }
    let best: Vec<AtomicU64> = (0..len).map(|_| AtomicU64::new(u64::MAX)).collect();
    let winners: Vec<AtomicU32> = (0..len).map(|_| AtomicU32::new(NO_WINNER)).collect();
    let samples: Vec<Option<(usize, f64)>> = samples.collect();

    samples
        .par_iter()
        .with_min_len(PAR_MIN_LEN)
        .flatten()
        .for_each(|&(t, z)| {
            debug_assert!(z > 0.0 && z.is_finite());
            best[t].fetch_min(z.to_bits(), Ordering::Relaxed);
        });
    samples
        .par_iter()
        .with_min_len(PAR_MIN_LEN)
        .enumerate()
        .for_each(|(i, s)| {
            if let Some((t, z)) = *s {
                if best[t].load(Ordering::Relaxed) == z.to_bits() {
                    winners[t].fetch_min(i as u32, Ordering::Relaxed);
                }
            }
        });

    let depth = best
        .into_iter()
        .map(|b| match b.into_inner() {
            u64::MAX => 0.0,
            bits => f64::from_bits(bits),
        })
        .collect();
    let winners = winners
        .into_iter()
        .map(|w| match w.into_inner() {
            NO_WINNER => None,
            s => Some(s),
        })
        .collect();
    Ok(Scatter { depth, winners })
}
