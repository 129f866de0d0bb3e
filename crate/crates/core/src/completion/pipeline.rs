use serde::Serialize;

use super::config::PipelineConfig;
use super::cspn::cspn_refine;
use super::fuse::{fuse_temporal, TemporalState};
use super::spatial::spatial_complete;
use crate::error::{Error, Result};
use crate::eval::{metrics, MetricsReport};
use crate::geometry::{warp_depth_subpixel, Intrinsics, RigidTransform};
use crate::grid::{DepthMap, Grid, Intensity};
use crate::sequence::Sequence;

/// Everything one frame produced.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub prediction: DepthMap,
    /// Seed handed to the spatial fill: lidar plus carried history.
    pub fused: DepthMap,
    /// Per-pixel confidence of `prediction` before decay.
    pub confidence: Grid<f64>,
    /// Sub-pixel positions of carried samples; zero elsewhere.
    pub offsets: Grid<[f64; 2]>,
}

/// Completes one frame from its lidar input and the incoming state.
pub fn predict(
    sparse: &DepthMap,
    guide: Option<&Intensity>,
    state: &TemporalState,
    cfg: &PipelineConfig,
) -> Result<StepOutput> {
    let (fused, weights) = fuse_temporal(sparse, state, cfg)?;
    let coarse = spatial_complete(&fused, &weights, cfg)?;
    let flat;
    let guide = match guide {
        Some(g) => g,
        None => {
            flat = Grid::filled(sparse.width(), sparse.height(), 0.0);
            &flat
        }
    };
    let prediction = cspn_refine(&coarse, guide, &fused, cfg)?;
    let fill = cfg.fill_confidence;
    let confidence = weights.map(|&c| if c > 0.0 { c } else { fill });
    let offsets = Grid::from_fn(sparse.width(), sparse.height(), |x, y| {
        let carried = *sparse.get(x, y) == 0.0 && *fused.get(x, y) > 0.0;
        if carried {
            *state.offsets().get(x, y)
        } else {
            [0.0; 2]
        }
    });
    Ok(StepOutput {
        prediction,
        fused,
        confidence,
        offsets,
    })
}

/// Carries a prediction into the next camera: its depth is warped by
/// `pose_to_next` and its confidence and sub-pixel positions follow the
/// same pixels, the confidence decayed by `gamma`. Pixels the warp leaves
/// empty have zero confidence.
pub fn advance_state(
    out: &StepOutput,
    k: &Intrinsics,
    pose_to_next: &RigidTransform,
    cfg: &PipelineConfig,
) -> Result<TemporalState> {
    let (warped, corr) = warp_depth_subpixel(&out.prediction, &out.offsets, k, pose_to_next)?;
    let carried = corr.gather(&out.confidence, 0.0)?;
    let w = warped.width();
    let offsets = Grid::from_fn(w, warped.height(), |x, y| match corr.winner(y * w + x) {
        Some(s) => {
            let p = corr.samples()[s].expect("winner has a sample");
            [p.u - x as f64, p.v - y as f64]
        }
        None => [0.0; 2],
    });
    let confidence = Grid::from_fn(warped.width(), warped.height(), |x, y| {
        if *warped.get(x, y) > 0.0 {
            (cfg.gamma * carried.get(x, y).min(1.0)).max(f64::MIN_POSITIVE)
        } else {
            0.0
        }
    });
    TemporalState::with_offsets(warped, confidence, offsets)
}

/// One recurrence step: predict, then warp the prediction for the next
/// frame.
pub fn step(
    sparse: &DepthMap,
    guide: Option<&Intensity>,
    state: &TemporalState,
    k: &Intrinsics,
    pose_to_next: &RigidTransform,
    cfg: &PipelineConfig,
) -> Result<(StepOutput, TemporalState)> {
    let out = predict(sparse, guide, state, cfg)?;
    let next = advance_state(&out, k, pose_to_next, cfg)?;
    Ok((out, next))
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameResult {
    pub name: String,
    #[serde(skip)]
    pub prediction: DepthMap,
    pub sparse_density: f64,
    pub fused_density: f64,
    pub metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceRun {
    pub temporal: bool,
    pub frames: Vec<FrameResult>,
}

impl SequenceRun {
    /// RMSE of every frame with ground truth, in order.
    pub fn rmse_curve(&self) -> Vec<f64> {
        self.frames.iter().filter_map(|f| f.metrics.map(|m| m.rmse)).collect()
    }
}

/// Runs the pipeline over `seq` in order. Without `temporal`, each frame
/// starts from an empty state.
pub fn run_sequence(seq: &Sequence, cfg: &PipelineConfig, temporal: bool) -> Result<SequenceRun> {
    cfg.validate()?;
    if seq.is_empty() {
        return Err(Error::InvalidArgument("sequence has no frames".into()));
    }
    let (w, h) = seq.frames[0].sparse.dims();
    if temporal {
        for i in 0..seq.len() - 1 {
            if seq.pose_to_next(i).is_none() {
                return Err(Error::MissingPose { from: i, to: i + 1 });
            }
        }
    }
    let mut state = TemporalState::empty(w, h);
    let mut frames = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames.iter().enumerate() {
        let out = predict(&frame.sparse, frame.guide.as_ref(), &state, cfg)?;
        if temporal {
            if let Some(pose) = seq.pose_to_next(i) {
                state = advance_state(&out, &seq.intrinsics, pose, cfg)?;
            }
        }
        let metrics = frame
            .groundtruth
            .as_ref()
            .filter(|gt| gt.valid_count() > 0)
            .map(|gt| metrics(&out.prediction, gt))
            .transpose()?;
        frames.push(FrameResult {
            name: frame.name.clone(),
            sparse_density: frame.sparse.density(),
            fused_density: out.fused.density(),
            prediction: out.prediction,
            metrics,
        });
    }
    Ok(SequenceRun { temporal, frames })
}
