use super::config::{FuseMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::grid::{DepthMap, Grid};

/// Depth carried from the previous frame, already warped into the current
/// camera, with a per-pixel confidence in `[0, 1]` that is zero exactly
/// where the depth is. `offsets` holds where each warped sample fell
/// relative to its pixel center, so the next warp can start from the exact
/// point instead of the rounded one.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalState {
    warped_prev: DepthMap,
    confidence: Grid<f64>,
    offsets: Grid<[f64; 2]>,
}

impl TemporalState {
    pub fn empty(width: usize, height: usize) -> Self {
        TemporalState {
            warped_prev: DepthMap::zeros(width, height),
            confidence: Grid::filled(width, height, 0.0),
            offsets: Grid::filled(width, height, [0.0; 2]),
        }
    }

    pub fn new(warped_prev: DepthMap, confidence: Grid<f64>) -> Result<Self> {
        let (w, h) = warped_prev.dims();
        Self::with_offsets(warped_prev, confidence, Grid::filled(w, h, [0.0; 2]))
    }

    pub fn with_offsets(warped_prev: DepthMap, confidence: Grid<f64>, offsets: Grid<[f64; 2]>) -> Result<Self> {
        Error::check_dims(warped_prev.dims(), confidence.dims())?;
        Error::check_dims(warped_prev.dims(), offsets.dims())?;
        for (i, (&d, &c)) in warped_prev.as_slice().iter().zip(confidence.as_slice()).enumerate() {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Range(format!("confidence {c} at index {i} is outside [0, 1]")));
            }
            if (d == 0.0) != (c == 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "confidence and depth disagree on validity at index {i}"
                )));
            }
        }
        Ok(TemporalState {
            warped_prev,
            confidence,
            offsets,
        })
    }

    pub fn warped_prev(&self) -> &DepthMap {
        &self.warped_prev
    }

    pub fn confidence(&self) -> &Grid<f64> {
        &self.confidence
    }

    pub fn offsets(&self) -> &Grid<[f64; 2]> {
        &self.offsets
    }

    pub fn dims(&self) -> (usize, usize) {
        self.warped_prev.dims()
    }

    pub fn is_empty(&self) -> bool {
        self.warped_prev.valid_count() == 0
    }
}

/// Merges the current lidar frame with the warped history. Lidar pixels
/// get weight 1. Elsewhere a warped value is kept with its confidence as
/// weight, provided that confidence reaches `min_seed_confidence`.
pub fn fuse_temporal(
    sparse: &DepthMap,
    state: &TemporalState,
    cfg: &PipelineConfig,
) -> Result<(DepthMap, Grid<f64>)> {
    Error::check_dims(sparse.dims(), state.dims())?;
    let (w, h) = sparse.dims();
    let n = w * h;
    let mut depth = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    let warped = state.warped_prev.as_slice();
    let conf = state.confidence.as_slice();
    for i in 0..n {
        let s = sparse.as_slice()[i];
        let (d, c) = (warped[i], conf[i]);
        let carried = d > 0.0 && c > 0.0 && c >= cfg.min_seed_confidence;
        let (v, wt) = match (s > 0.0, carried) {
            (true, true) if cfg.fuse_mode == FuseMode::ConfidenceBlend => ((s + c * d) / (1.0 + c), 1.0),
            (true, _) => (s, 1.0),
            (false, true) => (d, c),
            (false, false) => (0.0, 0.0),
        };
        depth.push(v);
        weight.push(wt);
    }
    Ok((
        DepthMap::from_vec(w, h, depth)?,
        Grid::from_vec(w, h, weight)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(d: &[f64], c: &[f64]) -> TemporalState {
        TemporalState::new(
            DepthMap::from_vec(d.len(), 1, d.to_vec()).unwrap(),
            Grid::from_vec(c.len(), 1, c.to_vec()).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn empty_state_passes_sparse_through() {
        let s = DepthMap::from_vec(3, 1, vec![0.0, 2.0, 0.0]).unwrap();
        let (f, w) = fuse_temporal(&s, &TemporalState::empty(3, 1), &PipelineConfig::default()).unwrap();
        assert_eq!(f, s);
        assert_eq!(w.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn lidar_overrides_history() {
        let s = DepthMap::from_vec(3, 1, vec![4.0, 0.0, 0.0]).unwrap();
        let st = state(&[9.0, 6.0, 5.0], &[0.8, 0.7, 0.1]);
        let (f, w) = fuse_temporal(&s, &st, &PipelineConfig::default()).unwrap();
        assert_eq!(f.as_slice(), &[4.0, 6.0, 0.0]);
        assert_eq!(w.as_slice(), &[1.0, 0.7, 0.0]);
    }

    #[test]
    fn blend_mode_weights_by_confidence() {
        let cfg = PipelineConfig {
            fuse_mode: FuseMode::ConfidenceBlend,
            ..Default::default()
        };
        let s = DepthMap::from_vec(1, 1, vec![4.0]).unwrap();
        let (f, _) = fuse_temporal(&s, &state(&[10.0], &[1.0]), &cfg).unwrap();
        assert_eq!(f.as_slice(), &[7.0]);
    }

    #[test]
    fn state_invariants_are_checked() {
        let d = DepthMap::from_vec(2, 1, vec![1.0, 0.0]).unwrap();
        assert!(TemporalState::new(d.clone(), Grid::from_vec(2, 1, vec![0.5, 0.2]).unwrap()).is_err());
        assert!(TemporalState::new(d.clone(), Grid::from_vec(2, 1, vec![1.5, 0.0]).unwrap()).is_err());
        assert!(TemporalState::new(d, Grid::from_vec(2, 1, vec![0.0, 0.0]).unwrap()).is_err());
        let s = DepthMap::zeros(3, 1);
        assert!(fuse_temporal(&s, &TemporalState::empty(2, 1), &PipelineConfig::default()).is_err());
    }
}
