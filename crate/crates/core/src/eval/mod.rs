//! KITTI depth-completion metrics, block difference maps and per-frame
//! error curves.

mod blocks;
mod curve;
mod metrics;
mod turbo;

pub use blocks::{block_error_diff, BlockDiffAccumulator, BlockDiffMap};
pub use curve::{per_frame_rmse, write_curve_csv};
pub use metrics::{metrics, MetricsReport, MetricsSums};
pub use turbo::turbo_colormap;
