use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DepthMap;

/// Errors over the pixels with valid ground truth. Depth errors are in
/// millimeters, inverse-depth errors in 1/km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mae: f64,
    pub irmse: f64,
    pub imae: f64,
    pub valid_count: usize,
}

/// Running sums behind a [`MetricsReport`]. Merging is order independent up
/// to floating-point summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricsSums {
    pub sq: f64,
    pub abs: f64,
    pub inv_sq: f64,
    pub inv_abs: f64,
    pub count: usize,
}

impl MetricsSums {
    pub fn from_maps(pred: &DepthMap, gt: &DepthMap) -> Result<Self> {
        Error::check_dims(gt.dims(), pred.dims())?;
        let mut s = MetricsSums::default();
        let w = gt.width();
        for (i, (&p, &g)) in pred.as_slice().iter().zip(gt.as_slice()).enumerate() {
            if g <= 0.0 {
                continue;
            }
            if p <= 0.0 {
                return Err(Error::SparsePrediction { x: i % w, y: i / w });
            }
            let e = p - g;
            let ie = 1.0 / p - 1.0 / g;
            s.sq += e * e;
            s.abs += e.abs();
            s.inv_sq += ie * ie;
            s.inv_abs += ie.abs();
            s.count += 1;
        }
        Ok(s)
    }

    pub fn merge(self, other: MetricsSums) -> MetricsSums {
        MetricsSums {
            sq: self.sq + other.sq,
            abs: self.abs + other.abs,
            inv_sq: self.inv_sq + other.inv_sq,
            inv_abs: self.inv_abs + other.inv_abs,
            count: self.count + other.count,
        }
    }

    pub fn report(&self) -> Result<MetricsReport> {
        if self.count == 0 {
            return Err(Error::NoValidPixels);
        }
        let n = self.count as f64;
        Ok(MetricsReport {
            rmse: 1000.0 * (self.sq / n).sqrt(),
            mae: 1000.0 * self.abs / n,
            irmse: 1000.0 * (self.inv_sq / n).sqrt(),
            imae: 1000.0 * self.inv_abs / n,
            valid_count: self.count,
        })
    }
}

/// Compares a dense prediction against ground truth, both in meters.
pub fn metrics(pred: &DepthMap, gt: &DepthMap) -> Result<MetricsReport> {
    MetricsSums::from_maps(pred, gt)?.report()
}

impl MetricsReport {
    /// Unweighted mean of per-frame reports; `valid_count` is the total.
    pub fn mean(reports: &[MetricsReport]) -> Option<MetricsReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Some(MetricsReport {
            rmse: avg(|r| r.rmse),
            mae: avg(|r| r.mae),
            irmse: avg(|r| r.irmse),
            imae: avg(|r| r.imae),
            valid_count: reports.iter().map(|r| r.valid_count).sum(),
        })
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>12}  {:<5}", "metric", "value", "unit")?;
        writeln!(f, "{:<8} {:>12.3}  {:<5}", "RMSE", self.rmse, "mm")?;
        writeln!(f, "{:<8} {:>12.3}  {:<5}", "MAE", self.mae, "mm")?;
        writeln!(f, "{:<8} {:>12.4}  {:<5}", "iRMSE", self.irmse, "1/km")?;
        writeln!(f, "{:<8} {:>12.4}  {:<5}", "iMAE", self.imae, "1/km")?;
        write!(f, "{:<8} {:>12}  {:<5}", "pixels", self.valid_count, "")
    }
}
