use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub capacity_y: f64,
    /// `1 / slope` of delay against distance, fitted through the origin.
    pub speed_slope: f64,
    /// Growth rate of the farthest informed distance.
    pub speed_frontier: f64,
    pub samples: usize,
    /// RMS delay residual of the slope fit, seconds.
    pub residual: f64,
}

/// Estimates the propagation speed from per-run `(distance, delay)` samples.
///
/// Only samples with distance inside `window` are used. The frontier
/// estimator takes each run's running maximum of distance against delay and
/// fits one common slope with a separate intercept per run.
pub fn estimate_speed(capacity_y: f64, runs: &[Vec<(f64, f64)>], window: (f64, f64)) -> Result<SpeedEstimate> {
    let inside = |d: f64| d >= window.0 && d <= window.1;
    let pooled: Vec<(f64, f64)> = runs.iter().flatten().copied().filter(|&(d, _)| inside(d)).collect();
    if pooled.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            got: pooled.len(),
        });
    }
    let sxx: f64 = pooled.iter().map(|&(d, _)| d * d).sum();
    let sxy: f64 = pooled.iter().map(|&(d, t)| d * t).sum();
    let slope = sxy / sxx;
    let residual = (pooled.iter().map(|&(d, t)| (t - slope * d).powi(2)).sum::<f64>() / pooled.len() as f64).sqrt();

    let mut num = 0.0;
    let mut den = 0.0;
    for run in runs {
        let mut by_delay: Vec<(f64, f64)> = run.clone();
        by_delay.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut reach = f64::NEG_INFINITY;
        let points: Vec<(f64, f64)> = by_delay
            .iter()
            .filter_map(|&(d, t)| {
                reach = reach.max(d);
                inside(reach).then_some((t, reach))
            })
            .collect();
        if points.len() < 3 {
            continue;
        }
        let k = points.len() as f64;
        let mt = points.iter().map(|p| p.0).sum::<f64>() / k;
        let mr = points.iter().map(|p| p.1).sum::<f64>() / k;
        num += points.iter().map(|&(t, r)| (t - mt) * (r - mr)).sum::<f64>();
        den += points.iter().map(|&(t, _)| (t - mt).powi(2)).sum::<f64>();
    }
    let speed_frontier = if den > 0.0 { (num / den).max(0.0) } else { f64::NAN };

    Ok(SpeedEstimate {
        capacity_y,
        speed_slope: if slope > 0.0 { 1.0 / slope } else { f64::INFINITY },
        speed_frontier,
        samples: pooled.len(),
        residual,
    })
}
