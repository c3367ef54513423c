//! Realized volatility and its comparison with the depth-based prediction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::intensity::{estimate, EstimateOptions};
use super::log::EventRecord;
use crate::analytics::{depth, events_for_window};
use crate::error::{Error, Result};

/// Sample standard deviation of the price increments over consecutive,
/// non-overlapping windows of `window` seconds. `series` holds
/// `(time, price)` points in time order; the price is a step function
/// holding its last value.
pub fn realized_volatility(series: &[(f64, f64)], window: f64) -> Result<f64> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::Domain(format!("window must be positive, got {window}")));
    }
    let (t0, _) = *series.first().ok_or(Error::EmptyLog)?;
    let t_end = series.last().unwrap().0;
    let windows = ((t_end - t0) / window).floor() as usize;
    if windows < 2 {
        return Err(Error::InsufficientData(format!(
            "series spans {} s, fewer than two {window} s windows",
            t_end - t0
        )));
    }
    let mut idx = 0;
    let mut price_at = |t: f64| {
        while idx + 1 < series.len() && series[idx + 1].0 <= t {
            idx += 1;
        }
        series[idx].1
    };
    let marks: Vec<f64> = (0..=windows).map(|k| price_at(t0 + k as f64 * window)).collect();
    let inc: Vec<f64> = marks.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = inc.iter().sum::<f64>() / inc.len() as f64;
    let var = inc.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
    Ok(var.sqrt())
}

/// `(timestamp, bid_price_after)` points of an event log.
pub fn price_series(log: &[EventRecord]) -> Vec<(f64, f64)> {
    log.iter().map(|r| (r.timestamp, r.bid_price_after)).collect()
}

/// One asset's depth-based volatility predictor next to its realized
/// volatility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolRow {
    pub asset: String,
    pub lambda_hat: f64,
    pub depth: f64,
    /// `sqrt(lambda_hat / D(f_hat))`.
    pub predictor: f64,
    pub realized: f64,
    /// `realized / predictor`; the balanced limit predicts `delta sqrt(pi n)`.
    pub ratio: f64,
    /// Scaling index with `n ln n` equal to the window.
    pub n: f64,
    pub tick: f64,
    /// `delta sqrt(pi n)`.
    pub theory_ratio: f64,
}

pub fn predicted_vs_realized(
    asset: &str,
    log: &[EventRecord],
    window: f64,
    opts: &EstimateOptions,
) -> Result<VolRow> {
    let est = estimate(log, opts)?;
    let repl = est.replenishment.as_ref().ok_or(Error::NoPriceChanges)?;
    let d = depth(&repl.f_hat);
    let lambda_hat = est.lambda_hat();
    let predictor = (lambda_hat / d).sqrt();
    let realized = realized_volatility(&price_series(log), window)?;
    let n = events_for_window(window)?;
    Ok(VolRow {
        asset: asset.to_string(),
        lambda_hat,
        depth: d,
        predictor,
        realized,
        ratio: realized / predictor,
        n,
        tick: repl.tick,
        theory_ratio: repl.tick * (std::f64::consts::PI * n).sqrt(),
    })
}

/// One row per asset, computed in parallel and returned in input order.
pub fn predicted_vs_realized_many(
    assets: &[(String, Vec<EventRecord>)],
    window: f64,
    opts: &EstimateOptions,
) -> Result<Vec<VolRow>> {
    assets
        .par_iter()
        .map(|(name, log)| predicted_vs_realized(name, log, window, opts))
        .collect()
}
