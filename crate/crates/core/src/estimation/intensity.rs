//! Order-flow intensities and the replenishment law from an event log.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::log::EventRecord;
use crate::error::{Error, Result};
use crate::model::{EventKind, QueueDist, Side};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Start of the observation window; defaults to the first timestamp.
    pub window_start: Option<f64>,
    /// End of the observation window; defaults to the last timestamp.
    pub window_end: Option<f64>,
    /// Price increment of one tick; inferred as the smallest observed price
    /// change when absent.
    pub tick: Option<f64>,
    /// Add down-move snapshots with bid and ask swapped to the up-move
    /// histogram, assuming the mirrored replenishment law.
    pub pool_down_moves: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideCounts {
    pub limit: u64,
    pub market: u64,
    pub cancel: u64,
}

impl SideCounts {
    pub fn removals(&self) -> u64 {
        self.market + self.cancel
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub bid: SideCounts,
    pub ask: SideCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SideRates {
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
}

/// Per-unit-time counts. Side rates are averaged into the symmetric model
/// rates; standard errors are those of Poisson counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intensities {
    pub lambda_hat: f64,
    pub mu_theta_hat: f64,
    pub mu_hat: f64,
    pub theta_hat: f64,
    pub lambda_se: f64,
    pub mu_theta_se: f64,
    pub bid: SideRates,
    pub ask: SideRates,
    pub counts: EventCounts,
    pub sample_window: (f64, f64),
    /// `|(mu+theta) - lambda| / lambda`.
    pub balance_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplenishmentEstimate {
    pub f_hat: QueueDist<f64>,
    pub up_moves: u64,
    pub down_moves: u64,
    /// Price changes larger than one tick, excluded from `f_hat`.
    pub multi_tick: u64,
    /// Snapshots with an empty queue after the move, excluded from `f_hat`.
    pub empty_snapshots: u64,
    pub tick: f64,
    /// `sum_{ask >= bid} f_hat`.
    pub mass_bid_le_ask: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    #[serde(flatten)]
    pub intensities: Intensities,
    pub replenishment: Option<ReplenishmentEstimate>,
}

impl EstimationResult {
    pub fn lambda_hat(&self) -> f64 {
        self.intensities.lambda_hat
    }

    pub fn mu_theta_hat(&self) -> f64 {
        self.intensities.mu_theta_hat
    }

    pub fn f_hat(&self) -> Option<&QueueDist<f64>> {
        self.replenishment.as_ref().map(|r| &r.f_hat)
    }
}

fn window(log: &[EventRecord], opts: &EstimateOptions) -> Result<(f64, f64)> {
    let first = log.first().ok_or(Error::EmptyLog)?.timestamp;
    let last = log.last().unwrap().timestamp;
    let start = opts.window_start.unwrap_or(first);
    let end = opts.window_end.unwrap_or(last);
    if !(end > start) {
        return Err(Error::InsufficientData(format!(
            "observation window [{start}, {end}] has no length; give an explicit window"
        )));
    }
    Ok((start, end))
}

/// `lambda_hat = (#limit events per side) / T`, `(mu+theta)_hat` likewise
/// from market orders and cancellations, averaged over the two sides.
pub fn estimate_intensities(log: &[EventRecord], opts: &EstimateOptions) -> Result<Intensities> {
    let (start, end) = window(log, opts)?;
    let span = end - start;
    let mut counts = EventCounts::default();
    for r in log.iter().filter(|r| r.timestamp >= start && r.timestamp <= end) {
        let side = match r.side {
            Side::Bid => &mut counts.bid,
            Side::Ask => &mut counts.ask,
        };
        match r.kind {
            EventKind::Limit => side.limit += 1,
            EventKind::Market => side.market += 1,
            EventKind::Cancel => side.cancel += 1,
        }
    }
    let rates = |c: &SideCounts| SideRates {
        lambda: c.limit as f64 / span,
        mu: c.market as f64 / span,
        theta: c.cancel as f64 / span,
    };
    let limits = (counts.bid.limit + counts.ask.limit) as f64;
    let markets = (counts.bid.market + counts.ask.market) as f64;
    let cancels = (counts.bid.cancel + counts.ask.cancel) as f64;
    let lambda_hat = limits / (2.0 * span);
    let mu_theta_hat = (markets + cancels) / (2.0 * span);
    if markets + cancels == 0.0 {
        log::warn!("log has no market orders or cancellations; (mu+theta)_hat = 0");
    }
    if limits == 0.0 {
        log::warn!("log has no limit orders; lambda_hat = 0");
    }
    Ok(Intensities {
        lambda_hat,
        mu_theta_hat,
        mu_hat: markets / (2.0 * span),
        theta_hat: cancels / (2.0 * span),
        lambda_se: limits.sqrt() / (2.0 * span),
        mu_theta_se: (markets + cancels).sqrt() / (2.0 * span),
        bid: rates(&counts.bid),
        ask: rates(&counts.ask),
        counts,
        sample_window: (start, end),
        balance_gap: if lambda_hat > 0.0 {
            (mu_theta_hat - lambda_hat).abs() / lambda_hat
        } else {
            f64::INFINITY
        },
    })
}

/// Smallest nonzero price change, rounded to suppress float noise.
fn infer_tick(log: &[EventRecord]) -> Option<f64> {
    log.windows(2)
        .map(|w| (w[1].bid_price_after - w[0].bid_price_after).abs())
        .filter(|d| *d > 1e-12)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
}

/// Histogram of the queues right after one-tick price increases (and,
/// optionally, mirrored decreases), normalized into `f_hat`.
pub fn estimate_replenishment(log: &[EventRecord], opts: &EstimateOptions) -> Result<ReplenishmentEstimate> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let tick = match opts.tick {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(Error::Domain(format!("tick must be > 0, got {t}"))),
        None => infer_tick(log).ok_or(Error::NoPriceChanges)?,
    };
    let mut cells: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    let (mut up, mut down, mut multi, mut empty) = (0u64, 0u64, 0u64, 0u64);
    for w in log.windows(2) {
        let moves = (w[1].bid_price_after - w[0].bid_price_after) / tick;
        let ticks = moves.round();
        if ticks == 0.0 {
            continue;
        }
        if ticks.abs() > 1.0 {
            multi += 1;
            continue;
        }
        let (b, a) = (w[1].bid_queue_after, w[1].ask_queue_after);
        let cell = if ticks > 0.0 {
            up += 1;
            (b, a)
        } else {
            down += 1;
            if !opts.pool_down_moves {
                continue;
            }
            (a, b)
        };
        if cell.0 == 0 || cell.1 == 0 {
            empty += 1;
            continue;
        }
        *cells.entry(cell).or_insert(0.0) += 1.0;
    }
    if multi > 0 {
        log::warn!("{multi} multi-tick price changes excluded from the replenishment histogram");
    }
    if up + down == 0 {
        return Err(Error::NoPriceChanges);
    }
    if cells.is_empty() {
        return Err(Error::InsufficientData("no usable price-increase snapshots".into()));
    }
    let f_hat = QueueDist::from_weights(cells.into_iter().map(|((b, a), w)| (b, a, w)))?;
    Ok(ReplenishmentEstimate {
        mass_bid_le_ask: f_hat.mass_bid_le_ask(),
        f_hat,
        up_moves: up,
        down_moves: down,
        multi_tick: multi,
        empty_snapshots: empty,
        tick,
    })
}

/// Intensities and, when the log contains price changes, `f_hat`.
pub fn estimate(log: &[EventRecord], opts: &EstimateOptions) -> Result<EstimationResult> {
    let intensities = estimate_intensities(log, opts)?;
    let replenishment = match estimate_replenishment(log, opts) {
        Ok(r) => Some(r),
        Err(Error::NoPriceChanges) => {
            log::warn!("no price changes in the log; f_hat not estimated");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(EstimationResult {
        intensities,
        replenishment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64, side: Side, kind: EventKind, b: u32, a: u32, price: f64) -> EventRecord {
        EventRecord {
            timestamp: t,
            side,
            kind,
            bid_queue_after: b,
            ask_queue_after: a,
            bid_price_after: price,
        }
    }

    #[test]
    fn empty_log_is_an_error() {
        assert!(matches!(
            estimate_intensities(&[], &EstimateOptions::default()),
            Err(Error::EmptyLog)
        ));
    }

    #[test]
    fn single_limit_buy() {
        let log = [rec(0.5, Side::Bid, EventKind::Limit, 3, 2, 10.0)];
        let opts = EstimateOptions {
            window_start: Some(0.0),
            window_end: Some(1.0),
            ..Default::default()
        };
        let r = estimate_intensities(&log, &opts).unwrap();
        assert_eq!(r.bid.lambda, 1.0);
        assert_eq!(r.ask.lambda, 0.0);
        assert_eq!(r.lambda_hat, 0.5);
        assert_eq!(r.mu_theta_hat, 0.0);
        assert!(estimate_intensities(&log, &EstimateOptions::default()).is_err());
    }

    #[test]
    fn one_up_move_gives_point_mass() {
        let log = [
            rec(0.0, Side::Ask, EventKind::Limit, 2, 2, 10.0),
            rec(1.0, Side::Ask, EventKind::Market, 3, 7, 10.01),
            rec(2.0, Side::Bid, EventKind::Limit, 4, 7, 10.01),
        ];
        let r = estimate_replenishment(&log, &EstimateOptions::default()).unwrap();
        assert_eq!(r.f_hat, QueueDist::point_mass(3, 7).unwrap());
        assert_eq!((r.up_moves, r.down_moves, r.multi_tick), (1, 0, 0));
        assert!((r.tick - 0.01).abs() < 1e-12);
    }

    #[test]
    fn pooling_and_multi_tick_jumps() {
        let log = [
            rec(0.0, Side::Ask, EventKind::Limit, 2, 2, 10.0),
            rec(1.0, Side::Ask, EventKind::Market, 3, 7, 11.0),
            rec(2.0, Side::Bid, EventKind::Market, 5, 1, 10.0),
            rec(3.0, Side::Ask, EventKind::Market, 1, 1, 13.0),
        ];
        let opts = EstimateOptions {
            pool_down_moves: true,
            ..Default::default()
        };
        let r = estimate_replenishment(&log, &opts).unwrap();
        assert_eq!(r.multi_tick, 1);
        assert_eq!(r.f_hat.prob(3, 7), 0.5);
        assert_eq!(r.f_hat.prob(1, 5), 0.5);
        assert_eq!(r.mass_bid_le_ask, 1.0);
    }

    #[test]
    fn no_price_changes() {
        let log = [
            rec(0.0, Side::Ask, EventKind::Limit, 2, 2, 10.0),
            rec(1.0, Side::Bid, EventKind::Cancel, 1, 2, 10.0),
        ];
        assert!(matches!(
            estimate_replenishment(&log, &EstimateOptions::default()),
            Err(Error::NoPriceChanges)
        ));
        let r = estimate(&log, &EstimateOptions::default()).unwrap();
        assert!(r.replenishment.is_none());
        assert_eq!(r.intensities.counts.bid.cancel, 1);
    }
}
