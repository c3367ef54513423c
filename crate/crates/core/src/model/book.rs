use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::QueueDist;
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Limit,
    Market,
    Cancel,
}

impl EventKind {
    /// Queue increment caused by one unit-size event of this kind.
    pub fn increment(self) -> i8 {
        match self {
            EventKind::Limit => 1,
            EventKind::Market | EventKind::Cancel => -1,
        }
    }
}

/// Level-I book: bid price in ticks and the two queue sizes. The ask price
/// is always one tick above the bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookState {
    pub bid_price: i64,
    pub bid_queue: u32,
    pub ask_queue: u32,
}

impl BookState {
    pub fn new(bid_price: i64, bid_queue: u32, ask_queue: u32) -> Result<Self> {
        if bid_queue == 0 || ask_queue == 0 {
            return Err(Error::Domain(format!(
                "queues must be nonempty between events, got ({bid_queue}, {ask_queue})"
            )));
        }
        Ok(Self {
            bid_price,
            bid_queue,
            ask_queue,
        })
    }

    pub fn ask_price(&self) -> i64 {
        self.bid_price + 1
    }
}

/// Replenishment laws after up- and down-moves.
#[derive(Debug, Clone, PartialEq)]
pub struct Replenishment<T> {
    pub up: QueueDist<T>,
    pub down: QueueDist<T>,
    overridden: bool,
}

impl<T: Scalar> Replenishment<T> {
    /// `down` is `up` with bid and ask swapped.
    pub fn mirrored(up: &QueueDist<T>) -> Self {
        Self {
            down: up.swapped(),
            up: up.clone(),
            overridden: false,
        }
    }

    /// Explicit law after down-moves. The duration results hold for any pair,
    /// but the price-chain and diffusion-limit formulas assume the mirrored
    /// relation, so a mismatch is logged.
    pub fn with_down_override(up: &QueueDist<T>, down: QueueDist<T>) -> Self {
        let mirrored = up.swapped();
        if mirrored.total_variation(&down) > T::lit(1e-12) {
            log::warn!("down-move replenishment is not the mirror of the up-move law; price-chain and volatility formulas assume it is");
        }
        Self {
            up: up.clone(),
            down,
            overridden: true,
        }
    }

    pub fn is_overridden(&self) -> bool {
        self.overridden
    }
}

/// Outcome of one order book event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<T> {
    pub state: BookState,
    pub elapsed: T,
    pub price_move: i8,
    pub side: Side,
    pub kind: EventKind,
}

/// Applies one event to the book. A removal hitting a queue of size one
/// moves the price and redraws both queues atomically.
pub fn apply_event<T: Scalar, R: Rng + ?Sized>(
    state: &BookState,
    side: Side,
    kind: EventKind,
    repl: &Replenishment<T>,
    rng: &mut R,
) -> (BookState, i8) {
    debug_assert!(state.bid_queue >= 1 && state.ask_queue >= 1);
    let mut next = *state;
    let queue = match side {
        Side::Bid => &mut next.bid_queue,
        Side::Ask => &mut next.ask_queue,
    };
    if kind.increment() > 0 {
        *queue += 1;
        return (next, 0);
    }
    if *queue > 1 {
        *queue -= 1;
        return (next, 0);
    }
    // depletion; the opposite queue is untouched by a one-sided event
    match side {
        Side::Ask => {
            let (b, a) = repl.up.sample(rng);
            (
                BookState {
                    bid_price: state.bid_price + 1,
                    bid_queue: b,
                    ask_queue: a,
                },
                1,
            )
        }
        Side::Bid => {
            let (b, a) = repl.down.sample(rng);
            (
                BookState {
                    bid_price: state.bid_price - 1,
                    bid_queue: b,
                    ask_queue: a,
                },
                -1,
            )
        }
    }
}

/// Draws the event type from a single uniform over the six categories
/// `{bid, ask} x {limit, market, cancel}` weighted by their rates.
pub fn draw_event<T: Scalar, R: Rng + ?Sized>(params: &ModelParams<T>, rng: &mut R) -> (Side, EventKind) {
    let rate = params.side_rate();
    let u = T::lit(rng.random::<f64>()) * T::lit(2.0) * rate;
    let (side, v) = if u < rate { (Side::Bid, u) } else { (Side::Ask, u - rate) };
    let kind = if v < params.lambda {
        EventKind::Limit
    } else if v < params.lambda + params.mu {
        EventKind::Market
    } else {
        EventKind::Cancel
    };
    (side, kind)
}

/// Exponential waiting time with the total event rate `2 (lambda + mu + theta)`.
#[inline]
pub fn draw_waiting_time<T: Scalar, R: Rng + ?Sized>(params: &ModelParams<T>, rng: &mut R) -> T {
    let u = 1.0 - rng.random::<f64>();
    T::lit(-u.ln()) / (T::lit(2.0) * params.side_rate())
}

pub fn step<T: Scalar, R: Rng + ?Sized>(
    state: &BookState,
    params: &ModelParams<T>,
    repl: &Replenishment<T>,
    rng: &mut R,
) -> Step<T> {
    let elapsed = draw_waiting_time(params, rng);
    let (side, kind) = draw_event(params, rng);
    let (next, price_move) = apply_event(state, side, kind, repl, rng);
    Step {
        state: next,
        elapsed,
        price_move,
        side,
        kind,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn repl(b: u32, a: u32) -> Replenishment<f64> {
        Replenishment::mirrored(&QueueDist::point_mass(b, a).unwrap())
    }

    #[test]
    fn plain_decrement() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = BookState::new(100, 5, 4).unwrap();
        let (next, mv) = apply_event(&s, Side::Ask, EventKind::Market, &repl(2, 3), &mut rng);
        assert_eq!((next.bid_queue, next.ask_queue, mv), (5, 3, 0));
        assert_eq!(next.bid_price, 100);
    }

    #[test]
    fn forced_replenishment_on_ask_depletion() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = BookState::new(100, 5, 1).unwrap();
        let (next, mv) = apply_event(&s, Side::Ask, EventKind::Cancel, &repl(2, 3), &mut rng);
        assert_eq!((next.bid_queue, next.ask_queue, mv), (2, 3, 1));
        assert_eq!(next.bid_price, 101);
    }

    #[test]
    fn bid_depletion_uses_mirrored_law() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = BookState::new(100, 1, 7).unwrap();
        let (next, mv) = apply_event(&s, Side::Bid, EventKind::Market, &repl(2, 3), &mut rng);
        assert_eq!((next.bid_queue, next.ask_queue, mv), (3, 2, -1));
        assert_eq!(next.bid_price, 99);
    }

    #[test]
    fn limit_order_grows_queue() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = BookState::new(0, 1, 1).unwrap();
        let (next, mv) = apply_event(&s, Side::Bid, EventKind::Limit, &repl(2, 3), &mut rng);
        assert_eq!((next.bid_queue, next.ask_queue, mv), (2, 1, 0));
    }

    #[test]
    fn empty_state_rejected() {
        assert!(BookState::new(0, 0, 3).is_err());
    }

    #[test]
    fn balanced_increment_fraction_is_one_half() {
        let params = ModelParams::with_removal_rate(3.0, 3.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let ups = (0..n)
            .filter(|_| draw_event(&params, &mut rng).1 == EventKind::Limit)
            .count();
        let p_hat = ups as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((p_hat - 0.5).abs() <= 3.0 * se, "{p_hat}");
    }

    #[test]
    fn waiting_time_mean() {
        let params = ModelParams::new(2.0, 1.0, 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let sum: f64 = (0..n).map(|_| draw_waiting_time(&params, &mut rng)).sum();
        let mean = sum / n as f64;
        let want = 1.0 / (2.0 * 3.5);
        let se = want / (n as f64).sqrt();
        assert!((mean - want).abs() <= 3.0 * se, "{mean} vs {want}");
    }
}
