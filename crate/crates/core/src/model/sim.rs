//! Exact event-driven simulation.
//!
//! Every path owns a ChaCha8 stream selected by `(seed, path index)`, so paths
//! can be generated in parallel and any single path can be reproduced alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::book::{step, BookState, Replenishment};
use super::dist::QueueDist;
use super::params::ModelParams;
use super::path::PricePath;
use crate::error::{Error, Result};
use crate::estimation::EventRecord;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// Stop after this many order book events.
    Events(u64),
    /// Stop at this model time (seconds).
    Time(f64),
    /// Stop after this many price changes.
    Moves(u64),
}

impl Horizon {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Horizon::Events(n) | Horizon::Moves(n) => n > 0,
            Horizon::Time(t) => t > 0.0 && t.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("horizon must be strictly positive, got {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Queues drawn from the up-move law with bid price 0.
    FromF,
    State(BookState),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub horizon: Horizon,
    pub initial_state: InitialState,
}

impl SimConfig {
    pub fn new(seed: u64, horizon: Horizon) -> Self {
        Self {
            seed,
            horizon,
            initial_state: InitialState::FromF,
        }
    }

    pub fn starting_at(mut self, state: BookState) -> Self {
        self.initial_state = InitialState::State(state);
        self
    }
}

/// RNG for path `index` of the experiment seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn initial_book<T: Scalar>(
    cfg: &SimConfig,
    repl: &Replenishment<T>,
    rng: &mut ChaCha8Rng,
) -> Result<BookState> {
    match cfg.initial_state {
        InitialState::FromF => {
            let (b, a) = repl.up.sample(rng);
            BookState::new(0, b, a)
        }
        InitialState::State(s) => BookState::new(s.bid_price, s.bid_queue, s.ask_queue),
    }
}

fn run<T, F>(
    params: &ModelParams<T>,
    repl: &Replenishment<T>,
    cfg: &SimConfig,
    index: u64,
    mut on_event: F,
) -> Result<PricePath<T>>
where
    T: Scalar,
    F: FnMut(T, &super::book::Step<T>),
{
    params.validate()?;
    cfg.horizon.validate()?;
    let mut rng = path_rng(cfg.seed, index);
    let mut state = initial_book(cfg, repl, &mut rng)?;
    let mut path = PricePath::empty(params.tick * T::from_i64(state.bid_price).unwrap(), params.tick, T::zero());
    let mut now = T::zero();
    let mut events = 0u64;
    loop {
        let s = step(&state, params, repl, &mut rng);
        let t = now + s.elapsed;
        if let Horizon::Time(h) = cfg.horizon {
            if t.as_f64() > h {
                path.end_time = T::lit(h);
                break;
            }
        }
        now = t;
        events += 1;
        state = s.state;
        on_event(now, &s);
        if s.price_move != 0 {
            path.change_times.push(now);
            path.moves.push(s.price_move);
        }
        let done = match cfg.horizon {
            Horizon::Events(n) => events >= n,
            Horizon::Moves(n) => path.moves.len() as u64 >= n,
            Horizon::Time(_) => false,
        };
        if done {
            path.end_time = now;
            break;
        }
    }
    Ok(path)
}

/// Simulates one path with `f` after up-moves and its mirror after down-moves.
pub fn simulate<T: Scalar>(params: &ModelParams<T>, f: &QueueDist<T>, cfg: &SimConfig) -> Result<PricePath<T>> {
    simulate_path(params, &Replenishment::mirrored(f), cfg, 0)
}

/// Path `index` of an experiment; path 0 is what [`simulate`] returns.
pub fn simulate_path<T: Scalar>(
    params: &ModelParams<T>,
    repl: &Replenishment<T>,
    cfg: &SimConfig,
    index: u64,
) -> Result<PricePath<T>> {
    run(params, repl, cfg, index, |_, _| {})
}

/// Simulates one path and records every event for export as a tick log.
pub fn simulate_logged<T: Scalar>(
    params: &ModelParams<T>,
    repl: &Replenishment<T>,
    cfg: &SimConfig,
) -> Result<(PricePath<T>, Vec<EventRecord>)> {
    let mut records = Vec::new();
    let tick = params.tick;
    let path = run(params, repl, cfg, 0, |now, s| {
        records.push(EventRecord {
            timestamp: now.as_f64(),
            side: s.side,
            kind: s.kind,
            bid_queue_after: s.state.bid_queue,
            ask_queue_after: s.state.ask_queue,
            bid_price_after: (tick * T::from_i64(s.state.bid_price).unwrap()).as_f64(),
        });
    })?;
    Ok((path, records))
}

/// Independent paths `0..n_paths` in parallel; output order follows the index.
pub fn simulate_many<T: Scalar>(
    params: &ModelParams<T>,
    repl: &Replenishment<T>,
    cfg: &SimConfig,
    n_paths: u64,
) -> Result<Vec<PricePath<T>>> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| simulate_path(params, repl, cfg, i))
        .collect()
}

/// Time to the first price change from `state` and the sign of that change.
pub fn first_change<T: Scalar, R: rand::Rng + ?Sized>(
    state: &BookState,
    params: &ModelParams<T>,
    repl: &Replenishment<T>,
    rng: &mut R,
) -> (T, i8) {
    let mut s = *state;
    let mut now = T::zero();
    loop {
        let next = step(&s, params, repl, rng);
        now += next.elapsed;
        if next.price_move != 0 {
            return (now, next.price_move);
        }
        s = next.state;
    }
}
