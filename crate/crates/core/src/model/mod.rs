//! The Markov process `(bid price, bid queue, ask queue)` driven by Poisson
//! order flow, with queue replenishment from `f` after up-moves and from the
//! mirrored law after down-moves.

mod book;
mod dist;
mod params;
mod path;
mod sim;

pub use book::{apply_event, draw_event, draw_waiting_time, step, BookState, EventKind, Replenishment, Side, Step};
pub use dist::{Atom, QueueDist};
pub use params::{FlowRegime, ModelParams, BALANCE_TOLERANCE};
pub use path::{PricePath, Regime};
pub use sim::{
    first_change, path_rng, simulate, simulate_logged, simulate_many, simulate_path, Horizon, InitialState,
    SimConfig,
};
