//! Closed-form quantities of the two-queue model: duration law and tails,
//! hitting probabilities, the price-change chain, depth and diffusion-limit
//! volatilities.
//!
//! Queue arguments are always ordered `(bid, ask)`.

mod chain;
mod diffusion;
mod duration;
mod hitting;

pub use chain::{autocov_moves, p_cont, p_cont_with, p_n, AsymmetryReport, ChainOptions, UpProbability};
pub use diffusion::{
    depth, events_for_window, vol_balanced, vol_balanced_window, vol_from_mean_duration, vol_unbalanced,
};
pub use duration::{
    expected_duration, expected_duration_f, expected_duration_without_prefactor, hitting_laplace, psi,
    queue_survival, survival_duration, tail_law, TailLaw,
};
pub use hitting::{far_field, prob_up_balanced, prob_up_numeric, solve_hitting_grid, HittingGrid};

use crate::scalar::Scalar;

/// Discrepancy beyond which clamping a probability into `[0, 1]` is logged.
pub const CLAMP_LOG_THRESHOLD: f64 = 1e-8;

pub(crate) fn clamp_probability<T: Scalar>(v: T, what: &str) -> T {
    let clamped = v.max(T::zero()).min(T::one());
    if (clamped - v).abs().as_f64() > CLAMP_LOG_THRESHOLD {
        log::warn!("{what}: value {v} clamped to {clamped}");
    }
    clamped
}
