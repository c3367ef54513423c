//! Tick event logs: parsing, intensity and replenishment estimates, and the
//! realized-versus-predicted volatility comparison.

mod intensity;
mod log;
mod volatility;

pub use self::intensity::{
    estimate, estimate_intensities, estimate_replenishment, EstimateOptions, EstimationResult, EventCounts,
    Intensities, ReplenishmentEstimate, SideCounts, SideRates,
};
pub use self::log::{
    parse_event_log, read_event_log_file, write_event_log, EventLog, EventRecord, MalformedRow, ParseOptions,
    LOG_HEADER, MAX_MALFORMED_FRACTION,
};
pub use self::volatility::{predicted_vs_realized, predicted_vs_realized_many, price_series, realized_volatility, VolRow};
