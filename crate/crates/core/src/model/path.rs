use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Price-change epochs and signed one-tick moves of a simulated or observed
/// price process, together with the time span the record covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricePath<T> {
    pub initial_price: T,
    pub tick: T,
    pub change_times: Vec<T>,
    pub moves: Vec<i8>,
    /// Time up to which the path is known to be complete.
    pub end_time: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Time scale `n log n`.
    Balanced,
    /// Time scale `n`.
    Unbalanced,
}

impl Regime {
    pub fn time_scale<T: Scalar>(self, n: u64) -> T {
        let nf = T::from_u64(n).unwrap();
        match self {
            Regime::Balanced => nf * nf.ln(),
            Regime::Unbalanced => nf,
        }
    }
}

impl<T: Scalar> PricePath<T> {
    pub fn empty(initial_price: T, tick: T, end_time: T) -> Self {
        Self {
            initial_price,
            tick,
            change_times: Vec::new(),
            moves: Vec::new(),
            end_time,
        }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// `N_t`: number of price changes at or before `t`.
    pub fn count_changes(&self, t: T) -> usize {
        self.change_times.partition_point(|&c| c <= t)
    }

    /// Net displacement in ticks after `N_t` changes.
    pub fn ticks_at(&self, t: T) -> i64 {
        self.moves[..self.count_changes(t)]
            .iter()
            .map(|&m| m as i64)
            .sum()
    }

    pub fn price_at(&self, t: T) -> T {
        self.initial_price + self.tick * T::from_i64(self.ticks_at(t)).unwrap()
    }

    /// Durations between successive price changes; the first is measured from 0.
    pub fn durations(&self) -> Vec<T> {
        let mut prev = T::zero();
        self.change_times
            .iter()
            .map(|&c| {
                let d = c - prev;
                prev = c;
                d
            })
            .collect()
    }

    /// Checks that change times are strictly increasing and within the span.
    pub fn validate(&self) -> Result<()> {
        if self.change_times.len() != self.moves.len() {
            return Err(Error::Domain("change_times and moves differ in length".into()));
        }
        if self.change_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain("change times are not strictly increasing".into()));
        }
        if self.moves.iter().any(|&m| m != 1 && m != -1) {
            return Err(Error::Domain("moves must be +1 or -1".into()));
        }
        Ok(())
    }

    /// `s(t zeta(n)) / sqrt(n)` on `t_grid`, where `s` is the price change
    /// since time 0 and `zeta(n)` is `n log n` (balanced) or `n` (unbalanced).
    pub fn rescaled_series(&self, n: u64, regime: Regime, t_grid: &[T]) -> Result<Vec<T>> {
        if n == 0 || (regime == Regime::Balanced && n < 2) {
            return Err(Error::Domain(format!("scaling index n = {n} too small for {regime:?}")));
        }
        let zeta: T = regime.time_scale(n);
        let root_n = T::from_u64(n).unwrap().sqrt();
        let t_max = t_grid.iter().copied().fold(T::zero(), T::max);
        let needed = t_max * zeta;
        if needed > self.end_time {
            return Err(Error::InsufficientPath {
                needed: needed.as_f64(),
                available: self.end_time.as_f64(),
            });
        }
        Ok(t_grid
            .iter()
            .map(|&t| self.tick * T::from_i64(self.ticks_at(t * zeta)).unwrap() / root_n)
            .collect())
    }

    /// Writes `time,cumulative_price`, starting with the initial price at 0.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "cumulative_price"])?;
        out.write_record(["0".to_string(), format!("{}", self.initial_price)])?;
        let mut ticks = 0i64;
        for (&t, &m) in self.change_times.iter().zip(&self.moves) {
            ticks += m as i64;
            let price = self.initial_price + self.tick * T::from_i64(ticks).unwrap();
            out.write_record([format!("{t}"), format!("{price}")])?;
        }
        out.flush()?;
        Ok(())
    }
}
