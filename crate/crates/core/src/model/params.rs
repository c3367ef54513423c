use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Per-side order flow intensities (events per second) and the tick size.
///
/// Limit orders arrive at rate `lambda` on each side, market orders at rate
/// `mu` and cancellations at rate `theta`. Only `mu + theta` enters the queue
/// dynamics; the split matters for the event logs the simulator writes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub lambda: T,
    pub mu: T,
    pub theta: T,
    pub tick: T,
}

/// Relative gap `|lambda - (mu + theta)| / lambda` below which the order flow
/// is treated as balanced.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

impl<T: Scalar> ModelParams<T> {
    pub fn new(lambda: T, mu: T, theta: T, tick: T) -> Result<Self> {
        let p = Self {
            lambda,
            mu,
            theta,
            tick,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters given only the combined removal rate, split evenly between
    /// market orders and cancellations.
    pub fn with_removal_rate(lambda: T, mu_theta: T, tick: T) -> Result<Self> {
        let half = mu_theta / T::lit(2.0);
        Self::new(lambda, half, half, tick)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.lambda, self.mu, self.theta, self.tick]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams(format!("non-finite parameter in {self:?}")));
        }
        if !(self.lambda > T::zero()) {
            return Err(Error::InvalidParams(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.mu < T::zero() || self.theta < T::zero() {
            return Err(Error::InvalidParams(format!(
                "mu and theta must be >= 0, got mu={} theta={}",
                self.mu, self.theta
            )));
        }
        if !(self.mu_theta() > T::zero()) {
            return Err(Error::InvalidParams("mu + theta must be > 0".into()));
        }
        if !(self.tick > T::zero()) {
            return Err(Error::InvalidParams(format!("tick must be > 0, got {}", self.tick)));
        }
        Ok(())
    }

    #[inline]
    pub fn mu_theta(&self) -> T {
        self.mu + self.theta
    }

    /// Event rate on one side of the book, `lambda + mu + theta`.
    #[inline]
    pub fn side_rate(&self) -> T {
        self.lambda + self.mu_theta()
    }

    /// Probability that an event on a given side adds an order.
    #[inline]
    pub fn up_prob(&self) -> T {
        self.lambda / self.side_rate()
    }

    pub fn is_balanced(&self) -> bool {
        ((self.lambda - self.mu_theta()).abs() / self.lambda).as_f64() <= BALANCE_TOLERANCE
    }

    /// `lambda < mu + theta` beyond the balance tolerance.
    pub fn is_removal_dominated(&self) -> bool {
        !self.is_balanced() && self.lambda < self.mu_theta()
    }

    pub fn regime(&self) -> FlowRegime {
        if self.is_balanced() {
            FlowRegime::Balanced
        } else if self.lambda < self.mu_theta() {
            FlowRegime::RemovalDominated
        } else {
            FlowRegime::LimitDominated
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowRegime {
    Balanced,
    RemovalDominated,
    LimitDominated,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelParams::new(1.0, 0.5, 0.5, 0.01).is_ok());
        assert!(ModelParams::new(0.0, 0.5, 0.5, 0.01).is_err());
        assert!(ModelParams::new(1.0, -0.1, 0.5, 0.01).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0.0, 0.01).is_err());
        assert!(ModelParams::new(1.0, 0.5, 0.5, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn regimes() {
        let p = ModelParams::<f64>::with_removal_rate(12.0, 13.0, 1.0).unwrap();
        assert_eq!(p.regime(), FlowRegime::RemovalDominated);
        assert!((p.up_prob() - 12.0 / 25.0).abs() < 1e-15);
        let p = ModelParams::with_removal_rate(10.0, 10.0, 1.0).unwrap();
        assert_eq!(p.regime(), FlowRegime::Balanced);
        let p = ModelParams::with_removal_rate(2.0, 1.0, 1.0).unwrap();
        assert_eq!(p.regime(), FlowRegime::LimitDominated);
    }
}
