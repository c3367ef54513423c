//! Market depth and the volatility of the diffusion limits.

use crate::error::{Error, Result};
use crate::model::{ModelParams, QueueDist};
use crate::numerics::QuadSpec;
use crate::scalar::Scalar;

use super::duration::expected_duration_f;

/// `D(f) = sum i j f(i,j)`.
pub fn depth<T: Scalar>(f: &QueueDist<T>) -> T {
    f.atoms().iter().fold(T::zero(), |acc, a| {
        acc + T::from_u32(a.bid).unwrap() * T::from_u32(a.ask).unwrap() * a.p
    })
}

/// `delta sqrt(pi lambda / D(f))`: volatility per unit of rescaled time of
/// the balanced limit, where the price is observed at `n log n t` and
/// divided by `sqrt(n)`.
pub fn vol_balanced<T: Scalar>(params: &ModelParams<T>, f: &QueueDist<T>) -> Result<T> {
    vol_balanced_window(params, f, T::one())
}

/// `delta sqrt(n pi lambda / D(f))`: standard deviation of the price change
/// over `n log n` seconds in the balanced limit.
pub fn vol_balanced_window<T: Scalar>(params: &ModelParams<T>, f: &QueueDist<T>, n: T) -> Result<T> {
    params.validate()?;
    if !params.is_balanced() {
        log::warn!(
            "balanced-limit volatility used with lambda={} != mu+theta={}",
            params.lambda,
            params.mu_theta()
        );
    }
    if !(n > T::zero()) {
        return Err(Error::Domain(format!("n must be > 0, got {n}")));
    }
    let d = depth(f);
    if !(d > T::zero()) {
        return Err(Error::InvalidDistribution(format!("depth must be positive, got {d}")));
    }
    Ok(params.tick * (n * T::PI() * params.lambda / d).sqrt())
}

/// The `n > 1` with `n ln n = window`, i.e. the scaling index whose balanced
/// time scale equals a window of `window` seconds.
pub fn events_for_window<T: Scalar>(window: T) -> Result<T> {
    if !(window > T::zero()) || !window.is_finite() {
        return Err(Error::Domain(format!("window must be positive and finite, got {window}")));
    }
    let mut n = T::lit(2.0).max(window / window.ln().max(T::one()));
    for _ in 0..100 {
        let next = n - (n * n.ln() - window) / (n.ln() + T::one());
        let next = next.max(T::one() + T::epsilon());
        if (next - n).abs() <= T::lit(4.0) * T::epsilon() * n {
            return Ok(next);
        }
        n = next;
    }
    Ok(n)
}

/// `delta / sqrt(m)` for a mean duration `m` between price changes.
pub fn vol_from_mean_duration<T: Scalar>(mean_duration: T, tick: T) -> Result<T> {
    if !(mean_duration > T::zero()) || !mean_duration.is_finite() {
        return Err(Error::Domain(format!("mean duration must be positive and finite, got {mean_duration}")));
    }
    Ok(tick / mean_duration.sqrt())
}

/// `delta / sqrt(m(f))`: volatility per unit time of the limit when
/// removals dominate, with `m(f)` from [`expected_duration_f`].
pub fn vol_unbalanced<T: Scalar>(params: &ModelParams<T>, f: &QueueDist<T>, spec: &QuadSpec) -> Result<T> {
    let m = expected_duration_f(f, params, spec)?;
    vol_from_mean_duration(m, params.tick)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn depth_examples() {
        assert_eq!(depth(&QueueDist::<f64>::point_mass(2, 3).unwrap()), 6.0);
        assert_eq!(depth(&QueueDist::<f64>::uniform(&[(1, 1), (2, 2)]).unwrap()), 2.5);
    }

    #[test]
    fn balanced_examples() {
        let p = ModelParams::with_removal_rate(1.0 / PI, 1.0 / PI, 1.0).unwrap();
        let f = QueueDist::point_mass(1, 1).unwrap();
        assert!((vol_balanced(&p, &f).unwrap() - 1.0).abs() < 1e-15);
        let p = ModelParams::with_removal_rate(4.0 / PI, 4.0 / PI, 1.0).unwrap();
        let f = QueueDist::point_mass(2, 2).unwrap();
        assert!((vol_balanced(&p, &f).unwrap() - 1.0).abs() < 1e-15);
        assert!((vol_balanced_window(&p, &f, 9.0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn mean_duration_examples() {
        assert_eq!(vol_from_mean_duration(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(vol_from_mean_duration(4.0, 2.0).unwrap(), 1.0);
        assert!(vol_from_mean_duration(0.0, 1.0).is_err());
    }

    #[test]
    fn window_inversion() {
        for w in [0.5, 3.0, 600.0, 1e7] {
            let n: f64 = events_for_window(w).unwrap();
            assert!((n * n.ln() - w).abs() < 1e-9 * w, "{w}: {n}");
        }
    }
}
