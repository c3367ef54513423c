//! Single-queue survival by uniformization of the birth-death generator.
//!
//! The queue lives on `{0, ..., K}` with 0 absorbing (depletion) and `K`
//! absorbing as well (truncation). With uniformization rate
//! `q = up + down`, `P[sigma > t] = sum_k Pois(k; q t) P[chain alive after k
//! steps]`. Mass that reaches `K` may or may not deplete later, so it bounds
//! the truncation error, as does the Poisson mass that was not summed.

use serde::{Deserialize, Serialize};

use super::OracleConfig;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Largest total error bound accepted from the oracle.
pub const MAX_ORACLE_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalOracle {
    pub t: Vec<f64>,
    pub survival: Vec<f64>,
    /// Certified bound on `|survival - exact|` at each `t`.
    pub error_bound: Vec<f64>,
}

/// `P[sigma > t | q_0 = x]` for a queue gaining orders at `up` and losing
/// them at `down`; `up = 0` is allowed (pure death).
pub fn queue_survival_uniformized(
    x: u32,
    up: f64,
    down: f64,
    t_grid: &[f64],
    truncation: usize,
    max_steps: usize,
) -> Result<SurvivalOracle> {
    if x == 0 || x as usize >= truncation {
        return Err(Error::Domain(format!("initial queue {x} outside (0, {truncation})")));
    }
    if !(up >= 0.0) || !(down > 0.0) {
        return Err(Error::Domain(format!("rates must satisfy up >= 0, down > 0 (got {up}, {down})")));
    }
    if t_grid.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
        return Err(Error::Domain("times must be finite and >= 0".into()));
    }
    let q = up + down;
    let (pu, pd) = (up / q, down / q);
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let mean = q * t_max;
    let steps = (mean + 12.0 * mean.sqrt() + 60.0).ceil() as usize;
    if steps > max_steps {
        return Err(Error::InsufficientData(format!(
            "uniformization needs {steps} steps, budget is {max_steps}"
        )));
    }

    let k_top = truncation;
    let mut dist = vec![0.0f64; k_top + 1];
    dist[x as usize] = 1.0;
    let mut next = dist.clone();
    let mut alive = Vec::with_capacity(steps + 1);
    let mut escaped = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        alive.push(dist[1..k_top].iter().sum::<f64>());
        escaped.push(dist[k_top]);
        if step == steps {
            break;
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        next[0] = dist[0];
        next[k_top] = dist[k_top];
        for k in 1..k_top {
            let m = dist[k];
            if m == 0.0 {
                continue;
            }
            next[k + 1] += pu * m;
            next[k - 1] += pd * m;
        }
        std::mem::swap(&mut dist, &mut next);
    }

    let mut ln_fact = vec![0.0f64; steps + 1];
    for k in 1..=steps {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let mut survival = Vec::with_capacity(t_grid.len());
    let mut bound = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t == 0.0 {
            survival.push(1.0);
            bound.push(0.0);
            continue;
        }
        let lam = q * t;
        let (mut s, mut w_sum, mut esc) = (0.0, 0.0, 0.0);
        for k in 0..=steps {
            let w = (-lam + k as f64 * lam.ln() - ln_fact[k]).exp();
            s += w * alive[k];
            esc += w * escaped[k];
            w_sum += w;
        }
        survival.push(s);
        bound.push(esc + (1.0 - w_sum).max(0.0) + 1e-15 * steps as f64);
    }
    Ok(SurvivalOracle {
        t: t_grid.to_vec(),
        survival,
        error_bound: bound,
    })
}

/// `P[tau > t | (bid, ask)]` as the product of two uniformized single-queue
/// survival functions. Fails if the certified error exceeds
/// [`MAX_ORACLE_ERROR`].
pub fn oracle_survival(
    bid: u32,
    ask: u32,
    t_grid: &[f64],
    params: &ModelParams<f64>,
    cfg: &OracleConfig,
) -> Result<SurvivalOracle> {
    params.validate()?;
    cfg.check_truncation(bid.max(ask))?;
    let run = |x| {
        queue_survival_uniformized(x, params.lambda, params.mu_theta(), t_grid, cfg.queue_truncation, cfg.time_step_budget)
    };
    let sb = run(bid)?;
    let sa = run(ask)?;
    let survival: Vec<f64> = sb.survival.iter().zip(&sa.survival).map(|(a, b)| a * b).collect();
    let error_bound: Vec<f64> = sb.error_bound.iter().zip(&sa.error_bound).map(|(a, b)| a + b).collect();
    if let Some(worst) = error_bound.iter().copied().reduce(f64::max) {
        if worst > MAX_ORACLE_ERROR {
            return Err(Error::InsufficientData(format!(
                "survival oracle error bound {worst:e} exceeds {MAX_ORACLE_ERROR:e}; raise the truncation"
            )));
        }
    }
    Ok(SurvivalOracle {
        t: t_grid.to_vec(),
        survival,
        error_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_one() {
        let cfg = OracleConfig::default();
        let p = ModelParams::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let o = oracle_survival(1, 1, &[0.0], &p, &cfg).unwrap();
        assert_eq!(o.survival, vec![1.0]);
    }

    #[test]
    fn pure_death_is_erlang() {
        let (a, rate) = (3u32, 2.5);
        let grid = [0.1, 0.5, 1.0, 2.0, 5.0];
        let o = queue_survival_uniformized(a, 0.0, rate, &grid, 50, 1 << 20).unwrap();
        for (t, s) in grid.iter().zip(&o.survival) {
            // P[Erlang(a, rate) > t] = e^{-rate t} sum_{k<a} (rate t)^k / k!
            let mut term = 1.0;
            let mut sum = 0.0;
            for k in 0..a {
                if k > 0 {
                    term *= rate * t / k as f64;
                }
                sum += term;
            }
            let want = (-rate * t).exp() * sum;
            assert!((s - want).abs() < 1e-10, "t={t}: {s} vs {want}");
        }
    }

    #[test]
    fn truncation_is_detected() {
        let cfg = OracleConfig {
            queue_truncation: 12,
            ..OracleConfig::default()
        };
        let p = ModelParams::with_removal_rate(12.0, 13.0, 1.0).unwrap();
        assert!(oracle_survival(4, 5, &[10.0], &p, &OracleConfig::default()).is_ok());
        assert!(oracle_survival(1, 1, &[10.0], &p, &cfg).is_err());
    }
}
