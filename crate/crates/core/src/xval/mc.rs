//! Monte Carlo comparators: each quantity is estimated from independent
//! simulated paths (one ChaCha stream per path) and set against its closed
//! form.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ComparisonReport, PassRule};
use super::OracleConfig;
use crate::analytics::{
    autocov_moves, expected_duration, hitting_laplace, p_n, prob_up_balanced, prob_up_numeric, survival_duration,
    tail_law, vol_balanced, vol_unbalanced,
};
use crate::error::{Error, Result};
use crate::model::{
    first_change, path_rng, simulate_path, BookState, Horizon, ModelParams, QueueDist, Regime, Replenishment, SimConfig,
};
use crate::numerics::QuadSpec;

/// Analytic targets that [`mc_compare`] knows how to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "quantity")]
pub enum Quantity {
    /// `P[tau > t]` from `(bid, ask)` on `t_grid` (seconds); max-abs band `cfg.tolerance`.
    DurationSurvival { bid: u32, ask: u32, t_grid: Vec<f64> },
    /// Log-log slope and prefactor of the analytic survival over
    /// `[t_start, 100 t_start]` seconds against [`tail_law`].
    TailSlope { bid: u32, ask: u32, t_start: f64 },
    /// `E[exp(-s sigma)]` for one queue started at `x`.
    Laplace { s: f64, x: u32 },
    FirstMoveProbability { bid: u32, ask: u32 },
    /// Probability that move `n` is up, starting from `(bid, ask)`.
    PN { n: u32, bid: u32, ask: u32 },
    /// Uncentered lag products `E[X_j X_{j+k-1}]`, `k = 1..=max_lag`, from
    /// `cfg.mc_paths` paths of `moves_per_path` moves each.
    Autocovariance { max_lag: u32, moves_per_path: u64 },
    /// Mean first duration from `(bid, ask)`; 1% relative band.
    ExpectedDuration { bid: u32, ask: u32 },
    /// SD (10% band) and KS distance (0.05) of `s(n log n)/sqrt(n)`.
    DiffusionBalanced { n: u64 },
    /// SD (10% band) of `s(n)/sqrt(n)`.
    DiffusionUnbalanced { n: u64 },
}

fn pts<I: IntoIterator<Item = String>>(it: I) -> Vec<String> {
    it.into_iter().collect()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

fn sample_sd(xs: &[f64]) -> f64 {
    let (_, se) = mean_se(xs);
    se * (xs.len() as f64).sqrt()
}

/// Kolmogorov-Smirnov distance between the sample and `N(0, sigma^2)`.
pub fn ks_normal(samples: &[f64], sigma: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    let cdf = |x: f64| 0.5 * libm::erfc(-x / (sigma * std::f64::consts::SQRT_2));
    s.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

fn start(bid: u32, ask: u32) -> Result<BookState> {
    BookState::new(0, bid, ask)
}

/// Guards against runs whose expected event count exceeds the budget.
fn check_budget(params: &ModelParams<f64>, seconds_per_path: f64, cfg: &OracleConfig) -> Result<()> {
    let events = 2.0 * params.side_rate() * seconds_per_path * cfg.mc_paths as f64;
    let budget = cfg.time_step_budget as f64 * 1e4;
    if events > budget {
        return Err(Error::InsufficientData(format!(
            "Monte Carlo needs about {events:.3e} events, path budget allows {budget:.3e}"
        )));
    }
    Ok(())
}

fn up_probability(bid: u32, ask: u32, params: &ModelParams<f64>, cfg: &OracleConfig) -> Result<f64> {
    if params.is_balanced() {
        prob_up_balanced(bid, ask, &QuadSpec::default())
    } else {
        prob_up_numeric(bid, ask, params, cfg.queue_truncation)
    }
}

/// `e^{-s sigma}` for one simulated queue exit; 0 once `e^{-s t}` is negligible.
fn discounted_passage<R: Rng>(x: u32, s: f64, params: &ModelParams<f64>, rng: &mut R) -> f64 {
    let rate = params.side_rate();
    let p_up = params.lambda / rate;
    let horizon = 28.0 / s;
    let (mut q, mut t) = (x, 0.0);
    while q > 0 {
        t += -(1.0 - rng.random::<f64>()).ln() / rate;
        if t > horizon {
            return 0.0;
        }
        if rng.random::<f64>() < p_up {
            q += 1;
        } else {
            q -= 1;
        }
    }
    (-s * t).exp()
}

/// Runs the comparison for `quantity`. Reports carry criterion 0; the
/// suite relabels them.
pub fn mc_compare(
    quantity: &Quantity,
    params: &ModelParams<f64>,
    f: &QueueDist<f64>,
    cfg: &OracleConfig,
) -> Result<Vec<ComparisonReport>> {
    params.validate()?;
    if cfg.mc_paths < 2 {
        return Err(Error::Config("mc_paths must be >= 2".into()));
    }
    let paths = cfg.mc_paths;
    let seed = cfg.mc_seed;
    let repl = Replenishment::mirrored(f);
    let spec = QuadSpec::default();
    let se3 = PassRule::StandardErrors(3.0);
    match quantity {
        Quantity::DurationSurvival { bid, ask, t_grid } => {
            let s0 = start(*bid, *ask)?;
            let mut taus: Vec<f64> = (0..paths)
                .into_par_iter()
                .map(|i| first_change(&s0, params, &repl, &mut path_rng(seed, i)).0)
                .collect();
            taus.sort_by(|a, b| a.total_cmp(b));
            let n = taus.len() as f64;
            let mut analytic = Vec::with_capacity(t_grid.len());
            let mut emp = Vec::with_capacity(t_grid.len());
            let mut se = Vec::with_capacity(t_grid.len());
            for &t in t_grid {
                analytic.push(survival_duration(*bid, *ask, t, params, &spec)?);
                let p = (n - taus.partition_point(|&x| x <= t) as f64) / n;
                emp.push(p);
                se.push((p * (1.0 - p) / n).sqrt());
            }
            Ok(vec![ComparisonReport::compare(
                0,
                format!("duration survival ({bid},{ask}) vs {paths} simulated durations"),
                pts(t_grid.iter().map(|t| format!("t={t}"))),
                analytic,
                emp,
                Some(se),
                PassRule::Absolute(cfg.tolerance),
            )])
        }
        Quantity::TailSlope { bid, ask, t_start } => {
            let law = tail_law(*bid, *ask, params)?;
            let k = 40;
            let ts: Vec<f64> = (0..=k).map(|i| t_start * 100f64.powf(i as f64 / k as f64)).collect();
            let tight = QuadSpec::relative(1e-9);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for &t in &ts {
                let s = survival_duration(*bid, *ask, t, params, &tight)?;
                xs.push(t.ln());
                ys.push(s.ln());
            }
            let fit = if ys.iter().all(|y| y.is_finite()) { slope(&xs, &ys) } else { f64::NEG_INFINITY };
            let t_end = *ts.last().unwrap();
            let scaled = t_end.powf(law.exponent) * survival_duration(*bid, *ask, t_end, params, &tight)?;
            let window = format!("t in [{t_start}, {t_end}] s");
            Ok(vec![
                ComparisonReport::compare(
                    0,
                    format!("tail slope ({bid},{ask}), lambda={}, mu+theta={}", params.lambda, params.mu_theta()),
                    vec![window.clone()],
                    vec![fit],
                    vec![-law.exponent],
                    None,
                    PassRule::Absolute(0.1),
                ),
                ComparisonReport::compare(
                    0,
                    format!("tail prefactor ({bid},{ask}), lambda={}, mu+theta={}", params.lambda, params.mu_theta()),
                    vec![format!("t^{} P[tau>t] at t={t_end}", law.exponent)],
                    vec![law.prefactor],
                    vec![scaled],
                    None,
                    PassRule::Relative(0.05),
                ),
            ])
        }
        Quantity::Laplace { s, x } => {
            if !(*s > 0.0) {
                return Err(Error::Domain(format!("Laplace argument must be > 0, got {s}")));
            }
            let draws: Vec<f64> = (0..paths)
                .into_par_iter()
                .map(|i| discounted_passage(*x, *s, params, &mut path_rng(seed, i)))
                .collect();
            let (m, se) = mean_se(&draws);
            Ok(vec![ComparisonReport::compare(
                0,
                format!("Laplace transform of queue exit time, x={x}"),
                vec![format!("s={s}")],
                vec![hitting_laplace(*s, *x, params)?],
                vec![m],
                Some(vec![se]),
                se3,
            )])
        }
        Quantity::FirstMoveProbability { bid, ask } => {
            let s0 = start(*bid, *ask)?;
            let ups = (0..paths)
                .into_par_iter()
                .filter(|&i| first_change(&s0, params, &repl, &mut path_rng(seed, i)).1 > 0)
                .count() as f64;
            let p = ups / paths as f64;
            Ok(vec![ComparisonReport::compare(
                0,
                format!("first-move probability phi({bid},{ask})"),
                vec![format!("({bid},{ask})")],
                vec![up_probability(*bid, *ask, params, cfg)?],
                vec![p],
                Some(vec![(p * (1.0 - p) / paths as f64).sqrt()]),
                se3,
            )])
        }
        Quantity::PN { n, bid, ask } => {
            if *n == 0 {
                return Err(Error::Domain("move index must be >= 1".into()));
            }
            let sim = SimConfig::new(seed, Horizon::Moves(*n as u64)).starting_at(start(*bid, *ask)?);
            let ups: Vec<bool> = (0..paths)
                .into_par_iter()
                .map(|i| simulate_path(params, &repl, &sim, i).map(|p| p.moves[*n as usize - 1] > 0))
                .collect::<Result<_>>()?;
            let p = ups.iter().filter(|&&u| u).count() as f64 / paths as f64;
            Ok(vec![ComparisonReport::compare(
                0,
                format!("p_n: move {n} up from ({bid},{ask})"),
                vec![format!("n={n}")],
                vec![p_n(*n, *bid, *ask, f, params)?],
                vec![p],
                Some(vec![(p * (1.0 - p) / paths as f64).sqrt()]),
                se3,
            )])
        }
        Quantity::Autocovariance { max_lag, moves_per_path } => {
            let (lags, m) = (*max_lag as usize, *moves_per_path as usize);
            if lags == 0 || m <= lags {
                return Err(Error::Domain(format!("need 1 <= max_lag < moves_per_path, got {lags}, {m}")));
            }
            let sim = SimConfig::new(seed, Horizon::Moves(*moves_per_path));
            let per_path: Vec<Vec<f64>> = (0..paths)
                .into_par_iter()
                .map(|i| {
                    let x = simulate_path(params, &repl, &sim, i)?.moves;
                    Ok((1..=lags)
                        .map(|k| {
                            let pairs = m - (k - 1);
                            let sum: i64 = (0..pairs).map(|j| (x[j] * x[j + k - 1]) as i64).sum();
                            sum as f64 / pairs as f64
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            let mut analytic = Vec::with_capacity(lags);
            let mut emp = Vec::with_capacity(lags);
            let mut se = Vec::with_capacity(lags);
            for k in 1..=lags {
                let col: Vec<f64> = per_path.iter().map(|v| v[k - 1]).collect();
                let (mean, s) = mean_se(&col);
                analytic.push(autocov_moves(k as u32, f, params)?);
                emp.push(mean);
                se.push(s);
            }
            Ok(vec![ComparisonReport::compare(
                0,
                format!(
                    "move autocovariance, {} f, {} moves",
                    if f.is_symmetric() { "symmetric" } else { "asymmetric" },
                    paths * moves_per_path
                ),
                pts((1..=lags).map(|k| format!("k={k}"))),
                analytic,
                emp,
                Some(se),
                se3,
            )])
        }
        Quantity::ExpectedDuration { bid, ask } => {
            let s0 = start(*bid, *ask)?;
            let analytic = expected_duration(*bid, *ask, params, &spec)?;
            check_budget(params, analytic, cfg)?;
            let taus: Vec<f64> = (0..paths)
                .into_par_iter()
                .map(|i| first_change(&s0, params, &repl, &mut path_rng(seed, i)).0)
                .collect();
            let (m, se) = mean_se(&taus);
            Ok(vec![ComparisonReport::compare(
                0,
                format!(
                    "expected duration ({bid},{ask}), lambda={}, mu+theta={}",
                    params.lambda,
                    params.mu_theta()
                ),
                vec![format!("({bid},{ask})")],
                vec![analytic],
                vec![m],
                Some(vec![se]),
                PassRule::Relative(0.01),
            )])
        }
        Quantity::DiffusionBalanced { n } => {
            let sigma = vol_balanced(params, f)?;
            let s = rescaled_final(params, &repl, *n, Regime::Balanced, cfg)?;
            let sd = sample_sd(&s);
            let ks = ks_normal(&s, sigma);
            let se = sd / (2.0 * (s.len() as f64 - 1.0)).sqrt();
            Ok(vec![
                ComparisonReport::compare(
                    0,
                    format!("balanced limit SD of s(n log n)/sqrt(n), n={n}"),
                    vec!["t=1".into()],
                    vec![sigma],
                    vec![sd],
                    Some(vec![se]),
                    PassRule::Relative(0.10),
                )
                .with_note(format!("sample/predicted = {:.4}", sd / sigma)),
                ComparisonReport::compare(
                    0,
                    format!("balanced limit KS distance to N(0, sigma^2), n={n}"),
                    vec!["t=1".into()],
                    vec![ks],
                    vec![0.0],
                    None,
                    PassRule::Absolute(0.05),
                ),
            ])
        }
        Quantity::DiffusionUnbalanced { n } => {
            let sigma = vol_unbalanced(params, f, &spec)?;
            let s = rescaled_final(params, &repl, *n, Regime::Unbalanced, cfg)?;
            let sd = sample_sd(&s);
            let se = sd / (2.0 * (s.len() as f64 - 1.0)).sqrt();
            Ok(vec![ComparisonReport::compare(
                0,
                format!("unbalanced limit SD of s(n)/sqrt(n), n={n}"),
                vec!["t=1".into()],
                vec![sigma],
                vec![sd],
                Some(vec![se]),
                PassRule::Relative(0.10),
            )
            .with_note(format!("sample/predicted = {:.4}", sd / sigma))])
        }
    }
}

/// Least-squares slope of `ys` on `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `s(zeta(n)) / sqrt(n)` for `cfg.mc_paths` paths started from `f`.
fn rescaled_final(
    params: &ModelParams<f64>,
    repl: &Replenishment<f64>,
    n: u64,
    regime: Regime,
    cfg: &OracleConfig,
) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain(format!("scaling index must be >= 2, got {n}")));
    }
    let zeta: f64 = regime.time_scale(n);
    check_budget(params, zeta, cfg)?;
    let sim = SimConfig::new(cfg.mc_seed, Horizon::Time(zeta));
    (0..cfg.mc_paths)
        .into_par_iter()
        .map(|i| Ok(simulate_path(params, repl, &sim, i)?.rescaled_series(n, regime, &[1.0])?[0]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(paths: u64) -> OracleConfig {
        OracleConfig {
            mc_paths: paths,
            tolerance: 0.02,
            ..OracleConfig::default()
        }
    }

    #[test]
    fn ks_of_exact_quantiles_is_small() {
        let n = 1000;
        // midpoint quantiles of N(0,1) via bisection on erfc
        let q: Vec<f64> = (0..n)
            .map(|i| {
                let target = (i as f64 + 0.5) / n as f64;
                let (mut lo, mut hi) = (-10.0, 10.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if 0.5 * libm::erfc(-mid / std::f64::consts::SQRT_2) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                lo
            })
            .collect();
        assert!((ks_normal(&q, 1.0) - 0.5 / n as f64).abs() < 1e-9);
        // sup |Phi(x) - Phi(x/2)| is about 0.16
        assert!(ks_normal(&q, 2.0) > 0.15);
    }

    #[test]
    fn first_move_small_run() {
        let p = ModelParams::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let f = QueueDist::point_mass(1, 1).unwrap();
        let r = mc_compare(&Quantity::FirstMoveProbability { bid: 3, ask: 1 }, &p, &f, &small(20_000)).unwrap();
        assert!(r[0].pass, "{r:?}");
    }

    #[test]
    fn laplace_small_run() {
        let p = ModelParams::with_removal_rate(1.0, 1.0, 1.0).unwrap();
        let f = QueueDist::point_mass(1, 1).unwrap();
        let r = mc_compare(&Quantity::Laplace { s: 1.0, x: 2 }, &p, &f, &small(20_000)).unwrap();
        assert!(r[0].pass, "{r:?}");
        assert!((r[0].analytic[0] - ((3.0 - 5f64.sqrt()) / 2.0).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn survival_and_mean_small_run() {
        let p = ModelParams::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let f = QueueDist::point_mass(1, 1).unwrap();
        let q = Quantity::DurationSurvival {
            bid: 1,
            ask: 1,
            t_grid: vec![0.0, 0.2, 0.5, 1.0],
        };
        let r = mc_compare(&q, &p, &f, &small(20_000)).unwrap();
        assert!(r[0].pass, "{r:?}");
        assert_eq!(r[0].analytic[0], 1.0);
        let r = mc_compare(&Quantity::ExpectedDuration { bid: 1, ask: 1 }, &p, &f, &small(20_000)).unwrap();
        // 1% is ~3 SE at this size; only check the estimate is sane
        assert!((r[0].oracle[0] / r[0].analytic[0] - 1.0).abs() < 0.05);
    }

    #[test]
    fn reproducible_for_a_seed() {
        let p = ModelParams::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let f = QueueDist::uniform(&[(1, 2), (2, 1)]).unwrap();
        let q = Quantity::Autocovariance {
            max_lag: 3,
            moves_per_path: 200,
        };
        let a = mc_compare(&q, &p, &f, &small(50)).unwrap();
        let b = mc_compare(&q, &p, &f, &small(50)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a[0].oracle[0], 1.0);
    }

    #[test]
    fn rejects_bad_requests() {
        let p = ModelParams::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let f = QueueDist::point_mass(1, 1).unwrap();
        assert!(mc_compare(&Quantity::PN { n: 0, bid: 1, ask: 1 }, &p, &f, &small(10)).is_err());
        assert!(mc_compare(&Quantity::FirstMoveProbability { bid: 1, ask: 1 }, &p, &f, &small(1)).is_err());
        let huge = OracleConfig {
            time_step_budget: 1,
            ..small(1_000_000)
        };
        assert!(mc_compare(&Quantity::DiffusionUnbalanced { n: 100_000 }, &p, &f, &huge).is_err());
    }
}
