//! Statistics of the sequence of price moves.
//!
//! After an up-move the queues are redrawn from `f`, after a down-move from
//! its mirror, so the move signs form a Markov chain that repeats the last
//! direction with probability `p_cont = sum f(i,j) phi(i,j)`.

use serde::{Deserialize, Serialize};

use super::clamp_probability;
use super::hitting::{prob_up_balanced, solve_hitting_grid, HittingGrid, BOUNDARY_SENSITIVITY};
use crate::error::{Error, Result};
use crate::model::{ModelParams, QueueDist};
use crate::numerics::QuadSpec;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    pub quad: QuadSpec,
    /// Grid size for the numerical hitting probabilities (unbalanced flow).
    pub truncation: usize,
    /// Re-solve at twice the truncation and warn on sensitivity.
    pub check_truncation: bool,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            quad: QuadSpec::default(),
            truncation: 400,
            check_truncation: true,
        }
    }
}

/// `phi(bid, ask)` for one parameter set, from the closed form when the flow
/// is balanced and from a solved grid otherwise.
#[derive(Debug, Clone)]
pub enum UpProbability<T> {
    Balanced(QuadSpec),
    Grid {
        grid: HittingGrid<T>,
        check: Option<HittingGrid<T>>,
    },
}

impl<T: Scalar> UpProbability<T> {
    pub fn new(params: &ModelParams<T>, opts: &ChainOptions) -> Result<Self> {
        params.validate()?;
        if params.is_balanced() {
            return Ok(Self::Balanced(opts.quad));
        }
        let grid = solve_hitting_grid(params, opts.truncation)?;
        let check = if opts.check_truncation {
            Some(solve_hitting_grid(params, 2 * opts.truncation)?)
        } else {
            None
        };
        Ok(Self::Grid { grid, check })
    }

    /// `p_cont` for `f` from this one solve.
    pub fn p_cont(&self, f: &QueueDist<T>) -> Result<T> {
        continuation(f, self)
    }

    /// [`p_n`] from this one solve.
    pub fn p_n(&self, n: u32, bid: u32, ask: u32, f: &QueueDist<T>) -> Result<T> {
        if n == 0 {
            return Err(Error::Domain("move index n must be >= 1".into()));
        }
        let p1 = self.at(bid, ask)?;
        if n == 1 {
            return Ok(p1);
        }
        let pc = continuation(f, self)?;
        let two = T::lit(2.0);
        let v = (T::one() + (two * pc - T::one()).powi(n as i32 - 1) * (two * p1 - T::one())) / two;
        Ok(clamp_probability(v, "p_n"))
    }

    pub fn at(&self, bid: u32, ask: u32) -> Result<T> {
        match self {
            Self::Balanced(spec) => prob_up_balanced(bid, ask, spec),
            Self::Grid { grid, check } => {
                if 2 * bid.max(ask) as usize >= grid.truncation() {
                    return Err(Error::Domain(format!(
                        "queues ({bid}, {ask}) too large for truncation {}",
                        grid.truncation()
                    )));
                }
                let v = grid.get(bid, ask)?;
                if let Some(fine) = check {
                    let d = (fine.get(bid, ask)? - v).abs();
                    if d.as_f64() > BOUNDARY_SENSITIVITY {
                        log::warn!("hitting probability at ({bid}, {ask}) moves by {d} when the truncation doubles");
                    }
                }
                Ok(v)
            }
        }
    }
}

/// Probability that two successive price moves have the same direction.
pub fn p_cont<T: Scalar>(f: &QueueDist<T>, params: &ModelParams<T>) -> Result<T> {
    p_cont_with(f, params, &ChainOptions::default())
}

pub fn p_cont_with<T: Scalar>(f: &QueueDist<T>, params: &ModelParams<T>, opts: &ChainOptions) -> Result<T> {
    let up = UpProbability::new(params, opts)?;
    continuation(f, &up)
}

fn continuation<T: Scalar>(f: &QueueDist<T>, up: &UpProbability<T>) -> Result<T> {
    let mut pc = T::zero();
    for a in f.atoms() {
        pc += a.p * up.at(a.bid, a.ask)?;
    }
    Ok(clamp_probability(pc, "p_cont"))
}

/// Probability that the `n`-th price move is an increase given the initial
/// queues `(bid, ask)`: `(1 + (2 p_cont - 1)^{n-1} (2 p_1 - 1)) / 2` where
/// `p_1 = phi(bid, ask)`.
pub fn p_n<T: Scalar>(n: u32, bid: u32, ask: u32, f: &QueueDist<T>, params: &ModelParams<T>) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("move index n must be >= 1".into()));
    }
    UpProbability::new(params, &ChainOptions::default())?.p_n(n, bid, ask, f)
}

/// `Cov(X_1, X_k) = (2 p_cont - 1)^{k-1}` for moves normalized to `+-1`.
pub fn autocov_moves<T: Scalar>(k: u32, f: &QueueDist<T>, params: &ModelParams<T>) -> Result<T> {
    if k == 0 {
        return Err(Error::Domain("lag k must be >= 1".into()));
    }
    if k == 1 {
        return Ok(T::one());
    }
    let pc = p_cont(f, params)?;
    Ok((T::lit(2.0) * pc - T::one()).powi(k as i32 - 1))
}

/// Compares the sign of the lag-one autocorrelation with the heuristic
/// `sum_{ask >= bid} f > 1/2` predicting negative correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryReport<T> {
    pub mass_bid_le_ask: T,
    pub p_cont: T,
    pub predicts_negative: bool,
    pub is_negative: bool,
}

impl<T: Scalar> AsymmetryReport<T> {
    pub fn new(f: &QueueDist<T>, params: &ModelParams<T>) -> Result<Self> {
        Ok(Self::from_p_cont(f, p_cont(f, params)?))
    }

    pub fn from_p_cont(f: &QueueDist<T>, pc: T) -> Self {
        let mass = f.mass_bid_le_ask();
        let half = T::lit(0.5);
        Self {
            mass_bid_le_ask: mass,
            p_cont: pc,
            predicts_negative: mass > half,
            is_negative: pc < half,
        }
    }

    pub fn consistent(&self) -> bool {
        self.predicts_negative == self.is_negative
    }
}
