//! Hitting probabilities from the truncated discrete Dirichlet problem,
//! solved by line relaxation: each bid row is solved exactly in the ask
//! direction with the tridiagonal (Thomas) algorithm, and rows are
//! over-relaxed in sequence. The point-relaxation solver in `analytics`
//! shares only the far-field boundary values with this one.

use serde::{Deserialize, Serialize};

use super::OracleConfig;
use crate::analytics::far_field;
use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirichletGrid {
    pub truncation: usize,
    values: Vec<f64>,
    pub sweeps: usize,
}

impl DirichletGrid {
    pub fn get(&self, bid: u32, ask: u32) -> f64 {
        let w = self.truncation + 1;
        self.values[bid as usize * w + ask as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletValue {
    pub value: f64,
    /// `|value at 2N - value at N|`.
    pub sensitivity: f64,
}

pub fn dirichlet_grid(params: &ModelParams<f64>, truncation: usize) -> Result<DirichletGrid> {
    params.validate()?;
    let n = truncation;
    if n < 4 {
        return Err(Error::Domain(format!("truncation must be >= 4, got {n}")));
    }
    let w = n + 1;
    let a = 0.5 * params.up_prob();
    let b = 0.5 - a;
    let mut phi = vec![0.0f64; w * w];
    for i in 1..=n {
        phi[i * w] = 1.0;
        for j in 1..=n {
            phi[i * w + j] = far_field(i as u32, j as u32, params);
        }
    }
    // line-Jacobi spectral radius for the operator I - a S+ - b S- per row
    let s = 2.0 * (a * b).sqrt() * (std::f64::consts::PI / n as f64).cos();
    let rho = s / (1.0 - s);
    let omega = 2.0 / (1.0 + (1.0 - rho * rho).max(0.0).sqrt());

    let m = n - 1; // unknowns per row, ask = 1..n-1
    let mut rhs = vec![0.0; m];
    let mut c_prime = vec![0.0; m];
    let mut sol = vec![0.0; m];
    let max_sweeps = 100 * n + 1000;
    for sweep in 1..=max_sweeps {
        let mut delta = 0.0f64;
        for i in 1..n {
            let row = i * w;
            for j in 1..n {
                rhs[j - 1] = a * phi[row + w + j] + b * phi[row - w + j];
            }
            rhs[0] += b * phi[row];
            rhs[m - 1] += a * phi[row + n];
            // Thomas algorithm: diagonal 1, upper -a, lower -b
            c_prime[0] = -a;
            sol[0] = rhs[0];
            for k in 1..m {
                let denom = 1.0 + b * c_prime[k - 1];
                c_prime[k] = -a / denom;
                sol[k] = (rhs[k] + b * sol[k - 1]) / denom;
            }
            for k in (0..m - 1).rev() {
                sol[k] -= c_prime[k] * sol[k + 1];
            }
            for j in 1..n {
                let step = omega * (sol[j - 1] - phi[row + j]);
                phi[row + j] += step;
                delta = delta.max(step.abs());
            }
        }
        if !delta.is_finite() {
            return Err(Error::SolverFailure {
                iterations: sweep,
                residual: delta,
            });
        }
        if delta < 1e-14 {
            return Ok(DirichletGrid {
                truncation: n,
                values: phi,
                sweeps: sweep,
            });
        }
    }
    Err(Error::SolverFailure {
        iterations: max_sweeps,
        residual: f64::NAN,
    })
}

/// Probability of an up-move from `(bid, ask)` with the boundary
/// sensitivity from a second solve at twice the truncation.
pub fn oracle_dirichlet(bid: u32, ask: u32, params: &ModelParams<f64>, cfg: &OracleConfig) -> Result<DirichletValue> {
    if bid == 0 || ask == 0 {
        return Err(Error::Domain("queue sizes must be >= 1".into()));
    }
    cfg.check_truncation(bid.max(ask))?;
    let coarse = dirichlet_grid(params, cfg.queue_truncation)?.get(bid, ask);
    let fine = dirichlet_grid(params, 2 * cfg.queue_truncation)?.get(bid, ask);
    Ok(DirichletValue {
        value: coarse,
        sensitivity: (fine - coarse).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::solve_hitting_grid;

    #[test]
    fn one_one_balanced_is_one_half() {
        let p = ModelParams::with_removal_rate(1.0, 1.0, 1.0).unwrap();
        let cfg = OracleConfig {
            queue_truncation: 40,
            ..OracleConfig::default()
        };
        let v = oracle_dirichlet(1, 1, &p, &cfg).unwrap();
        assert!((v.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complementary_entries_sum_to_one() {
        let p = ModelParams::with_removal_rate(1.0, 1.0, 1.0).unwrap();
        let g = dirichlet_grid(&p, 100).unwrap();
        for i in 1..=10 {
            for j in 1..=10 {
                assert!((g.get(i, j) + g.get(j, i) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn agrees_with_point_relaxation() {
        let p = ModelParams::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let line = dirichlet_grid(&p, 80).unwrap();
        let point = solve_hitting_grid(&p, 80).unwrap();
        for i in 1..20 {
            for j in 1..20 {
                assert!((line.get(i, j) - point.get(i, j).unwrap()).abs() < 1e-11);
            }
        }
    }
}
