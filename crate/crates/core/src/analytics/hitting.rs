//! Probability that the next price move is an increase, i.e. that the ask
//! queue depletes before the bid queue.
//!
//! Balanced flow has a parameter-free Fourier integral. Otherwise the
//! embedded jump chain on the quadrant is solved numerically: each event
//! touches one queue (probability 1/2 per side) and moves it up with
//! probability `a = lambda / (lambda+mu+theta)`, down with `b = 1 - a`.

use super::clamp_probability;
use crate::error::{Error, Result};
use crate::model::{FlowRegime, ModelParams};
use crate::numerics::{integrate_finite, QuadSpec};
use crate::scalar::Scalar;

/// Width of the interval next to 0 on which the Fourier integrand is
/// replaced by its analytic limit.
const SINGULAR_EPS: f64 = 1e-6;

/// `phi(bid, ask)` for balanced order flow:
/// `(1/pi) int_0^pi (2 - cos t - sqrt((2 - cos t)^2 - 1))^ask sin(bid t) cos(t/2) / sin(t/2) dt`.
pub fn prob_up_balanced<T: Scalar>(bid: u32, ask: u32, spec: &QuadSpec) -> Result<T> {
    if bid == 0 || ask == 0 {
        return Err(Error::Domain(format!("queue sizes must be >= 1, got ({bid}, {ask})")));
    }
    let n = T::from_u32(bid).unwrap();
    let p = ask as i32;
    let two = T::lit(2.0);
    // (2 - cos t) - sqrt((2 - cos t)^2 - 1) as a reciprocal, with
    // (2 - cos t)^2 - 1 = 2 sin^2(t/2) (3 - cos t) to avoid cancellation
    let decay = move |t: T| {
        let c = two - t.cos();
        let s = (t / two).sin();
        (c + (two * s * s * (T::lit(3.0) - t.cos())).sqrt()).recip().powi(p)
    };
    let integrand = |t: T| decay(t) * (n * t).sin() * (t / two).cos() / (t / two).sin();
    let limit = |t: T| two * n * decay(t);

    let eps = T::lit(SINGULAR_EPS);
    let head = eps / T::lit(6.0) * (limit(T::zero()) + T::lit(4.0) * limit(eps / two) + limit(eps));
    let body = integrate_finite(integrand, eps, T::PI(), spec)?;
    Ok(clamp_probability((head + body) / T::PI(), "prob_up_balanced"))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Approximate hitting probability far from the axes, used as the boundary
/// value on the truncation edge.
///
/// Balanced flow uses the harmonic measure of the quarter plane,
/// `1 - (2/pi) atan(ask/bid)`. When removals dominate, both queues drain in
/// about `2 m / (b - a)` events with `m = min(bid, ask)` while their
/// difference diffuses with unit variance per event, giving
/// `Phi((bid - ask) / sqrt(2 m / (b - a)))`. When limit orders dominate,
/// single-queue ruin probabilities `rho^k`, `rho = (mu+theta)/lambda`, are
/// combined assuming at most one queue depletes.
pub fn far_field<T: Scalar>(bid: u32, ask: u32, params: &ModelParams<T>) -> T {
    let (nb, na) = (bid as f64, ask as f64);
    let v = match params.regime() {
        FlowRegime::Balanced => 1.0 - std::f64::consts::FRAC_2_PI * (na / nb).atan(),
        FlowRegime::RemovalDominated => {
            let a = params.up_prob().as_f64();
            let b = 1.0 - a;
            let spread = (2.0 * nb.min(na) / (b - a)).sqrt();
            normal_cdf((nb - na) / spread)
        }
        FlowRegime::LimitDominated => {
            let rho = (params.mu_theta() / params.lambda).as_f64();
            rho.powf(na) * (1.0 - rho.powf(nb)) + 0.5 * rho.powf(na + nb)
        }
    };
    T::lit(v)
}

/// Solution of the truncated Dirichlet problem on `{0..=N}^2`.
#[derive(Debug, Clone)]
pub struct HittingGrid<T> {
    truncation: usize,
    values: Vec<T>,
    pub sweeps: usize,
}

impl<T: Scalar> HittingGrid<T> {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Probability of an up-move from `(bid, ask)`; both must be below the
    /// truncation.
    pub fn get(&self, bid: u32, ask: u32) -> Result<T> {
        let n = self.truncation;
        if bid as usize >= n || ask as usize >= n {
            return Err(Error::Domain(format!("({bid}, {ask}) outside the truncated grid of size {n}")));
        }
        Ok(self.values[bid as usize * (n + 1) + ask as usize])
    }
}

/// Solves `phi = (a phi(i+1,j) + b phi(i-1,j) + a phi(i,j+1) + b phi(i,j-1)) / 2`
/// with `phi(0, j) = 0`, `phi(i, 0) = 1` and [`far_field`] values on the edge
/// `i = N` or `j = N`, by successive over-relaxation with the optimal factor
/// for this operator.
pub fn solve_hitting_grid<T: Scalar>(params: &ModelParams<T>, truncation: usize) -> Result<HittingGrid<T>> {
    params.validate()?;
    let n = truncation;
    if n < 4 {
        return Err(Error::Domain(format!("truncation must be >= 4, got {n}")));
    }
    let w = n + 1;
    let mut phi = vec![T::zero(); w * w];
    for i in 1..=n {
        for j in 0..=n {
            phi[i * w + j] = if j == 0 { T::one() } else { far_field(i as u32, j as u32, params) };
        }
    }
    let half = T::lit(0.5);
    let a = params.up_prob() * half;
    let b = (T::one() - params.up_prob()) * half;
    // Jacobi spectral radius 4 sqrt(a b) cos(pi/N) for the halved weights
    let rho_j = (T::lit(4.0) * a * b).sqrt() * T::lit(2.0) * (T::PI() / T::from_count(n)).cos();
    let omega = T::lit(2.0) / (T::one() + (T::one() - rho_j * rho_j).max(T::zero()).sqrt());
    let tol = T::lit(1e-14).max(T::lit(8.0) * T::epsilon());
    let max_sweeps = 200 * n + 1000;
    for sweep in 1..=max_sweeps {
        let mut delta = T::zero();
        for i in 1..n {
            let row = i * w;
            for j in 1..n {
                let k = row + j;
                let target = a * (phi[k + w] + phi[k + 1]) + b * (phi[k - w] + phi[k - 1]);
                let step = omega * (target - phi[k]);
                phi[k] += step;
                delta = delta.max(step.abs());
            }
        }
        if !delta.is_finite() {
            return Err(Error::SolverFailure {
                iterations: sweep,
                residual: delta.as_f64(),
            });
        }
        if delta < tol {
            return Ok(HittingGrid {
                truncation: n,
                values: phi,
                sweeps: sweep,
            });
        }
        if sweep == max_sweeps {
            return Err(Error::SolverFailure {
                iterations: sweep,
                residual: delta.as_f64(),
            });
        }
    }
    unreachable!()
}

/// Sensitivity above which the truncation is reported as too small.
pub const BOUNDARY_SENSITIVITY: f64 = 1e-6;

/// Hitting probability for any flow regime from the truncated Dirichlet
/// problem; the solve is repeated at twice the truncation and a warning is
/// logged if the two differ by more than [`BOUNDARY_SENSITIVITY`].
pub fn prob_up_numeric<T: Scalar>(bid: u32, ask: u32, params: &ModelParams<T>, truncation: usize) -> Result<T> {
    if bid == 0 || ask == 0 {
        return Err(Error::Domain(format!("queue sizes must be >= 1, got ({bid}, {ask})")));
    }
    if truncation <= 2 * bid.max(ask) as usize {
        return Err(Error::Domain(format!(
            "truncation {truncation} too small for queues ({bid}, {ask})"
        )));
    }
    let v = solve_hitting_grid(params, truncation)?.get(bid, ask)?;
    let fine = solve_hitting_grid(params, 2 * truncation)?.get(bid, ask)?;
    let sensitivity = (fine - v).abs();
    if sensitivity.as_f64() > BOUNDARY_SENSITIVITY {
        log::warn!("hitting probability at ({bid}, {ask}) changes by {sensitivity} when the truncation doubles from {truncation}");
    }
    Ok(clamp_probability(v, "prob_up_numeric"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> QuadSpec {
        QuadSpec::new(1e-13, 1e-12, 1 << 20).unwrap()
    }

    // high-precision reference values of phi(bid, ask)
    const REFERENCE: [(u32, u32, f64); 5] = [
        (2, 1, 0.69765272631355),
        (1, 2, 0.30234727368645),
        (3, 1, 0.790610905254201),
        (5, 2, 0.756021507793482),
        (10, 3, 0.814007266211994),
    ];

    #[test]
    fn balanced_reference_values() {
        for (n, p, want) in REFERENCE {
            let got: f64 = prob_up_balanced(n, p, &tight()).unwrap();
            assert!((got - want).abs() < 1e-11, "phi({n},{p}) = {got}, want {want}");
        }
    }

    #[test]
    fn balanced_symmetry() {
        for n in 1..=10 {
            let d: f64 = prob_up_balanced(n, n, &tight()).unwrap();
            assert!((d - 0.5).abs() < 1e-10);
            for p in 1..=10 {
                let s = prob_up_balanced::<f64>(n, p, &tight()).unwrap() + prob_up_balanced::<f64>(p, n, &tight()).unwrap();
                assert!((s - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn one_one_is_one_half_unless_limit_orders_dominate() {
        for (lm, mt) in [(1.0, 2.0), (5.0, 5.0)] {
            let p = ModelParams::<f64>::with_removal_rate(lm, mt, 1.0).unwrap();
            let g = solve_hitting_grid(&p, 60).unwrap();
            assert!((g.get(1, 1).unwrap() - 0.5).abs() < 1e-12);
        }
        // with lambda > mu+theta neither queue may ever deplete; by symmetry each
        // side gets half of P[some depletion] = 1 - (1 - rho)^2
        let p = ModelParams::<f64>::with_removal_rate(3.0, 1.0, 1.0).unwrap();
        let g = solve_hitting_grid(&p, 60).unwrap();
        let rho = 1.0 / 3.0;
        assert!((g.get(1, 1).unwrap() - (1.0 - (1.0 - rho) * (1.0 - rho)) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn numeric_matches_balanced_formula() {
        let p = ModelParams::<f64>::with_removal_rate(2.0, 2.0, 1.0).unwrap();
        let g = solve_hitting_grid(&p, 200).unwrap();
        for (n, q, want) in REFERENCE {
            assert!((g.get(n, q).unwrap() - want).abs() < 1e-4);
        }
    }

    #[test]
    fn grid_satisfies_the_harmonic_equation() {
        let p = ModelParams::<f64>::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let g = solve_hitting_grid(&p, 50).unwrap();
        let (a, b) = (1.0 / 3.0, 2.0 / 3.0);
        for i in 1..20u32 {
            for j in 1..20u32 {
                let at = |i: u32, j: u32| if i == 0 { 0.0 } else if j == 0 { 1.0 } else { g.get(i, j).unwrap() };
                let rhs = 0.5 * (a * at(i + 1, j) + b * at(i - 1, j) + a * at(i, j + 1) + b * at(i, j - 1));
                assert!((at(i, j) - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let p = ModelParams::<f64>::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        assert!(prob_up_balanced::<f64>(0, 1, &tight()).is_err());
        assert!(prob_up_numeric(30, 1, &p, 40).is_err());
        assert!(solve_hitting_grid(&p, 40).unwrap().get(40, 1).is_err());
    }

    #[test]
    fn far_field_is_a_probability_and_symmetric_when_balanced() {
        let p = ModelParams::<f64>::with_removal_rate(2.0, 2.0, 1.0).unwrap();
        for i in 1..30 {
            for j in 1..30 {
                let v: f64 = far_field(i, j, &p);
                assert!((0.0..=1.0).contains(&v));
                assert!((v + far_field::<f64>(j, i, &p) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_precision() {
        let v: f32 = prob_up_balanced(2, 1, &QuadSpec::new(1e-6, 1e-6, 1 << 16).unwrap()).unwrap();
        assert!((v as f64 - REFERENCE[0].2).abs() < 1e-5);
    }
}
