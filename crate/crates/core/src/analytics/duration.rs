//! Time to the next price change.
//!
//! A queue of size `x` is a birth-death walk with up-rate `lambda` and
//! down-rate `mu + theta`; its first passage to zero has density
//! `((mu+theta)/lambda)^{x/2} (x/u) I_x(c u) e^{-(lambda+mu+theta) u}` with
//! `c = 2 sqrt(lambda (mu+theta))`. The duration `tau` is the minimum of the
//! two independent queue passage times.
//!
//! Densities are evaluated through `e^{-cu} I_x(cu)` so that only the gap
//! `(sqrt(lambda) - sqrt(mu+theta))^2` appears in the remaining exponential.

use serde::{Deserialize, Serialize};

use super::clamp_probability;
use crate::error::{Error, Result};
use crate::model::{ModelParams, QueueDist};
use crate::numerics::{bessel_i_scaled, integrate_finite, QuadSpec};
use crate::scalar::Scalar;

/// Power-law tail `P[tau > t] ~ prefactor * t^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLaw<T> {
    pub exponent: T,
    pub prefactor: T,
}

/// `E[e^{-s sigma} | q_0 = x]` for the passage time `sigma` of one queue.
pub fn hitting_laplace<T: Scalar>(s: T, x: u32, params: &ModelParams<T>) -> Result<T> {
    params.validate()?;
    if !(s >= T::zero()) || !s.is_finite() {
        return Err(Error::Domain(format!("Laplace argument must be finite and >= 0, got {s}")));
    }
    if x == 0 {
        return Err(Error::Domain("queue size must be >= 1".into()));
    }
    let lm = params.lambda;
    let mt = params.mu_theta();
    let k = params.side_rate() + s;
    // smaller root of lambda X^2 - k X + (mu+theta), written without cancellation
    let disc = ((k - T::lit(2.0) * (lm * mt).sqrt()) * (k + T::lit(2.0) * (lm * mt).sqrt())).max(T::zero());
    let root = T::lit(2.0) * mt / (k + disc.sqrt());
    Ok(root.min(T::one()).powi(x as i32))
}

/// Scale constants of the passage-time density.
#[derive(Clone, Copy)]
struct Kernel<T> {
    x: u32,
    xf: T,
    c: T,
    gap: T,
    log_prefactor: T,
}

impl<T: Scalar> Kernel<T> {
    fn new(x: u32, params: &ModelParams<T>, with_prefactor: bool) -> Self {
        let (sl, sm) = (params.lambda.sqrt(), params.mu_theta().sqrt());
        let half_x = T::from_u32(x).unwrap() / T::lit(2.0);
        Self {
            x,
            xf: T::from_u32(x).unwrap(),
            c: T::lit(2.0) * sl * sm,
            gap: (sl - sm) * (sl - sm),
            log_prefactor: if with_prefactor {
                half_x * (params.mu_theta() / params.lambda).ln()
            } else {
                T::zero()
            },
        }
    }

    fn density(&self, u: T) -> T {
        if u == T::zero() {
            return if self.x == 1 { self.log_prefactor.exp() * self.c / T::lit(2.0) } else { T::zero() };
        }
        let ie = bessel_i_scaled(self.x, self.c * u).unwrap_or_else(|_| T::nan());
        if ie == T::zero() {
            return T::zero();
        }
        (self.log_prefactor - self.gap * u).exp() * self.xf / u * ie
    }

    /// Time beyond which the Bessel factor is in its large-argument regime.
    fn asymptotic_start(&self) -> T {
        let z0 = T::lit(200.0).max(T::lit(50.0) * self.xf * self.xf);
        z0 / self.c
    }

    /// `int_T^inf` of the balanced density from the large-argument expansion
    /// `e^{-z} I_x(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(x) / z^k`.
    fn balanced_tail(&self, t: T) -> T {
        let z_rate = self.c; // 2 lambda
        let four_nu2 = T::lit(4.0) * self.xf * self.xf;
        let mut a_k = T::one();
        let mut sum = T::zero();
        let mut sign = T::one();
        for k in 0..40usize {
            let kf = T::from_count(k);
            let term = sign * a_k / ((z_rate * t).powi(k as i32) * (kf + T::lit(0.5)));
            sum += term;
            if term.abs() <= T::epsilon() * sum.abs() {
                break;
            }
            let odd = T::from_count(2 * k + 1);
            let next = a_k * (four_nu2 - odd * odd) / (T::from_count(k + 1) * T::lit(8.0));
            if next.abs() / (z_rate * t) > a_k.abs() && k > 0 {
                break; // asymptotic series has started to diverge
            }
            a_k = next;
            sign = -sign;
        }
        self.log_prefactor.exp() * self.xf / (T::lit(2.0) * T::PI() * z_rate).sqrt() * sum / t.sqrt()
    }
}

/// Integrates a nonnegative, eventually decreasing integrand on `[a, end)`
/// over pieces of doubling width, starting at `first_width`. Without an end
/// point, stops once the integrand is decreasing and `tail(hi, f(hi))`
/// bounds the remainder below half the target.
fn integrate_doubling<T, F, B>(f: F, a: T, first_width: T, end: Option<T>, tail: B, spec: &QuadSpec) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> T,
    B: Fn(T, T) -> T,
{
    let mut total = T::zero();
    let mut lo = a;
    let mut width = first_width;
    let mut f_lo = f(a);
    for k in 0..200 {
        let mut hi = lo + width;
        if let Some(e) = end {
            if hi >= e {
                hi = e;
            }
        }
        let piece = QuadSpec {
            abs_tol: spec.abs_tol / 2f64.powi((k + 1).min(60)),
            ..*spec
        };
        total += integrate_finite(&f, lo, hi, &piece)?;
        if end.is_some_and(|e| hi >= e) {
            return Ok(total);
        }
        let f_hi = f(hi);
        if end.is_none() && f_hi <= f_lo && tail(hi, f_hi) < spec.target(total) / T::lit(2.0) {
            return Ok(total);
        }
        lo = hi;
        f_lo = f_hi;
        width = width * T::lit(2.0);
    }
    Err(Error::NoConvergence {
        subdivisions: 200,
        error: f64::NAN,
    })
}

fn passage_tail<T: Scalar>(k: &Kernel<T>, t: T, params: &ModelParams<T>, spec: &QuadSpec) -> Result<T> {
    if t.is_infinite() {
        return Ok(T::zero());
    }
    let first = (T::lit(4.0) * params.side_rate()).recip();
    let density = |u: T| k.density(u);
    if params.is_balanced() {
        let t0 = k.asymptotic_start();
        let head = if t < t0 {
            integrate_doubling(density, t, first, Some(t0), |_, _| T::zero(), spec)?
        } else {
            T::zero()
        };
        return Ok(head + k.balanced_tail(t.max(t0)));
    }
    let gap = k.gap;
    // beyond the mode the density falls at least like u^{-3/2} e^{-gap u}
    let tail = move |hi: T, f_hi: T| f_hi * (T::lit(2.0) * hi).min(gap.recip());
    integrate_doubling(density, t, first, None, tail, spec)
}

/// `psi_x(t) = int_t^inf (x/u) I_x(c u) e^{-(lambda+mu+theta) u} du`.
pub fn psi<T: Scalar>(x: u32, t: T, params: &ModelParams<T>, spec: &QuadSpec) -> Result<T> {
    check_queue_time(x, t)?;
    params.validate()?;
    passage_tail(&Kernel::new(x, params, false), t, params, spec)
}

/// `P[sigma > t | q_0 = x]` for a single queue. When limit orders dominate,
/// the queue escapes to infinity with probability `1 - ((mu+theta)/lambda)^x`
/// and that mass is included.
pub fn queue_survival<T: Scalar>(x: u32, t: T, params: &ModelParams<T>, spec: &QuadSpec) -> Result<T> {
    check_queue_time(x, t)?;
    params.validate()?;
    if t == T::zero() {
        return Ok(T::one());
    }
    let finite_part = passage_tail(&Kernel::new(x, params, true), t, params, spec)?;
    let escape = if params.regime() == crate::model::FlowRegime::LimitDominated {
        T::one() - (params.mu_theta() / params.lambda).powi(x as i32)
    } else {
        T::zero()
    };
    Ok(clamp_probability(finite_part + escape, "queue survival"))
}

/// `P[tau > t | q^b_0 = bid, q^a_0 = ask]`, the product of the two queue
/// survival functions.
pub fn survival_duration<T: Scalar>(bid: u32, ask: u32, t: T, params: &ModelParams<T>, spec: &QuadSpec) -> Result<T> {
    let sb = queue_survival(bid, t, params, spec)?;
    let sa = if ask == bid { sb } else { queue_survival(ask, t, params, spec)? };
    Ok(clamp_probability(sb * sa, "duration survival"))
}

/// Asymptotic power-law tail constants: `t^{-2}` with
/// `ab (lambda+mu+theta)^2 / (4 lambda^2 (mu+theta-lambda)^2)` when removals
/// dominate, `t^{-1}` with `ab / (pi lambda)` when balanced.
pub fn tail_law<T: Scalar>(bid: u32, ask: u32, params: &ModelParams<T>) -> Result<TailLaw<T>> {
    params.validate()?;
    if bid == 0 || ask == 0 {
        return Err(Error::Domain("queue sizes must be >= 1".into()));
    }
    let ab = T::from_u32(bid).unwrap() * T::from_u32(ask).unwrap();
    let lm = params.lambda;
    if params.is_balanced() {
        return Ok(TailLaw {
            exponent: T::one(),
            prefactor: ab / (T::PI() * lm),
        });
    }
    if lm > params.mu_theta() {
        return Err(Error::Domain(format!(
            "tail law needs lambda <= mu + theta, got lambda={lm}, mu+theta={}",
            params.mu_theta()
        )));
    }
    let rate = params.side_rate();
    let gap = params.mu_theta() - lm;
    Ok(TailLaw {
        exponent: T::lit(2.0),
        prefactor: ab * rate * rate / (T::lit(4.0) * lm * lm * gap * gap),
    })
}

fn check_queue_time<T: Scalar>(x: u32, t: T) -> Result<()> {
    if x == 0 {
        return Err(Error::Domain("queue size must be >= 1".into()));
    }
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

fn require_finite_mean<T: Scalar>(params: &ModelParams<T>) -> Result<()> {
    params.validate()?;
    if !params.is_removal_dominated() {
        return Err(Error::Domain(format!(
            "expected duration is finite only for lambda < mu + theta, got lambda={}, mu+theta={}",
            params.lambda,
            params.mu_theta()
        )));
    }
    Ok(())
}

/// Tolerances for the survival factors inside an outer time integral.
fn inner_spec(spec: &QuadSpec) -> QuadSpec {
    QuadSpec {
        abs_tol: spec.abs_tol * 1e-3,
        rel_tol: spec.rel_tol * 1e-2,
        ..*spec
    }
}

fn integrate_product<T, S>(survival: S, params: &ModelParams<T>, spec: &QuadSpec) -> Result<T>
where
    T: Scalar,
    S: Fn(T) -> Result<T>,
{
    let sl = params.lambda.sqrt();
    let sm = params.mu_theta().sqrt();
    let decay = T::lit(2.0) * (sl - sm) * (sl - sm);
    // the outer integrand cannot return Result; the first failure is kept
    let failure = std::cell::RefCell::new(None);
    let f = |t: T| match survival(t) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            T::zero()
        }
    };
    let first = params.side_rate().recip();
    let tail = move |hi: T, f_hi: T| f_hi * (hi / T::lit(2.0)).min(decay.recip());
    let value = integrate_doubling(f, T::zero(), first, None, tail, spec)?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `E[tau | q^b_0 = bid, q^a_0 = ask] = int_0^inf P[tau > t] dt`.
pub fn expected_duration<T: Scalar>(bid: u32, ask: u32, params: &ModelParams<T>, spec: &QuadSpec) -> Result<T> {
    require_finite_mean(params)?;
    let inner = inner_spec(spec);
    integrate_product(|t| survival_duration(bid, ask, t, params, &inner), params, spec)
}

/// `int_0^inf psi_bid(t) psi_ask(t) dt`, the time integral without the
/// `((mu+theta)/lambda)^{(bid+ask)/2}` factor. Exposed for comparison only.
pub fn expected_duration_without_prefactor<T: Scalar>(
    bid: u32,
    ask: u32,
    params: &ModelParams<T>,
    spec: &QuadSpec,
) -> Result<T> {
    require_finite_mean(params)?;
    let inner = inner_spec(spec);
    integrate_product(
        |t| Ok(psi(bid, t, params, &inner)? * psi(ask, t, params, &inner)?),
        params,
        spec,
    )
}

/// Mean duration between price changes, `m(f) = sum f(i,j) E[tau | (i,j)]`.
pub fn expected_duration_f<T: Scalar>(f: &QueueDist<T>, params: &ModelParams<T>, spec: &QuadSpec) -> Result<T> {
    require_finite_mean(params)?;
    let mut m = T::zero();
    for a in f.atoms() {
        m += a.p * expected_duration(a.bid, a.ask, params, spec)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3() -> ModelParams<f64> {
        ModelParams::<f64>::with_removal_rate(12.0, 13.0, 1.0).unwrap()
    }

    // high-precision reference values of the single-queue survival function
    const S4: [(f64, f64); 4] = [
        (0.1, 0.978920832457635),
        (1.0, 0.507712236230785),
        (5.0, 0.174725879628835),
        (10.0, 0.0933706853200521),
    ];
    const S5: [(f64, f64); 4] = [
        (0.1, 0.995132514251126),
        (1.0, 0.616622678864779),
        (5.0, 0.223352197520631),
        (10.0, 0.120291259904981),
    ];

    #[test]
    fn laplace_examples() {
        let p = ModelParams::<f64>::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        assert_eq!(hitting_laplace(0.0, 3, &p).unwrap(), 1.0);
        let p = ModelParams::<f64>::with_removal_rate(2.0, 1.0, 1.0).unwrap();
        assert!((hitting_laplace(0.0, 1, &p).unwrap() - 0.5).abs() < 1e-15);
        let p = ModelParams::<f64>::with_removal_rate(1.0, 1.0, 1.0).unwrap();
        let want = ((3.0 - 5f64.sqrt()) / 2.0).powi(2);
        assert!((hitting_laplace(1.0, 2, &p).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn laplace_power_structure() {
        let p = fig3();
        for s in [0.0, 0.3, 5.0, 100.0] {
            let one = hitting_laplace(s, 1, &p).unwrap();
            for x in 1..8 {
                let v = hitting_laplace(s, x, &p).unwrap();
                assert!((v - one.powi(x as i32)).abs() <= 1e-15 * v.max(1e-300));
            }
        }
    }

    #[test]
    fn single_queue_survival_matches_reference() {
        let p = fig3();
        let spec = QuadSpec::new(1e-13, 1e-11, 1 << 20).unwrap();
        for (x, table) in [(4, S4), (5, S5)] {
            for (t, want) in table {
                let got = queue_survival(x, t, &p, &spec).unwrap();
                assert!((got - want).abs() < 1e-10, "S{x}({t}) = {got}, want {want}");
            }
        }
    }

    #[test]
    fn survival_starts_at_one_and_factorizes() {
        let p = fig3();
        let spec = QuadSpec::default();
        assert!((survival_duration(4, 5, 0.0, &p, &spec).unwrap() - 1.0).abs() < 1e-7);
        let both = survival_duration(4, 5, 1.0, &p, &spec).unwrap();
        assert!((both - S4[1].1 * S5[1].1).abs() < 1e-8);
    }

    #[test]
    fn prefactored_psi_at_zero_is_one() {
        for (lm, mt) in [(1.0, 2.0), (12.0, 13.0), (3.0, 30.0)] {
            let p = ModelParams::<f64>::with_removal_rate(lm, mt, 1.0).unwrap();
            for x in [1, 3, 7] {
                let v = (mt / lm).powf(x as f64 / 2.0) * psi(x, 0.0, &p, &QuadSpec::default()).unwrap();
                assert!((v - 1.0).abs() < 1e-7, "lambda={lm} x={x}: {v}");
            }
        }
    }

    #[test]
    fn balanced_survival_at_zero_and_tail() {
        let p = ModelParams::<f64>::with_removal_rate(5.0, 5.0, 1.0).unwrap();
        let spec = QuadSpec::new(1e-13, 1e-11, 1 << 20).unwrap();
        for x in [1, 2, 6] {
            assert!((queue_survival(x, 0.0, &p, &spec).unwrap() - 1.0).abs() < 1e-9);
        }
        // one queue: P[sigma > t] ~ x / sqrt(pi lambda t)
        let t = 1e6;
        let got = queue_survival(3, t, &p, &spec).unwrap();
        let want = 3.0 / (std::f64::consts::PI * 5.0 * t).sqrt();
        assert!((got / want - 1.0).abs() < 1e-4);
    }

    #[test]
    fn escape_mass_when_limit_orders_dominate() {
        let p = ModelParams::<f64>::with_removal_rate(2.0, 1.0, 1.0).unwrap();
        let v = queue_survival(2, 1e4, &p, &QuadSpec::default()).unwrap();
        assert!((v - 0.75).abs() < 1e-9);
    }

    #[test]
    fn psi_vanishes_at_infinity() {
        let p = fig3();
        assert_eq!(psi(4, f64::INFINITY, &p, &QuadSpec::default()).unwrap(), 0.0);
        assert!(psi(4, 1e4, &p, &QuadSpec::default()).unwrap() < 1e-20);
    }

    #[test]
    fn tail_law_examples() {
        let p = ModelParams::<f64>::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let law = tail_law(1, 1, &p).unwrap();
        assert_eq!(law.exponent, 2.0);
        assert!((law.prefactor - 9.0 / 4.0).abs() < 1e-15);
        let p = ModelParams::<f64>::with_removal_rate(5.0, 5.0, 1.0).unwrap();
        let law = tail_law(2, 3, &p).unwrap();
        assert_eq!(law.exponent, 1.0);
        assert!((law.prefactor - 6.0 / (5.0 * std::f64::consts::PI)).abs() < 1e-15);
        let p = ModelParams::<f64>::with_removal_rate(3.0, 1.0, 1.0).unwrap();
        assert!(tail_law(1, 1, &p).is_err());
    }

    #[test]
    fn expected_duration_bounds_and_weights() {
        let p = ModelParams::<f64>::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let spec = QuadSpec::default();
        for (b, a) in [(1, 1), (2, 3), (4, 5)] {
            let m = expected_duration(b, a, &p, &spec).unwrap();
            assert!(m > 0.0 && m <= b.min(a) as f64 / (2.0 - 1.0) + 1e-9, "{m}");
        }
        let f = QueueDist::uniform(&[(1, 1), (2, 3)]).unwrap();
        let mf = expected_duration_f(&f, &p, &spec).unwrap();
        let mean = 0.5 * (expected_duration(1, 1, &p, &spec).unwrap() + expected_duration(2, 3, &p, &spec).unwrap());
        assert!((mf - mean).abs() < 1e-12);
        let balanced = ModelParams::<f64>::with_removal_rate(1.0, 1.0, 1.0).unwrap();
        assert!(expected_duration(1, 1, &balanced, &spec).is_err());
    }

    #[test]
    fn expected_duration_from_one_one() {
        let p = ModelParams::<f64>::with_removal_rate(1.0, 2.0, 1.0).unwrap();
        let m = expected_duration(1, 1, &p, &QuadSpec::default()).unwrap();
        assert!(m > 1.0 / 6.0, "at least the mean time to the first event");
        let free = expected_duration_without_prefactor(1, 1, &p, &QuadSpec::default()).unwrap();
        assert!((free - m * 0.5).abs() < 1e-8, "prefactor (1/2)^{{1}} scales the product: {free} vs {m}");
    }

    #[test]
    fn works_in_single_precision() {
        let p = ModelParams::<f32>::with_removal_rate(12.0, 13.0, 1.0).unwrap();
        let spec = QuadSpec::new(1e-6, 1e-5, 1 << 16).unwrap();
        let got = queue_survival(4, 1.0f32, &p, &spec).unwrap();
        assert!((got as f64 - S4[1].1).abs() < 1e-4);
    }
}
