//! Globally adaptive Simpson quadrature.
//!
//! Each panel carries a three-point Simpson estimate and its two-panel
//! refinement; the panel with the largest error estimate is bisected until
//! the summed estimate meets `max(abs_tol, rel_tol * |I|)`. Ties in the error
//! ordering are broken by creation order so the subdivision sequence, and
//! hence the result, is identical from run to run.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const INITIAL_PANELS: usize = 8;
const MAX_TAIL_PANELS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 1 << 20,
        }
    }
}

impl QuadSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Tolerances driven by relative error alone, for integrals whose value
    /// may be far below any fixed absolute tolerance.
    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: f64::MIN_POSITIVE,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions == 0 {
            return Err(Error::Domain(format!(
                "quadrature spec requires abs_tol > 0, rel_tol > 0, max_subdivisions >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }

    /// Error budget `max(abs_tol, rel_tol * |value|)`.
    pub fn target<T: Scalar>(&self, value: T) -> T {
        T::lit(self.abs_tol).max(T::lit(self.rel_tol) * value.abs())
    }
}

struct Panel<T> {
    a: T,
    b: T,
    fa: T,
    fl: T,
    fm: T,
    fr: T,
    fb: T,
    value: T,
    error: T,
    seq: usize,
}

impl<T: Scalar> Panel<T> {
    fn new(a: T, b: T, fa: T, fl: T, fm: T, fr: T, fb: T, seq: usize) -> Self {
        let h = b - a;
        let six = T::lit(6.0);
        let twelve = T::lit(12.0);
        let four = T::lit(4.0);
        let coarse = h / six * (fa + four * fm + fb);
        let fine = h / twelve * (fa + four * fl + T::lit(2.0) * fm + four * fr + fb);
        let diff = fine - coarse;
        let fifteen = T::lit(15.0);
        Self {
            a,
            b,
            fa,
            fl,
            fm,
            fr,
            fb,
            value: fine + diff / fifteen,
            error: diff.abs() / fifteen,
            seq,
        }
    }

    fn splittable(&self) -> bool {
        let m = (self.a + self.b) / T::lit(2.0);
        let q = (self.a + m) / T::lit(2.0);
        m > self.a && m < self.b && q > self.a && q < m
    }
}

impl<T: Scalar> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Panel<T> {}
impl<T: Scalar> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

fn checked<T: Scalar>(v: T, x: T) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("integrand is not finite at {x}")))
    }
}

/// Integrates `f` over `[a, b]` to within `max(abs_tol, rel_tol * |I|)`.
pub fn integrate_finite<T, F>(f: F, a: T, b: T, spec: &QuadSpec) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    spec.validate()?;
    if !(a <= b) {
        return Err(Error::Domain(format!("integration bounds out of order: [{a}, {b}]")));
    }
    if a == b {
        return Ok(T::zero());
    }
    let eval = |x: T| checked(f(x), x);
    let two = T::lit(2.0);

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let width = (b - a) / T::from_count(INITIAL_PANELS);
    let mut left = a;
    let mut f_left = eval(a)?;
    for i in 0..INITIAL_PANELS {
        let right = if i + 1 == INITIAL_PANELS { b } else { a + width * T::from_count(i + 1) };
        let m = (left + right) / two;
        let l = (left + m) / two;
        let r = (m + right) / two;
        let f_right = eval(right)?;
        heap.push(Panel::new(left, right, f_left, eval(l)?, eval(m)?, eval(r)?, f_right, seq));
        seq += 1;
        left = right;
        f_left = f_right;
    }

    let mut frozen_value = T::zero();
    let mut frozen_error = T::zero();
    let mut splits = 0usize;
    loop {
        let (value, error) = heap
            .iter()
            .fold((frozen_value, frozen_error), |(v, e), p| (v + p.value, e + p.error));
        if error <= spec.target(value) || heap.is_empty() {
            return Ok(value);
        }
        if splits >= spec.max_subdivisions {
            return Err(Error::NoConvergence {
                subdivisions: splits,
                error: error.as_f64(),
            });
        }
        // bisect the worst panels in a batch before re-summing
        let batch = (heap.len() / 4).max(1);
        for _ in 0..batch {
            let Some(p) = heap.pop() else { break };
            if !p.splittable() {
                frozen_value += p.value;
                frozen_error += p.error;
                continue;
            }
            let m = (p.a + p.b) / two;
            let lm = (p.a + m) / two;
            let rm = (m + p.b) / two;
            let q1 = (p.a + lm) / two;
            let q3 = (lm + m) / two;
            let q5 = (m + rm) / two;
            let q7 = (rm + p.b) / two;
            let left = Panel::new(p.a, m, p.fa, eval(q1)?, p.fl, eval(q3)?, p.fm, seq);
            let right = Panel::new(m, p.b, p.fm, eval(q5)?, p.fr, eval(q7)?, p.fb, seq + 1);
            seq += 2;
            heap.push(left);
            heap.push(right);
            splits += 1;
            if splits >= spec.max_subdivisions {
                break;
            }
        }
    }
}

/// Integrates `f` over `[a, ∞)` for integrands bounded eventually by
/// `C e^{-decay_rate u}`.
///
/// Consecutive panels of width `1 / decay_rate` are integrated until
/// `|f(T)| / decay_rate` falls below half the target tolerance.
pub fn integrate_semi_infinite<T, F>(f: F, a: T, decay_rate: T, spec: &QuadSpec) -> Result<T>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    spec.validate()?;
    if !(decay_rate > T::zero()) || !decay_rate.is_finite() {
        return Err(Error::Domain(format!("decay rate must be positive and finite, got {decay_rate}")));
    }
    if !a.is_finite() {
        return Err(Error::Domain(format!("lower bound must be finite, got {a}")));
    }
    let width = decay_rate.recip();
    let mut total = T::zero();
    let mut lo = a;
    for k in 0..MAX_TAIL_PANELS {
        let hi = a + width * T::from_count(k + 1);
        // later panels only need to be accurate relative to the running total
        let panel_spec = QuadSpec {
            abs_tol: spec.abs_tol / 2f64.powi((k as i32 + 1).min(60)),
            ..*spec
        };
        total += integrate_finite(&f, lo, hi, &panel_spec)?;
        let bound = checked(f(hi), hi)?.abs() / decay_rate;
        if bound < spec.target(total) / T::lit(2.0) {
            return Ok(total);
        }
        lo = hi;
    }
    Err(Error::NoConvergence {
        subdivisions: MAX_TAIL_PANELS,
        error: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn declared(spec: &QuadSpec, v: f64) -> f64 {
        spec.abs_tol.max(spec.rel_tol * v.abs())
    }

    #[test]
    fn finite_closed_forms() {
        let tight = QuadSpec::new(1e-13, 1e-12, 1 << 20).unwrap();
        for spec in [QuadSpec::default(), tight] {
            let cases: [(&dyn Fn(f64) -> f64, f64, f64, f64); 4] = [
                (&|_| 1.0, 0.0, PI, PI),
                (&f64::sin, 0.0, PI, 2.0),
                (&|t| t * t, 0.0, 1.0, 1.0 / 3.0),
                (&|t: f64| (-t * t).exp(), -6.0, 6.0, PI.sqrt()),
            ];
            for (f, a, b, want) in cases {
                let got = integrate_finite(f, a, b, &spec).unwrap();
                assert_abs_diff_eq!(got, want, epsilon = declared(&spec, want));
            }
        }
    }

    #[test]
    fn empty_and_reversed_intervals() {
        let spec = QuadSpec::default();
        assert_eq!(integrate_finite(|t| t, 2.0, 2.0, &spec).unwrap(), 0.0);
        assert!(integrate_finite(|t| t, 2.0, 1.0, &spec).is_err());
    }

    #[test]
    fn reports_nonconvergence() {
        let spec = QuadSpec {
            max_subdivisions: 4,
            ..QuadSpec::default()
        };
        let err = integrate_finite(|t: f64| (50.0 * t).sin() * t.sqrt(), 0.0, 10.0, &spec).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { .. }));
    }

    #[test]
    fn rejects_bad_spec() {
        assert!(QuadSpec::new(0.0, 1e-8, 10).is_err());
        assert!(QuadSpec::new(1e-10, -1.0, 10).is_err());
        assert!(QuadSpec::new(1e-10, 1e-8, 0).is_err());
    }

    #[test]
    fn semi_infinite_closed_forms() {
        let tight = QuadSpec::new(1e-13, 1e-12, 1 << 20).unwrap();
        for spec in [QuadSpec::default(), tight] {
            let cases: [(&dyn Fn(f64) -> f64, f64, f64, f64); 3] = [
                (&|u: f64| (-u).exp(), 0.0, 1.0, 1.0),
                (&|u: f64| (-2.0 * u).exp(), 1.0, 2.0, (-2.0f64).exp() / 2.0),
                (&|u: f64| u * (-u).exp(), 0.0, 0.99, 1.0),
            ];
            for (f, a, rate, want) in cases {
                let got = integrate_semi_infinite(f, a, rate, &spec).unwrap();
                assert_abs_diff_eq!(got, want, epsilon = declared(&spec, want));
            }
        }
    }

    #[test]
    fn semi_infinite_rejects_bad_decay() {
        let spec = QuadSpec::default();
        assert!(integrate_semi_infinite(|u: f64| (-u).exp(), 0.0, 0.0, &spec).is_err());
        assert!(integrate_semi_infinite(|u: f64| (-u).exp(), 0.0, -1.0, &spec).is_err());
    }

    #[test]
    fn relative_spec_resolves_tiny_integrals() {
        let spec = QuadSpec::relative(1e-10);
        let got = integrate_semi_infinite(|u: f64| (-u).exp(), 60.0, 1.0, &spec).unwrap();
        let want = (-60.0f64).exp();
        assert!(((got - want) / want).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let spec = QuadSpec::default();
        let f = |t: f64| (t * 7.0).cos() / (1.0 + t * t);
        let a = integrate_finite(f, 0.0, 20.0, &spec).unwrap();
        let b = integrate_finite(f, 0.0, 20.0, &spec).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
