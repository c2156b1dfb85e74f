//! Joint counting probabilities by direct nested quadrature, for `k ≤ 3`.
//!
//! With `f^{*n}` the epoch densities and `S` the inter-arrival survival,
//! the integration variables are the last epoch before `t_1` (`u`), the
//! first and last epochs inside `(t_1, t_2]` (`a`, `b`) and the first epoch
//! after `t_2` (`v`).

use crate::error::{FppError, Result};
use crate::numerics::{Quadrature, QuadratureResult};
use crate::renewal::{counting_pmf_renewal, grading_power, InterArrivalLaw};

use super::ObservationSchedule;

const OUTER_TOL: f64 = 1e-10;
const INNER_TOL: f64 = 1e-11;
const SUBDIVISIONS: usize = 100;

struct Oracle<'a> {
    law: &'a InterArrivalLaw,
    beta: f64,
}

impl Oracle<'_> {
    fn rule(tol: f64) -> Quadrature {
        Quadrature::new(tol).with_max_subdivisions(SUBDIVISIONS)
    }

    // f^{*n}(x), zero at the origin when that is its limit
    fn epoch(&self, n: usize, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        self.law.epoch_pdf(n, x)
    }

    /// With a renewal at `b ≤ from`, no epoch in `(b, from]`: probability of
    /// exactly `m` epochs in `(from, to]`.
    fn gap(&self, b: f64, from: f64, to: f64, m: usize, tol: f64) -> Result<f64> {
        if m == 0 {
            return self.law.survival(to - b);
        }
        let lag = from - b;
        let cusp = if m == 1 { self.beta } else { (m - 1) as f64 * self.beta };
        let r = Self::rule(tol).try_integrate_graded(
            |_, d, rest| {
                let w = lag + d;
                if w == 0.0 {
                    return Ok(0.0);
                }
                Ok(self.law.pdf(w)? * self.law.pmf(m - 1, rest)?)
            },
            from,
            to,
            if lag == 0.0 { grading_power(self.beta) } else { 1 },
            grading_power(cusp + 1.0),
        )?;
        Ok(r.value)
    }

    /// `∫_0^{t1} f^{*n1}(u) φ(u) du`, or `φ(0)` for `n1 = 0`.
    fn head<F>(&self, t1: f64, n1: usize, tol: f64, mut phi: F) -> Result<f64>
    where
        F: FnMut(f64, f64) -> Result<f64>,
    {
        if n1 == 0 {
            return phi(0.0, t1);
        }
        let r = Self::rule(tol).try_integrate_graded(
            |u, du, rest| {
                let e = self.epoch(n1, du)?;
                if e == 0.0 {
                    return Ok(0.0);
                }
                Ok(e * phi(u, rest)?)
            },
            0.0,
            t1,
            grading_power(n1 as f64 * self.beta),
            grading_power(self.beta),
        )?;
        Ok(r.value)
    }

    fn two_point(&self, t: &[f64], n: &[usize]) -> Result<f64> {
        let m2 = n[1] - n[0];
        self.head(t[0], n[0], OUTER_TOL, |u, _| self.gap(u, t[0], t[1], m2, INNER_TOL))
    }

    fn three_point(&self, t: &[f64], n: &[usize]) -> Result<f64> {
        let (m2, m3) = (n[1] - n[0], n[2] - n[1]);
        if m2 == 0 {
            return self.head(t[0], n[0], OUTER_TOL, |u, _| self.gap(u, t[1], t[2], m3, INNER_TOL));
        }
        // g(a): density of the first epoch after t1 at a
        let g = |a: f64| -> Result<f64> {
            self.head(t[0], n[0], INNER_TOL, |_, rest| {
                let w = a - t[0] + rest;
                self.law.pdf(w)
            })
        };
        let h = |b: f64| self.gap(b, t[1], t[2], m3, INNER_TOL);
        let rule = Self::rule(OUTER_TOL);
        let p_left = grading_power(self.beta);
        let r: QuadratureResult = if m2 == 1 {
            rule.try_integrate_graded(|a, _, _| Ok(g(a)? * h(a)?), t[0], t[1], p_left, 2)?
        } else {
            let k = m2 - 1;
            let p_conv = grading_power(k as f64 * self.beta);
            rule.try_integrate_graded(
                |b, _, _| {
                    let inner = Self::rule(INNER_TOL).try_integrate_graded(
                        |a, _, lag| Ok(self.epoch(k, lag)? * g(a)?),
                        t[0],
                        b,
                        p_left,
                        p_conv,
                    )?;
                    Ok(inner.value * h(b)?)
                },
                t[0],
                t[1],
                2,
                2,
            )?
        };
        Ok(r.value)
    }
}

/// `P(N(t_1) = n_1, …, N(t_k) = n_k)` by nested adaptive quadrature.
pub fn joint_pmf_oracle(schedule: &ObservationSchedule, law: &InterArrivalLaw) -> Result<f64> {
    let t = schedule.times();
    let n = schedule.counts();
    let oracle = Oracle {
        law,
        beta: law.beta().value(),
    };
    let p = match schedule.len() {
        1 => counting_pmf_renewal(law, t[0], n[0])?,
        2 => oracle.two_point(t, n)?,
        3 => oracle.three_point(t, n)?,
        k => {
            return Err(FppError::InvalidSchedule(format!(
                "the quadrature oracle handles at most 3 observations, got {k}"
            )))
        }
    };
    Ok(p.clamp(0.0, 1.0))
}
