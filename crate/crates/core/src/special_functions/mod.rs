//! Mittag-Leffler functions on the negative real axis.
//!
//! `E_β(-x)` and `E_{β,β}(-x)` are evaluated by switching between the power
//! series, the large-argument asymptotic expansion and a spectral integral
//! (the Laplace representation of `E_β(-t^β)` as a mixture of exponentials).
//! Derivatives `E_β^{(n)}(-t^β)` are available from the differentiated
//! series and, independently, from an integral against the one-sided stable
//! cdf.

mod asymptotic;
mod series;
mod spectral;

use std::fmt;

use serde::Serialize;

use crate::error::{FppError, Result};
use crate::numerics::{Quadrature, QuadratureResult};
use crate::stable_law;

pub(crate) use series::ln_factorial;
use series::SeriesTables;

const SERIES_LIMIT: f64 = 5.0;
const ASYMPTOTIC_LIMIT: f64 = 15.0;
/// Accuracy every public evaluation is expected to meet.
const TARGET: f64 = 1e-12;

/// The exponent `β ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta <= 1.0 {
            Ok(FractionalOrder(beta))
        } else {
            Err(FppError::Domain(format!(
                "beta must satisfy 0 < beta <= 1, got {beta}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `β = 1`, the Poisson case.
    pub fn is_exponential(self) -> bool {
        self.0 == 1.0
    }
}

impl fmt::Display for FractionalOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = FppError;
    fn try_from(beta: f64) -> Result<Self> {
        FractionalOrder::new(beta)
    }
}

/// Which representation produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MlMethod {
    Series,
    Asymptotic,
    StableIntegral,
    /// Mixture-of-exponentials integral.
    Spectral,
    /// `β = 1`, evaluated as an exponential.
    ClosedForm,
}

impl fmt::Display for MlMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MlMethod::Series => "series",
            MlMethod::Asymptotic => "asymptotic",
            MlMethod::StableIntegral => "stable_integral",
            MlMethod::Spectral => "spectral",
            MlMethod::ClosedForm => "closed_form",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlEvaluation {
    pub value: f64,
    pub method: MlMethod,
    pub est_abs_error: f64,
}

impl MlEvaluation {
    fn new(value: f64, method: MlMethod, est_abs_error: f64) -> Self {
        MlEvaluation {
            value,
            method,
            est_abs_error,
        }
    }
}

/// Evaluator for a fixed order. Holds the series coefficient tables, so
/// reuse one instance when evaluating many points.
#[derive(Debug, Clone)]
pub struct MittagLeffler {
    order: FractionalOrder,
    tables: SeriesTables,
}

fn check_nonpositive(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(FppError::Domain(format!("argument must be finite, got {x}")));
    }
    if x > 0.0 {
        return Err(FppError::Domain(format!(
            "only the negative real axis is supported, got x = {x}"
        )));
    }
    Ok(-x)
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(FppError::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `e^{-u} u^k / k!`, zero for negative `k`.
pub(crate) fn poisson_weight(k: i64, u: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if u == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * u.ln() - u - ln_factorial(k as usize)).exp()
}

impl MittagLeffler {
    pub fn new(order: FractionalOrder) -> Self {
        MittagLeffler {
            order,
            tables: SeriesTables::new(order.value()),
        }
    }

    pub fn order(&self) -> FractionalOrder {
        self.order
    }

    pub fn beta(&self) -> f64 {
        self.order.value()
    }

    /// `E_β(x)` for `x ≤ 0`.
    pub fn one_param(&self, x: f64) -> Result<MlEvaluation> {
        let y = check_nonpositive(x)?;
        let beta = self.beta();
        if self.order.is_exponential() {
            return Ok(MlEvaluation::new((-y).exp(), MlMethod::ClosedForm, 0.0));
        }
        if y == 0.0 {
            return Ok(MlEvaluation::new(1.0, MlMethod::Series, 0.0));
        }
        if y <= SERIES_LIMIT {
            let s = self.tables.one_param(y, 0.01 * TARGET);
            if s.converged && s.est_abs_error <= TARGET {
                return Ok(MlEvaluation::new(s.value, MlMethod::Series, s.est_abs_error));
            }
        }
        if y > ASYMPTOTIC_LIMIT {
            let a = asymptotic::one_param(beta, y);
            if a.est_abs_error <= 0.1 * TARGET {
                return Ok(MlEvaluation::new(a.value, MlMethod::Asymptotic, a.est_abs_error));
            }
        }
        let r = spectral::one_param(beta, y, 0.01 * TARGET)?;
        Ok(MlEvaluation::new(r.value, MlMethod::Spectral, r.est_abs_error))
    }

    /// `E_{β,β}(x)` for `x ≤ 0`.
    pub fn two_param(&self, x: f64) -> Result<MlEvaluation> {
        let y = check_nonpositive(x)?;
        let beta = self.beta();
        if self.order.is_exponential() {
            return Ok(MlEvaluation::new((-y).exp(), MlMethod::ClosedForm, 0.0));
        }
        if y <= SERIES_LIMIT {
            let s = self.tables.two_param(y, 0.01 * TARGET);
            if s.converged && s.est_abs_error <= TARGET {
                return Ok(MlEvaluation::new(s.value, MlMethod::Series, s.est_abs_error));
            }
        }
        if y > ASYMPTOTIC_LIMIT {
            let a = asymptotic::two_param(beta, y);
            if a.est_abs_error <= 0.1 * TARGET {
                return Ok(MlEvaluation::new(a.value, MlMethod::Asymptotic, a.est_abs_error));
            }
        }
        let r = spectral::two_param(beta, y, 0.01 * TARGET)?;
        Ok(MlEvaluation::new(r.value, MlMethod::Spectral, r.est_abs_error))
    }

    /// `E_β^{(n)}(-t^β)` from the termwise differentiated series.
    pub fn derivative_series(&self, n: usize, t: f64) -> Result<MlEvaluation> {
        check_time(t)?;
        if n == 0 {
            return self.one_param(-t.powf(self.beta()));
        }
        if self.order.is_exponential() {
            return Ok(MlEvaluation::new((-t).exp(), MlMethod::ClosedForm, 0.0));
        }
        let x = t.powf(self.beta());
        let s = self.tables.derivative(n, x, 0.01 * TARGET);
        // derivatives grow like n!, so accuracy is judged relative to the value
        if s.est_abs_error <= 1e3 * TARGET * s.value.abs().max(1.0) {
            Ok(MlEvaluation::new(s.value, MlMethod::Series, s.est_abs_error))
        } else {
            Err(FppError::Convergence {
                what: "Mittag-Leffler derivative series",
                value: s.value,
                est_abs_error: s.est_abs_error,
            })
        }
    }

    /// `E_β^{(n)}(-t^β)` through the integral of the one-sided stable cdf
    /// against a difference of Poisson weights.
    pub fn derivative_stable(&self, n: usize, t: f64) -> Result<MlEvaluation> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(FppError::Domain(format!("time must be positive, got {t}")));
        }
        let p = self.poisson_weight_stable(n, t)?;
        let x = t.powf(self.beta());
        let factor = (ln_factorial(n) - n as f64 * x.ln()).exp();
        Ok(MlEvaluation::new(
            p.value * factor,
            MlMethod::StableIntegral,
            p.est_abs_error * factor,
        ))
    }

    /// `x^n/n! · E_β^{(n)}(-x)` at `x = t^β`, which is the probability of
    /// exactly `n` renewals in `[0, t]`.
    pub fn poisson_weight(&self, n: usize, t: f64) -> Result<MlEvaluation> {
        check_time(t)?;
        let beta = self.beta();
        if self.order.is_exponential() {
            return Ok(MlEvaluation::new(poisson_weight(n as i64, t), MlMethod::ClosedForm, 0.0));
        }
        if n == 0 {
            return self.one_param(-t.powf(beta));
        }
        if t == 0.0 {
            return Ok(MlEvaluation::new(0.0, MlMethod::Series, 0.0));
        }
        let x = t.powf(beta);
        let s = self.tables.poisson_weight(n, x, 0.01 * TARGET);
        // the rounding part of the estimate is pessimistic
        if s.converged && s.est_abs_error <= 10.0 * TARGET {
            return Ok(MlEvaluation::new(s.value, MlMethod::Series, s.est_abs_error));
        }
        if x > ASYMPTOTIC_LIMIT {
            let a = asymptotic::poisson_weight(beta, n, x);
            if a.est_abs_error <= TARGET {
                return Ok(MlEvaluation::new(a.value, MlMethod::Asymptotic, a.est_abs_error));
            }
        }
        self.poisson_weight_stable(n, t)
    }

    /// `(∫_0^x E_β(-v^β) dv, ∫_0^x ∫_0^w E_β(-v^β) dv dw)` from the power
    /// series; `None` where the series is too ill-conditioned.
    pub(crate) fn integrated_survival(&self, x: f64) -> Option<(f64, f64)> {
        if self.order.is_exponential() {
            // 1 - e^{-x} and x - 1 + e^{-x}, kept accurate for small x
            let i = -(-x).exp_m1();
            return Some((i, x - i));
        }
        let (i, j) = self.tables.integrated_survival(x, 1e-16);
        let ok = i.converged && i.est_abs_error <= 1e-14 && j.est_abs_error <= 1e-14;
        ok.then_some((i.value, j.value))
    }

    /// Stable-integral route for [`MittagLeffler::poisson_weight`]:
    /// `∫_0^∞ F_S(t; u) [π_{n-1}(u) - π_n(u)] du` with Poisson weights `π_k`.
    pub fn poisson_weight_stable(&self, n: usize, t: f64) -> Result<MlEvaluation> {
        let beta = self.beta();
        if self.order.is_exponential() {
            return Err(FppError::Domain(
                "the stable representation is degenerate at beta = 1".into(),
            ));
        }
        let x = t.powf(beta);
        let nf = n as f64;
        // beyond u_stable the cdf is zero, beyond u_poisson both weights are
        let u_stable = stable_law::zero_weight_threshold(beta, t);
        let u_poisson = nf + 40.0 + 12.0 * nf.sqrt();
        let upper = u_stable.min(u_poisson);
        let mut points = vec![0.0, upper];
        for p in [nf - 1.0, nf, x, 0.5 * x, 2.0 * x] {
            if p > 0.0 && p < upper {
                points.push(p);
            }
        }
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
        let rule = Quadrature::new(1e-12).with_max_subdivisions(200);
        let r: QuadratureResult = rule.try_integrate_pieces(
            |u| {
                if u == 0.0 {
                    return Ok(match n {
                        0 => -1.0,
                        1 => 1.0,
                        _ => 0.0,
                    });
                }
                let g = stable_law::unit_cdf(beta, t * u.powf(-1.0 / beta))?;
                Ok(g * (poisson_weight(n as i64 - 1, u) - poisson_weight(n as i64, u)))
            },
            &points,
        )?;
        // the weights integrate to zero except for n = 0, where they give -1
        let value = if n == 0 { 1.0 + r.value } else { r.value };
        Ok(MlEvaluation::new(value, MlMethod::StableIntegral, r.est_abs_error))
    }
}

/// `E_β(x)` for `x ≤ 0`.
pub fn ml_one_param(beta: FractionalOrder, x: f64) -> Result<MlEvaluation> {
    MittagLeffler::new(beta).one_param(x)
}

/// `E_{β,β}(x)` for `x ≤ 0`.
pub fn ml_two_param(beta: FractionalOrder, x: f64) -> Result<MlEvaluation> {
    MittagLeffler::new(beta).two_param(x)
}

/// `E_β^{(n)}(-t^β)` by the differentiated power series.
pub fn ml_derivative_series(n: usize, beta: FractionalOrder, t: f64) -> Result<MlEvaluation> {
    MittagLeffler::new(beta).derivative_series(n, t)
}

/// `E_β^{(n)}(-t^β)` by integration against the one-sided stable cdf.
/// Requires `n ≥ 1` and `β < 1`.
pub fn ml_derivative_stable(n: usize, beta: FractionalOrder, t: f64) -> Result<MlEvaluation> {
    if beta.is_exponential() {
        return Err(FppError::Domain(
            "the stable representation is degenerate at beta = 1; use the series".into(),
        ));
    }
    MittagLeffler::new(beta).derivative_stable(n, t)
}

#[cfg(test)]
mod tests;
