//! Power-series evaluation of Mittag-Leffler type sums on the negative axis.
//!
//! All sums share the coefficient ratios `Γ((k-1)β+1) / Γ(kβ+1)`, tabulated
//! once per order so that successive terms are built by multiplication.

use statrs::function::gamma::ln_gamma;

/// Maximum number of terms any series is allowed to use.
pub(crate) const TERM_BUDGET: usize = 500;

// Coefficients are tabulated past the budget so derivative sums of order up
// to this many can still use TERM_BUDGET terms.
const MAX_DERIVATIVE: usize = 200;

/// Result of a truncated series.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SeriesSum {
    pub value: f64,
    pub est_abs_error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct SeriesTables {
    beta: f64,
    /// `ln Γ(kβ + 1)` for `k = 0..len`.
    ln_gamma: Vec<f64>,
    /// `Γ((k-1)β + 1) / Γ(kβ + 1)`, index 0 unused.
    ratio: Vec<f64>,
}

impl SeriesTables {
    pub fn new(beta: f64) -> Self {
        let len = TERM_BUDGET + MAX_DERIVATIVE + 2;
        let ln_gamma: Vec<f64> = (0..len).map(|k| ln_gamma(k as f64 * beta + 1.0)).collect();
        let mut ratio = vec![0.0; len];
        for k in 1..len {
            ratio[k] = (ln_gamma[k - 1] - ln_gamma[k]).exp();
        }
        SeriesTables {
            beta,
            ln_gamma,
            ratio,
        }
    }

    /// Sum `Σ_{j≥0} t_j` with `t_0 = first` and
    /// `t_j = t_{j-1} · (-x) · w(j) · ratio[offset + j]`.
    ///
    /// Stops once a term falls below `tol / 10` while terms are shrinking;
    /// `converged` records that this happened; rounding may still leave the
    /// error estimate above `tol`.
    fn alternating_sum<W: Fn(usize) -> f64>(
        &self,
        first: f64,
        x: f64,
        offset: usize,
        weight: W,
        tol: f64,
    ) -> SeriesSum {
        let mut term = first;
        let mut sum = first;
        let mut abs_sum = first.abs();
        let limit = TERM_BUDGET.min(self.ratio.len() - 1 - offset);
        for j in 1..=limit {
            let factor = -x * weight(j) * self.ratio[offset + j];
            term *= factor;
            sum += term;
            abs_sum += term.abs();
            if !abs_sum.is_finite() {
                break;
            }
            let shrinking = factor.abs() < 0.5;
            if shrinking && term.abs() < 0.1 * tol {
                // remaining tail is dominated by a geometric series
                let f = factor.abs();
                let tail = term.abs() * f / (1.0 - f);
                let rounding = 4.0 * f64::EPSILON * abs_sum;
                return SeriesSum {
                    value: sum,
                    est_abs_error: tail + rounding,
                    converged: true,
                };
            }
        }
        SeriesSum {
            value: sum,
            est_abs_error: if abs_sum.is_finite() { term.abs().max(4.0 * f64::EPSILON * abs_sum) } else { f64::INFINITY },
            converged: false,
        }
    }

    /// `E_β(-x) = Σ (-x)^k / Γ(kβ+1)`.
    pub fn one_param(&self, x: f64, tol: f64) -> SeriesSum {
        self.alternating_sum(1.0, x, 0, |_| 1.0, tol)
    }

    /// `E_{β,β}(-x) = Σ (-x)^k / Γ((k+1)β)`, written as
    /// `Σ (-x)^k (k+1)β / Γ((k+1)β + 1)`.
    pub fn two_param(&self, x: f64, tol: f64) -> SeriesSum {
        let first = (-self.ln_gamma[1]).exp() * self.beta;
        self.alternating_sum(first, x, 1, |j| (j as f64 + 1.0) / j as f64, tol)
    }

    /// `n`-th derivative `E_β^{(n)}(-x) = Σ_j (n+j)!/j! (-x)^j / Γ((n+j)β+1)`.
    pub fn derivative(&self, n: usize, x: f64, tol: f64) -> SeriesSum {
        let n = n.min(MAX_DERIVATIVE);
        let first = (ln_factorial(n) - self.ln_gamma[n]).exp();
        self.alternating_sum(first, x, n, |j| (n + j) as f64 / j as f64, tol)
    }

    /// `x^n / n! · E_β^{(n)}(-x)`, the fractional Poisson probability of `n`
    /// events at `x = t^β`.
    pub fn poisson_weight(&self, n: usize, x: f64, tol: f64) -> SeriesSum {
        let n = n.min(MAX_DERIVATIVE);
        if x == 0.0 {
            let v = if n == 0 { 1.0 } else { 0.0 };
            return SeriesSum {
                value: v,
                est_abs_error: 0.0,
                converged: true,
            };
        }
        let first = (n as f64 * x.ln() - self.ln_gamma[n]).exp();
        self.alternating_sum(first, x, n, |j| (n + j) as f64 / j as f64, tol)
    }

    /// First and second antiderivatives of `E_β(-x^β)` in `x`:
    /// `I(x) = Σ (-1)^k x^{kβ+1} / Γ(kβ+2)` and
    /// `J(x) = Σ (-1)^k x^{kβ+2} / Γ(kβ+3)`.
    pub fn integrated_survival(&self, x: f64, tol: f64) -> (SeriesSum, SeriesSum) {
        let zero = SeriesSum {
            value: 0.0,
            est_abs_error: 0.0,
            converged: true,
        };
        if x == 0.0 {
            return (zero, zero);
        }
        let b = self.beta;
        let xb = x.powf(b);
        let mut c = 1.0;
        let (mut i_sum, mut j_sum) = (1.0, 0.5);
        let (mut i_abs, mut j_abs) = (1.0, 0.5);
        let mut converged = false;
        let mut last = 1.0;
        for k in 1..TERM_BUDGET {
            let factor = -xb * self.ratio[k];
            c *= factor;
            let kb = k as f64 * b;
            let ti = c / (kb + 1.0);
            let tj = ti / (kb + 2.0);
            i_sum += ti;
            j_sum += tj;
            i_abs += ti.abs();
            j_abs += tj.abs();
            last = ti.abs();
            if factor.abs() < 0.5 && last < 0.1 * tol {
                converged = true;
                break;
            }
        }
        let make = |sum: f64, abs: f64, scale: f64| SeriesSum {
            value: scale * sum,
            est_abs_error: scale * (last + 4.0 * f64::EPSILON * abs),
            converged,
        };
        (make(i_sum, i_abs, x), make(j_sum, j_abs, x * x))
    }
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_case() {
        let t = SeriesTables::new(1.0);
        let s = t.one_param(2.0, 1e-14);
        assert!(s.converged);
        assert!((s.value - (-2.0f64).exp()).abs() < 1e-13);
        let d = t.derivative(3, 2.0, 1e-14);
        assert!((d.value - (-2.0f64).exp()).abs() < 1e-13);
        let p = t.poisson_weight(2, 1.0, 1e-14);
        assert!((p.value - 0.5 * (-1.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn two_param_at_zero() {
        let t = SeriesTables::new(0.5);
        let s = t.two_param(0.0, 1e-14);
        assert!((s.value - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn integrated_survival_matches_exponential() {
        let t = SeriesTables::new(1.0);
        let (i1, i2) = t.integrated_survival(0.3, 1e-16);
        assert!((i1.value - (1.0 - (-0.3f64).exp())).abs() < 1e-15);
        assert!((i2.value - (0.3 - 1.0 + (-0.3f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn catastrophic_cancellation_is_flagged() {
        let t = SeriesTables::new(0.25);
        let s = t.one_param(10.0, 1e-12);
        assert!(!s.converged);
    }
}
