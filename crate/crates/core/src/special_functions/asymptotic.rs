//! Large-argument expansions on the negative axis.
//!
//! Each sum is truncated before its smallest term, whose magnitude is
//! reported as the error estimate.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use super::series::ln_factorial;

const MAX_TERMS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Expansion {
    pub value: f64,
    pub est_abs_error: f64,
}

/// Sum `Σ_{k≥first} sign(k) exp(ln_mag(k)) sin(π β s(k))` where the caller
/// folds everything except the sine into `ln_mag`.
fn optimal_truncation<M, S>(first: usize, ln_mag: M, phase: S) -> Expansion
where
    M: Fn(usize) -> f64,
    S: Fn(usize) -> f64,
{
    let mut value = 0.0;
    let mut prev = f64::INFINITY;
    for k in first..first + MAX_TERMS {
        let mag = ln_mag(k).exp();
        if mag >= prev {
            return Expansion {
                value,
                est_abs_error: prev,
            };
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        value += sign * mag * phase(k);
        prev = mag;
    }
    Expansion {
        value,
        est_abs_error: prev,
    }
}

/// `E_β(-y) ~ Σ_{k≥1} (-1)^{k+1} y^{-k} Γ(kβ) sin(πkβ) / π`.
pub(crate) fn one_param(beta: f64, y: f64) -> Expansion {
    let ly = y.ln();
    optimal_truncation(
        1,
        |k| ln_gamma(k as f64 * beta) - k as f64 * ly - PI.ln(),
        |k| (PI * beta * k as f64).sin(),
    )
}

/// `E_{β,β}(-y) ~ Σ_{k≥2} (-1)^k y^{-k} Γ(1+(k-1)β) sin(π(k-1)β) / π`.
pub(crate) fn two_param(beta: f64, y: f64) -> Expansion {
    let ly = y.ln();
    let e = optimal_truncation(
        2,
        |k| ln_gamma(1.0 + (k - 1) as f64 * beta) - k as f64 * ly - PI.ln(),
        |k| (PI * beta * (k - 1) as f64).sin(),
    );
    // optimal_truncation uses the sign (-1)^{k+1}
    Expansion {
        value: -e.value,
        est_abs_error: e.est_abs_error,
    }
}

/// `x^n/n! E_β^{(n)}(-x) ~ Σ_{k≥1} (-1)^{k+1} C(k+n-1, n) x^{-k} Γ(kβ) sin(πkβ) / π`.
pub(crate) fn poisson_weight(beta: f64, n: usize, x: f64) -> Expansion {
    let lx = x.ln();
    let ln_n = ln_factorial(n);
    optimal_truncation(
        1,
        |k| {
            let ln_binom = ln_factorial(k + n - 1) - ln_n - ln_factorial(k - 1);
            ln_binom + ln_gamma(k as f64 * beta) - k as f64 * lx - PI.ln()
        },
        |k| (PI * beta * k as f64).sin(),
    )
}
