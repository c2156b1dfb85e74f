//! Mixture-of-exponentials representation.
//!
//! With `C = sin(βπ)/(βπ)` and `c = cos(βπ)`,
//!
//! ```text
//! E_β(-y)    = C ∫_0^∞ e^{-s^{1/β}} y / (s² + 2syc + y²) ds
//! E_{β,β}(-y) = C ∫_0^∞ s^{1/β} e^{-s^{1/β}} / (s² + 2syc + y²) ds
//! ```
//!
//! Both integrands are positive, so there is no cancellation. The range is
//! cut where `e^{-s^{1/β}}` drops below `e^{-45}`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::numerics::{Quadrature, QuadratureResult};

fn breakpoints(beta: f64, y: f64) -> Vec<f64> {
    let upper = 45f64.powf(beta);
    let c = (PI * beta).cos();
    let w = y * (PI * beta).sin();
    let peak = y * (-c).max(0.0);
    let mut pts = vec![0.0, upper];
    for p in [peak - 4.0 * w, peak - w, peak, peak + w, peak + 4.0 * w, y, 1.0] {
        if p > 0.0 && p < upper {
            pts.push(p);
        }
    }
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    pts
}

fn denominator(beta: f64, s: f64, y: f64) -> f64 {
    let (sin, cos) = (PI * beta).sin_cos();
    let a = s + y * cos;
    let b = y * sin;
    a * a + b * b
}

pub(crate) fn one_param(beta: f64, y: f64, tol: f64) -> Result<QuadratureResult> {
    let scale = (PI * beta).sin() / (PI * beta);
    let rule = Quadrature::new(tol / scale).with_max_subdivisions(600);
    let r = rule.try_integrate_pieces(
        |s| Ok((-s.powf(1.0 / beta)).exp() * y / denominator(beta, s, y)),
        &breakpoints(beta, y),
    )?;
    Ok(QuadratureResult {
        value: scale * r.value,
        est_abs_error: scale * r.est_abs_error,
        evaluations: r.evaluations,
    })
}

pub(crate) fn two_param(beta: f64, y: f64, tol: f64) -> Result<QuadratureResult> {
    let scale = (PI * beta).sin() / (PI * beta);
    let rule = Quadrature::new(tol / scale).with_max_subdivisions(600);
    let r = rule.try_integrate_pieces(
        |s| {
            let p = s.powf(1.0 / beta);
            Ok(p * (-p).exp() / denominator(beta, s, y))
        },
        &breakpoints(beta, y),
    )?;
    Ok(QuadratureResult {
        value: scale * r.value,
        est_abs_error: scale * r.est_abs_error,
        evaluations: r.evaluations,
    })
}
