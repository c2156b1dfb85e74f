//! Finite-dimensional distributions `P(N(t_1) = n_1, …, N(t_k) = n_k)`.
//!
//! The process is not Markov, so the joint law is assembled as the one-point
//! pmf times a chain of conditional increment probabilities. The memory of
//! past observations is carried by the residual-lifetime density of a
//! [`MemoryKernel`], updated at each observation instant.

mod kernel;
mod oracle;
mod schedule;


use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FppError, Result};
use crate::numerics::{gauss_legendre_5, GridFunction, Quadrature};
use crate::renewal::{grading_power, InterArrivalLaw};

pub use kernel::{FidiOptions, KernelSummary, MemoryKernel};
pub use oracle::joint_pmf_oracle;
pub use schedule::ObservationSchedule;

/// Result of [`joint_pmf`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointPmf {
    pub value: f64,
    /// Accumulated bound from the one-point evaluation, kernel
    /// normalization defects and the disagreement between the two ways each
    /// increment probability is obtained.
    pub error_bound: f64,
    /// `P(N(t_1) = n_1)` followed by the conditional increment probabilities.
    pub factors: Vec<f64>,
}

fn check_t1(t1: f64) -> Result<()> {
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(FppError::Domain(format!("t1 must be positive, got {t1}")));
    }
    Ok(())
}

// Unnormalized f^{*n1}(u) S(t1 - u) on a cell, graded at the ends where
// either factor is singular or has a cusp.
fn last_epoch_mass(law: &InterArrivalLaw, t1: f64, n1: usize, a: f64, b: f64) -> Result<f64> {
    let beta = law.beta().value();
    let rule = Quadrature::new(1e-14).with_max_subdivisions(200);
    let p_left = if a == 0.0 { grading_power(n1 as f64 * beta) } else { 1 };
    let p_right = if b == t1 { grading_power(beta + 1.0) } else { 1 };
    let r = rule.try_integrate_graded(
        |u, du, rest| {
            let x = if a == 0.0 { du } else { u };
            if x == 0.0 {
                return Ok(0.0);
            }
            let lag = if b == t1 { rest } else { t1 - u };
            Ok(law.epoch_pdf(n1, x)? * law.survival(lag)?)
        },
        a,
        b,
        p_left,
        p_right,
    )?;
    Ok(r.value)
}

/// Density of the last epoch `U = T_{n1}` before `t1` given `N(t1) = n1`,
/// `f^{*n1}(u) S(t1 - u) / P(N(t1) = n1)`, on nodes spanning `[0, t1]`.
///
/// Cell masses are exact. Where the density diverges at the origin the
/// node value is the first cell's average.
pub fn last_epoch_pdf(law: &InterArrivalLaw, t1: f64, n1: usize) -> Result<GridFunction> {
    last_epoch_pdf_with(law, t1, n1, &FidiOptions::default())
}

pub fn last_epoch_pdf_with(
    law: &InterArrivalLaw,
    t1: f64,
    n1: usize,
    opts: &FidiOptions,
) -> Result<GridFunction> {
    check_t1(t1)?;
    opts.validate()?;
    if n1 == 0 {
        return Err(FppError::Degenerate(
            "with no epoch before t1 the last renewal is the origin".into(),
        ));
    }
    let z = law.pmf(n1, t1)?;
    if !(z > 0.0) {
        return Err(FppError::Degenerate(format!("P(N({t1}) = {n1}) = {z:e}")));
    }
    let cells = ((t1 / opts.step - 1e-9).ceil() as usize).max(4);
    let h = t1 / cells as f64;
    let masses: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 * h;
            let b = if i + 1 == cells { t1 } else { a + h };
            if i == 0 || i + 1 == cells {
                Ok(last_epoch_mass(law, t1, n1, a, b)? / z)
            } else {
                let m = gauss_legendre_5(|u| Ok::<_, FppError>(law.epoch_pdf(n1, u)? * law.survival(t1 - u)?), a, b)?;
                Ok(m / z)
            }
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = (0..=cells)
        .into_par_iter()
        .map(|i| {
            let u = if i == cells { t1 } else { i as f64 * h };
            let v = if u == 0.0 {
                law.epoch_pdf(n1, 0.0).unwrap_or(f64::INFINITY)
            } else {
                law.epoch_pdf(n1, u)?
            };
            Ok(v * law.survival(t1 - u)? / z)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .enumerate()
        .map(|(i, v)| if v.is_finite() { v } else { masses[i] / h })
        .collect();
    GridFunction::new(0.0, h, values)?.with_cell_masses(masses)
}

/// `P(U ≤ x)` for the last epoch before `t1` given `N(t1) = n1`.
pub fn last_epoch_cdf(law: &InterArrivalLaw, t1: f64, n1: usize, x: f64) -> Result<f64> {
    check_t1(t1)?;
    if n1 == 0 {
        return Ok(if x >= 0.0 { 1.0 } else { 0.0 });
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= t1 {
        return Ok(1.0);
    }
    let z = law.pmf(n1, t1)?;
    let below = last_epoch_mass(law, t1, n1, 0.0, x)?;
    Ok((below / z).clamp(0.0, 1.0))
}

/// Residual lifetime `Y = T_{n1+1} - t1` given `N(t1) = n1`.
///
/// The grid extends until `P(Y > extent)` drops below the configured tail
/// mass or reaches the extent cap; the tail probability beyond the grid is
/// kept exactly.
pub fn residual_lifetime_pdf(law: &InterArrivalLaw, t1: f64, n1: usize) -> Result<MemoryKernel> {
    residual_lifetime_pdf_with(law, t1, n1, &FidiOptions::default())
}

pub fn residual_lifetime_pdf_with(
    law: &InterArrivalLaw,
    t1: f64,
    n1: usize,
    opts: &FidiOptions,
) -> Result<MemoryKernel> {
    let probe = kernel::initial_kernel(law, t1, n1, opts.step, opts)?;
    let extent = kernel::tail_extent(&probe, law, opts)?;
    kernel::initial_kernel(law, t1, n1, extent, opts)
}

/// `P(N(t + dt) - N(t) = m | kernel)`, with `t` the kernel's instant.
pub fn conditional_increment_pmf(
    kernel: &MemoryKernel,
    law: &InterArrivalLaw,
    dt: f64,
    m: usize,
) -> Result<f64> {
    kernel::increment_pmf(kernel, law, dt, m)
}

/// Condition the kernel at `t_prev` on `dn` epochs in `(t_prev, t_next]`.
pub fn memory_kernel_update(
    prev: &MemoryKernel,
    law: &InterArrivalLaw,
    t_prev: f64,
    t_next: f64,
    dn: usize,
) -> Result<MemoryKernel> {
    memory_kernel_update_with(prev, law, t_prev, t_next, dn, &FidiOptions::default())
}

pub fn memory_kernel_update_with(
    prev: &MemoryKernel,
    law: &InterArrivalLaw,
    t_prev: f64,
    t_next: f64,
    dn: usize,
    opts: &FidiOptions,
) -> Result<MemoryKernel> {
    if (t_prev - prev.observation_time()).abs() > 1e-12 * t_prev.abs().max(1.0) {
        return Err(FppError::InvalidSchedule(format!(
            "kernel is at t = {}, update starts from {t_prev}",
            prev.observation_time()
        )));
    }
    let probe = kernel::update(prev, law, t_next, dn, opts.step, opts)?;
    let extent = kernel::tail_extent(&probe, law, opts)?;
    kernel::update(prev, law, t_next, dn, extent, opts)
}

/// `P(N(t_1) = n_1, …, N(t_k) = n_k)` through the kernel recursion.
pub fn joint_pmf(schedule: &ObservationSchedule, law: &InterArrivalLaw) -> Result<JointPmf> {
    joint_pmf_with(schedule, law, &FidiOptions::default())
}

pub fn joint_pmf_with(
    schedule: &ObservationSchedule,
    law: &InterArrivalLaw,
    opts: &FidiOptions,
) -> Result<JointPmf> {
    opts.validate()?;
    let t = schedule.times();
    let n = schedule.counts();
    let first = law.evaluator().poisson_weight(n[0], t[0])?;
    let mut value = first.value.max(0.0);
    let mut error_bound = first.est_abs_error;
    let mut factors = vec![value];
    if schedule.len() == 1 || value == 0.0 {
        return Ok(JointPmf {
            value,
            error_bound,
            factors,
        });
    }
    // each kernel only has to reach the next observation
    let reach = |i: usize| t[i + 1] - t[i] + 2.0 * opts.step;
    let mut kernel = kernel::initial_kernel(law, t[0], n[0], reach(0), opts)?;
    for i in 1..schedule.len() {
        let dt = t[i] - t[i - 1];
        let m = n[i] - n[i - 1];
        let inc = conditional_increment_pmf(&kernel, law, dt, m)?;
        let mut err = kernel.normalization_defect().abs() * inc;
        if i + 1 < schedule.len() && inc > 0.0 {
            let next = kernel::update(&kernel, law, t[i], m, reach(i), opts)?;
            // the update's normalizer is the same probability reached by the
            // other order of integration
            err += (next.normalizer() - inc).abs();
            kernel = next;
        }
        error_bound = error_bound * inc + value * err;
        value *= inc;
        factors.push(inc);
        if value == 0.0 {
            break;
        }
    }
    Ok(JointPmf {
        value,
        error_bound,
        factors,
    })
}
