//! Residual-lifetime densities carried from one observation to the next.
//!
//! A kernel remembers the (unnormalized) density `src(u)` of the last epoch
//! before the observation instant `t_obs`, over absolute time. Everything
//! else follows from it:
//!
//! ```text
//! f_Y(y)   = (1/Z) ∫ src(u) f_τ(y + t_obs - u) du
//! P(Y > y) = (1/Z) ∫ src(u) S(y + t_obs - u) du,   Z = ∫ src(u) S(t_obs - u) du
//! ```
//!
//! The source is tabulated on cells that end exactly at the instant where it
//! was created, so for nodes `y_i = i h` the arguments `y_i + t_obs - u`
//! fall on one lattice and each cell integral reduces to two precomputed
//! moments of `f_τ` or `S`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FppError, Result};
use crate::numerics::{gauss_legendre_5, GridFunction, Quadrature};
use crate::renewal::{grading_power, InterArrivalLaw};

use super::ObservationSchedule;

#[derive(Debug, Clone, Copy)]
enum Cell {
    /// Source values at the late and the early end of the cell, linear in
    /// between.
    Linear(f64, f64),
    /// `∫ src` and `∫ (u_late - u) src(u) du` over the cell. Used where the
    /// source is singular and the other factor is smooth.
    Moments(f64, f64),
}

#[derive(Debug, Clone)]
enum Source {
    /// No epoch observed yet: the last renewal is the origin.
    Origin,
    /// Cell `j` covers `[end - (j+1) h, end - j h]`.
    Cells { end: f64, step: f64, cells: Vec<Cell> },
}

// Cell moments of f_τ and S over w in [w_k, w_k + h], w_k = offset + k h.
struct Lattice {
    surv: Vec<f64>,
    dens: Vec<f64>,
    f0: Vec<f64>,
    f1: Vec<f64>,
    s0: Vec<f64>,
    s1: Vec<f64>,
}

impl Lattice {
    fn new(law: &InterArrivalLaw, offset: f64, h: f64, count: usize) -> Result<Lattice> {
        let nodes: Vec<(f64, f64)> = (0..=count)
            .into_par_iter()
            .map(|k| {
                let w = offset + k as f64 * h;
                let s = law.survival(w)?;
                let d = if w > 0.0 || law.beta().is_exponential() {
                    law.pdf(w)?
                } else {
                    f64::NAN
                };
                Ok((s, d))
            })
            .collect::<Result<_>>()?;
        let cells: Vec<(f64, f64)> = (0..count)
            .into_par_iter()
            .map(|k| law.survival_cell(offset + k as f64 * h, h))
            .collect::<Result<_>>()?;
        let (surv, dens): (Vec<f64>, Vec<f64>) = nodes.into_iter().unzip();
        let mut lat = Lattice {
            f0: Vec::with_capacity(count),
            f1: Vec::with_capacity(count),
            s0: Vec::with_capacity(count),
            s1: Vec::with_capacity(count),
            surv,
            dens,
        };
        for (k, &(int_s, second)) in cells.iter().enumerate() {
            lat.f0.push(lat.surv[k] - lat.surv[k + 1]);
            lat.f1.push(int_s - h * lat.surv[k + 1]);
            lat.s0.push(int_s);
            lat.s1.push(h * int_s - second);
        }
        Ok(lat)
    }

    // Σ_j over source cells placed at lattice index k0 + j.
    fn through(&self, cells: &[Cell], h: f64, k0: usize) -> (f64, f64) {
        let mut f = 0.0;
        let mut s = 0.0;
        for (j, c) in cells.iter().enumerate() {
            let k = k0 + j;
            match *c {
                Cell::Linear(a, b) => {
                    let slope = (b - a) / h;
                    f += a * self.f0[k] + slope * self.f1[k];
                    s += a * self.s0[k] + slope * self.s1[k];
                }
                Cell::Moments(m0, m1) => {
                    f += self.dens[k] * m0 + (self.dens[k + 1] - self.dens[k]) / h * m1;
                    s += self.surv[k] * m0 + (self.surv[k + 1] - self.surv[k]) / h * m1;
                }
            }
        }
        (f, s)
    }
}

/// Density of the residual lifetime `Y` at an observation instant, given
/// all counts observed so far.
#[derive(Debug, Clone)]
pub struct MemoryKernel {
    beta: f64,
    schedule_prefix: ObservationSchedule,
    t_obs: f64,
    // total mass of the unnormalized source, and that mass at the previous
    // observation when the source is carried over unchanged
    normalizer: f64,
    prior_mass: f64,
    density: GridFunction,
    survival: Vec<f64>,
    normalization_defect: f64,
    source: Source,
}

/// Serializable view of a kernel.
#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub schedule_prefix: ObservationSchedule,
    pub step: f64,
    pub extent: f64,
    pub tail_mass: f64,
    pub normalization_defect: f64,
}

impl MemoryKernel {
    /// Tabulated `f_Y` on `[0, extent]`.
    pub fn density(&self) -> &GridFunction {
        &self.density
    }

    /// `P(Y > y_i)` at the density nodes, exact through the source.
    pub fn survival_grid(&self) -> &[f64] {
        &self.survival
    }

    pub fn schedule_prefix(&self) -> &ObservationSchedule {
        &self.schedule_prefix
    }

    pub fn observation_time(&self) -> f64 {
        self.t_obs
    }

    pub fn step(&self) -> f64 {
        self.density.step()
    }

    pub fn extent(&self) -> f64 {
        self.density.end()
    }

    /// `P(Y > extent)`.
    pub fn tail_mass(&self) -> f64 {
        *self.survival.last().unwrap()
    }

    /// `1 - (∫_0^extent f_Y + tail_mass)`, the grid integral by trapezoid
    /// except on the first cell.
    pub fn normalization_defect(&self) -> f64 {
        self.normalization_defect
    }

    /// Probability of the observation that produced this kernel given the
    /// ones before it: `P(N(t_1) = n_1)` for the first, the increment
    /// probability afterwards.
    pub fn normalizer(&self) -> f64 {
        self.normalizer / self.prior_mass
    }

    pub fn summary(&self) -> KernelSummary {
        KernelSummary {
            schedule_prefix: self.schedule_prefix.clone(),
            step: self.step(),
            extent: self.extent(),
            tail_mass: self.tail_mass(),
            normalization_defect: self.normalization_defect,
        }
    }

    fn check_law(&self, law: &InterArrivalLaw) -> Result<()> {
        if law.beta().value() != self.beta {
            return Err(FppError::Domain(format!(
                "kernel was built for beta = {}, law has beta = {}",
                self.beta,
                law.beta()
            )));
        }
        Ok(())
    }

    /// `f_Y(y)`. Exact for the origin source, interpolated otherwise;
    /// `None` beyond the grid.
    pub fn density_at(&self, law: &InterArrivalLaw, y: f64) -> Result<Option<f64>> {
        self.check_law(law)?;
        match self.source {
            Source::Origin if y >= 0.0 => Ok(Some(law.pdf(y + self.t_obs)? / self.normalizer)),
            _ => Ok(quadratic_at(&self.density, y)),
        }
    }

    /// `P(Y > y)`, exact through the source for any `y ≥ 0`.
    pub fn survival_at(&self, law: &InterArrivalLaw, y: f64) -> Result<f64> {
        self.check_law(law)?;
        if !(y >= 0.0) {
            return Err(FppError::Domain(format!("residual time must be >= 0, got {y}")));
        }
        if let Some(i) = self.lattice_index(y) {
            return Ok(self.survival[i]);
        }
        let v = match &self.source {
            Source::Origin => law.survival(y + self.t_obs)?,
            Source::Cells { end, step, cells } => {
                let offset = (self.t_obs - end).max(0.0) + y;
                let lat = Lattice::new(law, offset, *step, cells.len())?;
                lat.through(cells, *step, 0).1
            }
        };
        Ok((v / self.normalizer).clamp(0.0, 1.0))
    }

    fn lattice_index(&self, y: f64) -> Option<usize> {
        let pos = y / self.step();
        let i = pos.round();
        ((pos - i).abs() < 1e-9 && (i as usize) < self.survival.len()).then_some(i as usize)
    }
}

// Three-point interpolation on the nodes nearest to `x`.
fn quadratic_at(g: &GridFunction, x: f64) -> Option<f64> {
    let v = g.values();
    let pos = (x - g.start()) / g.step();
    let last = (v.len() - 1) as f64;
    if !(pos >= -1e-9 && pos <= last + 1e-9) {
        return None;
    }
    if v.len() < 3 {
        return g.value_at(x);
    }
    let c = (pos.round() as usize).clamp(1, v.len() - 2);
    let s = pos - c as f64;
    let (a, b, d) = (v[c - 1], v[c], v[c + 1]);
    Some(b + 0.5 * s * (d - a) + 0.5 * s * s * (d - 2.0 * b + a))
}

/// Grid controls shared by the fidi routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidiOptions {
    /// Largest grid step; the actual step divides each interval exactly.
    pub step: f64,
    /// Target `P(Y > extent)` for stand-alone kernels.
    pub tail_mass: f64,
    /// Cap on the stand-alone kernel extent.
    pub max_extent: f64,
}

impl Default for FidiOptions {
    fn default() -> Self {
        FidiOptions {
            step: 1e-3,
            tail_mass: 1e-5,
            max_extent: 10.0,
        }
    }
}

impl FidiOptions {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(FppError::Domain(format!("step must be positive, got {}", self.step)));
        }
        if !(self.max_extent > 0.0 && self.max_extent.is_finite()) {
            return Err(FppError::Domain(format!(
                "max_extent must be positive, got {}",
                self.max_extent
            )));
        }
        Ok(())
    }

    // Step dividing `len` into at least four cells.
    fn step_for(&self, len: f64) -> (f64, usize) {
        let n = ((len / self.step - 1e-9).ceil() as usize).max(4);
        (len / n as f64, n)
    }
}

fn build(
    law: &InterArrivalLaw,
    source: Source,
    t_obs: f64,
    step: f64,
    extent: f64,
    schedule_prefix: ObservationSchedule,
    prior_mass: f64,
) -> Result<MemoryKernel> {
    let n = ((extent / step - 1e-9).ceil() as usize).max(1);
    let (dens, surv): (Vec<f64>, Vec<f64>) = match &source {
        Source::Origin => (0..=n)
            .into_par_iter()
            .map(|i| {
                let w = t_obs + i as f64 * step;
                Ok((law.pdf(w)?, law.survival(w)?))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip(),
        Source::Cells { end, step: h, cells } => {
            let delta = (t_obs - end).max(0.0);
            let lat = Lattice::new(law, delta, *h, n + cells.len())?;
            (0..=n)
                .into_par_iter()
                .map(|i| lat.through(cells, *h, i))
                .collect::<Vec<_>>()
                .into_iter()
                .unzip()
        }
    };
    let z = surv[0];
    if !(z > 0.0) {
        return Err(FppError::Degenerate(format!(
            "the observed counts have probability {z:e}"
        )));
    }
    let values: Vec<f64> = dens.iter().map(|v| v / z).collect();
    let survival: Vec<f64> = surv.iter().map(|v| (v / z).clamp(0.0, 1.0)).collect();
    let density = GridFunction::new(0.0, step, values)?.clamp_density()?;
    let mut normalization_defect = 1.0 - density.integral() - survival[n];
    if let Source::Cells { end, step: h, cells } = &source {
        // the trapezoid misjudges the y^β cusp in the first cell
        let v = density.values();
        let head = first_cell_mass(law, (t_obs - end).max(0.0), *h, cells, step)? / z;
        normalization_defect += 0.5 * step * (v[0] + v[1]) - head;
    }
    Ok(MemoryKernel {
        beta: law.beta().value(),
        schedule_prefix,
        t_obs,
        normalizer: z,
        prior_mass,
        density,
        survival,
        normalization_defect,
        source,
    })
}

// ∫_0^step of the unnormalized density, graded towards y = 0.
fn first_cell_mass(law: &InterArrivalLaw, delta: f64, h: f64, cells: &[Cell], step: f64) -> Result<f64> {
    let p = grading_power(law.beta().value()) as i32;
    let f = |s: f64| -> Result<f64> {
        let y = step * s.powi(p);
        let lat = Lattice::new(law, delta + y, h, cells.len())?;
        Ok(lat.through(cells, h, 0).0 * step * p as f64 * s.powi(p - 1))
    };
    Ok(gauss_legendre_5(f, 0.0, 0.5)? + gauss_legendre_5(f, 0.5, 1.0)?)
}

/// The kernel right after the first observation `N(t1) = n1`, tabulated on
/// at least `[0, extent]`.
pub(crate) fn initial_kernel(
    law: &InterArrivalLaw,
    t1: f64,
    n1: usize,
    extent: f64,
    opts: &FidiOptions,
) -> Result<MemoryKernel> {
    opts.validate()?;
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(FppError::Domain(format!("t1 must be positive, got {t1}")));
    }
    let prefix = ObservationSchedule::single(t1, n1)?;
    if n1 == 0 {
        return build(law, Source::Origin, t1, opts.step, extent, prefix, 1.0);
    }
    let (h, cells_n) = opts.step_for(t1);
    // f^{*n1} is singular at the origin: the early half integrates it
    // exactly against interpolated f_τ / S, which are smooth there.
    let split = cells_n / 2;
    let cells: Vec<Cell> = (0..cells_n)
        .into_par_iter()
        .map(|j| {
            let late = t1 - j as f64 * h;
            let early = if j + 1 == cells_n { 0.0 } else { t1 - (j + 1) as f64 * h };
            if j < split {
                Ok(Cell::Linear(law.epoch_pdf(n1, late)?, law.epoch_pdf(n1, early)?))
            } else {
                let f_late = law.epoch_cdf(n1, late)?;
                let f_early = law.epoch_cdf(n1, early)?;
                let int_f = gauss_legendre_5(|u| law.epoch_cdf(n1, u), early, late)?;
                Ok(Cell::Moments(f_late - f_early, int_f - h * f_early))
            }
        })
        .collect::<Result<_>>()?;
    build(
        law,
        Source::Cells { end: t1, step: h, cells },
        t1,
        h,
        extent,
        prefix,
        1.0,
    )
}

/// Extent where the kernel tail drops below the target, capped.
pub(crate) fn tail_extent(kernel: &MemoryKernel, law: &InterArrivalLaw, opts: &FidiOptions) -> Result<f64> {
    let mut d: f64 = 0.5;
    while d < opts.max_extent {
        if kernel.survival_at(law, d)? < opts.tail_mass {
            return Ok(d);
        }
        d *= 2.0;
    }
    Ok(opts.max_extent)
}

/// Advance the kernel from its observation instant to `t_next`, where
/// `dn` further epochs were observed.
pub(crate) fn update(
    prev: &MemoryKernel,
    law: &InterArrivalLaw,
    t_next: f64,
    dn: usize,
    extent: f64,
    opts: &FidiOptions,
) -> Result<MemoryKernel> {
    prev.check_law(law)?;
    opts.validate()?;
    let t_prev = prev.t_obs;
    let dt = t_next - t_prev;
    if !(dt > 0.0) {
        return Err(FppError::InvalidSchedule(format!(
            "next observation {t_next} is not after {t_prev}"
        )));
    }
    let prefix = prev
        .schedule_prefix
        .extended(t_next, prev.schedule_prefix.last_count() + dn)?;
    if dn == 0 {
        // no epoch in between: same source, later instant
        let step = match &prev.source {
            Source::Origin => prev.step(),
            Source::Cells { step, .. } => *step,
        };
        return build(law, prev.source.clone(), t_next, step, extent, prefix, prev.normalizer);
    }
    let h = prev.step();
    let needed = ((dt / h - 1e-9).ceil() as usize).max(1);
    if needed >= prev.density.len() {
        return Err(FppError::SupportExhausted {
            available: prev.extent(),
            required: dt,
        });
    }
    // q(t_prev + y): density of the last epoch before t_next, which is the
    // (dn-1)-fold convolution of f_Y with f_τ
    let q = if dn == 1 {
        prev.density.truncated(needed + 2)
    } else {
        let m = dn - 1;
        let g_cdf: Vec<f64> = (0..=needed)
            .into_par_iter()
            .map(|k| law.epoch_cdf(m, k as f64 * h))
            .collect::<Result<_>>()?;
        let g_int: Vec<f64> = (0..needed)
            .into_par_iter()
            .map(|k| {
                let a = k as f64 * h;
                gauss_legendre_5(|v| law.epoch_cdf(m, v), a, a + h)
            })
            .collect::<Result<_>>()?;
        let mass: Vec<f64> = (0..needed).map(|k| g_cdf[k + 1] - g_cdf[k]).collect();
        let first: Vec<f64> = (0..needed).map(|k| g_int[k] - h * g_cdf[k]).collect();
        let f = prev.density.values();
        let values: Vec<f64> = (0..=needed)
            .into_par_iter()
            .map(|l| {
                let mut s = 0.0;
                for i in 0..l {
                    let k = l - i - 1;
                    s += f[i] * mass[k] + (f[i + 1] - f[i]) / h * first[k];
                }
                s.max(0.0)
            })
            .collect();
        GridFunction::new(0.0, h, values)?
    };
    let (h_new, cells_n) = opts.step_for(dt);
    let at = |j: usize| -> f64 {
        let y = (dt - j as f64 * h_new).max(0.0);
        quadratic_at(&q, y).unwrap_or(0.0).max(0.0)
    };
    let cells: Vec<Cell> = (0..cells_n).map(|j| Cell::Linear(at(j), at(j + 1))).collect();
    build(
        law,
        Source::Cells {
            end: t_next,
            step: h_new,
            cells,
        },
        t_next,
        h_new,
        extent,
        prefix,
        1.0,
    )
}

/// `P(N(t_obs + dt) - N(t_obs) = m | kernel)`.
pub(crate) fn increment_pmf(kernel: &MemoryKernel, law: &InterArrivalLaw, dt: f64, m: usize) -> Result<f64> {
    kernel.check_law(law)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FppError::Domain(format!("dt must be positive, got {dt}")));
    }
    if m == 0 {
        return kernel.survival_at(law, dt);
    }
    if kernel.extent() < dt * (1.0 - 1e-12) {
        return Err(FppError::SupportExhausted {
            available: kernel.extent(),
            required: dt,
        });
    }
    let h = kernel.step();
    let dens = |y: f64| -> Result<f64> { Ok(kernel.density_at(law, y)?.unwrap_or(0.0)) };
    // ∫_0^dt f_Y(y) P(N(dt - y) = m - 1) dy; the last stretch near y = dt
    // carries the (dt - y)^{(m-1)β} behaviour of the pmf
    let tail_start = (dt - 2.0 * h).max(0.0);
    let full = (tail_start / h).floor() as usize;
    let body: f64 = (0..full)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 * h;
            gauss_legendre_5(|y| Ok::<_, FppError>(dens(y)? * law.pmf(m - 1, dt - y)?), a, a + h)
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum();
    let mid_start = full as f64 * h;
    let b = law.beta().value();
    let cusp = if m == 1 { b } else { (m - 1) as f64 * b };
    let rule = Quadrature::new(1e-13).with_max_subdivisions(200);
    let last = rule.try_integrate_graded(
        |y, _, rest| Ok(dens(y)? * law.pmf(m - 1, rest)?),
        mid_start,
        dt,
        1,
        grading_power(cusp + 1.0),
    )?;
    Ok((body + last.value).clamp(0.0, 1.0))
}
