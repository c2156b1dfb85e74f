//! Tabulated functions on uniform grids and their convolution.
//!
//! A [`GridFunction`] stores node values `f(start + i * step)`. Densities
//! with an integrable singularity at a node can additionally carry exact
//! per-cell masses (differences of an analytic cdf); convolution then weights
//! by those masses instead of by trapezoid panels, which keeps the
//! singular cells exact.

use serde::Serialize;

use crate::error::{FppError, Result};

/// Largest negative value tolerated (and clamped to zero) in a density grid.
pub const DENSITY_NOISE_FLOOR: f64 = -1e-12;

const STEP_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    start: f64,
    step: f64,
    values: Vec<f64>,
    /// Exact probability mass of each cell `[x_i, x_{i+1}]`, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    cell_masses: Option<Vec<f64>>,
}

impl GridFunction {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(FppError::InvalidGrid(format!("step must be positive, got {step}")));
        }
        if !start.is_finite() {
            return Err(FppError::InvalidGrid(format!("start must be finite, got {start}")));
        }
        if values.is_empty() {
            return Err(FppError::InvalidGrid("no values".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(FppError::InvalidGrid(format!("non-finite value {bad}")));
        }
        Ok(GridFunction {
            start,
            step,
            values,
            cell_masses: None,
        })
    }

    /// Tabulate `f` at `n` nodes.
    pub fn from_fn<F: FnMut(f64) -> f64>(start: f64, step: f64, n: usize, mut f: F) -> Result<Self> {
        let values = (0..n).map(|i| f(start + i as f64 * step)).collect();
        Self::new(start, step, values)
    }

    /// Tabulate a density from its pdf and cdf.
    ///
    /// Cell masses come from cdf differences. Where the pdf is not finite
    /// (a power-law singularity at a node) the node value is replaced by the
    /// average density of the adjacent cell.
    pub fn from_pdf_cdf<P, C>(start: f64, step: f64, n: usize, mut pdf: P, mut cdf: C) -> Result<Self>
    where
        P: FnMut(f64) -> f64,
        C: FnMut(f64) -> f64,
    {
        if n < 2 {
            return Err(FppError::InvalidGrid("a density grid needs two nodes".into()));
        }
        let cdfs: Vec<f64> = (0..n).map(|i| cdf(start + i as f64 * step)).collect();
        let masses: Vec<f64> = cdfs.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        let values = (0..n)
            .map(|i| {
                let v = pdf(start + i as f64 * step);
                if v.is_finite() {
                    v
                } else if i + 1 < n {
                    masses[i] / step
                } else {
                    masses[i - 1] / step
                }
            })
            .collect();
        let mut g = Self::new(start, step, values)?;
        g.cell_masses = Some(masses);
        Ok(g)
    }

    pub fn with_cell_masses(mut self, masses: Vec<f64>) -> Result<Self> {
        if masses.len() + 1 != self.values.len() {
            return Err(FppError::InvalidGrid(format!(
                "{} cell masses for {} nodes",
                masses.len(),
                self.values.len()
            )));
        }
        self.cell_masses = Some(masses);
        Ok(self)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_masses(&self) -> Option<&[f64]> {
        self.cell_masses.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    /// Integral over the whole grid: exact cell masses when present,
    /// trapezoid otherwise.
    pub fn integral(&self) -> f64 {
        match &self.cell_masses {
            Some(m) => m.iter().sum(),
            None => trapezoid(&self.values, self.step),
        }
    }

    /// Mass of each cell, trapezoid-estimated when no exact masses are stored.
    pub fn masses(&self) -> Vec<f64> {
        match &self.cell_masses {
            Some(m) => m.clone(),
            None => self
                .values
                .windows(2)
                .map(|w| 0.5 * self.step * (w[0] + w[1]))
                .collect(),
        }
    }

    /// Linear interpolation; `None` outside `[start, end]`.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let pos = (x - self.start) / self.step;
        let last = (self.values.len() - 1) as f64;
        if !(pos >= -1e-9 && pos <= last + 1e-9) {
            return None;
        }
        let pos = pos.clamp(0.0, last);
        let i = (pos.floor() as usize).min(self.values.len().saturating_sub(2));
        if self.values.len() == 1 {
            return Some(self.values[0]);
        }
        let frac = pos - i as f64;
        Some(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    /// Enforce the density invariant: tiny negative noise is zeroed, anything
    /// below [`DENSITY_NOISE_FLOOR`] is an error.
    pub fn clamp_density(mut self) -> Result<Self> {
        for (i, v) in self.values.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < DENSITY_NOISE_FLOOR {
                    return Err(FppError::InvalidGrid(format!(
                        "density value {v:e} at node {i} is negative"
                    )));
                }
                *v = 0.0;
            }
        }
        Ok(self)
    }

    /// Keep the first `n` nodes.
    pub fn truncated(&self, n: usize) -> GridFunction {
        let n = n.clamp(1, self.values.len());
        GridFunction {
            start: self.start,
            step: self.step,
            values: self.values[..n].to_vec(),
            cell_masses: self.cell_masses.as_ref().map(|m| m[..n - 1].to_vec()),
        }
    }

    pub fn scaled(&self, factor: f64) -> GridFunction {
        GridFunction {
            start: self.start,
            step: self.step,
            values: self.values.iter().map(|v| v * factor).collect(),
            cell_masses: self
                .cell_masses
                .as_ref()
                .map(|m| m.iter().map(|v| v * factor).collect()),
        }
    }

    pub fn shifted(&self, new_start: f64) -> GridFunction {
        GridFunction {
            start: new_start,
            ..self.clone()
        }
    }
}

pub(crate) fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => step * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1])),
    }
}

fn check_steps(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if ((f.step - g.step) / f.step).abs() > STEP_MATCH_RTOL {
        return Err(FppError::MismatchedStep(f.step, g.step));
    }
    Ok(())
}

/// Linear convolution `(f * g)(t) = ∫ f(u) g(t - u) du` on the combined
/// support; the result has `len(f) + len(g) - 1` nodes.
///
/// Without cell masses the integral is a trapezoid sum. If one factor
/// carries exact masses it is used as the integrating measure and the other
/// factor is averaged over each cell; if both do, cells are treated as
/// uniform blocks and the result carries exact masses as well.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    check_steps(f, g)?;
    let start = f.start + g.start;
    let h = f.step;
    let n = f.len() + g.len() - 1;
    match (&f.cell_masses, &g.cell_masses) {
        (Some(mf), Some(mg)) => {
            let mut values = vec![0.0; n];
            let mut masses = vec![0.0; n - 1];
            for (j, &a) in mf.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (l, &b) in mg.iter().enumerate() {
                    let p = a * b;
                    values[j + l + 1] += p / h;
                    masses[j + l] += 0.5 * p;
                    masses[j + l + 1] += 0.5 * p;
                }
            }
            Ok(GridFunction {
                start,
                step: h,
                values,
                cell_masses: Some(masses),
            })
        }
        (None, Some(mg)) => Ok(convolve_against_masses(f, mg, start, n)),
        (Some(mf), None) => Ok(convolve_against_masses(g, mf, start, n)),
        (None, None) => {
            let (fv, gv) = (&f.values, &g.values);
            let values = (0..n)
                .map(|k| {
                    let lo = k.saturating_sub(gv.len() - 1);
                    let hi = k.min(fv.len() - 1);
                    if hi <= lo {
                        return 0.0;
                    }
                    let mut s: f64 = (lo..=hi).map(|i| fv[i] * gv[k - i]).sum();
                    s -= 0.5 * (fv[lo] * gv[k - lo] + fv[hi] * gv[k - hi]);
                    h * s
                })
                .collect();
            Ok(GridFunction {
                start,
                step: h,
                values,
                cell_masses: None,
            })
        }
    }
}

// `values` is averaged over each cell of the measure given by `masses`.
fn convolve_against_masses(values: &GridFunction, masses: &[f64], start: f64, n: usize) -> GridFunction {
    let v = &values.values;
    let cells = v.len() - 1;
    let out = (0..n)
        .map(|k| {
            // cell l of the measure pairs with cell (k - l - 1) of `values`
            let mut s = 0.0;
            for (l, &m) in masses.iter().enumerate() {
                if l + 1 > k {
                    break;
                }
                let c = k - l - 1;
                if c < cells {
                    s += m * 0.5 * (v[c] + v[c + 1]);
                }
            }
            s
        })
        .collect();
    GridFunction {
        start,
        step: values.step,
        values: out,
        cell_masses: None,
    }
}

/// Outcome of [`self_convolve_tracked`].
#[derive(Debug, Clone, PartialEq)]
pub struct SelfConvolution {
    pub grid: GridFunction,
    /// Mass that fell beyond the support of `f` and was discarded, summed
    /// over all convolution rounds.
    pub truncated_mass: f64,
}

/// `n`-fold convolution of `f` with itself, truncated to the support of `f`
/// after every round.
pub fn self_convolve(f: &GridFunction, n: usize) -> Result<GridFunction> {
    self_convolve_tracked(f, n).map(|s| s.grid)
}

pub fn self_convolve_tracked(f: &GridFunction, n: usize) -> Result<SelfConvolution> {
    if n == 0 {
        return Err(FppError::Domain("self-convolution order must be at least 1".into()));
    }
    let mut acc = f.clone();
    let mut lost = 0.0;
    for _ in 1..n {
        let full = convolve(&acc, f)?;
        let kept = full.truncated(f.len());
        lost += full.integral() - kept.integral();
        acc = kept;
    }
    Ok(SelfConvolution {
        grid: acc,
        truncated_mass: lost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_grid(h: f64, end: f64) -> GridFunction {
        let n = (end / h).round() as usize + 1;
        GridFunction::from_fn(0.0, h, n, |t| (-t).exp()).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction::new(0.0, 0.0, vec![1.0]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![]).is_err());
        assert!(GridFunction::new(0.0, 1.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn erlang_two_from_exponentials() {
        let f = exp_grid(1e-3, 10.0);
        let c = convolve(&f, &f).unwrap();
        assert_eq!(c.len(), 2 * f.len() - 1);
        let sup = (0..f.len())
            .map(|i| {
                let t = c.x(i);
                (c.values()[i] - t * (-t).exp()).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup < 1e-4, "sup error {sup}");
    }

    #[test]
    fn erlang_three_from_self_convolution() {
        let f = exp_grid(1e-3, 10.0);
        let c = self_convolve_tracked(&f, 3).unwrap();
        let sup = (0..f.len())
            .map(|i| {
                let t = c.grid.x(i);
                (c.grid.values()[i] - t * t * (-t).exp() / 2.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(sup < 1e-4, "sup error {sup}");
        assert!(c.truncated_mass > 0.0);
    }

    #[test]
    fn delta_is_identity() {
        let h = 0.01;
        let g = GridFunction::from_fn(0.0, h, 200, |t| (t * 3.0).sin() + 2.0).unwrap();
        let delta = GridFunction::new(0.0, h, vec![2.0 / h, 0.0]).unwrap();
        let c = convolve(&delta, &g).unwrap();
        // the first node integrates over an empty range
        assert_eq!(c.values()[0], 0.0);
        for i in 1..g.len() {
            assert!((c.values()[i] - g.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_is_preserved() {
        let h = 1e-3;
        let f = exp_grid(h, 30.0);
        let g = GridFunction::from_fn(0.0, h, 30_001, |t| 2.0 * (-2.0 * t).exp()).unwrap();
        let c = convolve(&f, &g).unwrap();
        let expected = f.integral() * g.integral();
        assert!((c.integral() - expected).abs() < 1e-4);
    }

    #[test]
    fn convolution_commutes() {
        let h = 0.01;
        let f = GridFunction::from_fn(0.0, h, 150, |t| (-t).exp() * (1.0 + t)).unwrap();
        let g = GridFunction::from_fn(0.0, h, 90, |t| t * t).unwrap();
        let a = convolve(&f, &g).unwrap();
        let b = convolve(&g, &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn mismatched_steps_are_rejected() {
        let f = GridFunction::new(0.0, 0.1, vec![1.0, 1.0]).unwrap();
        let g = GridFunction::new(0.0, 0.2, vec![1.0, 1.0]).unwrap();
        assert_eq!(convolve(&f, &g).unwrap_err(), FppError::MismatchedStep(0.1, 0.2));
    }

    #[test]
    fn exact_masses_convolve_uniform_blocks() {
        // Two uniform(0,1) laws: the sum is triangular on [0,2].
        let h = 0.01;
        let u = GridFunction::from_pdf_cdf(0.0, h, 101, |_| 1.0, |t| t).unwrap();
        let c = convolve(&u, &u).unwrap();
        for i in 0..c.len() {
            let t = c.x(i);
            let tri = if t <= 1.0 { t } else { 2.0 - t };
            assert!((c.values()[i] - tri).abs() < 1e-12, "t={t}");
        }
        assert!((c.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clamp_density_zeroes_noise_only() {
        let g = GridFunction::new(0.0, 1.0, vec![1.0, -1e-14]).unwrap();
        assert_eq!(g.clamp_density().unwrap().values()[1], 0.0);
        let g = GridFunction::new(0.0, 1.0, vec![1.0, -1e-6]).unwrap();
        assert!(g.clamp_density().is_err());
    }

    #[test]
    fn interpolation_stays_inside() {
        let g = GridFunction::new(1.0, 0.5, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(g.value_at(1.25), Some(0.5));
        assert_eq!(g.value_at(2.0), Some(4.0));
        assert_eq!(g.value_at(2.1), None);
        assert_eq!(g.value_at(0.9), None);
    }
}
