use serde::Serialize;

use crate::error::{FppError, Result};

/// Counts on equal-width bins `[start + i w, start + (i+1) w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bin_start: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Samples below `bin_start`.
    pub underflow: u64,
    /// Samples at or beyond the last edge.
    pub overflow: u64,
    pub n_samples: u64,
}

impl Histogram {
    pub fn new(bin_start: f64, bin_width: f64, bins: usize) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) || !bin_start.is_finite() {
            return Err(FppError::InvalidGrid(format!(
                "bad histogram layout: start {bin_start}, width {bin_width}"
            )));
        }
        if bins == 0 {
            return Err(FppError::InvalidGrid("a histogram needs at least one bin".into()));
        }
        Ok(Histogram {
            bin_start,
            bin_width,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
            n_samples: 0,
        })
    }

    pub fn add(&mut self, x: f64) {
        self.n_samples += 1;
        let pos = ((x - self.bin_start) / self.bin_width).floor();
        if pos < 0.0 {
            self.underflow += 1;
        } else if pos >= self.counts.len() as f64 {
            self.overflow += 1;
        } else {
            self.counts[pos as usize] += 1;
        }
    }

    /// Add another histogram with the same layout.
    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if other.counts.len() != self.counts.len()
            || other.bin_start != self.bin_start
            || other.bin_width != self.bin_width
        {
            return Err(FppError::InvalidGrid("histogram layouts differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
        self.n_samples += other.n_samples;
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.bin_start + i as f64 * self.bin_width
    }

    pub fn center(&self, i: usize) -> f64 {
        self.bin_start + (i as f64 + 0.5) * self.bin_width
    }

    /// Empirical density `count / (n w)` per bin.
    pub fn density(&self) -> Vec<f64> {
        let n = self.n_samples.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / (n * self.bin_width)).collect()
    }

    /// Empirical probability per bin.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n_samples.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
pub fn ks_distance_sample<F: FnMut(f64) -> f64>(sample: &[f64], mut cdf: F) -> Result<f64> {
    if sample.is_empty() {
        return Err(FppError::EmptySample);
    }
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Kolmogorov-Smirnov distance seen at the bin edges of a histogram.
pub fn ks_distance_histogram<F: FnMut(f64) -> f64>(h: &Histogram, mut cdf: F) -> Result<f64> {
    if h.n_samples == 0 {
        return Err(FppError::EmptySample);
    }
    let n = h.n_samples as f64;
    let mut below = h.underflow;
    let mut d = (below as f64 / n - cdf(h.edge(0))).abs();
    for (i, &c) in h.counts.iter().enumerate() {
        below += c;
        d = d.max((below as f64 / n - cdf(h.edge(i + 1))).abs());
    }
    Ok(d)
}

/// Asymptotic KS critical value at level `alpha` with the usual
/// finite-sample correction `λ / (√n + 0.12 + 0.11/√n)`.
pub fn ks_critical_value(n: u64, alpha: f64) -> f64 {
    let lambda = (-(0.5 * alpha).ln() / 2.0).sqrt();
    let s = (n as f64).sqrt();
    lambda / (s + 0.12 + 0.11 / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning() {
        let mut h = Histogram::new(0.0, 0.5, 4).unwrap();
        for x in [-0.1, 0.0, 0.49, 0.5, 1.99, 2.0, 7.0] {
            h.add(x);
        }
        assert_eq!(h.counts, vec![2, 1, 0, 1]);
        assert_eq!((h.underflow, h.overflow, h.n_samples), (1, 2, 7));
    }

    #[test]
    fn critical_value_level() {
        // 1.6276 / √n for large n
        let c = ks_critical_value(100_000, 0.01);
        assert!((c * 100_000f64.sqrt() - 1.6276).abs() < 2e-3);
    }

    #[test]
    fn ks_of_uniform_grid() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_distance_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!((d - 0.0005).abs() < 1e-12);
        assert!(ks_distance_sample(&[], |x| x).is_err());
    }

    #[test]
    fn point_mass_against_its_cdf() {
        let mut h = Histogram::new(0.0, 0.1, 10).unwrap();
        for _ in 0..50 {
            h.add(0.35);
        }
        let d = ks_distance_histogram(&h, |x| if x >= 0.35 { 1.0 } else { 0.0 }).unwrap();
        // edges cannot see inside the bin that holds the atom
        assert_eq!(d, 0.0);
        let empty = Histogram::new(0.0, 0.1, 10).unwrap();
        assert!(ks_distance_histogram(&empty, |x| x).is_err());
    }
}
