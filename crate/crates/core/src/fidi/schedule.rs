use serde::{Deserialize, Serialize};

use crate::error::{FppError, Result};

/// Observation instants `t_1 < … < t_k` with counts `n_1 ≤ … ≤ n_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSchedule {
    times: Vec<f64>,
    counts: Vec<usize>,
}

impl ObservationSchedule {
    pub fn new(times: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        if times.is_empty() {
            return Err(FppError::InvalidSchedule("at least one observation is needed".into()));
        }
        if times.len() != counts.len() {
            return Err(FppError::InvalidSchedule(format!(
                "{} times but {} counts",
                times.len(),
                counts.len()
            )));
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(FppError::InvalidSchedule(format!(
                "observation times must be positive and finite, got {t}"
            )));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(FppError::InvalidSchedule(format!(
                "times must increase strictly: {} then {}",
                w[0], w[1]
            )));
        }
        if let Some(w) = counts.windows(2).find(|w| w[1] < w[0]) {
            return Err(FppError::InvalidSchedule(format!(
                "counts cannot decrease: {} then {}",
                w[0], w[1]
            )));
        }
        Ok(ObservationSchedule { times, counts })
    }

    pub fn single(t: f64, n: usize) -> Result<Self> {
        Self::new(vec![t], vec![n])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The first `k` observations.
    pub fn prefix(&self, k: usize) -> ObservationSchedule {
        let k = k.clamp(1, self.len());
        ObservationSchedule {
            times: self.times[..k].to_vec(),
            counts: self.counts[..k].to_vec(),
        }
    }

    /// Append one observation, checking order.
    pub fn extended(&self, t: f64, n: usize) -> Result<Self> {
        let mut times = self.times.clone();
        let mut counts = self.counts.clone();
        times.push(t);
        counts.push(n);
        Self::new(times, counts)
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.len() - 1]
    }

    pub fn last_count(&self) -> usize {
        self.counts[self.len() - 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ObservationSchedule::new(vec![1.0, 2.0], vec![0, 1]).is_ok());
        assert!(ObservationSchedule::new(vec![], vec![]).is_err());
        assert!(ObservationSchedule::new(vec![1.0, 1.0], vec![0, 1]).is_err());
        assert!(ObservationSchedule::new(vec![1.0, 2.0], vec![2, 1]).is_err());
        assert!(ObservationSchedule::new(vec![1.0], vec![0, 1]).is_err());
        assert!(ObservationSchedule::new(vec![0.0], vec![0]).is_err());
        let s = ObservationSchedule::new(vec![1.0, 2.0, 3.0], vec![0, 0, 2]).unwrap();
        assert_eq!(s.prefix(2).times(), &[1.0, 2.0]);
        assert!(s.extended(2.5, 3).is_err());
    }
}
