//! Exact simulation of the process and empirical counterparts of the
//! analytic laws.
//!
//! Ensembles are cut into chunks of [`CHUNK`] paths. Chunk `c` draws from
//! the ChaCha8 stream `c` under the master seed and chunk results are
//! reduced in chunk order, so output depends on the seed only, never on the
//! thread count.

mod stats;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FppError, Result};
use crate::fidi::ObservationSchedule;
use crate::renewal::InterArrivalLaw;

pub use stats::{ks_critical_value, ks_distance_histogram, ks_distance_sample, Histogram};

/// Paths per independent random stream.
pub const CHUNK: usize = 4096;

/// Generator for chunk `chunk` under `seed`.
pub fn stream_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

// Uniform on (0, 1].
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// One Mittag-Leffler inter-arrival time,
/// `τ = -ln u · (sin(βπ(1-v)) / sin(βπv))^{1/β}` with `u, v` uniform.
///
/// The ratio equals `sin(βπ)/tan(βπv) - cos(βπ)` but stays non-negative
/// in floating point.
pub fn sample_interarrival<R: Rng + ?Sized>(law: &InterArrivalLaw, rng: &mut R) -> f64 {
    let b = law.beta().value();
    let e = -open_uniform(rng).ln();
    if law.beta().is_exponential() {
        return e;
    }
    let v = loop {
        let v = rng.random::<f64>();
        if v > 0.0 {
            break v;
        }
    };
    let ratio = (b * PI * (1.0 - v)).sin() / (b * PI * v).sin();
    e * ratio.powf(1.0 / b)
}

/// Epochs `T_1 < T_2 < …` up to a horizon; `T_0 = 0` is not stored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub epochs: Vec<f64>,
    pub horizon: f64,
}

impl PathSample {
    /// `N(t)` for `t ≤ horizon`.
    pub fn count_at(&self, t: f64) -> usize {
        self.epochs.partition_point(|&e| e <= t)
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(FppError::Domain(format!("{name} must be positive, got {x}")));
    }
    Ok(())
}

pub fn simulate_path<R: Rng + ?Sized>(law: &InterArrivalLaw, horizon: f64, rng: &mut R) -> Result<PathSample> {
    check_positive("horizon", horizon)?;
    let mut epochs = Vec::new();
    let mut t = 0.0;
    loop {
        let next = t + sample_interarrival(law, rng);
        // a zero draw would repeat an epoch
        if next <= t {
            continue;
        }
        if next > horizon {
            break;
        }
        epochs.push(next);
        t = next;
    }
    Ok(PathSample { epochs, horizon })
}

// N(t) without storing epochs.
fn count_until<R: Rng + ?Sized>(law: &InterArrivalLaw, t: f64, rng: &mut R) -> usize {
    let mut s = 0.0;
    let mut n = 0;
    loop {
        s += sample_interarrival(law, rng);
        if s > t {
            return n;
        }
        n += 1;
    }
}

// Run `work` over chunks and fold the results in chunk order.
fn chunked<T, W, M>(n_paths: usize, seed: u64, work: W, mut merge: M) -> Result<T>
where
    T: Send,
    W: Fn(&mut ChaCha8Rng, usize) -> Result<T> + Sync,
    M: FnMut(T, T) -> Result<T>,
{
    let chunks = n_paths.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let size = CHUNK.min(n_paths - c * CHUNK);
            work(&mut stream_rng(seed, c as u64), size)
        })
        .collect::<Result<_>>()?;
    let mut iter = parts.into_iter();
    let mut acc = iter.next().ok_or(FppError::EmptySample)?;
    for p in iter {
        acc = merge(acc, p)?;
    }
    Ok(acc)
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths == 0 {
        return Err(FppError::Domain("at least one path is needed".into()));
    }
    Ok(())
}

/// `n` inter-arrival draws.
pub fn sample_interarrivals(law: &InterArrivalLaw, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_paths(n)?;
    chunked(
        n,
        seed,
        |rng, size| Ok((0..size).map(|_| sample_interarrival(law, rng)).collect::<Vec<f64>>()),
        |mut a, b| {
            a.extend(b);
            Ok(a)
        },
    )
}

/// Histogram of `N(t)` over `n_paths` paths; bin `n` is centred on `n`.
pub fn estimate_counting_pmf(law: &InterArrivalLaw, t: f64, n_paths: usize, seed: u64) -> Result<Histogram> {
    check_positive("t", t)?;
    check_paths(n_paths)?;
    let counts = chunked(
        n_paths,
        seed,
        |rng, size| {
            let mut c: Vec<u64> = Vec::new();
            for _ in 0..size {
                let n = count_until(law, t, rng);
                if n >= c.len() {
                    c.resize(n + 1, 0);
                }
                c[n] += 1;
            }
            Ok(c)
        },
        |mut a, b| {
            if b.len() > a.len() {
                a.resize(b.len(), 0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            Ok(a)
        },
    )?;
    Ok(Histogram {
        bin_start: -0.5,
        bin_width: 1.0,
        counts,
        underflow: 0,
        overflow: 0,
        n_samples: n_paths as u64,
    })
}

/// Layout and acceptance floor for [`estimate_conditional_laws`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalOptions {
    pub u_bin_width: f64,
    pub y_bin_width: f64,
    /// Upper edge of the residual-lifetime histogram; later values go to
    /// the overflow count.
    pub y_range: f64,
    pub min_accepted: usize,
}

impl Default for ConditionalOptions {
    fn default() -> Self {
        ConditionalOptions {
            u_bin_width: 0.05,
            y_bin_width: 0.01,
            y_range: 5.0,
            min_accepted: 1000,
        }
    }
}

/// Empirical laws of `U = T_{n1}` and `Y = T_{n1+1} - t1` given
/// `N(t1) = n1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalSample {
    pub last_epoch: Histogram,
    pub residual: Histogram,
    pub accepted: usize,
    pub simulated: usize,
}

fn bins_for(range: f64, width: f64) -> usize {
    ((range / width - 1e-9).ceil() as usize).max(1)
}

pub fn estimate_conditional_laws(
    law: &InterArrivalLaw,
    t1: f64,
    n1: usize,
    n_paths: usize,
    seed: u64,
    opts: &ConditionalOptions,
) -> Result<ConditionalSample> {
    check_positive("t1", t1)?;
    check_paths(n_paths)?;
    check_positive("u bin width", opts.u_bin_width)?;
    check_positive("y bin width", opts.y_bin_width)?;
    check_positive("y range", opts.y_range)?;
    let u_bins = bins_for(t1, opts.u_bin_width);
    let y_bins = bins_for(opts.y_range, opts.y_bin_width);
    let (u, y) = chunked(
        n_paths,
        seed,
        |rng, size| {
            let mut u = Histogram::new(0.0, opts.u_bin_width, u_bins)?;
            let mut y = Histogram::new(0.0, opts.y_bin_width, y_bins)?;
            for _ in 0..size {
                // stop at the first epoch past t1, or as soon as too many
                // epochs fall before it
                let mut last = 0.0;
                let mut n = 0;
                loop {
                    let next = last + sample_interarrival(law, rng);
                    if next > t1 {
                        if n == n1 {
                            u.add(last);
                            y.add(next - t1);
                        }
                        break;
                    }
                    n += 1;
                    if n > n1 {
                        break;
                    }
                    last = next;
                }
            }
            Ok((u, y))
        },
        |(mut ua, mut ya), (ub, yb)| {
            ua.merge(&ub)?;
            ya.merge(&yb)?;
            Ok((ua, ya))
        },
    )?;
    let accepted = u.n_samples as usize;
    if accepted < opts.min_accepted {
        return Err(FppError::InsufficientAcceptance {
            accepted,
            simulated: n_paths,
            required: opts.min_accepted,
        });
    }
    Ok(ConditionalSample {
        last_epoch: u,
        residual: y,
        accepted,
        simulated: n_paths,
    })
}

/// A Monte Carlo probability with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub hits: u64,
    pub n_paths: u64,
}

/// Fraction of paths with `N(t_i) = n_i` for every observation.
pub fn estimate_joint_pmf(
    schedule: &ObservationSchedule,
    law: &InterArrivalLaw,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_paths(n_paths)?;
    let times = schedule.times();
    let counts = schedule.counts();
    let horizon = schedule.last_time();
    let hits = chunked(
        n_paths,
        seed,
        |rng, size| {
            let mut hits = 0u64;
            for _ in 0..size {
                let mut s = 0.0;
                let mut n = 0usize;
                let mut i = 0;
                let mut ok = true;
                // walk epochs, checking each observation as it is passed
                while i < times.len() {
                    let next = s + sample_interarrival(law, rng);
                    while i < times.len() && next > times[i] {
                        if n != counts[i] {
                            ok = false;
                            break;
                        }
                        i += 1;
                    }
                    if !ok || next > horizon || n > counts[counts.len() - 1] {
                        break;
                    }
                    s = next;
                    n += 1;
                }
                if ok && i == times.len() {
                    hits += 1;
                }
            }
            Ok(hits)
        },
        |a, b| Ok(a + b),
    )?;
    let n = n_paths as f64;
    let p = hits as f64 / n;
    Ok(McEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        hits,
        n_paths: n_paths as u64,
    })
}
