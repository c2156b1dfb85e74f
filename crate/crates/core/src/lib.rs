//! Numerical toolkit for the fractional Poisson process.
//!
//! The process is the renewal counting process whose inter-arrival times have
//! survival function `E_β(-t^β)`, `0 < β ≤ 1`; `β = 1` is the Poisson process.

pub mod error;
pub mod fidi;
pub mod montecarlo;
pub mod numerics;
pub mod renewal;
pub mod special_functions;
pub mod stable_law;
pub mod validation;

pub use error::{FppError, Result};
pub use special_functions::{FractionalOrder, MittagLeffler, MlEvaluation, MlMethod};
pub use renewal::{CountingPmf, InterArrivalLaw};
