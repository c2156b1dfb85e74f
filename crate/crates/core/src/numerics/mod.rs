//! Shared numerical machinery: adaptive quadrature and grid convolution.

mod gauss;
mod grid;
mod quadrature;

pub use grid::{
    convolve, self_convolve, self_convolve_tracked, GridFunction, SelfConvolution,
    DENSITY_NOISE_FLOOR,
};
pub use gauss::gauss_legendre_5;
pub use quadrature::{integrate, Quadrature, QuadratureResult};
