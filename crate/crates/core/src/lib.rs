//! Spectral solver for the heat equation u_t = Δu + V(x)u with singular
//! inverse-square potentials, posed in the Fourier-weighted spaces PM^k.

pub mod analysis;
pub mod cartesian_backend;
pub mod error;
pub mod picard_solver;
pub mod potential_catalog;
pub mod quadrature;
pub mod radial_convolution;
pub mod special_functions;
pub mod spectral_field;

pub use error::{Error, Result};
