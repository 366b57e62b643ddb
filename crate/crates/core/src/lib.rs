//! Fourier-space series solution of the incompressible Navier-Stokes
//! equations on a truncated frequency lattice, with the checks it rests on.

pub mod assembly;
pub mod calibration;
pub mod caloric;
pub mod convolution;
pub mod dump;
pub mod experiment;
pub mod error;
pub mod extension;
pub mod fft;
pub mod field;
pub mod grid;
pub mod inequalities;
pub mod math;
pub mod oracle;
pub mod series;

pub use error::{Error, Result};
