//! Diffraction tomography with general experiment paths: Born forward
//! models, Fourier coverage, the Banach indicatrix and reconstruction by
//! filtered backpropagation or inverse NDFT.

pub mod cli;
pub mod config;
pub mod coverage;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod ndft;
pub mod recon;
pub mod sampling;
pub mod scattering;
pub mod special;

pub use error::{Error, Result};
