//! Desk-scale laboratory for the random connection model on the torus:
//! Monte Carlo simulation, periodic-grid Fourier analysis, Ornstein-Zernike
//! deconvolution, and a numerically certified diagram catalogue.

pub mod config;
pub mod diagrams;
pub mod domain;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod oz;
pub mod plan;
pub mod radial;
pub mod scalar;
pub mod sim;
pub mod special;
pub mod unionfind;

pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use kernel::{kernel_normalization, AdjacencyKernel, KernelVariant};
pub use plan::{moment_plan, MomentPlan, MomentRegime};
pub use scalar::Scalar;

/// Concrete f64 aliases for the generic grid layer.
pub type Field = grid::GridField<f64>;
pub type Spectrum = grid::SpectralField<f64>;
pub type Field32 = grid::GridField<f32>;
