pub mod field;
pub mod ops;
pub mod spectral;

pub use field::{GridField, GridShape};
pub use ops::{convolve, convolve_many, moment_matrix, tail_fraction, weighted_norm, Exponent};
pub use spectral::{fft, ifft, SpectralField};
