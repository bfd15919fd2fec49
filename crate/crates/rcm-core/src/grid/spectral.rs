use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use super::field::{GridField, GridShape};
use crate::scalar::Scalar;

/// Fourier coefficients with the convention f_hat(k) = int f(x) e^{+ik x} dx.
/// Mode index m on an axis carries wavenumber k = 2 pi s(m) / (n h) with s
/// the signed minimal-image integer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    pub shape: GridShape,
    pub h: T,
    pub values: Vec<Complex<T>>,
}

impl<T: Scalar> SpectralField<T> {
    pub fn zeros(d: usize, n: usize, h: T) -> crate::error::Result<Self> {
        let shape = GridShape::new(d, n)?;
        Ok(SpectralField {
            shape,
            h,
            values: vec![Complex::new(T::zero(), T::zero()); shape.len()],
        })
    }

    pub fn zero_mode(&self) -> Complex<T> {
        self.values[0]
    }

    /// Wavevector of a linear mode index.
    pub fn wavevector(&self, lin: usize) -> Vec<T> {
        let dk = T::lit(2.0) * T::PI() / (self.h * T::from_usize_(self.shape.n));
        self.shape
            .multi_index(lin)
            .iter()
            .map(|&m| T::from_f64(self.shape.signed(m) as f64).unwrap() * dk)
            .collect()
    }

    pub fn wavevector_norm2(&self, lin: usize) -> T {
        let dk = T::lit(2.0) * T::PI() / (self.h * T::from_usize_(self.shape.n));
        let mut s = T::zero();
        let mut rem = lin;
        for _ in 0..self.shape.d {
            let m = rem % self.shape.n;
            rem /= self.shape.n;
            let k = T::from_f64(self.shape.signed(m) as f64).unwrap() * dk;
            s += k * k;
        }
        s
    }
}

/// In-place d-dimensional DFT along every axis.
fn dft_all_axes<T: Scalar>(shape: GridShape, data: &mut [Complex<T>], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft(shape.n, direction);
    let n = shape.n;
    let total = shape.len();
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for axis in 0..shape.d {
        // Row-major layout: stride of `axis` is n^(d-1-axis).
        let stride = n.pow((shape.d - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for j in 0..n {
                    line[j] = data[start + j * stride];
                }
                fft.process(&mut line);
                for j in 0..n {
                    data[start + j * stride] = line[j];
                }
            }
        }
    }
}

/// Forward transform in the continuum convention: f_hat(k) = int f e^{+ikx} dx,
/// realized as the inverse-direction DFT times h^d.
pub fn fft<T: Scalar>(field: &GridField<T>) -> SpectralField<T> {
    let mut data: Vec<Complex<T>> = field
        .values
        .iter()
        .map(|&v| Complex::new(v, T::zero()))
        .collect();
    dft_all_axes(field.shape, &mut data, FftDirection::Inverse);
    let vol = field.cell_volume();
    for v in &mut data {
        *v = *v * vol;
    }
    SpectralField {
        shape: field.shape,
        h: field.h,
        values: data,
    }
}

/// Inverse transform: f(x) = int f_hat e^{-ikx} dk/(2pi)^d, realized as the
/// forward-direction DFT divided by n^d h^d. Returns the real part.
pub fn ifft<T: Scalar>(spec: &SpectralField<T>) -> GridField<T> {
    let mut data = spec.values.clone();
    dft_all_axes(spec.shape, &mut data, FftDirection::Forward);
    let norm = (T::from_usize_(spec.shape.len()) * spec.h.powi(spec.shape.d as i32)).recip();
    GridField {
        shape: spec.shape,
        h: spec.h,
        values: data.iter().map(|v| v.re * norm).collect(),
        kernel_tag: false,
    }
}
