use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::kernel::AdjacencyKernel;
use crate::scalar::Scalar;

/// Shape of a periodic uniform grid: n points per axis, spacing h, d axes.
/// Site index 0 is the origin; site coordinates use the minimal image, so
/// axis index j maps to coordinate j*h for j <= n/2 and (j-n)*h beyond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub d: usize,
    pub n: usize,
}

impl GridShape {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if n % 2 != 0 || n == 0 {
            return Err(Error::OddGridSize(n));
        }
        assert!(d >= 1);
        Ok(GridShape { d, n })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major linear index of a multi-index.
    pub fn index(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for &i in idx {
            lin = lin * self.n + i;
        }
        lin
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.d];
        for ax in (0..self.d).rev() {
            idx[ax] = lin % self.n;
            lin /= self.n;
        }
        idx
    }

    /// Signed minimal-image integer coordinate of an axis index, in (-n/2, n/2].
    pub fn signed(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Linear index of the difference site a - b (mod n per axis).
    pub fn sub(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let mut stride = 1;
        let mut out = 0;
        for _ in 0..self.d {
            let ai = a % self.n;
            let bi = b % self.n;
            out += ((ai + self.n - bi) % self.n) * stride;
            stride *= self.n;
            a /= self.n;
            b /= self.n;
        }
        out
    }

    /// Linear index of the sum site a + b (mod n per axis).
    pub fn add(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let mut stride = 1;
        let mut out = 0;
        for _ in 0..self.d {
            let ai = a % self.n;
            let bi = b % self.n;
            out += ((ai + bi) % self.n) * stride;
            stride *= self.n;
            a /= self.n;
            b /= self.n;
        }
        out
    }

    /// Linear index of the negation -a (mod n per axis).
    pub fn neg(&self, a: usize) -> usize {
        self.sub(0, a)
    }
}

/// Real-valued function sampled on a periodic uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<T> {
    pub shape: GridShape,
    pub h: T,
    pub values: Vec<T>,
    /// Set when the field is the discretization of an adjacency kernel with
    /// mass within 1e-9 of 1 (values >= 0, h^d * sum = 1 +- 1e-9).
    pub kernel_tag: bool,
}

impl<T: Scalar> GridField<T> {
    pub fn zeros(d: usize, n: usize, h: T) -> Result<Self> {
        let shape = GridShape::new(d, n)?;
        Ok(GridField {
            shape,
            h,
            values: vec![T::zero(); shape.len()],
            kernel_tag: false,
        })
    }

    pub fn side(&self) -> T {
        self.h * T::from_usize_(self.shape.n)
    }

    pub fn cell_volume(&self) -> T {
        self.h.powi(self.shape.d as i32)
    }

    /// Minimal-image coordinate vector of a linear site index.
    pub fn coord(&self, lin: usize) -> Vec<T> {
        self.shape
            .multi_index(lin)
            .iter()
            .map(|&i| T::from_f64(self.shape.signed(i) as f64).unwrap() * self.h)
            .collect()
    }

    /// Minimal-image Euclidean distance of a site from the origin.
    pub fn radius(&self, lin: usize) -> T {
        let mut r2 = T::zero();
        let mut rem = lin;
        let n = self.shape.n;
        for _ in 0..self.shape.d {
            let i = rem % n;
            rem /= n;
            let s = T::from_f64(self.shape.signed(i) as f64).unwrap() * self.h;
            r2 += s * s;
        }
        r2.sqrt()
    }

    /// h^d * sum of values.
    pub fn mass(&self) -> T {
        let s: T = self.values.iter().copied().sum();
        s * self.cell_volume()
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        out.kernel_tag = false;
        for v in &mut out.values {
            *v *= c;
        }
        out
    }

    pub fn add_field(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.kernel_tag = false;
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v += *w;
        }
        Ok(out)
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape || self.h != other.h {
            return Err(Error::ShapeMismatch(format!(
                "{:?} h={} vs {:?} h={}",
                self.shape, self.h, other.shape, other.h
            )));
        }
        Ok(())
    }

    /// Midpoint sampling of a function of the minimal-image coordinate.
    pub fn discretize(d: usize, n: usize, h: T, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let mut field = Self::zeros(d, n, h)?;
        let coords: Vec<Vec<T>> = (0..field.shape.len()).map(|i| field.coord(i)).collect();
        for (v, c) in field.values.iter_mut().zip(&coords) {
            *v = f(c);
        }
        Ok(field)
    }

    /// L^2 norm with h^d quadrature.
    pub fn l2_norm(&self) -> T {
        let s: T = self.values.iter().map(|&v| v * v).sum();
        (s * self.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }
}

impl GridField<f64> {
    /// Midpoint sampling of an adjacency kernel on the torus of side n*h.
    /// Sets the probability-kernel tag when the discrete mass is within
    /// 1e-9 of 1 (smooth kernels on fine grids; indicator kernels keep an
    /// O(h) quadrature error and stay untagged).
    pub fn discretize_kernel(kernel: &AdjacencyKernel, n: usize, h: f64) -> Result<Self> {
        let d = kernel.d;
        let mut field = Self::zeros(d, n, h)?;
        for i in 0..field.shape.len() {
            let x = field.coord(i);
            field.values[i] = kernel.eval(&x)?;
        }
        let mass = field.mass();
        field.kernel_tag = (mass - 1.0).abs() <= 1e-9;
        Ok(field)
    }

    pub fn domain(&self) -> BoxDomain {
        BoxDomain::new(self.shape.d, self.side())
    }
}
