use crate::error::{Error, Result};
use crate::grid::{convolve, fft, ifft, GridField, GridShape, SpectralField};
use crate::Field;

/// Default cell budget for two-point objects (n^{2d} cells).
pub const DEFAULT_BUDGET_CELLS: usize = 1 << 24;

/// Function of two torus points (w, u), stored as a 2d-dimensional grid
/// field: the first d axes index w, the last d axes index u.
#[derive(Debug, Clone)]
pub struct BiField {
    pub half: GridShape,
    pub field: Field,
}

pub fn check_budget(d: usize, n: usize, budget_cells: usize) -> Result<usize> {
    let cells = n
        .checked_pow(2 * d as u32)
        .ok_or(Error::GridTooLarge {
            needed: usize::MAX,
            budget: budget_cells,
        })?;
    if cells > budget_cells {
        return Err(Error::GridTooLarge {
            needed: cells,
            budget: budget_cells,
        });
    }
    Ok(cells)
}

impl BiField {
    pub fn zeros(d: usize, n: usize, h: f64, budget_cells: usize) -> Result<Self> {
        check_budget(d, n, budget_cells)?;
        Ok(BiField {
            half: GridShape::new(d, n)?,
            field: GridField::zeros(2 * d, n, h)?,
        })
    }

    pub fn like(other: &BiField) -> Self {
        BiField {
            half: other.half,
            field: GridField::zeros(2 * other.half.d, other.half.n, other.field.h).unwrap(),
        }
    }

    pub fn half_len(&self) -> usize {
        self.half.len()
    }

    pub fn at(&self, w: usize, u: usize) -> f64 {
        self.field.values[w * self.half_len() + u]
    }

    pub fn at_mut(&mut self, w: usize, u: usize) -> &mut f64 {
        let len = self.half_len();
        &mut self.field.values[w * len + u]
    }

    /// Outer product f(w) g(u).
    pub fn outer(f: &Field, g: &Field, budget_cells: usize) -> Result<Self> {
        f.check_shape(g)?;
        let mut out = Self::zeros(f.shape.d, f.shape.n, f.h, budget_cells)?;
        let len = out.half_len();
        for w in 0..len {
            for u in 0..len {
                out.field.values[w * len + u] = f.values[w] * g.values[u];
            }
        }
        Ok(out)
    }

    /// Transpose: out(w, u) = self(u, w).
    pub fn swap(&self) -> Self {
        let mut out = Self::like(self);
        let len = self.half_len();
        for w in 0..len {
            for u in 0..len {
                out.field.values[w * len + u] = self.field.values[u * len + w];
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Self {
        BiField {
            half: self.half,
            field: self.field.scaled(c),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(BiField {
            half: self.half,
            field: self.field.add_field(&other.field)?,
        })
    }

    /// out(w, u) = int k(w - r) self(r, u) dr: convolution along the first
    /// argument only, via a 2d-dimensional convolution against k tensor a
    /// convolution identity in the second slot.
    pub fn conv_first(&self, k: &Field) -> Self {
        let kernel = self.lift_kernel(k, true);
        BiField {
            half: self.half,
            field: convolve(&self.field, &kernel).expect("shapes match"),
        }
    }

    /// out(w, u) = int k(u - s) self(w, s) ds.
    pub fn conv_second(&self, k: &Field) -> Self {
        let kernel = self.lift_kernel(k, false);
        BiField {
            half: self.half,
            field: convolve(&self.field, &kernel).expect("shapes match"),
        }
    }

    fn lift_kernel(&self, k: &Field, first: bool) -> Field {
        assert_eq!(k.shape, self.half);
        let mut out: Field =
            GridField::zeros(2 * self.half.d, self.half.n, self.field.h).unwrap();
        let len = self.half_len();
        let spike = 1.0 / k.cell_volume();
        for i in 0..len {
            let lin = if first { i * len } else { i };
            out.values[lin] = k.values[i] * spike;
        }
        out
    }

    /// Pointwise multiply by k(u - w).
    pub fn mul_diff(&self, k: &Field) -> Self {
        assert_eq!(k.shape, self.half);
        let mut out = self.clone();
        let len = self.half_len();
        for w in 0..len {
            for u in 0..len {
                out.field.values[w * len + u] *= k.values[self.half.sub(u, w)];
            }
        }
        out
    }

    /// Diagonal restriction D(x) = self(x, x).
    pub fn diag(&self) -> Field {
        let mut out: Field = GridField::zeros(self.half.d, self.half.n, self.field.h).unwrap();
        let len = self.half_len();
        for x in 0..len {
            out.values[x] = self.field.values[x * len + x];
        }
        out
    }

    /// Double integral over both arguments.
    pub fn integral(&self) -> f64 {
        self.field.mass()
    }

    pub fn max_abs(&self) -> f64 {
        self.field.max_abs()
    }

    /// T(w, u) = int a(t) b(w - t) c(u - t) dt, the one-vertex wedge with
    /// two free endpoints, via the spectral identity
    /// T_hat(k1, k2) = a_hat(k1 + k2) b_hat(k1) c_hat(k2).
    pub fn wedge(a: &Field, b: &Field, c: &Field, budget_cells: usize) -> Result<Self> {
        a.check_shape(b)?;
        a.check_shape(c)?;
        check_budget(a.shape.d, a.shape.n, budget_cells)?;
        let (sa, sb, sc) = (fft(a), fft(b), fft(c));
        let mut spec: SpectralField<f64> =
            SpectralField::zeros(2 * a.shape.d, a.shape.n, a.h)?;
        let len = a.shape.len();
        for m1 in 0..len {
            let b1 = sb.values[m1];
            for m2 in 0..len {
                spec.values[m1 * len + m2] =
                    sa.values[a.shape.add(m1, m2)] * b1 * sc.values[m2];
            }
        }
        Ok(BiField {
            half: a.shape,
            field: ifft(&spec),
        })
    }
}
