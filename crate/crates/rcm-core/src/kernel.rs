use crate::error::{Error, Result};
use crate::special;

/// Truncation threshold for kernels with unbounded support: pairs with
/// phi(r) below this never receive edges.
pub const CUTOFF_DENSITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum KernelVariant {
    Disk,
    Gaussian,
    Tabulated,
}

/// Radial samples at r_i = i * dr, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    pub dr: f64,
    pub values: Vec<f64>,
}

impl RadialTable {
    pub fn r_max(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dr
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r > self.r_max() {
            return Err(Error::OutOfTableRange(r));
        }
        let t = r / self.dr;
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - i as f64;
        Ok(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }
}

/// Symmetric edge-probability function phi: R^d -> [0, 1], normalized to
/// integrate to 1. Radially symmetric in all shipped variants.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyKernel {
    pub d: usize,
    pub variant: KernelVariant,
    /// Support radius of the disk variant (unit-volume ball).
    pub radius: f64,
    /// Effective support radius used by the samplers.
    pub r_cut: f64,
    pub table: Option<RadialTable>,
}

/// Radial quadrature of a [0, r_max] profile: s_d int r^{d-1} f(r) dr,
/// composite midpoint rule.
pub fn radial_integral(d: usize, r_max: f64, steps: usize, f: impl Fn(f64) -> f64) -> f64 {
    let dr = r_max / steps as f64;
    let mut sum = 0.0;
    for i in 0..steps {
        let r = (i as f64 + 0.5) * dr;
        sum += r.powi(d as i32 - 1) * f(r);
    }
    special::sphere_surface(d) * sum * dr
}

impl AdjacencyKernel {
    /// Indicator of the ball of unit volume.
    pub fn disk(d: usize) -> Self {
        let radius = special::unit_ball_radius(d);
        AdjacencyKernel {
            d,
            variant: KernelVariant::Disk,
            radius,
            r_cut: radius,
            table: None,
        }
    }

    /// Standard Gaussian density (2 pi)^{-d/2} exp(-|x|^2 / 2).
    pub fn gaussian(d: usize) -> Self {
        let peak = (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0);
        let r_cut = (2.0 * (peak / CUTOFF_DENSITY).ln()).sqrt();
        AdjacencyKernel {
            d,
            variant: KernelVariant::Gaussian,
            radius: 0.0,
            r_cut,
            table: None,
        }
    }

    /// Radially tabulated kernel. Rejects values outside [0, 1] and tables
    /// whose radial integral differs from 1 by more than `tol`.
    pub fn tabulated(d: usize, dr: f64, values: Vec<f64>, tol: f64) -> Result<Self> {
        if dr <= 0.0 || values.len() < 2 {
            return Err(Error::InvalidKernel("table needs dr > 0 and >= 2 samples".into()));
        }
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v) || !v.is_finite()) {
            return Err(Error::InvalidKernel("table values must lie in [0, 1]".into()));
        }
        let table = RadialTable { dr, values };
        let mass = table_normalization(d, &table);
        if (mass - 1.0).abs() > tol {
            return Err(Error::NormalizationFailed(format!(
                "tabulated kernel integrates to {mass}, expected 1"
            )));
        }
        let r_cut = effective_cut(&table);
        Ok(AdjacencyKernel {
            d,
            variant: KernelVariant::Tabulated,
            radius: 0.0,
            r_cut,
            table: Some(table),
        })
    }

    pub fn eval_radial(&self, r: f64) -> Result<f64> {
        match self.variant {
            KernelVariant::Disk => Ok(if r <= self.radius { 1.0 } else { 0.0 }),
            KernelVariant::Gaussian => {
                let peak = (2.0 * std::f64::consts::PI).powf(-(self.d as f64) / 2.0);
                Ok(peak * (-r * r / 2.0).exp())
            }
            KernelVariant::Tabulated => self.table.as_ref().unwrap().eval(r),
        }
    }

    /// phi(x), even in x by radial symmetry.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        assert_eq!(x.len(), self.d);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.eval_radial(r)
    }

    /// Analytic Fourier transform when known, as a function of |k|.
    pub fn analytic_hat(&self, k_abs: f64) -> Option<f64> {
        match self.variant {
            KernelVariant::Disk if self.d <= 3 => {
                Some(special::disk_hat_radial(self.d, k_abs * self.radius))
            }
            KernelVariant::Gaussian => Some(special::gaussian_hat_radial(k_abs)),
            _ => None,
        }
    }
}

fn effective_cut(table: &RadialTable) -> f64 {
    let mut r_cut = table.r_max();
    for (i, &v) in table.values.iter().enumerate().rev() {
        if v >= CUTOFF_DENSITY {
            r_cut = (i as f64 * table.dr).min(table.r_max());
            break;
        }
    }
    r_cut
}

pub fn table_normalization(d: usize, table: &RadialTable) -> f64 {
    radial_integral(d, table.r_max(), 200_000, |r| table.eval(r).unwrap())
}

/// Numerical integral of phi over R^d; a self-test that must return 1
/// within quadrature tolerance.
pub fn kernel_normalization(kernel: &AdjacencyKernel) -> Result<f64> {
    let value = match kernel.variant {
        KernelVariant::Disk => {
            // Unit-volume ball by construction.
            special::ball_volume(kernel.d) * kernel.radius.powi(kernel.d as i32)
        }
        KernelVariant::Gaussian => radial_integral(kernel.d, kernel.r_cut + 4.0, 400_000, |r| {
            kernel.eval_radial(r).unwrap()
        }),
        KernelVariant::Tabulated => table_normalization(kernel.d, kernel.table.as_ref().unwrap()),
    };
    if !value.is_finite() {
        return Err(Error::NormalizationFailed("divergent quadrature".into()));
    }
    Ok(value)
}
