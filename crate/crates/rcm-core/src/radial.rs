use crate::error::{Error, Result};
use crate::kernel::AdjacencyKernel;

/// Spherical Bessel function j0(x) = sin(x)/x.
pub fn spherical_j0(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Radial solution of the deconvolution in d = 3 on a continuum k grid:
/// no torus wraparound, suitable for long-range decay fits.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub r: Vec<f64>,
    pub j: Vec<f64>,
    pub lam_tau: Vec<f64>,
    pub j_hat_zero: f64,
}

impl RadialSolution {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.r.iter().cloned().zip(self.lam_tau.iter().cloned()).collect()
    }
}

/// Solve lam_tau = J + F^{-1}[J_hat^2 / (1 - J_hat)] for a radially
/// symmetric J = lambda phi in d = 3 via the Fourier-Bessel transform.
/// The radial grid has n midpoint cells on [0, box_side/2] and the k grid
/// has spacing 2 pi / box_side up to the grid Nyquist frequency.
pub fn radial_green(
    kernel: &AdjacencyKernel,
    lambda: f64,
    box_side: f64,
    n: usize,
) -> Result<RadialSolution> {
    if kernel.d != 3 {
        return Err(Error::Config(format!(
            "radial pipeline is d = 3 only, kernel has d = {}",
            kernel.d
        )));
    }
    assert!(lambda > 0.0 && box_side > 0.0 && n >= 8);
    let r_max = box_side / 2.0;
    let dr = r_max / n as f64;
    let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dr).collect();
    let j: Vec<f64> = r
        .iter()
        .map(|&ri| Ok(lambda * kernel.eval_radial(ri)?))
        .collect::<Result<_>>()?;

    let dk = 2.0 * std::f64::consts::PI / box_side;
    let k_nyquist = std::f64::consts::PI / dr;
    let mut k = Vec::new();
    let mut kk = dk / 2.0;
    while kk < k_nyquist {
        k.push(kk);
        kk += dk;
    }

    // J_hat(k) = 4 pi int r^2 j0(kr) J(r) dr.
    let hat = |kk: f64| -> f64 {
        let mut s = 0.0;
        for (ri, ji) in r.iter().zip(&j) {
            s += ri * ri * spherical_j0(kk * ri) * ji;
        }
        4.0 * std::f64::consts::PI * s * dr
    };
    let j_hat_zero = hat(0.0);
    if j_hat_zero > 1.0 + 1e-9 {
        return Err(Error::SupercriticalKernel(j_hat_zero));
    }
    let mut spectral_tail = Vec::with_capacity(k.len());
    for &kk in &k {
        let h = hat(kk);
        if h >= 1.0 {
            return Err(Error::NonInvertibleKernel(vec![kk], h));
        }
        spectral_tail.push(h * h / (1.0 - h));
    }

    // Inverse transform: tail(r) = (1 / 2 pi^2) int k^2 j0(kr) S(k) dk.
    let lam_tau: Vec<f64> = r
        .iter()
        .zip(&j)
        .map(|(&ri, &ji)| {
            let mut s = 0.0;
            for (&kk, &sk) in k.iter().zip(&spectral_tail) {
                s += kk * kk * spherical_j0(kk * ri) * sk;
            }
            ji + s * dk / (2.0 * std::f64::consts::PI * std::f64::consts::PI)
        })
        .collect();

    Ok(RadialSolution {
        r,
        j,
        lam_tau,
        j_hat_zero,
    })
}
