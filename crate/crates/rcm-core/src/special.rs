//! Small special-function toolkit: Gamma-based geometric constants and the
//! Bessel-type radial Fourier transforms of the disk kernel.

use statrs::function::gamma::gamma;

/// Volume of the unit ball in dimension d.
pub fn ball_volume(d: usize) -> f64 {
    let d = d as f64;
    std::f64::consts::PI.powf(d / 2.0) / gamma(d / 2.0 + 1.0)
}

/// Radius of the ball of unit volume: R_d = pi^{-1/2} Gamma(d/2+1)^{1/d}.
pub fn unit_ball_radius(d: usize) -> f64 {
    let df = d as f64;
    gamma(df / 2.0 + 1.0).powf(1.0 / df) / std::f64::consts::PI.sqrt()
}

/// Surface area of the unit sphere S^{d-1} in R^d.
pub fn sphere_surface(d: usize) -> f64 {
    let df = d as f64;
    2.0 * std::f64::consts::PI.powf(df / 2.0) / gamma(df / 2.0)
}

/// a_d = Gamma((d-2)/2) / (2 pi^{d/2}), the Green's-function amplitude.
pub fn green_amplitude(d: usize) -> f64 {
    let df = d as f64;
    gamma((df - 2.0) / 2.0) / (2.0 * std::f64::consts::PI.powf(df / 2.0))
}

/// Bessel function J_1, via the power series for small argument and the
/// Abramowitz-Stegun 9.4.6 rational approximation beyond it (|err| < 4e-8).
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 12.0 {
        // J_1(x) = sum_k (-1)^k (x/2)^{2k+1} / (k! (k+1)!)
        let half = x / 2.0;
        let mut term = half;
        let mut sum = term;
        for k in 1..60 {
            term *= -half * half / (k as f64 * (k as f64 + 1.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        let z = 3.0 / ax;
        let f = 0.797_884_56
            + z * (0.000_001_56
                + z * (0.016_596_67
                    + z * (0.000_171_05
                        + z * (-0.002_495_11
                            + z * (0.001_136_53 + z * (-0.000_200_33))))));
        let theta = ax - 2.356_194_491
            + z * (0.124_996_12
                + z * (0.000_056_50
                    + z * (-0.006_378_79
                        + z * (0.000_743_48
                            + z * (0.000_798_24 + z * (-0.000_291_66))))));
        let val = f * theta.cos() / ax.sqrt();
        if x < 0.0 {
            -val
        } else {
            val
        }
    }
}

/// Fourier transform of the unit-volume ball indicator in dimension d,
/// as a function of u = |k| * R_d. Normalized so the value at u = 0 is 1.
/// Closed forms: d=1 sin(u)/u, d=2 2 J_1(u)/u, d=3 3(sin u - u cos u)/u^3.
pub fn disk_hat_radial(d: usize, u: f64) -> f64 {
    let u = u.abs();
    if u < 1e-8 {
        // Gamma(d/2+1) (2/u)^{d/2} J_{d/2}(u) = 1 - u^2/(2d+4) + O(u^4)
        return 1.0 - u * u / (2.0 * d as f64 + 4.0);
    }
    match d {
        1 => u.sin() / u,
        2 => 2.0 * bessel_j1(u) / u,
        3 => 3.0 * (u.sin() - u * u.cos()) / (u * u * u),
        _ => panic!("disk_hat_radial implemented for d <= 3, got {d}"),
    }
}

/// Fourier transform of the standard Gaussian kernel, as a function of |k|.
pub fn gaussian_hat_radial(k: f64) -> f64 {
    (-k * k / 2.0).exp()
}
