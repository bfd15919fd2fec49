use super::field::GridField;
use super::spectral::{fft, ifft};
use crate::error::Result;
use crate::scalar::Scalar;

/// L^p exponent, p in [1, infinity].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }
}

impl From<f64> for Exponent {
    fn from(p: f64) -> Self {
        if p.is_infinite() {
            Exponent::Infinity
        } else {
            assert!(p >= 1.0, "L^p exponent must be >= 1, got {p}");
            Exponent::Finite(p)
        }
    }
}

/// Circular convolution with the h^d volume factor:
/// (f * g)(x) = h^d sum_y f(y) g(x - y).
pub fn convolve<T: Scalar>(f: &GridField<T>, g: &GridField<T>) -> Result<GridField<T>> {
    f.check_shape(g)?;
    let mut sf = fft(f);
    let sg = fft(g);
    for (a, b) in sf.values.iter_mut().zip(&sg.values) {
        *a = *a * *b;
    }
    Ok(ifft(&sf))
}

/// n-fold convolution chain f1 * f2 * ... computed with one spectral pass.
pub fn convolve_many<T: Scalar>(fields: &[&GridField<T>]) -> Result<GridField<T>> {
    assert!(!fields.is_empty());
    let mut acc = fft(fields[0]);
    for g in &fields[1..] {
        fields[0].check_shape(g)?;
        let sg = fft(g);
        for (a, b) in acc.values.iter_mut().zip(&sg.values) {
            *a = *a * *b;
        }
    }
    Ok(ifft(&acc))
}

/// || |x|^a f(x) ||_{L^p} with h^d quadrature; p = infinity returns the grid
/// maximum of |x|^a |f(x)|.
pub fn weighted_norm<T: Scalar>(f: &GridField<T>, a: f64, p: Exponent) -> T {
    assert!(a >= 0.0);
    match p {
        Exponent::Infinity => {
            let mut best = T::zero();
            for lin in 0..f.shape.len() {
                let w = if a == 0.0 {
                    T::one()
                } else {
                    f.radius(lin).powf(T::lit(a))
                };
                best = best.max(w * f.values[lin].abs());
            }
            best
        }
        Exponent::Finite(p) => {
            let mut sum = T::zero();
            for lin in 0..f.shape.len() {
                let w = if a == 0.0 {
                    T::one()
                } else {
                    f.radius(lin).powf(T::lit(a))
                };
                sum += (w * f.values[lin].abs()).powf(T::lit(p));
            }
            (sum * f.cell_volume()).powf(T::lit(1.0 / p))
        }
    }
}

/// Fraction of the absolute mass lying at minimal-image distance >= L/4;
/// the torus-truncation quality diagnostic attached to norm reports.
pub fn tail_fraction<T: Scalar>(f: &GridField<T>) -> T {
    let quarter = f.side() / T::lit(4.0);
    let mut tail = T::zero();
    let mut total = T::zero();
    for lin in 0..f.shape.len() {
        let v = f.values[lin].abs();
        total += v;
        if f.radius(lin) >= quarter {
            tail += v;
        }
    }
    if total == T::zero() {
        T::zero()
    } else {
        tail / total
    }
}

/// Second-moment matrix int x_i x_j f(x) dx, row-major d x d.
pub fn moment_matrix<T: Scalar>(f: &GridField<T>) -> Vec<T> {
    let d = f.shape.d;
    let mut m = vec![T::zero(); d * d];
    for lin in 0..f.shape.len() {
        let x = f.coord(lin);
        let v = f.values[lin];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] += x[i] * x[j] * v;
            }
        }
    }
    let vol = f.cell_volume();
    for e in &mut m {
        *e *= vol;
    }
    m
}

/// Maximum deviation from evenness, max_x |f(x) - f(-x)|.
pub fn evenness_defect<T: Scalar>(f: &GridField<T>) -> T {
    let mut worst = T::zero();
    for lin in 0..f.shape.len() {
        let neg = f.shape.neg(lin);
        worst = worst.max((f.values[lin] - f.values[neg]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_field(d: usize, n: usize, h: f64, seed: u64) -> GridField<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut f = GridField::zeros(d, n, h).unwrap();
        for v in &mut f.values {
            *v = rng.gen_range(-1.0..1.0);
        }
        f
    }

    pub fn direct_convolve(f: &GridField<f64>, g: &GridField<f64>) -> GridField<f64> {
        let mut out = GridField::zeros(f.shape.d, f.shape.n, f.h).unwrap();
        for x in 0..f.shape.len() {
            let mut s = 0.0;
            for y in 0..f.shape.len() {
                s += f.values[y] * g.values[f.shape.sub(x, y)];
            }
            out.values[x] = s * f.cell_volume();
        }
        out
    }

    #[test]
    fn identity_under_point_mass() {
        // f * (h^{-d} delta at origin) = f.
        let f = random_field(2, 8, 0.5, 1);
        let mut delta = GridField::zeros(2, 8, 0.5).unwrap();
        delta.values[0] = 1.0 / delta.cell_volume();
        let conv = convolve(&f, &delta).unwrap();
        for (a, b) in f.values.iter().zip(&conv.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn box_convolution_is_triangle() {
        // Two unit-mass indicators of width w in 1d give a hat of height 1/w.
        let n = 64;
        let h = 0.125;
        let mut f = GridField::zeros(1, n, h).unwrap();
        let width_cells = 8;
        for i in 0..width_cells {
            // center the box on the origin
            let idx = (n + i - width_cells / 2) % n;
            f.values[idx] = 1.0 / (width_cells as f64 * h);
        }
        let conv = convolve(&f, &f).unwrap();
        let peak = conv.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 1.0 / (width_cells as f64 * h)).abs() < 1e-10);
        let oracle = direct_convolve(&f, &f);
        for (a, b) in conv.values.iter().zip(&oracle.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn fft_matches_direct_on_random_fields() {
        for (d, n) in [(1usize, 16usize), (2, 16), (3, 8)] {
            let f = random_field(d, n, 0.3, 10 + d as u64);
            let g = random_field(d, n, 0.3, 20 + d as u64);
            let fast = convolve(&f, &g).unwrap();
            let slow = direct_convolve(&f, &g);
            for (a, b) in fast.values.iter().zip(&slow.values) {
                assert!((a - b).abs() < 1e-10, "d={d}");
            }
        }
    }

    #[test]
    fn convolve_many_matches_pairwise() {
        let f = random_field(2, 16, 0.4, 31);
        let g = random_field(2, 16, 0.4, 32);
        let k = random_field(2, 16, 0.4, 33);
        let chained = convolve_many(&[&f, &g, &k]).unwrap();
        let pair = convolve(&convolve(&f, &g).unwrap(), &k).unwrap();
        for (a, b) in chained.values.iter().zip(&pair.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn weighted_norm_examples() {
        // a = 0, p = 1 on a probability kernel is its mass.
        let k = crate::kernel::AdjacencyKernel::gaussian(2);
        let f = GridField::discretize_kernel(&k, 128, 16.0 / 128.0).unwrap();
        assert!(f.kernel_tag);
        let n1 = weighted_norm(&f, 0.0, Exponent::Finite(1.0));
        assert!((n1 - 1.0).abs() < 1e-9);

        // a = 2, p = 1: second moment of the standard Gaussian is d.
        let m2 = weighted_norm(&f, 2.0, Exponent::Finite(1.0));
        assert!((m2 - 2.0).abs() < 1e-4, "m2 = {m2}");
    }

    #[test]
    fn weighted_norm_homogeneity() {
        let f = random_field(2, 16, 0.5, 77);
        for &c in &[0.5, -3.0, 2.25] {
            let scaled = f.scaled(c);
            for p in [Exponent::Finite(1.0), Exponent::Finite(2.5), Exponent::Infinity] {
                let lhs = weighted_norm(&scaled, 1.5, p);
                let rhs = c.abs() * weighted_norm(&f, 1.5, p);
                assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn moment_matrix_gaussian_is_identity() {
        let k = crate::kernel::AdjacencyKernel::gaussian(2);
        let f = GridField::discretize_kernel(&k, 128, 16.0 / 128.0).unwrap();
        let m = moment_matrix(&f);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m[i * 2 + j] - expect).abs() < 1e-4, "m[{i}{j}] = {}", m[i * 2 + j]);
            }
        }
    }

    #[test]
    fn moment_matrix_disk_d2() {
        // Unit-mass disk of radius R = pi^{-1/2}: int x_1^2 = R^2/4.
        let k = crate::kernel::AdjacencyKernel::disk(2);
        let n = 512;
        let h = 4.0 / n as f64;
        let f = GridField::discretize_kernel(&k, n, h).unwrap();
        let m = moment_matrix(&f);
        let expect = k.radius * k.radius / 4.0;
        assert!((expect - 0.07958).abs() < 1e-4);
        assert!((m[0] - expect).abs() < 3.0 * h * expect, "m00 = {}", m[0]);
        assert!(m[1].abs() < 1e-6);
    }

    #[test]
    fn odd_perturbation_flagged_by_evenness() {
        let k = crate::kernel::AdjacencyKernel::gaussian(2);
        let mut f = GridField::discretize_kernel(&k, 32, 0.5).unwrap();
        assert!(evenness_defect(&f) < 1e-14);
        let idx = f.shape.index(&[1, 2]);
        f.values[idx] += 0.01;
        assert!(evenness_defect(&f) > 5e-3);
    }

    #[test]
    fn tail_fraction_of_compact_kernel_is_zero() {
        let k = crate::kernel::AdjacencyKernel::disk(2);
        let f = GridField::discretize_kernel(&k, 64, 8.0 / 64.0).unwrap();
        assert_eq!(tail_fraction(&f), 0.0);
        let g = GridField::discretize(2, 16, 0.5, |_| 1.0).unwrap();
        assert!(tail_fraction(&g) > 0.1);
    }
}
