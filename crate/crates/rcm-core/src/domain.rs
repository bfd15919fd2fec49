use serde::{Deserialize, Serialize};

/// Periodic box [0, L)^d; all displacements use the minimal image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub d: usize,
    pub side: f64,
    pub periodic: bool,
}

impl BoxDomain {
    pub fn new(d: usize, side: f64) -> Self {
        assert!(d >= 1 && side > 0.0);
        BoxDomain {
            d,
            side,
            periodic: true,
        }
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    /// Minimal-image displacement from a to b, componentwise in (-L/2, L/2].
    pub fn min_image(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(&ai, &bi)| {
                let mut dx = bi - ai;
                dx -= self.side * (dx / self.side).round();
                dx
            })
            .collect()
    }

    pub fn min_image_dist(&self, a: &[f64], b: &[f64]) -> f64 {
        self.min_image(a, b)
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_image_wraps() {
        let dom = BoxDomain::new(2, 10.0);
        let d = dom.min_image(&[0.5, 0.5], &[9.5, 0.5]);
        assert!((d[0] - (-1.0)).abs() < 1e-12);
        assert!(d[1].abs() < 1e-12);
        assert!((dom.min_image_dist(&[0.0, 0.0], &[5.0, 5.0]) - 50f64.sqrt()).abs() < 1e-12);
    }
}
