use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{convolve, convolve_many, weighted_norm, Exponent};
use crate::Field;

/// Relative slack accepted when certifying lhs <= rhs.
pub const CERT_SLACK: f64 = 1e-9;

/// |x|^a f(x).
pub fn weighted(f: &Field, a: f64) -> Field {
    assert!(a >= 0.0);
    if a == 0.0 {
        return f.clone();
    }
    let mut out = f.clone();
    out.kernel_tag = false;
    for lin in 0..out.shape.len() {
        out.values[lin] *= out.radius(lin).powf(a);
    }
    out
}

/// tilde tau = phi + lambda (phi * tau), the standard upper bound on tau.
pub fn tilde_tau(tau: &Field, phi: &Field, lambda: f64) -> Result<Field> {
    phi.add_field(&convolve(phi, tau)?.scaled(lambda))
}

/// An edge of a diagram: a base field weighted by |x|^weight, possibly
/// carrying an analytic delta part (the contractible edge, coefficient
/// 1/lambda) that is never materialized on the grid.
#[derive(Debug, Clone)]
pub struct WeightedEdge {
    pub base: Field,
    pub weight: f64,
    pub delta: Option<f64>,
}

impl WeightedEdge {
    pub fn new(base: Field, weight: f64) -> Self {
        assert!(weight >= 0.0);
        WeightedEdge {
            base,
            weight,
            delta: None,
        }
    }

    pub fn contracted(base: Field, weight: f64, lambda: f64) -> Self {
        assert!(weight >= 0.0 && lambda > 0.0);
        WeightedEdge {
            base,
            weight,
            delta: Some(1.0 / lambda),
        }
    }

    pub fn contractible(&self) -> bool {
        self.delta.is_some()
    }
}

/// || |x|^a base ||_{L^s}. The weighted delta part |x|^a delta vanishes for
/// a > 0; for a = 0 a contractible edge has no finite norm in any L^s.
pub fn edge_sup(e: &WeightedEdge, s: Exponent) -> Result<f64> {
    if e.contractible() && e.weight == 0.0 {
        return Err(Error::DeltaDivergent);
    }
    Ok(weighted_norm(&e.base, e.weight, s))
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifiedInequality {
    pub lhs_name: String,
    pub rhs_expr: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn certify(lhs_name: &str, rhs_expr: &str, lhs: f64, rhs: f64) -> CertifiedInequality {
    CertifiedInequality {
        lhs_name: lhs_name.to_string(),
        rhs_expr: rhs_expr.to_string(),
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + CERT_SLACK) + f64::MIN_POSITIVE,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagramReport {
    pub name: String,
    pub value: f64,
    pub sup_location: Vec<f64>,
    /// Offset-scan spacing behind the sup (grid spacing when exact).
    pub scan_resolution: f64,
    pub certified: Vec<CertifiedInequality>,
}

fn reflect(f: &Field) -> Field {
    let mut out = f.clone();
    for lin in 0..f.shape.len() {
        out.values[lin] = f.values[f.shape.neg(lin)];
    }
    out
}

fn abs_pow(f: &Field, p: f64) -> Field {
    let mut out = f.clone();
    out.kernel_tag = false;
    for v in &mut out.values {
        *v = v.abs().powf(p);
    }
    out
}

/// W_p^{(a,b)}(u) = || f(x) g(u+x) ||_{L^p_x} with f, g the weighted edge
/// fields, at the grid offset with linear index u.
pub fn bubble_w(t1: &WeightedEdge, t2: &WeightedEdge, p: Exponent, u: usize) -> Result<f64> {
    assert!(!t1.contractible() && !t2.contractible());
    t1.base.check_shape(&t2.base)?;
    let f = weighted(&t1.base, t1.weight);
    let g = weighted(&t2.base, t2.weight);
    let shape = f.shape;
    Ok(match p {
        Exponent::Infinity => {
            let mut best: f64 = 0.0;
            for x in 0..shape.len() {
                best = best.max((f.values[x] * g.values[shape.add(u, x)]).abs());
            }
            best
        }
        Exponent::Finite(p) => {
            let mut sum = 0.0;
            for x in 0..shape.len() {
                sum += (f.values[x] * g.values[shape.add(u, x)]).abs().powf(p);
            }
            (sum * f.cell_volume()).powf(1.0 / p)
        }
    })
}

/// sup_u W_p^{(a,b)}(u), exact over every grid offset: for finite p the
/// per-offset norm is the correlation of |f|^p with |g|^p, computed in one
/// FFT pass; for p = infinity it factorizes into a product of sups.
pub fn w_bar(t1: &WeightedEdge, t2: &WeightedEdge, p: Exponent) -> Result<DiagramReport> {
    assert!(!t1.contractible() && !t2.contractible());
    t1.base.check_shape(&t2.base)?;
    let f = weighted(&t1.base, t1.weight);
    let g = weighted(&t2.base, t2.weight);
    let (value, loc) = match p {
        Exponent::Infinity => {
            let (mut fx, mut gx) = (0usize, 0usize);
            for lin in 0..f.shape.len() {
                if f.values[lin].abs() > f.values[fx].abs() {
                    fx = lin;
                }
                if g.values[lin].abs() > g.values[gx].abs() {
                    gx = lin;
                }
            }
            (
                f.values[fx].abs() * g.values[gx].abs(),
                f.shape.sub(gx, fx),
            )
        }
        Exponent::Finite(p) => {
            let corr = convolve(&reflect(&abs_pow(&f, p)), &abs_pow(&g, p))?;
            let mut best = 0;
            for lin in 0..corr.shape.len() {
                if corr.values[lin] > corr.values[best] {
                    best = lin;
                }
            }
            (corr.values[best].max(0.0).powf(1.0 / p), best)
        }
    };
    Ok(DiagramReport {
        name: "W_bar".into(),
        value,
        sup_location: f.coord(loc),
        scan_resolution: f.h,
        certified: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TriangleReport {
    /// sup_u lambda^2 (tau^{(b)} * tau * tau)(u).
    pub t_bar: f64,
    /// Open variant with one tilde-tau factor.
    pub t_bar_open: f64,
    /// B_1^{(b,0)} = lambda || tau^{(b)} * tau ||_inf.
    pub b1: f64,
    /// B_1^{(0,0)} = lambda || tau * tau ||_inf.
    pub b1_00: f64,
    /// Contracted triangle T^{(b),o} = T_bar + B_1^{(b,0)} + B_1^{(0,0)}.
    pub t_circ: f64,
    pub sup_location: Vec<f64>,
}

pub fn triangle_t(b: f64, tau: &Field, tilde: &Field, lambda: f64) -> Result<TriangleReport> {
    let tau_b = weighted(tau, b);
    let tri = convolve_many(&[&tau_b, tau, tau])?;
    let mut best = 0;
    for lin in 0..tri.shape.len() {
        if tri.values[lin] > tri.values[best] {
            best = lin;
        }
    }
    let t_bar = lambda * lambda * tri.values[best].max(0.0);
    let open = convolve_many(&[&tau_b, tilde, tau])?;
    let t_bar_open = lambda * lambda * open.values.iter().cloned().fold(0.0, f64::max);
    let b1 = lambda * convolve(&tau_b, tau)?.max_abs();
    let b1_00 = lambda * convolve(tau, tau)?.max_abs();
    Ok(TriangleReport {
        t_bar,
        t_bar_open,
        b1,
        b1_00,
        t_circ: t_bar + b1 + b1_00,
        sup_location: tri.coord(best),
    })
}

/// lambda^3 || tau * tau * tau * tau ||_inf.
pub fn square_s(tau: &Field, lambda: f64) -> Result<f64> {
    let four = convolve_many(&[tau, tau, tau, tau])?;
    Ok(lambda.powi(3) * four.max_abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct UvReport {
    /// lambda^2 || tau^{*3} ||_inf.
    pub triangle: f64,
    /// triangle + lambda || tau * tau ||_inf + 1.
    pub triangle_cc: f64,
    pub u: f64,
    pub v: f64,
}

pub fn composite_uv(phi: &Field, tau: &Field, lambda: f64) -> Result<UvReport> {
    let triangle = lambda * lambda * convolve_many(&[tau, tau, tau])?.max_abs();
    let triangle_cc = triangle + lambda * convolve(tau, tau)?.max_abs() + 1.0;
    let phi_l1 = weighted_norm(phi, 0.0, Exponent::Finite(1.0));
    let u = triangle * triangle_cc + triangle_cc * triangle_cc + lambda * phi_l1;
    let v = 4.0 * (triangle * triangle_cc * u).sqrt();
    Ok(UvReport {
        triangle,
        triangle_cc,
        u,
        v,
    })
}
