use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::diagrams::basic::{tilde_tau, weighted, CERT_SLACK};
use crate::diagrams::compose::Composer;
use crate::diagrams::two_point::{coarse_points, h_sup, y_diagram};
use crate::error::Result;
use crate::grid::{convolve, convolve_many, Exponent};
use crate::oz::{form_j, tau_field};
use crate::Field;

/// Parameters attached to every certification line.
#[derive(Debug, Clone, Serialize)]
pub struct CertParams {
    pub a: f64,
    pub b: f64,
    /// None encodes the L^infinity norm.
    pub p: Option<f64>,
    pub lambda: f64,
    pub d: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub box_side: f64,
}

/// One certified inequality, serialized as a JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct CertLine {
    pub case_id: String,
    pub paper_anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub params: CertParams,
    pub scan_resolution: f64,
}

fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + CERT_SLACK) + f64::MIN_POSITIVE
}

/// Flip-test copies: doubling every lhs must flip at least one line.
pub fn mutate_lines(lines: &[CertLine]) -> Vec<CertLine> {
    lines
        .iter()
        .map(|l| {
            let lhs = 2.0 * l.lhs;
            CertLine {
                case_id: format!("{}-mutated", l.case_id),
                lhs,
                holds: holds(lhs, l.rhs),
                ..l.clone()
            }
        })
        .collect()
}

/// One lambda point of the certification context: tau from the
/// Ornstein-Zernike solve and its standard upper-bound field.
struct LambdaSlice {
    lambda: f64,
    tau: Field,
    tilde: Field,
    tau_tau: Field,
}

/// Scalar diagram factors used to assemble left-hand sides. Each factor has
/// a per-lambda coarse-scan value and an exact lambda-sup bar value, with
/// value <= bar by construction.
#[derive(Debug, Clone, Copy)]
enum Factor {
    /// Bubble of two tilde edges with the given weights.
    W(f64, f64),
    /// lambda^2 (tau^{(b)} * tau * tau) at an offset.
    T(f64),
    /// Triangle with one possibly contracted edge.
    Tc(f64),
    /// lambda (tau^{(b)} * tau) at an offset.
    B1(f64),
    /// Sup of a weighted tilde edge.
    E(f64),
    /// || tau^{(b)}(x) lambda (tau*tau)(u+x) ||_p, the p-triangle piece.
    Pt(f64),
    /// The two-external-point H diagram.
    H,
}

pub struct CertContext {
    phi: Field,
    p: Exponent,
    phi_w: f64,
    theta_w: f64,
    stride: usize,
    budget: usize,
    slices: Vec<LambdaSlice>,
    coarse: Vec<usize>,
    /// Per-slice coarse H sup, computed once per exponent used.
    h_vals: Vec<f64>,
    h_inf_vals: Vec<f64>,
}

impl CertContext {
    pub fn new(
        phi: &Field,
        lambdas: &[f64],
        p: Exponent,
        phi_w: f64,
        theta_w: f64,
        stride: usize,
        budget: usize,
    ) -> Result<Self> {
        assert!(!lambdas.is_empty());
        let mut slices = Vec::new();
        for &lambda in lambdas {
            let pair = form_j(phi, &phi.scaled(0.0), lambda)?;
            let tau = tau_field(&pair)?;
            let tilde = tilde_tau(&tau, phi, lambda)?;
            let tau_tau = convolve(&tau, &tau)?;
            slices.push(LambdaSlice {
                lambda,
                tau,
                tilde,
                tau_tau,
            });
        }
        let stride = stride.max(1);
        let coarse = coarse_points(phi.shape, stride);
        let mut h_vals = Vec::new();
        let mut h_inf_vals = Vec::new();
        for s in &slices {
            let y = y_diagram(&s.tau, phi_w, s.lambda, budget)?;
            h_vals.push(h_sup(&y, &s.tau, theta_w, s.lambda, p, stride).value);
            h_inf_vals
                .push(h_sup(&y, &s.tau, theta_w, s.lambda, Exponent::Infinity, stride).value);
        }
        Ok(CertContext {
            phi: phi.clone(),
            p,
            phi_w,
            theta_w,
            stride,
            budget,
            slices,
            coarse,
            h_vals,
            h_inf_vals,
        })
    }

    fn params(&self, lambda: f64) -> CertParams {
        CertParams {
            a: self.phi_w,
            b: self.theta_w,
            p: match self.p {
                Exponent::Finite(p) => Some(p),
                Exponent::Infinity => None,
            },
            lambda,
            d: self.phi.shape.d,
            n: self.phi.shape.n,
            box_side: self.phi.side(),
        }
    }

    fn coarse_max(&self, f: &Field) -> f64 {
        self.coarse
            .iter()
            .map(|&v| f.values[v].abs())
            .fold(0.0, f64::max)
    }

    fn bubble_at(&self, f: &Field, g: &Field, u: usize) -> f64 {
        let sh = f.shape;
        match self.p {
            Exponent::Infinity => {
                let mut best: f64 = 0.0;
                for x in 0..sh.len() {
                    best = best.max((f.values[x] * g.values[sh.add(u, x)]).abs());
                }
                best
            }
            Exponent::Finite(p) => {
                let mut sum = 0.0;
                for x in 0..sh.len() {
                    sum += (f.values[x] * g.values[sh.add(u, x)]).abs().powf(p);
                }
                (sum * f.cell_volume()).powf(1.0 / p)
            }
        }
    }

    /// Coarse offset scan of the bubble p-norm.
    fn bubble_coarse(&self, f: &Field, g: &Field) -> f64 {
        self.coarse
            .iter()
            .map(|&u| self.bubble_at(f, g, u))
            .fold(0.0, f64::max)
    }

    /// Exact offset sup of the bubble p-norm.
    fn bubble_exact(&self, f: &Field, g: &Field) -> f64 {
        (0..f.shape.len())
            .map(|u| self.bubble_at(f, g, u))
            .fold(0.0, f64::max)
    }

    fn tri_field(&self, s: &LambdaSlice, b: f64) -> Field {
        let tau_b = weighted(&s.tau, b);
        convolve_many(&[&tau_b, &s.tau, &s.tau]).expect("shapes match")
    }

    fn b1_field(&self, s: &LambdaSlice, b: f64) -> Field {
        convolve(&weighted(&s.tau, b), &s.tau).expect("shapes match")
    }

    fn factor_value(&self, s: &LambdaSlice, i: usize, f: Factor) -> f64 {
        let lam = s.lambda;
        match f {
            Factor::W(a, b) => {
                self.bubble_coarse(&weighted(&s.tilde, a), &weighted(&s.tilde, b))
            }
            Factor::T(b) => lam * lam * self.coarse_max(&self.tri_field(s, b)),
            Factor::Tc(b) => {
                self.factor_value(s, i, Factor::T(b))
                    + self.factor_value(s, i, Factor::B1(b))
                    + self.factor_value(s, i, Factor::B1(0.0))
            }
            Factor::B1(b) => lam * self.coarse_max(&self.b1_field(s, b)),
            Factor::E(a) => self.coarse_max(&weighted(&s.tilde, a)),
            Factor::Pt(b) => {
                self.bubble_coarse(&weighted(&s.tau, b), &s.tau_tau.scaled(lam))
            }
            Factor::H => self.h_vals[i],
        }
    }

    fn factor_bar(&self, f: Factor) -> f64 {
        let mut best: f64 = 0.0;
        for (i, s) in self.slices.iter().enumerate() {
            let lam = s.lambda;
            let v = match f {
                Factor::W(a, b) => {
                    self.bubble_exact(&weighted(&s.tilde, a), &weighted(&s.tilde, b))
                }
                Factor::T(b) => lam * lam * self.tri_field(s, b).max_abs(),
                Factor::Tc(b) => {
                    lam * lam * self.tri_field(s, b).max_abs()
                        + lam * self.b1_field(s, b).max_abs()
                        + lam * self.b1_field(s, 0.0).max_abs()
                }
                Factor::B1(b) => lam * self.b1_field(s, b).max_abs(),
                Factor::E(a) => weighted(&s.tilde, a).max_abs(),
                Factor::Pt(b) => {
                    lam * self.tri_field(s, b).max_abs()
                        + weighted(&s.tau, b).max_abs() * lam * s.tau_tau.max_abs()
                }
                Factor::H => self.h_vals[i],
            };
            best = best.max(v);
        }
        best
    }

    /// Assemble one case: lhs is the lambda-sup of the product of per-lambda
    /// coarse-scan factors; rhs is the product of the bar quantities.
    fn product_case(
        &self,
        case_id: &str,
        anchor: &str,
        factors: &[Factor],
    ) -> CertLine {
        let mut lhs: f64 = 0.0;
        let mut arg = self.slices[0].lambda;
        for (i, s) in self.slices.iter().enumerate() {
            let v: f64 = factors
                .iter()
                .map(|&f| self.factor_value(s, i, f))
                .product();
            if v > lhs {
                lhs = v;
                arg = s.lambda;
            }
        }
        let rhs: f64 = factors.iter().map(|&f| self.factor_bar(f)).product();
        CertLine {
            case_id: case_id.into(),
            paper_anchor: anchor.into(),
            lhs,
            rhs,
            holds: holds(lhs, rhs),
            params: self.params(arg),
            scan_resolution: self.stride as f64 * self.phi.h,
        }
    }

    fn line(&self, case_id: &str, anchor: &str, lhs: f64, rhs: f64, lambda: f64) -> CertLine {
        CertLine {
            case_id: case_id.into(),
            paper_anchor: anchor.into(),
            lhs,
            rhs,
            holds: holds(lhs, rhs),
            params: self.params(lambda),
            scan_resolution: self.stride as f64 * self.phi.h,
        }
    }

    fn lambda_max(&self) -> f64 {
        self.slices
            .iter()
            .map(|s| s.lambda)
            .fold(0.0, f64::max)
    }

    /// The enumerated segment bounds: every displayed inequality of the
    /// case-by-case catalogue, with the nonexplicit absolute constants
    /// replaced by the explicit right-hand sides from the proofs.
    pub fn case_catalogue(&self) -> Vec<CertLine> {
        let (p, t) = (self.phi_w, self.theta_w);
        let a = "segment-bounds";
        let w_pt = Factor::W(p, t);
        let w_p0 = Factor::W(p, 0.0);
        // Case 1a, the uncontracted start block: W (T + B1).
        let mut lhs_1a: f64 = 0.0;
        let mut arg_1a = self.slices[0].lambda;
        for (i, s) in self.slices.iter().enumerate() {
            let v = self.factor_value(s, i, w_pt)
                * (self.factor_value(s, i, Factor::T(0.0))
                    + self.factor_value(s, i, Factor::B1(0.0)));
            if v > lhs_1a {
                lhs_1a = v;
                arg_1a = s.lambda;
            }
        }
        let rhs_1a = self.factor_bar(w_pt)
            * (self.factor_bar(Factor::T(0.0)) + self.factor_bar(Factor::B1(0.0)));
        let mut out = vec![
            self.line("a1a-psi01-i", a, lhs_1a, rhs_1a, arg_1a),
            self.product_case("a1a-psi01-ii", a, &[w_p0, Factor::T(t)]),
            // Case 3a.
            self.product_case("a3a-psi2", a, &[w_pt]),
            self.product_case("a3a-psi1-i", a, &[w_pt, Factor::Tc(0.0)]),
            self.product_case("a3a-psi1-ii", a, &[w_p0, Factor::Tc(t)]),
            self.product_case("a3a-psi1-contracted", a, &[Factor::E(p), Factor::Pt(t)]),
            // Case 2a, psi^(4).
            self.product_case("a2a-psi4-i", a, &[Factor::E(p), Factor::Pt(t)]),
            self.product_case("a2a-psi4-ii", a, &[Factor::E(0.0), w_pt]),
            // Case 2a, psi^(3).
            self.product_case("a2a-psi3-i", a, &[w_pt, Factor::Tc(0.0)]),
            self.product_case("a2a-psi3-ii", a, &[w_p0, Factor::Tc(t)]),
            // Case 2a, psi^(1).
            self.product_case("a2a-psi1-i", a, &[w_pt, Factor::Tc(0.0), Factor::Tc(0.0)]),
            self.product_case("a2a-psi1-ii", a, &[w_p0, Factor::Tc(t), Factor::Tc(0.0)]),
            self.product_case("a2a-psi1-iii", a, &[w_p0, Factor::T(t), Factor::Tc(0.0)]),
            self.product_case(
                "a2a-psi1-contracted-l",
                a,
                &[Factor::E(p), Factor::Pt(t), Factor::Tc(0.0)],
            ),
            self.product_case(
                "a2a-psi1-contracted-r",
                a,
                &[Factor::E(p), Factor::Pt(0.0), Factor::Tc(t)],
            ),
            // Case 2a, psi^(2), first target diagram.
            self.product_case("a2a-psi2-c1", a, &[w_pt, Factor::B1(0.0), Factor::Tc(0.0)]),
            self.product_case("a2a-psi2-c2", a, &[w_p0, Factor::B1(t), Factor::Tc(0.0)]),
            self.product_case("a2a-psi2-c3", a, &[w_p0, Factor::B1(0.0), Factor::T(t)]),
            self.product_case("a2a-psi2-n1", a, &[w_pt, Factor::T(0.0), Factor::Tc(0.0)]),
            self.product_case("a2a-psi2-n2", a, &[w_p0, Factor::Tc(t), Factor::Tc(0.0)]),
            // Case 2a, psi^(2), second target diagram.
            self.product_case("a2a-psi2-d15", a, &[w_p0, Factor::B1(0.0), Factor::Tc(t)]),
            self.product_case("a2a-psi2-d19", a, &[w_p0, Factor::T(0.0), Factor::Tc(t)]),
            self.product_case("a2a-psi2-d5", a, &[Factor::E(p), Factor::E(0.0), Factor::Pt(t)]),
            self.product_case(
                "a2a-psi2-d7",
                a,
                &[Factor::E(p), Factor::B1(0.0), Factor::Pt(t)],
            ),
            self.product_case(
                "a2a-psi2-d16",
                a,
                &[Factor::E(p), Factor::Pt(t), Factor::Tc(0.0)],
            ),
            self.product_case(
                "a2a-psi2-d16f",
                a,
                &[Factor::E(p), Factor::Pt(0.0), Factor::Tc(t)],
            ),
            self.product_case("a2a-psi2-d6", a, &[Factor::E(0.0), w_pt, Factor::B1(0.0)]),
            self.product_case("a2a-psi2-h", a, &[Factor::H]),
            self.product_case(
                "a2a-psi2-d12",
                a,
                &[Factor::E(p), Factor::Pt(t), Factor::T(0.0)],
            ),
            self.product_case(
                "a2a-psi2-d18",
                a,
                &[Factor::E(p), Factor::Pt(0.0), Factor::T(t)],
            ),
            self.product_case("a2a-psi2-d10", a, &[Factor::E(0.0), w_pt, Factor::T(0.0)]),
        ];
        // d11 has a sum of two three-factor products on both sides.
        let mut lhs: f64 = 0.0;
        let mut arg = self.slices[0].lambda;
        for (i, s) in self.slices.iter().enumerate() {
            let v = self.factor_value(s, i, Factor::E(self.phi_w))
                * (self.factor_value(s, i, Factor::Tc(self.theta_w))
                    * self.factor_value(s, i, Factor::T(0.0))
                    / s.lambda
                    + self.factor_value(s, i, Factor::E(self.theta_w))
                        * self.factor_value(s, i, Factor::B1(0.0))
                        * self.factor_value(s, i, Factor::Tc(0.0)));
            if v > lhs {
                lhs = v;
                arg = s.lambda;
            }
        }
        let lam_min = self
            .slices
            .iter()
            .map(|s| s.lambda)
            .fold(f64::INFINITY, f64::min);
        let rhs = self.factor_bar(Factor::E(self.phi_w))
            * (self.factor_bar(Factor::Tc(self.theta_w)) * self.factor_bar(Factor::T(0.0))
                / lam_min
                + self.factor_bar(Factor::E(self.theta_w))
                    * self.factor_bar(Factor::B1(0.0))
                    * self.factor_bar(Factor::Tc(0.0)));
        out.push(self.line("a2a-psi2-d11", a, lhs, rhs, arg));
        out
    }

    /// The three auxiliary-diagram displays, with the absolute constants
    /// replaced by the explicit quantities from their proofs.
    pub fn auxiliary_lemma(&self) -> Vec<CertLine> {
        let anchor = "auxiliary-diagrams";
        let mut out = Vec::new();
        // (i): W(phi,0) <= W(phi,theta) + c_grid * M * E(phi), where M
        // bounds tilde tau uniformly and c_grid is the exact grid p-norm of
        // the unit-ball indicator.
        let sh = self.phi.shape;
        let vol = self.phi.cell_volume();
        let ball: usize = (0..sh.len()).filter(|&v| self.phi.radius(v) < 1.0).count();
        let c_grid = match self.p {
            Exponent::Infinity => 1.0,
            Exponent::Finite(p) => (ball as f64 * vol).powf(1.0 / p),
        };
        let phi_l1 = self.phi.mass();
        let phi_sup = self.phi.max_abs();
        let mut m_bound: f64 = 0.0;
        let mut lhs_i: f64 = 0.0;
        let mut arg = self.slices[0].lambda;
        for s in &self.slices {
            m_bound = m_bound.max(phi_sup + s.lambda * phi_l1 * s.tau.max_abs());
            let v = self.bubble_exact(&weighted(&s.tilde, self.phi_w), &s.tilde);
            if v > lhs_i {
                lhs_i = v;
                arg = s.lambda;
            }
        }
        let rhs_i = self.factor_bar(Factor::W(self.phi_w, self.theta_w))
            + c_grid * m_bound * self.factor_bar(Factor::E(self.phi_w));
        let mut l = self.line("aux-i-w-exchange", anchor, lhs_i, rhs_i, arg);
        l.scan_resolution = self.phi.h;
        out.push(l);
        // The constant c_{d,p} <= 6 from the same proof.
        let d = sh.d as f64;
        let c_dp = match self.p {
            Exponent::Infinity => 1.0,
            Exponent::Finite(p) => (std::f64::consts::PI.powf(d / 2.0)
                / statrs::function::gamma::gamma((d + 2.0) / 2.0))
            .powf(1.0 / p),
        };
        out.push(self.line("aux-i-constant", anchor, c_dp, 6.0, self.lambda_max()));
        // (ii): B1(theta,0) <= lambda_max E(theta) + T(theta).
        let lhs_ii = self.factor_bar(Factor::B1(self.theta_w));
        let rhs_ii = self.lambda_max() * self.factor_bar(Factor::E(self.theta_w))
            + self.factor_bar(Factor::T(self.theta_w));
        out.push(self.line("aux-ii-b1", anchor, lhs_ii, rhs_ii, self.lambda_max()));
        // (iii): the p-triangle piece against its L^1 + L^infinity split.
        let mut lhs_iii: f64 = 0.0;
        let mut rhs_iii: f64 = 0.0;
        let mut arg3 = self.slices[0].lambda;
        for s in &self.slices {
            let v = self.bubble_exact(
                &weighted(&s.tau, self.theta_w),
                &s.tau_tau.scaled(s.lambda),
            );
            if v > lhs_iii {
                lhs_iii = v;
                arg3 = s.lambda;
            }
            rhs_iii = rhs_iii.max(
                s.lambda * self.tri_field(s, self.theta_w).max_abs()
                    + weighted(&s.tau, self.theta_w).max_abs()
                        * s.lambda
                        * s.tau_tau.max_abs(),
            );
        }
        let mut l3 = self.line("aux-iii-p-triangle", anchor, lhs_iii, rhs_iii, arg3);
        l3.scan_resolution = self.phi.h;
        out.push(l3);
        out
    }

    /// The uniform-norm martini bound, in its exact displayed form with the
    /// lambda-sup taken factorwise.
    pub fn h_infty_lemma(&self) -> CertLine {
        let mut lhs: f64 = 0.0;
        let mut arg = self.slices[0].lambda;
        let mut two_norm: f64 = 0.0;
        let mut conv_sup: f64 = 0.0;
        for (i, s) in self.slices.iter().enumerate() {
            if self.h_inf_vals[i] > lhs {
                lhs = self.h_inf_vals[i];
                arg = s.lambda;
            }
            let l2sq: f64 =
                s.tau.values.iter().map(|v| v * v).sum::<f64>() * s.tau.cell_volume();
            two_norm = two_norm.max(s.lambda * s.lambda * l2sq);
            conv_sup = conv_sup.max(self.b1_field(s, self.theta_w).max_abs());
        }
        let rhs = two_norm
            * self.factor_bar(Factor::E(self.phi_w))
            * self.factor_bar(Factor::T(0.0))
            * conv_sup;
        self.line("h-infty-bound", "martini-lemma", lhs, rhs, arg)
    }

    /// T^{(b),o} defined as the sum of its three parts.
    pub fn contracted_triangle(&self) -> CertLine {
        let lhs = self.factor_bar(Factor::Tc(self.theta_w));
        let rhs = self.factor_bar(Factor::T(self.theta_w))
            + self.factor_bar(Factor::B1(self.theta_w))
            + self.factor_bar(Factor::B1(0.0));
        self.line(
            "contracted-triangle",
            "contracted-triangle",
            lhs,
            rhs,
            self.lambda_max(),
        )
    }

    /// Zeroth lace coefficient: half the squared two-point bound, weighted,
    /// is half the bubble at zero offset, below the bubble sup.
    pub fn pi0_chain(&self) -> CertLine {
        let mut lhs: f64 = 0.0;
        let mut arg = self.slices[0].lambda;
        for s in &self.slices {
            let v = 0.5
                * self.bubble_at(
                    &weighted(&s.tilde, self.phi_w),
                    &weighted(&s.tilde, self.theta_w),
                    0,
                );
            if v > lhs {
                lhs = v;
                arg = s.lambda;
            }
        }
        let rhs = self.factor_bar(Factor::W(self.phi_w, self.theta_w));
        self.line("pi0-chain", "pi0-bound", lhs, rhs, arg)
    }

    /// |x_N - x_0|^a <= N^a sum |x_j - x_{j-1}|^a over random chains,
    /// reported as the worst observed ratio against 1.
    pub fn splitting_lines(&self, trials: usize, seed: u64) -> Vec<CertLine> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for a in [1.0f64, 2.0, 3.0] {
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                let n_seg = rng.gen_range(1..=6usize);
                let mut pts = vec![[0.0f64; 3]];
                for _ in 0..n_seg {
                    let last = *pts.last().unwrap();
                    pts.push([
                        last[0] + rng.gen_range(-1.0..1.0),
                        last[1] + rng.gen_range(-1.0..1.0),
                        last[2] + rng.gen_range(-1.0..1.0),
                    ]);
                }
                let end = pts[n_seg];
                let total: f64 = (end[0].powi(2) + end[1].powi(2) + end[2].powi(2))
                    .sqrt()
                    .powf(a);
                let sum: f64 = (1..=n_seg)
                    .map(|j| {
                        let dx = pts[j][0] - pts[j - 1][0];
                        let dy = pts[j][1] - pts[j - 1][1];
                        let dz = pts[j][2] - pts[j - 1][2];
                        (dx * dx + dy * dy + dz * dz).sqrt().powf(a)
                    })
                    .sum();
                let bound = (n_seg as f64).powf(a) * sum;
                if bound > 0.0 {
                    worst = worst.max(total / bound);
                }
            }
            let mut l = self.line(
                &format!("power-split-a{a}"),
                "power-splitting",
                worst,
                1.0,
                self.lambda_max(),
            );
            l.params.a = a;
            l.scan_resolution = 0.0;
            out.push(l);
        }
        out
    }

    /// Block composition values against 3 U V^m (left) and 2 U V^m (right),
    /// with U, V evaluated at the largest lambda of the grid.
    pub fn block_lines(&self, ms: &[usize]) -> Result<Vec<CertLine>> {
        let top = self
            .slices
            .iter()
            .max_by(|a, b| a.lambda.total_cmp(&b.lambda))
            .unwrap();
        let uv = crate::diagrams::basic::composite_uv(&self.phi, &top.tau, top.lambda)?;
        let mut out = Vec::new();
        for s in &self.slices {
            let composer = Composer::new(&s.tau, &self.phi, s.lambda, self.budget)?;
            for &m in ms {
                let left = composer.left_block_integral(m)?;
                let right = composer.right_block_integral(m)?;
                let vm = uv.v.powi(m as i32);
                let mut l = self.line(
                    &format!("left-block-m{m}-lam{}", s.lambda),
                    "block-composition",
                    left,
                    3.0 * uv.u * vm,
                    s.lambda,
                );
                l.scan_resolution = self.phi.h;
                out.push(l);
                let mut r = self.line(
                    &format!("right-block-m{m}-lam{}", s.lambda),
                    "block-composition",
                    right,
                    2.0 * uv.u * vm,
                    s.lambda,
                );
                r.scan_resolution = self.phi.h;
                out.push(r);
            }
        }
        Ok(out)
    }

    pub fn all_lines(&self, block_ms: &[usize], split_trials: usize) -> Result<Vec<CertLine>> {
        let mut out = self.case_catalogue();
        out.extend(self.auxiliary_lemma());
        out.push(self.h_infty_lemma());
        out.push(self.contracted_triangle());
        out.push(self.pi0_chain());
        out.extend(self.splitting_lines(split_trials, 7));
        out.extend(self.block_lines(block_ms)?);
        Ok(out)
    }
}

/// The desk certification suite on one kernel: five lambda points spanning
/// the requested range, p = 2, weights (1, 1), coarse stride n/4.
pub fn desk_suite(phi: &Field, lambdas: &[f64], budget: usize) -> Result<Vec<CertLine>> {
    let stride = (phi.shape.n / 4).max(1);
    let ctx = CertContext::new(phi, lambdas, Exponent::Finite(2.0), 1.0, 1.0, stride, budget)?;
    ctx.all_lines(&[0, 1], 100_000)
}
