use crate::diagrams::basic::{certify, composite_uv, CertifiedInequality};
use crate::diagrams::bigrid::BiField;
use crate::error::{Error, Result};
use crate::grid::convolve;
use crate::Field;

/// One additive component of a function of two torus points. Delta factors
/// produced by contractible edges stay symbolic; they are always pinned at
/// the origin because every block is rooted there.
#[derive(Debug, Clone)]
pub enum Component {
    Full(BiField),
    /// delta(first) * g(second).
    DeltaFirst(Field),
    /// g(first) * delta(second).
    DeltaSecond(Field),
    /// c * delta(first) * delta(second).
    Point(f64),
}

/// A sum of components representing a function of (w, u).
#[derive(Debug, Clone)]
pub struct PairState {
    pub comps: Vec<Component>,
    budget_cells: usize,
}

impl PairState {
    fn conv_first(&self, k: &Field, contract: Option<f64>) -> Result<PairState> {
        let mut out = Vec::new();
        for c in &self.comps {
            out.push(match c {
                Component::Full(b) => Component::Full(b.conv_first(k)),
                Component::DeltaFirst(g) => {
                    Component::Full(BiField::outer(k, g, self.budget_cells)?)
                }
                Component::DeltaSecond(g) => Component::DeltaSecond(convolve(k, g)?),
                Component::Point(c) => Component::DeltaSecond(k.scaled(*c)),
            });
            if let Some(coeff) = contract {
                out.push(scale_component(c, coeff));
            }
        }
        Ok(PairState {
            comps: out,
            budget_cells: self.budget_cells,
        })
    }

    fn conv_second(&self, k: &Field, contract: Option<f64>) -> Result<PairState> {
        let mut out = Vec::new();
        for c in &self.comps {
            out.push(match c {
                Component::Full(b) => Component::Full(b.conv_second(k)),
                Component::DeltaFirst(g) => Component::DeltaFirst(convolve(k, g)?),
                Component::DeltaSecond(g) => {
                    Component::Full(BiField::outer(g, k, self.budget_cells)?)
                }
                Component::Point(c) => Component::DeltaFirst(k.scaled(*c)),
            });
            if let Some(coeff) = contract {
                out.push(scale_component(c, coeff));
            }
        }
        Ok(PairState {
            comps: out,
            budget_cells: self.budget_cells,
        })
    }

    /// Multiply by k(second - first).
    fn mul_diff(&self, k: &Field) -> PairState {
        let comps = self
            .comps
            .iter()
            .map(|c| match c {
                Component::Full(b) => Component::Full(b.mul_diff(k)),
                Component::DeltaFirst(g) => Component::DeltaFirst(pointwise(g, k)),
                Component::DeltaSecond(g) => Component::DeltaSecond(pointwise(g, k)),
                Component::Point(c) => Component::Point(*c * k.values[0]),
            })
            .collect();
        PairState {
            comps,
            budget_cells: self.budget_cells,
        }
    }

    fn swap(&self) -> PairState {
        let comps = self
            .comps
            .iter()
            .map(|c| match c {
                Component::Full(b) => Component::Full(b.swap()),
                Component::DeltaFirst(g) => Component::DeltaSecond(g.clone()),
                Component::DeltaSecond(g) => Component::DeltaFirst(g.clone()),
                Component::Point(c) => Component::Point(*c),
            })
            .collect();
        PairState {
            comps,
            budget_cells: self.budget_cells,
        }
    }

    fn scale(&self, c: f64) -> PairState {
        PairState {
            comps: self.comps.iter().map(|x| scale_component(x, c)).collect(),
            budget_cells: self.budget_cells,
        }
    }

    fn merged(mut self, other: PairState) -> PairState {
        self.comps.extend(other.comps);
        self
    }

    /// Double integral over both arguments.
    pub fn integral(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| match c {
                Component::Full(b) => b.integral(),
                Component::DeltaFirst(g) | Component::DeltaSecond(g) => g.mass(),
                Component::Point(c) => *c,
            })
            .sum()
    }
}

fn scale_component(c: &Component, coeff: f64) -> Component {
    match c {
        Component::Full(b) => Component::Full(b.scaled(coeff)),
        Component::DeltaFirst(g) => Component::DeltaFirst(g.scaled(coeff)),
        Component::DeltaSecond(g) => Component::DeltaSecond(g.scaled(coeff)),
        Component::Point(v) => Component::Point(v * coeff),
    }
}

fn pointwise(g: &Field, k: &Field) -> Field {
    let mut out = g.clone();
    out.kernel_tag = false;
    for (v, kv) in out.values.iter_mut().zip(&k.values) {
        *v *= *kv;
    }
    out
}

/// Evaluator for the psi block compositions rooted at the origin.
pub struct Composer {
    pub tau: Field,
    pub phi: Field,
    pub lambda: f64,
    budget_cells: usize,
}

impl Composer {
    pub fn new(tau: &Field, phi: &Field, lambda: f64, budget_cells: usize) -> Result<Self> {
        tau.check_shape(phi)?;
        assert!(lambda > 0.0);
        // The pipelines below reorder convolution arguments freely, which
        // needs tau(-x) = tau(x).
        let defect = crate::grid::ops::evenness_defect(tau);
        if defect > 1e-8 * tau.max_abs().max(1.0) {
            return Err(Error::ShapeMismatch(format!(
                "composition requires an even tau field, defect {defect}"
            )));
        }
        Ok(Composer {
            tau: tau.clone(),
            phi: phi.clone(),
            lambda,
            budget_cells,
        })
    }

    /// psi_0(w, u; 0): triangle plus the two contracted start terms.
    pub fn left_start(&self) -> Result<PairState> {
        let tri = BiField::outer(&self.tau, &self.tau, self.budget_cells)?.mul_diff(&self.tau);
        // psi_0^2: lambda^{-1} delta(w) tau(u) lambda (tau*tau)(u).
        let g2 = pointwise(&self.tau, &convolve(&self.tau, &self.tau)?);
        // psi_0^3: lambda^{-1} delta(w) phi(u).
        let g3 = self.phi.scaled(1.0 / self.lambda);
        Ok(PairState {
            comps: vec![
                Component::Full(tri),
                Component::DeltaFirst(g2),
                Component::DeltaFirst(g3),
            ],
            budget_cells: self.budget_cells,
        })
    }

    /// bar psi_0(w, u; 0): triangle plus the double contraction.
    pub fn right_start(&self) -> Result<PairState> {
        let tri = BiField::outer(&self.tau, &self.tau, self.budget_cells)?.mul_diff(&self.tau);
        Ok(PairState {
            comps: vec![
                Component::Full(tri),
                Component::Point(1.0 / (self.lambda * self.lambda)),
            ],
            budget_cells: self.budget_cells,
        })
    }

    fn contract_coeff(&self, on: bool) -> Option<f64> {
        if on {
            Some(1.0 / self.lambda)
        } else {
            None
        }
    }

    /// psi^{(1)} family: prefactor tau(w-u), inner loop over (z, t) with a
    /// contractible edge on t-s (left) or z-r (right).
    fn psi1_like(&self, state: &PairState, ts_c: bool, zr_c: bool) -> Result<PairState> {
        let lam2 = self.lambda * self.lambda;
        let f1 = state.conv_first(&self.tau, self.contract_coeff(zr_c))?;
        let f2 = f1.conv_second(&self.tau, self.contract_coeff(ts_c))?;
        let f3 = f2.mul_diff(&self.tau);
        let f4 = f3.conv_second(&self.tau, None)?;
        let f5 = f4.conv_first(&self.tau, None)?;
        Ok(f5.swap().mul_diff(&self.tau).scale(lam2))
    }

    /// psi^{(2)} family: prefactor on w-s (contractible on the left), inner
    /// triangle with a contractible edge on t-w, and z-r contractible on the
    /// right.
    fn psi2_like(&self, state: &PairState, sw_c: bool, zr_c: bool) -> Result<PairState> {
        let lam2 = self.lambda * self.lambda;
        let f1 = state.conv_first(&self.tau, self.contract_coeff(zr_c))?;
        let f2 = f1.conv_second(&self.tau, self.contract_coeff(sw_c))?;
        // Contracted t = w term.
        let term_a = f2
            .mul_diff(&self.tau)
            .conv_first(&self.tau, None)?
            .swap()
            .mul_diff(&self.tau)
            .scale(lam2 / self.lambda);
        // Smooth term: M(u, w) = II dz dt F2(z, w) tau(t-z) tau(z-u)
        // tau(u-t) tau(t-w), assembled per component.
        let mut smooth = Vec::new();
        for c in &f2.comps {
            match c {
                Component::Full(b) => {
                    let len = b.half_len();
                    let mut out = BiField::like(b);
                    for w in 0..len {
                        // Q_w(z, t) = B(z, w) tau(t - w) tau(t - z).
                        let mut col: Field = self.tau.scaled(0.0);
                        for z in 0..len {
                            col.values[z] = b.at(z, w);
                        }
                        let mut tau_w: Field = self.tau.scaled(0.0);
                        for t in 0..len {
                            tau_w.values[t] = self.tau.values[b.half.sub(t, w)];
                        }
                        let q = BiField::outer(&col, &tau_w, self.budget_cells)?
                            .mul_diff(&self.tau);
                        let m = q.conv_first(&self.tau).conv_second(&self.tau).diag();
                        for u in 0..len {
                            *out.at_mut(w, u) = m.values[u];
                        }
                    }
                    smooth.push(Component::Full(out));
                }
                Component::DeltaFirst(g) => {
                    // F2(z, w) = delta(z) g(w): M(u, w) = g(w) tau(u) G(u, w)
                    // with G the tau wedge.
                    let wedge = BiField::wedge(&self.tau, &self.tau, &self.tau, self.budget_cells)?;
                    let len = wedge.half_len();
                    let mut out = BiField::like(&wedge);
                    for w in 0..len {
                        for u in 0..len {
                            *out.at_mut(w, u) =
                                g.values[w] * self.tau.values[u] * wedge.at(u, w);
                        }
                    }
                    smooth.push(Component::Full(out));
                }
                Component::DeltaSecond(g) => {
                    // F2(z, w) = g(z) delta(w): M(u, w) = delta(w) m(u) with
                    // m(u) = int dt tau(t) tau(u-t) W_g(t, u),
                    // W_g(t, u) = int dz g(z) tau(t-z) tau(u-z).
                    let wg = BiField::wedge(g, &self.tau, &self.tau, self.budget_cells)?;
                    let len = wg.half_len();
                    let vol = self.tau.cell_volume();
                    let mut m: Field = self.tau.scaled(0.0);
                    for u in 0..len {
                        let mut s = 0.0;
                        for t in 0..len {
                            s += self.tau.values[t]
                                * self.tau.values[wg.half.sub(u, t)]
                                * wg.at(t, u);
                        }
                        m.values[u] = s * vol;
                    }
                    smooth.push(Component::DeltaFirst(m));
                }
                Component::Point(_) => {
                    return Err(Error::ShapeMismatch(
                        "unexpected point component in psi2 smooth part".into(),
                    ))
                }
            }
        }
        let smooth_state = PairState {
            comps: smooth,
            budget_cells: self.budget_cells,
        }
        .scale(lam2);
        Ok(term_a.merged(smooth_state))
    }

    fn psi3(&self, state: &PairState) -> Result<PairState> {
        let a = state.conv_first(&self.tau, None)?;
        let b = a.conv_second(&self.tau, None)?;
        Ok(b.swap().mul_diff(&self.tau))
    }

    fn psi4_left(&self, state: &PairState) -> Result<PairState> {
        let g = state.conv_first(&self.tau, None)?;
        Ok(g.swap().mul_diff(&self.tau).scale(1.0 / self.lambda))
    }

    fn psi4_right(&self, state: &PairState) -> Result<PairState> {
        let h = state.conv_second(&self.tau, None)?;
        Ok(h.swap().mul_diff(&self.tau).scale(1.0 / self.lambda))
    }

    /// Apply one left psi segment (sum of the four variants) with the
    /// composition factor lambda^2.
    pub fn apply_left(&self, state: &PairState) -> Result<PairState> {
        let lam2 = self.lambda * self.lambda;
        let out = self
            .psi1_like(state, true, false)?
            .merged(self.psi2_like(state, true, false)?)
            .merged(self.psi3(state)?)
            .merged(self.psi4_left(state)?);
        Ok(out.scale(lam2))
    }

    /// Apply one right bar-psi segment with the composition factor lambda^2.
    pub fn apply_right(&self, state: &PairState) -> Result<PairState> {
        let lam2 = self.lambda * self.lambda;
        let out = self
            .psi1_like(state, false, true)?
            .merged(self.psi2_like(state, false, true)?)
            .merged(self.psi3(state)?)
            .merged(self.psi4_right(state)?);
        Ok(out.scale(lam2))
    }

    /// lambda^2 II (m-fold left composition)(a, b) da db.
    pub fn left_block_integral(&self, m: usize) -> Result<f64> {
        let mut state = self.left_start()?;
        for _ in 0..m {
            state = self.apply_left(&state)?;
        }
        Ok(self.lambda * self.lambda * state.integral())
    }

    pub fn right_block_integral(&self, m: usize) -> Result<f64> {
        let mut state = self.right_start()?;
        for _ in 0..m {
            state = self.apply_right(&state)?;
        }
        Ok(self.lambda * self.lambda * state.integral())
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CompositionReport {
    pub side: String,
    pub m: usize,
    pub value: f64,
    pub u: f64,
    pub v: f64,
    pub certified: Vec<CertifiedInequality>,
}

/// Certify the composition bounds: left <= 3 U V^m, right <= 2 U V^m.
pub fn block_composition(
    side: &str,
    m: usize,
    tau: &Field,
    phi: &Field,
    lambda: f64,
    budget_cells: usize,
) -> Result<CompositionReport> {
    let composer = Composer::new(tau, phi, lambda, budget_cells)?;
    let uv = composite_uv(phi, tau, lambda)?;
    let (value, coeff) = match side {
        "left" => (composer.left_block_integral(m)?, 3.0),
        "right" => (composer.right_block_integral(m)?, 2.0),
        other => return Err(Error::UnknownCase(format!("composition side '{other}'"))),
    };
    let rhs = coeff * uv.u * uv.v.powi(m as i32);
    let cert = certify(
        &format!("{side}_block_m{m}"),
        &format!("{coeff} U V^{m}"),
        value,
        rhs,
    );
    Ok(CompositionReport {
        side: side.into(),
        m,
        value,
        u: uv.u,
        v: uv.v,
        certified: vec![cert],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::bigrid::DEFAULT_BUDGET_CELLS;
    use crate::diagrams::psi::{PsiContext, PsiKind};
    use crate::grid::GridField;
    use crate::kernel::AdjacencyKernel;

    fn desk_fields(n: usize, side: f64, lambda: f64) -> (Field, Field) {
        let phi =
            GridField::discretize_kernel(&AdjacencyKernel::gaussian(2), n, side / n as f64)
                .unwrap();
        let pair = crate::oz::form_j(&phi, &phi.scaled(0.0), lambda).unwrap();
        let tau = crate::oz::tau_field(&pair).unwrap();
        (phi, tau)
    }

    #[test]
    fn left_m0_matches_point_sum() {
        // lambda^2 II psi_0(a, b; 0) da db against the psi point evaluator.
        let (phi, tau) = desk_fields(8, 8.0, 0.5);
        let lam = 0.5;
        let composer = Composer::new(&tau, &phi, lam, DEFAULT_BUDGET_CELLS).unwrap();
        let fast = composer.left_block_integral(0).unwrap();

        let ctx = PsiContext::new(&tau, &phi, lam, DEFAULT_BUDGET_CELLS).unwrap();
        let len = tau.shape.len();
        let vol = tau.cell_volume();
        let mut direct = 0.0;
        for a in 0..len {
            for b in 0..len {
                direct += ctx.eval(PsiKind::Psi0One, a, b, 0, 0) * vol * vol;
            }
            // The delta(w) terms integrate over u only.
            direct += (ctx.eval(PsiKind::Psi0Two, 0, a, 0, 0)
                + ctx.eval(PsiKind::Psi0Three, 0, a, 0, 0))
                * vol;
        }
        direct *= lam * lam;
        assert!(
            (fast - direct).abs() < 1e-9 * direct.abs().max(1e-12),
            "fast {fast} direct {direct}"
        );
    }

    #[test]
    fn right_m0_matches_point_sum() {
        let (phi, tau) = desk_fields(8, 8.0, 0.5);
        let lam = 0.5;
        let composer = Composer::new(&tau, &phi, lam, DEFAULT_BUDGET_CELLS).unwrap();
        let fast = composer.right_block_integral(0).unwrap();
        let len = tau.shape.len();
        let vol = tau.cell_volume();
        let mut direct = 0.0;
        for a in 0..len {
            for b in 0..len {
                let t = |x: usize, y: usize| tau.values[tau.shape.sub(x, y)];
                direct += t(a, 0) * t(a, b) * t(b, 0) * vol * vol;
            }
        }
        direct += 1.0 / (lam * lam);
        direct *= lam * lam;
        assert!((fast - direct).abs() < 1e-9 * direct.abs());
    }

    fn desk_fields_1d(n: usize, side: f64, lambda: f64) -> (Field, Field) {
        let phi =
            GridField::discretize_kernel(&AdjacencyKernel::gaussian(1), n, side / n as f64)
                .unwrap();
        let pair = crate::oz::form_j(&phi, &phi.scaled(0.0), lambda).unwrap();
        let tau = crate::oz::tau_field(&pair).unwrap();
        (phi, tau)
    }

    #[test]
    fn left_m1_matches_raw_sums() {
        // m = 1 on a tiny 1d grid against a fully independent direct-sum
        // oracle with the deltas of the contractible edges resolved by hand.
        let lam = 0.4;
        let (phi, tau) = desk_fields_1d(6, 6.0, lam);
        let composer = Composer::new(&tau, &phi, lam, DEFAULT_BUDGET_CELLS).unwrap();
        let fast = composer.left_block_integral(1).unwrap();

        let len = tau.shape.len();
        let vol = tau.cell_volume();
        let sh = tau.shape;
        let t = |x: usize, y: usize| tau.values[sh.sub(x, y)];
        // Start state over (r, s): full triangle part f(r, s) and a
        // delta(r) d(s) part from the two contracted start variants.
        let f0 = |r: usize, s: usize| t(r, 0) * t(s, 0) * t(s, r);
        let d0 = |s: usize| {
            let tt: f64 = (0..len).map(|z| t(s, z) * t(z, 0) * vol).sum();
            t(s, 0) * tt + phi.values[s] / lam
        };
        // psi^1(w, u; r, s): loop over (z, tt) with the t-s edge open.
        let dpsi1 = |w: usize, u: usize, r: usize, s: usize| {
            let mut smooth = 0.0;
            for z in 0..len {
                for tp in 0..len {
                    smooth += t(tp, s) * t(tp, w) * t(u, z) * t(z, tp) * t(z, r);
                }
            }
            smooth *= vol * vol;
            let mut pinned = 0.0;
            for z in 0..len {
                pinned += t(s, w) * t(u, z) * t(z, s) * t(z, r);
            }
            pinned *= vol / lam;
            t(w, u) * lam * lam * (smooth + pinned)
        };
        // psi^2 inner factor (everything but the front tau-circ(w - s)).
        let inner2 = |u: usize, w: usize, r: usize| {
            let mut smooth = 0.0;
            for z in 0..len {
                for tp in 0..len {
                    smooth += t(tp, z) * t(z, u) * t(u, tp) * t(tp, w) * t(z, r);
                }
            }
            smooth *= vol * vol;
            let mut pinned = 0.0;
            for z in 0..len {
                pinned += t(w, z) * t(z, u) * t(u, w) * t(z, r);
            }
            pinned *= vol / lam;
            lam * lam * (smooth + pinned)
        };
        let mut direct = 0.0;
        for w in 0..len {
            for u in 0..len {
                let mut n1 = 0.0;
                let mut n2 = 0.0;
                let mut n3 = 0.0;
                for r in 0..len {
                    for s in 0..len {
                        n1 += dpsi1(w, u, r, s) * f0(r, s) * vol * vol;
                        n2 += t(w, s) * inner2(u, w, r) * f0(r, s) * vol * vol;
                        n3 += t(u, w) * t(w, s) * t(u, r) * f0(r, s) * vol * vol;
                    }
                    // Delta front of psi^2 pins s = w.
                    n2 += inner2(u, w, r) * f0(r, w) * vol / lam;
                }
                for s in 0..len {
                    n1 += dpsi1(w, u, 0, s) * d0(s) * vol;
                    n2 += t(w, s) * inner2(u, w, 0) * d0(s) * vol;
                    n3 += t(u, w) * t(w, s) * t(u, 0) * d0(s) * vol;
                }
                n2 += inner2(u, w, 0) * d0(w) / lam;
                // psi^4 pins s = w.
                let mut n4: f64 = (0..len).map(|r| t(u, r) * f0(r, w) * vol).sum();
                n4 += t(u, 0) * d0(w);
                n4 *= t(u, w) / lam;
                direct += (n1 + n2 + n3 + n4) * vol * vol;
            }
        }
        direct *= lam * lam * lam * lam;
        assert!(
            (fast - direct).abs() < 1e-8 * direct.abs(),
            "fast {fast} direct {direct}"
        );
    }

    #[test]
    fn right_m1_matches_raw_sums() {
        // Same style of oracle for one bar-psi segment applied to the right
        // start state, which carries a double-delta point component that
        // exercises every delta branch of the engine.
        let lam = 0.4;
        let (phi, tau) = desk_fields_1d(6, 6.0, lam);
        let composer = Composer::new(&tau, &phi, lam, DEFAULT_BUDGET_CELLS).unwrap();
        let fast = composer.right_block_integral(1).unwrap();

        let len = tau.shape.len();
        let vol = tau.cell_volume();
        let sh = tau.shape;
        let t = |x: usize, y: usize| tau.values[sh.sub(x, y)];
        let f0 = |r: usize, s: usize| t(r, 0) * t(s, 0) * t(s, r);
        let c0 = 1.0 / (lam * lam);
        // bar-psi^1: plain t-s edge, z-r edge open.
        let dpsi1 = |w: usize, u: usize, r: usize, s: usize| {
            let mut smooth = 0.0;
            for z in 0..len {
                for tp in 0..len {
                    smooth += t(tp, s) * t(tp, w) * t(u, z) * t(z, tp) * t(z, r);
                }
            }
            smooth *= vol * vol;
            let mut pinned = 0.0;
            for tp in 0..len {
                pinned += t(tp, s) * t(tp, w) * t(u, r) * t(r, tp);
            }
            pinned *= vol / lam;
            t(w, u) * lam * lam * (smooth + pinned)
        };
        // bar-psi^2 inner: both the t-w and z-r edges open.
        let inner2 = |u: usize, w: usize, r: usize| {
            let mut acc = 0.0;
            for z in 0..len {
                for tp in 0..len {
                    acc += t(tp, z) * t(z, u) * t(u, tp) * t(tp, w) * t(z, r) * vol * vol;
                }
            }
            for z in 0..len {
                acc += t(w, z) * t(z, u) * t(u, w) * t(z, r) * vol / lam;
            }
            for tp in 0..len {
                acc += t(tp, r) * t(r, u) * t(u, tp) * t(tp, w) * vol / lam;
            }
            acc += t(w, r) * t(r, u) * t(u, w) / (lam * lam);
            lam * lam * acc
        };
        let mut direct = 0.0;
        for w in 0..len {
            for u in 0..len {
                let mut n = 0.0;
                for r in 0..len {
                    for s in 0..len {
                        n += (dpsi1(w, u, r, s)
                            + t(w, s) * inner2(u, w, r)
                            + t(u, w) * t(w, s) * t(u, r))
                            * f0(r, s)
                            * vol
                            * vol;
                    }
                    // bar-psi^4 pins r = u.
                }
                let mut n4: f64 = (0..len).map(|s| t(w, s) * f0(u, s) * vol).sum();
                n4 *= t(u, w) / lam;
                n += n4;
                // Point part of the start state pins r = s = 0.
                n += c0
                    * (dpsi1(w, u, 0, 0)
                        + t(w, 0) * inner2(u, w, 0)
                        + t(u, w) * t(w, 0) * t(u, 0));
                direct += n * vol * vol;
            }
        }
        // bar-psi^4 against the point part leaves delta(u) in the output:
        // lam^{-1} c0 int dw tau(w)^2.
        let psi4_point: f64 = (0..len).map(|w| t(w, 0) * t(w, 0) * vol).sum();
        direct += c0 * psi4_point / lam;
        direct *= lam * lam * lam * lam;
        assert!(
            (fast - direct).abs() < 1e-8 * direct.abs(),
            "fast {fast} direct {direct}"
        );
    }

    #[test]
    fn psi4_delta_term_convention() {
        // The psi point evaluator pins w = s symbolically; the engine must
        // agree on the m = 1 psi4-only integral.
        let (phi, tau) = desk_fields(6, 6.0, 0.4);
        let lam = 0.4;
        let composer = Composer::new(&tau, &phi, lam, DEFAULT_BUDGET_CELLS).unwrap();
        let state = composer.left_start().unwrap();
        let after = composer.psi4_left(&state).unwrap();
        let fast = after.integral();

        // Direct: II dadb lambda^{-1} tau(b-a) [ II tau(b-r) psi0(a, s...) ]
        // psi4(a, b; r, s) = tau(b-a) lam^{-1} delta(a-s) tau(b-r):
        // integral = lam^{-1} II dadb tau(b-a) int dr tau(b-r) psi0(r, a; 0).
        let ctx = PsiContext::new(&tau, &phi, lam, DEFAULT_BUDGET_CELLS).unwrap();
        let len = tau.shape.len();
        let vol = tau.cell_volume();
        let t = |x: usize, y: usize| tau.values[tau.shape.sub(x, y)];
        let mut direct = 0.0;
        for a in 0..len {
            for b in 0..len {
                let mut inner = 0.0;
                for r in 0..len {
                    let mut p0 = ctx.eval(PsiKind::Psi0One, r, a, 0, 0) * vol;
                    if r == 0 {
                        p0 += ctx.eval(PsiKind::Psi0Two, 0, a, 0, 0)
                            + ctx.eval(PsiKind::Psi0Three, 0, a, 0, 0);
                    }
                    inner += t(b, r) * p0;
                }
                direct += t(b, a) * inner * vol * vol;
            }
        }
        direct /= lam;
        assert!(
            (fast - direct).abs() < 1e-9 * direct.abs(),
            "fast {fast} direct {direct}"
        );
    }

    #[test]
    fn composition_bounds_hold_on_desk_fields() {
        let (phi, tau) = desk_fields(8, 8.0, 0.6);
        for side in ["left", "right"] {
            for m in 0..=1 {
                let rep =
                    block_composition(side, m, &tau, &phi, 0.6, DEFAULT_BUDGET_CELLS).unwrap();
                assert!(
                    rep.certified[0].holds,
                    "{side} m={m}: {} vs {}",
                    rep.certified[0].lhs, rep.certified[0].rhs
                );
            }
        }
        assert!(matches!(
            block_composition("middle", 0, &tau, &phi, 0.6, DEFAULT_BUDGET_CELLS),
            Err(Error::UnknownCase(_))
        ));
    }
}
