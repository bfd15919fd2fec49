use crate::diagrams::bigrid::BiField;
use crate::error::Result;
use crate::grid::convolve;
use crate::Field;

/// The psi-function variants of the block decomposition. `Psi0*` start
/// blocks take (w, u; s); `Psi*` middle blocks take (w, u; r, s); `PsiN*`
/// end blocks take (x; r, s) (passed in the `w` slot); `Bar*` are the
/// right-to-left analogues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiKind {
    Psi0One,
    Psi0Two,
    Psi0Three,
    PsiOne,
    PsiTwo,
    PsiThree,
    PsiFour,
    PsiNOne,
    PsiNTwo,
    BarPsi0One,
    BarPsi0Two,
    BarPsiOne,
    BarPsiTwo,
    BarPsiThree,
    BarPsiFour,
}

/// Precomputed fields for point evaluation of psi variants. `wedge` holds
/// G(a, b) = int tau(t) tau(a - t) tau(b - t) dt, the one-vertex wedge that
/// closes every internal z integral.
pub struct PsiContext {
    pub tau: Field,
    pub phi: Field,
    pub lambda: f64,
    pub tau2: Field,
    pub wedge: BiField,
}

impl PsiContext {
    pub fn new(tau: &Field, phi: &Field, lambda: f64, budget_cells: usize) -> Result<Self> {
        tau.check_shape(phi)?;
        assert!(lambda > 0.0);
        // The wedge closures below use tau(-x) = tau(x).
        let defect = crate::grid::ops::evenness_defect(tau);
        if defect > 1e-8 * tau.max_abs().max(1.0) {
            return Err(crate::error::Error::ShapeMismatch(format!(
                "psi evaluation needs an even tau (defect {defect})"
            )));
        }
        Ok(PsiContext {
            tau: tau.clone(),
            phi: phi.clone(),
            lambda,
            tau2: convolve(tau, tau)?,
            wedge: BiField::wedge(tau, tau, tau, budget_cells)?,
        })
    }

    fn t(&self, a: usize, b: usize) -> f64 {
        self.tau.values[self.tau.shape.sub(a, b)]
    }

    fn g(&self, a: usize, b: usize) -> f64 {
        self.wedge.at(a, b)
    }

    /// Delta factors are symbolic: a point evaluation reports the analytic
    /// coefficient when the pinned arguments coincide exactly and 0 otherwise.
    fn pinned(&self, a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }

    /// Evaluate a psi variant at external linear site indices. For Psi0*
    /// variants `r` is ignored; for PsiN* variants `w` holds x and `u` is
    /// ignored.
    pub fn eval(&self, kind: PsiKind, w: usize, u: usize, r: usize, s: usize) -> f64 {
        let lam = self.lambda;
        let shape = self.tau.shape;
        let vol = self.tau.cell_volume();
        match kind {
            PsiKind::Psi0One => self.t(u, s) * self.t(u, w) * self.t(w, s),
            PsiKind::Psi0Two => {
                self.pinned(w, s) / lam
                    * self.t(u, s)
                    * lam
                    * self.tau2.values[shape.sub(u, s)]
            }
            PsiKind::Psi0Three => {
                self.pinned(w, s) / lam * self.phi.values[shape.sub(u, s)]
            }
            PsiKind::PsiOne | PsiKind::BarPsiOne => {
                // tau(w-u) * lam^2 * II tau_circ/tau(t-s) tau(t-w)
                //   tau(u-z) tau(z-t) tau/tau_circ(z-r) dz dt,
                // with the z integral closed as G(u-t, r-t).
                let (ts_contract, zr_contract) = (kind == PsiKind::PsiOne, kind == PsiKind::BarPsiOne);
                let mut inner = 0.0;
                if ts_contract {
                    inner += self.t(s, w) * self.g(shape.sub(u, s), shape.sub(r, s)) / lam;
                }
                if zr_contract {
                    // delta on z - r: int dt tau(t-s) tau(t-w) tau(u-r) tau(r-t)
                    inner += self.t(u, r) * self.g(shape.sub(s, r), shape.sub(w, r)) / lam;
                }
                let mut smooth = 0.0;
                if ts_contract {
                    for t in 0..shape.len() {
                        smooth += self.t(t, s)
                            * self.t(t, w)
                            * self.g(shape.sub(u, t), shape.sub(r, t));
                    }
                } else {
                    for z in 0..shape.len() {
                        smooth += self.t(u, z)
                            * self.t(z, r)
                            * self.g(shape.sub(s, z), shape.sub(w, z));
                    }
                }
                self.t(w, u) * lam * lam * (inner + smooth * vol)
            }
            PsiKind::PsiTwo => {
                // tau_circ(w-s) * lam^2 * [delta_t + smooth] with
                // tau_circ(t-w) split; z closed via G.
                let front = self.pinned(w, s) / lam + self.t(w, s);
                let delta_t = self.t(u, w) * self.g(shape.sub(u, w), shape.sub(r, w)) / lam;
                let mut smooth = 0.0;
                for t in 0..shape.len() {
                    smooth += self.t(t, w)
                        * self.t(u, t)
                        * self.g(shape.sub(u, t), shape.sub(r, t));
                }
                front * lam * lam * (delta_t + smooth * vol)
            }
            PsiKind::BarPsiTwo => {
                let front = self.t(w, s);
                // tau_circ on both (t - w) and (z - r): four terms.
                let dd = self.t(w, r) * self.t(r, u) * self.t(u, w) / (lam * lam);
                let dt = self.t(u, w) * self.g(shape.sub(u, w), shape.sub(r, w)) / lam;
                let dz = self.t(r, u) * self.g(shape.sub(u, r), shape.sub(w, r)) / lam;
                let mut smooth = 0.0;
                for t in 0..shape.len() {
                    smooth += self.t(u, t)
                        * self.t(t, w)
                        * self.g(shape.sub(u, t), shape.sub(r, t));
                }
                front * lam * lam * (dd + dt + dz + smooth * vol)
            }
            PsiKind::PsiThree | PsiKind::BarPsiThree => self.t(u, w) * self.t(w, s) * self.t(u, r),
            PsiKind::PsiFour => self.t(u, w) * self.pinned(w, s) / lam * self.t(u, r),
            PsiKind::BarPsiFour => self.t(u, w) * self.t(w, s) * self.pinned(u, r) / lam,
            PsiKind::PsiNOne => {
                let x = w;
                let inner = self.t(x, s) * self.g(shape.sub(r, s), shape.sub(x, s)) / lam;
                let mut smooth = 0.0;
                for t in 0..shape.len() {
                    smooth += self.t(t, s)
                        * self.t(x, t)
                        * self.g(shape.sub(r, t), shape.sub(x, t));
                }
                lam * lam * (inner + smooth * vol)
            }
            PsiKind::PsiNTwo => {
                let x = w;
                self.t(x, s) * self.t(x, r)
            }
            PsiKind::BarPsi0One => self.t(w, s) * self.t(w, u) * self.t(u, s),
            PsiKind::BarPsi0Two => self.pinned(w, s) * self.pinned(u, s) / (lam * lam),
        }
    }
}
