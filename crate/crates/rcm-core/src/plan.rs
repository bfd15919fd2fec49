use crate::error::{Error, Result};

/// Integrability regime for the a-th moment of the lace kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentRegime {
    /// a <= 2: the L^1 ∩ L^infinity regime, no p threshold applies.
    L1CapLinf,
    /// a in (2, d+2]: admissible p below p_star = d / (d - a + 2).
    Threshold { p_star: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPlan {
    pub a: f64,
    pub d: usize,
    pub regime: MomentRegime,
    /// Default exponent choice; strictly below p_star in the threshold regime.
    pub p_a: f64,
}

/// Plan for the a-th moment in dimension d, following the p_a^* = d/(d-a+2)
/// threshold. Errors when a > d + 2 (outside the definition's range).
pub fn moment_plan(a: f64, d: usize) -> Result<MomentPlan> {
    let df = d as f64;
    if !(0.0..=df + 2.0).contains(&a) {
        return Err(Error::MomentOutOfRange { a, max: df + 2.0 });
    }
    if a <= 2.0 {
        return Ok(MomentPlan {
            a,
            d,
            regime: MomentRegime::L1CapLinf,
            p_a: 1.0,
        });
    }
    let denom = df - a + 2.0;
    let p_star = if denom > 0.0 { df / denom } else { f64::INFINITY };
    // Midpoint default; at a = d+2 the threshold is infinite and any finite
    // exponent works, pinned to 2.
    let p_a = if p_star.is_finite() {
        (1.0 + p_star) / 2.0
    } else {
        2.0
    };
    Ok(MomentPlan {
        a,
        d,
        regime: MomentRegime::Threshold { p_star },
        p_a,
    })
}
