use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};

/// Integers and exponents fixed once per problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    /// Convexity exponent of the degenerate part.
    pub convexity_exp: f64,
    /// Degeneracy order: Taylor grade retained by each step.
    pub m: u32,
    /// Exponent of the normal-mode ball `r^a`.
    pub a: u32,
    /// Smallest integer with `(1 + 1/(2m))^mu >= 2`.
    pub mu: u32,
    /// `8 mu (m+1)(m-a)(tau+1)`.
    pub xi: f64,
    pub tau: f64,
    pub d: f64,
    pub delta: f64,
    pub n: usize,
    pub b: usize,
}

impl StructuralConstants {
    /// `(2b)^{m+2}`, the power carried by every smallness bound.
    pub fn mode_power(&self) -> f64 {
        ((2 * self.b) as f64).powi(self.m as i32 + 2)
    }

    /// Exponent of `eps` in the final frequency estimate, `3m / (32 mu (m+1)(m-a)(tau+1))`.
    pub fn frequency_exponent(&self) -> f64 {
        let m = self.m as f64;
        3.0 * m / (32.0 * self.mu as f64 * (m + 1.0) * (m - self.a as f64) * (self.tau + 1.0))
    }

    /// The same exponent written through `xi`: `3m / (4 xi)`.
    pub fn frequency_exponent_via_xi(&self) -> f64 {
        3.0 * self.m as f64 / (4.0 * self.xi)
    }
}

/// Smallest admissible `m`, the forced `a`, `mu` and `xi`.
pub fn structural_constants(
    convexity_exp: f64,
    n: usize,
    b: usize,
    tau: f64,
    d: f64,
    delta: f64,
) -> Result<StructuralConstants> {
    if !(convexity_exp >= 2.0) {
        return Err(KamError::InvalidParameter(format!("convexity exponent {convexity_exp} < 2")));
    }
    if tau < n as f64 - 1.0 {
        return Err(KamError::InvalidParameter(format!("tau {tau} < n - 1")));
    }
    if b == 0 {
        return Err(KamError::InvalidParameter("at least one degenerate pair is required".into()));
    }
    let l = convexity_exp;
    let m_min = l + (4.0 * l * l + 2.0 * l).sqrt() / 2.0;
    let m = m_min.ceil() as u32;
    let a = if (m + 1).is_multiple_of(3) { (m + 1) / 3 } else { (m + 1) / 3 + 1 };
    let mut mu = 1u32;
    let base = 1.0 + 1.0 / (2.0 * m as f64);
    while base.powi(mu as i32) < 2.0 {
        mu += 1;
    }
    let xi = 8.0 * mu as f64 * (m + 1) as f64 * (m - a) as f64 * (tau + 1.0);
    Ok(StructuralConstants {
        convexity_exp,
        m,
        a,
        mu,
        xi,
        tau,
        d,
        delta,
        n,
        b,
    })
}
