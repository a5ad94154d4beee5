use serde::{Deserialize, Serialize};

use super::constants::StructuralConstants;
use crate::error::{KamError, Result};

/// Fixed data of the zeroth step that the recursion keeps referring to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBase {
    pub s0: f64,
    pub r0: f64,
    pub eta0: f64,
    pub gamma0: f64,
    pub rho0: f64,
    pub sigma0: f64,
    pub lip0: f64,
}

/// Geometry of one step. `eta` and `r` are carried through their
/// logarithms so deep steps neither underflow nor lose digits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepParams {
    pub nu: usize,
    pub s: f64,
    pub r: f64,
    pub ln_r: f64,
    pub eta: f64,
    pub ln_eta: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma: f64,
    /// Lipschitz bound on the frequencies.
    pub lip: f64,
    /// Fourier cutoff used by this step, `([ln(1/eta^{m+1})] + 1)^{3 mu}`.
    pub k_cut: f64,
}

/// `([ln(1/eta^{m+1})] + 1)^{3 mu}` from `ln eta`.
pub fn fourier_cutoff(ln_eta: f64, c: &StructuralConstants) -> f64 {
    let inner = (-(c.m as f64 + 1.0) * ln_eta).floor() + 1.0;
    inner.powi(3 * c.mu as i32)
}

fn growth(c: &StructuralConstants) -> f64 {
    1.0 + 1.0 / (2.0 * c.m as f64)
}

/// Zeroth-step parameters: `gamma0 = eps^{1/(4 (2b)^{m+2} xi)}`,
/// `eta0 = gamma0^{2 (2b)^{m+2}} eps^{1/xi}`, `r0 = s gamma0 / (K1+1)^{tau+1}`.
pub fn initial_params(
    eps: f64,
    s0: f64,
    rho0: f64,
    sigma0: f64,
    lip0: f64,
    c: &StructuralConstants,
) -> Result<(StepParams, ScheduleBase)> {
    if !(eps > 0.0) || !(s0 > 0.0 && s0 <= 1.0) || !(rho0 > 0.0 && rho0 < s0 / 6.0) {
        return Err(KamError::InvalidParameter(format!(
            "need eps > 0, 0 < s <= 1, 0 < rho0 < s/6 (eps={eps}, s={s0}, rho0={rho0})"
        )));
    }
    let pw = c.mode_power();
    let ln_eps = eps.ln();
    let ln_gamma0 = ln_eps / (4.0 * pw * c.xi);
    let ln_eta0 = 2.0 * pw * ln_gamma0 + ln_eps / c.xi;
    let gamma0 = ln_gamma0.exp();
    let k1 = fourier_cutoff(ln_eta0, c);
    let ln_r0 = s0.ln() + ln_gamma0 - (c.tau + 1.0) * (k1 + 1.0).ln();
    let p = StepParams {
        nu: 0,
        s: s0,
        r: ln_r0.exp(),
        ln_r: ln_r0,
        eta: ln_eta0.exp(),
        ln_eta: ln_eta0,
        gamma: gamma0,
        rho: rho0,
        sigma: sigma0,
        lip: lip0,
        k_cut: k1,
    };
    let base = ScheduleBase {
        s0,
        r0: p.r,
        eta0: p.eta,
        gamma0,
        rho0,
        sigma0,
        lip0,
    };
    Ok((p, base))
}

/// One application of the step recursion.
pub fn schedule_next(p: &StepParams, base: &ScheduleBase, c: &StructuralConstants) -> Result<StepParams> {
    let s = p.s - 6.0 * p.rho;
    if !(s > 0.0) {
        return Err(KamError::StripExhausted(s));
    }
    let ln_eta = p.ln_eta * growth(c);
    let ln_r = p.ln_r + p.ln_eta;
    let nu = p.nu + 1;
    Ok(StepParams {
        nu,
        s,
        r: ln_r.exp(),
        ln_r,
        eta: ln_eta.exp(),
        ln_eta,
        gamma: p.gamma / 2.0 + base.gamma0 / 4.0,
        rho: p.rho / 2.0,
        sigma: p.sigma / 2.0 + base.sigma0 / 4.0,
        lip: base.lip0 * (2.0 - 0.5f64.powi(nu as i32)),
        k_cut: fourier_cutoff(ln_eta, c),
    })
}

/// Closed forms of the recursion at step `nu`.
pub fn closed_form(nu: usize, base: &ScheduleBase, c: &StructuralConstants) -> StepParams {
    let g = growth(c);
    let gn = g.powi(nu as i32);
    let ln_eta0 = base.eta0.ln();
    let ln_eta = gn * ln_eta0;
    let ln_r = base.r0.ln() + 2.0 * c.m as f64 * (gn - 1.0) * ln_eta0;
    let half = 0.5f64.powi(nu as i32);
    StepParams {
        nu,
        s: base.s0 - 12.0 * base.rho0 * (1.0 - half),
        r: ln_r.exp(),
        ln_r,
        eta: ln_eta.exp(),
        ln_eta,
        gamma: base.gamma0 * (0.5 + half / 2.0),
        rho: base.rho0 * half,
        sigma: base.sigma0 * (0.5 + half / 2.0),
        lip: base.lip0 * (2.0 - half),
        k_cut: fourier_cutoff(ln_eta, c),
    }
}
