use serde::{Deserialize, Serialize};

use super::constants::StructuralConstants;
use super::schedule::StepParams;
use crate::homological::log_a_rho;

/// One inequality `lhs < rhs`, with both sides also kept as natural logs
/// because they routinely leave the range of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub pass: bool,
}

impl HypothesisCheck {
    fn new(name: &str, ln_lhs: f64, ln_rhs: f64, strict: bool) -> Self {
        let pass = if strict { ln_lhs < ln_rhs } else { ln_lhs <= ln_rhs };
        HypothesisCheck {
            name: name.to_string(),
            lhs: ln_lhs.exp(),
            rhs: ln_rhs.exp(),
            ln_lhs,
            ln_rhs,
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
    /// `ln A_rho` used by the last three checks.
    pub ln_a_rho: f64,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| !c.pass)
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Evaluates the five step hypotheses for the transition `p -> next`.
///
/// `k_trunc` is the Fourier cutoff actually used for truncation. The
/// divisor weight `<l>_d` enters at its smallest value 1, and the unnamed
/// constant of the last check is `c_delta`.
pub fn check_hypotheses(
    p: &StepParams,
    next: &StepParams,
    k_trunc: u32,
    c: &StructuralConstants,
    w_sites: &[u32],
    c_delta: f64,
) -> HypothesisReport {
    let m = c.m as f64;
    let a = c.a as f64;
    let k = k_trunc as f64;
    let h1 = HypothesisCheck::new(
        "H1",
        c.n as f64 * k.ln() - k * p.rho,
        (m + 1.0) * p.ln_eta,
        true,
    );
    let h2 = HypothesisCheck::new(
        "H2",
        8f64.ln() + p.ln_r,
        (p.gamma - next.gamma).ln() - (c.tau + 1.0) * (k + 1.0).ln(),
        true,
    );
    let ln_a = log_a_rho(c.n, k_trunc, p.rho, c.tau, c.b, c.m, c.d, w_sites);
    let h3 = HypothesisCheck::new("H3", ln_a + (m - 1.0) * p.ln_r + m * p.ln_eta, p.rho.ln(), true);
    let h4 = HypothesisCheck::new("H4", ln_a + (m - 2.0 * a) * p.ln_r + (m - a) * p.ln_eta, 0.0, true);
    let pw = c.mode_power();
    let ln_rho = p.rho.ln();
    let terms = [
        2.0 * (ln_a - ln_rho) + (m - 2.0 * a) * p.ln_r - 0.5 * p.ln_eta,
        c_delta.ln() + 0.5 * p.ln_eta + pw * p.gamma.ln(),
        c_delta.ln() + ln_a - ln_rho + 1.5 * p.ln_eta,
    ];
    let h5 = HypothesisCheck::new("H5", log_sum_exp(&terms), 2.0 * pw * next.gamma.ln(), false);
    HypothesisReport {
        checks: vec![h1, h2, h3, h4, h5],
        ln_a_rho: ln_a,
    }
}
