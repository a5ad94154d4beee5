use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::constants::StructuralConstants;
use super::schedule::initial_params;
use super::step::{kam_step, ln_smallness_bound, EngineConfig, HypothesisPolicy, KamState, StepRecord};
use crate::error::{FailureKind, KamError, Result};
use crate::normal_form::NormalForm;
use crate::series::{majorant_vf_norm, TFSeries};

/// Zeroth-step quantities and the initial smallness check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitReport {
    pub eps: f64,
    pub gamma0: f64,
    pub eta0: f64,
    pub r0: f64,
    pub k1: f64,
    pub norm_p0: f64,
    pub bound_p0: f64,
    pub ln_bound_p0: f64,
    pub smallness_ok: bool,
    /// Whether `eta0 <= 1/16`.
    pub eta0_admissible: bool,
}

/// Builds the zeroth state from `N` and the unscaled perturbation `P`;
/// the engine works with `eps P`.
pub fn init_step0(
    normal: &NormalForm,
    p: &TFSeries,
    eps: f64,
    xi: &[f64],
    cfg: &EngineConfig,
) -> Result<(KamState, InitReport)> {
    normal.dims.check(&p.dims)?;
    normal.check_shape(cfg.consts.m)?;
    cfg.sites.check(&normal.dims)?;
    let (params, base) = initial_params(eps, cfg.s0, cfg.rho0, cfg.sigma0, cfg.lip0, &cfg.consts)?;
    let perturbation = p.scale(Complex64::new(eps, 0.0));
    let nrm = cfg.norm.with_domain(params.r, params.s);
    let norm_p0 = majorant_vf_norm(&perturbation, &nrm, &cfg.sites);
    let ln_bound = ln_smallness_bound(&cfg.consts, &params);
    let smallness_ok = norm_p0 == 0.0 || norm_p0.ln() <= ln_bound;
    let report = InitReport {
        eps,
        gamma0: base.gamma0,
        eta0: base.eta0,
        r0: base.r0,
        k1: params.k_cut,
        norm_p0,
        bound_p0: ln_bound.exp(),
        ln_bound_p0: ln_bound,
        smallness_ok,
        eta0_admissible: base.eta0 <= 1.0 / 16.0,
    };
    if !smallness_ok && cfg.policy == HypothesisPolicy::Halt {
        return Err(KamError::Smallness {
            norm: norm_p0,
            bound: ln_bound.exp(),
        });
    }
    let state = KamState {
        params,
        base,
        normal: normal.clone(),
        perturbation,
        zeta: vec![0.0; normal.dims.nz()],
        xi: xi.to_vec(),
    };
    Ok((state, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Zero coupling: nothing to do.
    Trivial,
    MaxSteps,
    /// The perturbation norm fell below the convergence floor.
    Converged,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
    /// Step at which the failure occurred.
    pub nu: usize,
}

/// Comparison of the total frequency drift with `eps^{3m/(32 mu (m+1)(m-a)(tau+1))}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCheck {
    pub drift: f64,
    pub exponent: f64,
    pub exponent_via_xi: f64,
    pub eps_power: f64,
    /// `drift / eps_power`: the smallest constant making the inequality hold.
    pub implied_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub constants: StructuralConstants,
    pub eps: f64,
    pub xi: Vec<f64>,
    pub init: Option<InitReport>,
    pub steps: Vec<StepRecord>,
    pub termination: Termination,
    pub failure: Option<Failure>,
    pub omega_initial: Vec<f64>,
    pub omega_star: Vec<f64>,
    pub normal_freq_star: Vec<f64>,
    pub zeta_star: Vec<f64>,
    /// Sup-norm change of the tangent frequencies and of the offset per step.
    pub omega_increments: Vec<f64>,
    pub zeta_increments: Vec<f64>,
    /// Perturbation norm at the start of each step and after the last one.
    pub norm_decay: Vec<f64>,
    pub frequency: FrequencyCheck,
}

impl RunReport {
    pub fn norm_csv(&self) -> String {
        let mut out = String::from("nu,s,r,eta,gamma,K,norm_P,bound_P,H1,H2,H3,H4,H5\n");
        for st in &self.steps {
            let h: Vec<&str> = st
                .hypotheses
                .checks
                .iter()
                .map(|c| if c.pass { "pass" } else { "fail" })
                .collect();
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{},{:e},{:e},{}",
                st.nu,
                st.s,
                st.r,
                st.eta,
                st.gamma,
                st.k_trunc,
                st.norm_p,
                st.bound_p,
                h.join(",")
            );
        }
        out
    }

    /// Ratios of successive perturbation norms.
    pub fn decay_factors(&self) -> Vec<f64> {
        self.norm_decay.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// Result of [`run`]: the report plus the last state reached.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub final_state: Option<KamState>,
}

/// Norm below which the iteration is considered converged.
pub const CONVERGED_NORM: f64 = 1e-14;

/// Iterates [`kam_step`] up to `nu_max` times. Failures end the run and
/// are recorded in the report.
pub fn run(normal: &NormalForm, p: &TFSeries, eps: f64, xi: &[f64], nu_max: usize, cfg: &EngineConfig) -> RunOutput {
    let d = normal.dims;
    let mut report = RunReport {
        constants: cfg.consts,
        eps,
        xi: xi.to_vec(),
        init: None,
        steps: Vec::new(),
        termination: Termination::MaxSteps,
        failure: None,
        omega_initial: normal.tangent_freq.clone(),
        omega_star: normal.tangent_freq.clone(),
        normal_freq_star: normal.normal_freq.clone(),
        zeta_star: vec![0.0; d.nz()],
        omega_increments: Vec::new(),
        zeta_increments: Vec::new(),
        norm_decay: Vec::new(),
        frequency: frequency_check(&cfg.consts, eps, 0.0),
    };
    if eps == 0.0 || p.is_empty() {
        report.termination = Termination::Trivial;
        return RunOutput {
            report,
            final_state: None,
        };
    }
    let fail = |report: &mut RunReport, e: KamError, nu: usize| {
        report.termination = Termination::Failed;
        report.failure = Some(Failure {
            kind: e.kind(),
            message: e.to_string(),
            nu,
        });
    };
    let (mut state, init) = match init_step0(normal, p, eps, xi, cfg) {
        Ok(v) => v,
        Err(e) => {
            fail(&mut report, e, 0);
            return RunOutput {
                report,
                final_state: None,
            };
        }
    };
    report.norm_decay.push(init.norm_p0);
    report.init = Some(init);
    for _ in 0..nu_max {
        if report.norm_decay.last().is_some_and(|&v| v < CONVERGED_NORM) {
            report.termination = Termination::Converged;
            break;
        }
        match kam_step(&state, cfg) {
            Ok((next, rec)) => {
                let dw = rec
                    .tangent_freq
                    .iter()
                    .zip(&state.normal.tangent_freq)
                    .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
                let dz = rec.shift.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                report.omega_increments.push(dw);
                report.zeta_increments.push(dz);
                report.norm_decay.push(rec.norm_p_next);
                report.steps.push(rec);
                state = next;
            }
            Err(e) => {
                fail(&mut report, e, state.params.nu);
                break;
            }
        }
    }
    if report.termination == Termination::MaxSteps && report.norm_decay.last().is_some_and(|&v| v < CONVERGED_NORM) {
        report.termination = Termination::Converged;
    }
    report.omega_star = state.normal.tangent_freq.clone();
    report.normal_freq_star = state.normal.normal_freq.clone();
    report.zeta_star = state.zeta.clone();
    let drift = report
        .omega_star
        .iter()
        .zip(&report.omega_initial)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    report.frequency = frequency_check(&cfg.consts, eps, drift);
    RunOutput {
        report,
        final_state: Some(state),
    }
}

fn frequency_check(c: &StructuralConstants, eps: f64, drift: f64) -> FrequencyCheck {
    let exponent = c.frequency_exponent();
    let eps_power = eps.powf(exponent);
    FrequencyCheck {
        drift,
        exponent,
        exponent_via_xi: c.frequency_exponent_via_xi(),
        eps_power,
        implied_constant: if eps_power > 0.0 { drift / eps_power } else { 0.0 },
    }
}
