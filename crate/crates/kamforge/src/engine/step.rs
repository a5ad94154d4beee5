use serde::{Deserialize, Serialize};

use super::constants::StructuralConstants;
use super::hypotheses::{check_hypotheses, HypothesisReport};
use super::lie::{lie_transform, LieOptions};
use super::schedule::{schedule_next, ScheduleBase, StepParams};
use super::translate::{translate, PolyGradient};
use crate::degree::{find_equilibrium, EquilibriumOptions};
use crate::error::{KamError, Result};
use crate::homological::{assemble, small_divisor_ok, solve, DiophantineParams};
use crate::normal_form::NormalForm;
use crate::series::{fourier_vectors, majorant_vf_norm, truncate, GradingCaps, ModeSites, TFSeries, WeightedNorm};

/// What to do when a step hypothesis or the smallness bound fails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisPolicy {
    /// Stop the run with an error.
    Halt,
    /// Log the failure and carry on.
    Record,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub consts: StructuralConstants,
    /// Diophantine data; `gamma` is replaced by the scheduled value.
    pub dio: DiophantineParams,
    /// Norm weights; `r` and `s` are replaced by the scheduled domain.
    pub norm: WeightedNorm,
    pub sites: ModeSites,
    pub s0: f64,
    pub rho0: f64,
    pub sigma0: f64,
    pub lip0: f64,
    /// Lower and upper clamps on the Fourier cutoff used for truncation.
    pub k_floor: u32,
    pub k_ceiling: u32,
    pub policy: HypothesisPolicy,
    /// Constant multiplying the unnamed terms of the fifth hypothesis.
    pub c_delta: f64,
    pub lie_rel_tol: f64,
    pub lie_max_terms: usize,
    /// Pair-skipping floor of the Lie series; zero computes every bracket exactly.
    pub lie_coef_floor: f64,
    /// Outer caps of the transformed Hamiltonian, as multiples of the step caps.
    pub outer_k_factor: u32,
    pub outer_grade_factor: u32,
    pub outer_modes: u32,
    pub equilibrium: EquilibriumOptions,
}

impl EngineConfig {
    /// The Fourier cutoff actually used for a scheduled value.
    pub fn truncation_order(&self, k_cut: f64) -> u32 {
        let k = if k_cut.is_finite() { k_cut.min(u32::MAX as f64) as u32 } else { u32::MAX };
        k.max(self.k_floor).min(self.k_ceiling)
    }

    fn z_weights(&self) -> Vec<f64> {
        (0..2 * self.consts.b)
            .map(|c| {
                let j = self.sites.z_site(c) as f64;
                j.powf(self.norm.p) * (self.norm.a_wt * j).exp()
            })
            .collect()
    }
}

/// Everything one step needs.
#[derive(Clone, Debug)]
pub struct KamState {
    pub params: StepParams,
    pub base: ScheduleBase,
    pub normal: NormalForm,
    pub perturbation: TFSeries,
    /// Accumulated equilibrium offset in `z`.
    pub zeta: Vec<f64>,
    pub xi: Vec<f64>,
}

/// A `(k, l)` pair violating the divisor condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantPair {
    pub k: Vec<i32>,
    pub l: Vec<i32>,
    pub divisor: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub failing: Vec<ResonantPair>,
}

/// Checks every `|k| <= k_max`, `|l| <= 2`, `(k, l) != 0` against the divisor bound.
pub fn resonance_membership(
    tangent_freq: &[f64],
    normal_freq: &[f64],
    k_max: u32,
    w_sites: &[u32],
    dio: &DiophantineParams,
) -> Membership {
    let ls = fourier_vectors(normal_freq.len(), 2);
    let mut failing = Vec::new();
    for k in fourier_vectors(tangent_freq.len(), k_max) {
        for l in &ls {
            let Ok(chk) = small_divisor_ok(&k, l, tangent_freq, normal_freq, w_sites, dio) else {
                continue;
            };
            if !chk.ok {
                failing.push(ResonantPair {
                    k: k.clone(),
                    l: l.clone(),
                    divisor: chk.divisor,
                    threshold: chk.threshold,
                });
            }
        }
    }
    Membership {
        member: failing.is_empty(),
        failing,
    }
}

/// `ln( gamma^{2 (2b)^{m+2}} r^{m-a} eta^m )`.
pub fn ln_smallness_bound(c: &StructuralConstants, p: &StepParams) -> f64 {
    2.0 * c.mode_power() * p.gamma.ln() + (c.m as f64 - c.a as f64) * p.ln_r + c.m as f64 * p.ln_eta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub nu: usize,
    pub s: f64,
    pub r: f64,
    pub eta: f64,
    pub gamma: f64,
    pub rho: f64,
    /// Scheduled Fourier cutoff and the one used after clamping.
    pub k_cut: f64,
    pub k_trunc: u32,
    pub norm_p: f64,
    pub bound_p: f64,
    pub ln_bound_p: f64,
    pub hypotheses: HypothesisReport,
    pub homological_residual: f64,
    pub homological_rhs: f64,
    pub det_bound_holds: bool,
    pub classes: usize,
    pub lie_terms: usize,
    pub lie_increments: Vec<f64>,
    pub discarded_norm: f64,
    pub skipped_l1: f64,
    pub shift: Vec<f64>,
    pub shift_norm: f64,
    pub shift_radius: f64,
    pub zeta: Vec<f64>,
    /// Gradient of the new degenerate part at the origin.
    pub grad_at_origin: f64,
    pub tangent_freq: Vec<f64>,
    pub normal_freq: Vec<f64>,
    /// `|omega_+ - omega| + |Omega_+ - Omega|_{-delta}`.
    pub freq_drift: f64,
    pub norm_p_next: f64,
    pub bound_p_next: f64,
    pub ln_bound_p_next: f64,
    pub bound_next_ok: bool,
    /// Size of the step transformation and its scheduled bound.
    pub displacement: f64,
    pub displacement_bound: f64,
    pub imag_leak: f64,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// One full step: truncate, solve, Lie transform, re-centre, route.
pub fn kam_step(state: &KamState, cfg: &EngineConfig) -> Result<(KamState, StepRecord)> {
    let c = &cfg.consts;
    let p = state.params;
    let d = state.normal.dims;
    let next = schedule_next(&p, &state.base, c)?;
    let k_trunc = cfg.truncation_order(p.k_cut);
    let hypotheses = check_hypotheses(&p, &next, k_trunc, c, &cfg.sites.w, cfg.c_delta);
    if cfg.policy == HypothesisPolicy::Halt {
        if let Some(f) = hypotheses.first_failure() {
            return Err(KamError::Hypothesis {
                name: f.name.clone(),
                lhs: f.lhs,
                rhs: f.rhs,
            });
        }
    }
    let nrm = cfg.norm.with_domain(p.r, p.s);
    let norm_p = majorant_vf_norm(&state.perturbation, &nrm, &cfg.sites);
    let ln_bound_p = ln_smallness_bound(c, &p);
    let dio = cfg.dio.with_gamma(p.gamma);
    let membership = resonance_membership(&state.normal.tangent_freq, &state.normal.normal_freq, k_trunc, &cfg.sites.w, &dio);
    if let Some(f) = membership.failing.first() {
        return Err(KamError::Resonance {
            k: f.k.clone(),
            l: f.l.clone(),
            divisor: f.divisor,
            threshold: f.threshold,
        });
    }

    let (retained, _) = truncate(&state.perturbation, k_trunc, c.m);
    let caps = GradingCaps::new(k_trunc, c.m);
    let sys = assemble(&state.normal, &retained, &caps, &cfg.sites.w, &dio)?;
    let sol = solve(&sys, &nrm, &cfg.sites)?;

    let normal_series = state.normal.to_series();
    let h = normal_series.add(&state.perturbation)?;
    let outer = GradingCaps {
        k_max: k_trunc.saturating_mul(cfg.outer_k_factor),
        m_max: c.m * cfg.outer_grade_factor,
        l_max: cfg.outer_modes,
    };
    let lie_opts = LieOptions {
        rel_tol: cfg.lie_rel_tol,
        max_terms: cfg.lie_max_terms,
        coef_floor: cfg.lie_coef_floor,
        outer,
    };
    let lie = lie_transform(&h, &sol.generator, &lie_opts, &nrm, &cfg.sites)?;
    let normal_bar = normal_series.add(&sol.resonant)?;
    let remainder = lie.series.sub(&normal_bar)?;

    let radius = (((c.m as f64 - 1.0) * p.ln_r + c.m as f64 * p.ln_eta) / c.convexity_exp).exp();
    let grad = PolyGradient::new(&state.normal.degenerate);
    let pert = PolyGradient::new(&sol.resonant);
    let nz = d.nz();
    let (shift, shift_norm) = if pert.is_zero() {
        (vec![0.0; nz], 0.0)
    } else {
        let opts = EquilibriumOptions {
            weights: cfg.z_weights(),
            ..cfg.equilibrium.clone()
        };
        let eq = find_equilibrium(&grad, &pert, &vec![0.0; nz], radius, &opts)?;
        (eq.offset, eq.offset_norm)
    };
    let moved = translate(&normal_bar, &remainder, &shift, c.m)?;

    let next_nrm = cfg.norm.with_domain(next.r, next.s);
    let norm_p_next = majorant_vf_norm(&moved.perturbation, &next_nrm, &cfg.sites);
    let ln_bound_p_next = ln_smallness_bound(c, &next);
    let bound_next_ok = norm_p_next.ln() <= ln_bound_p_next;
    if cfg.policy == HypothesisPolicy::Halt && !bound_next_ok {
        return Err(KamError::Smallness {
            norm: norm_p_next,
            bound: ln_bound_p_next.exp(),
        });
    }

    let d_tangent: Vec<f64> = moved
        .normal
        .tangent_freq
        .iter()
        .zip(&state.normal.tangent_freq)
        .map(|(a, b)| a - b)
        .collect();
    let d_normal: Vec<f64> = moved
        .normal
        .normal_freq
        .iter()
        .zip(&state.normal.normal_freq)
        .zip(&cfg.sites.w)
        .map(|((a, b), &j)| (a - b) * (j as f64).powf(-c.delta))
        .collect();
    let freq_drift = sup_norm(&d_tangent) + sup_norm(&d_normal);
    let zeta: Vec<f64> = state.zeta.iter().zip(&shift).map(|(a, b)| a + b).collect();
    let eta_star_sqrt = (c.m as f64 * state.base.eta0.ln() / 4.0).exp();

    let record = StepRecord {
        nu: p.nu,
        s: p.s,
        r: p.r,
        eta: p.eta,
        gamma: p.gamma,
        rho: p.rho,
        k_cut: p.k_cut,
        k_trunc,
        norm_p,
        bound_p: ln_bound_p.exp(),
        ln_bound_p,
        hypotheses,
        homological_residual: sol.residual_norm,
        homological_rhs: sol.rhs_norm,
        det_bound_holds: sol.det_bound_holds(),
        classes: sol.diagnostics.len(),
        lie_terms: lie.terms,
        lie_increments: lie.increments.clone(),
        discarded_norm: majorant_vf_norm(&lie.discarded, &next_nrm, &cfg.sites),
        skipped_l1: lie.skipped_l1,
        shift: shift.clone(),
        shift_norm,
        shift_radius: radius,
        zeta: zeta.clone(),
        grad_at_origin: moved.linear_z.iter().map(|v| v * v).sum::<f64>().sqrt(),
        tangent_freq: moved.normal.tangent_freq.clone(),
        normal_freq: moved.normal.normal_freq.clone(),
        freq_drift,
        norm_p_next,
        bound_p_next: ln_bound_p_next.exp(),
        ln_bound_p_next,
        bound_next_ok,
        displacement: majorant_vf_norm(&sol.generator, &nrm, &cfg.sites) + shift_norm,
        displacement_bound: eta_star_sqrt * 0.5f64.powi(p.nu as i32),
        imag_leak: moved.imag_leak,
    };
    let state_next = KamState {
        params: next,
        base: state.base,
        normal: moved.normal,
        perturbation: moved.perturbation,
        zeta,
        xi: state.xi.clone(),
    };
    Ok((state_next, record))
}
