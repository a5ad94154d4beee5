//! Newton's-cradle chain: Hamiltonian, reduction to normal-form
//! coordinates, and direct integration for cross-checks.

mod chain;
mod flow;
mod reduce;

pub use chain::{build_lattice, Lattice, LatticeConfig, SiteKind, Trajectory};
pub use flow::{default_horizon, torus_diagnostic, ReducedFlow, ReducedState, ReducedTrajectory, TorusDiagnostic};
pub use reduce::{quartic_degenerate, remark1_g, to_normal_coordinates, ReducedLattice};

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::degree::EquilibriumOptions;
use crate::engine::{structural_constants, EngineConfig, HypothesisPolicy, RunOutput};
use crate::error::Result;
use crate::homological::DiophantineParams;
use crate::measure::ParameterBox;
use crate::series::WeightedNorm;

/// Engine settings shipped with [`LatticeConfig::example`].
pub fn example_engine_config(config: &LatticeConfig) -> Result<EngineConfig> {
    config.validate()?;
    let consts = structural_constants(2.0, config.n1, config.n2 - config.n1, 1.0, 2.0, 0.5)?;
    Ok(EngineConfig {
        consts,
        dio: DiophantineParams {
            gamma: 1.0,
            tau: 1.0,
            d: 2.0,
            delta: 0.5,
        },
        norm: WeightedNorm {
            a_wt: 0.0,
            p: 1.0,
            p_bar: 1.0,
            r: 0.5,
            s: 1.0,
            a_exp: consts.a as f64,
        },
        sites: config.mode_sites(),
        s0: 1.0,
        rho0: 0.05,
        sigma0: 0.1,
        lip0: 1.0,
        k_floor: 5,
        k_ceiling: 5,
        policy: HypothesisPolicy::Halt,
        c_delta: 1.0,
        lie_rel_tol: 1e-16,
        lie_max_terms: 12,
        lie_coef_floor: 1e-22,
        outer_k_factor: 2,
        outer_grade_factor: 2,
        outer_modes: 4,
        equilibrium: EquilibriumOptions::default(),
    })
}

/// Torus diagnostic for the last system an engine run reached. Falls back
/// to the unreduced `N + eps P` when the run produced no state.
pub fn run_torus_diagnostic(out: &RunOutput, reduced: &ReducedLattice, t_end: f64, dt: f64) -> Result<TorusDiagnostic> {
    match &out.final_state {
        Some(state) => {
            let h = state.normal.to_series().add(&state.perturbation)?;
            let scale = out.report.norm_decay.last().copied().unwrap_or(0.0);
            torus_diagnostic(&h, &out.report.omega_star, scale, t_end, dt)
        }
        None => {
            let h = reduced.hamiltonian()?;
            let scale = if reduced.eps == 0.0 { 0.0 } else { f64::INFINITY };
            torus_diagnostic(&h, &reduced.normal.tangent_freq, scale, t_end, dt)
        }
    }
}

/// Result of sampling the frequency map for injectivity.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InjectivityCheck {
    pub samples: usize,
    /// Smallest `|omega(a) - omega(b)| / |a - b|` seen.
    pub min_ratio: f64,
    pub pass: bool,
}

/// Samples parameter pairs in the box `[lo, hi]` and checks that distinct
/// parameters give distinct frequencies.
pub fn spot_check_injectivity<F: Fn(&[f64]) -> Vec<f64>>(
    frequency: F,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
    seed: u64,
) -> InjectivityCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> { lo.iter().zip(hi).map(|(&l, &h)| rng.gen_range(l..=h)).collect() };
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let mut min_ratio = f64::INFINITY;
    for _ in 0..samples {
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let gap = dist(&a, &b);
        if gap == 0.0 {
            continue;
        }
        min_ratio = min_ratio.min(dist(&frequency(&a), &frequency(&b)) / gap);
    }
    InjectivityCheck {
        samples,
        min_ratio,
        pass: min_ratio > 0.0,
    }
}

/// Tangent frequencies of the chain as a function of its tangent parameters.
pub fn tangent_frequency_map(params: &[f64]) -> Vec<f64> {
    params.to_vec()
}

/// Uniform random lattice state with tangent actions in `y_star * [1-spread, 1+spread]`.
pub fn random_state(config: &LatticeConfig, spread: f64, amplitude: f64, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let n = config.sites();
    let (mut q, mut p) = (vec![0.0; n], vec![0.0; n]);
    for j in 1..=n {
        match config.kind(j) {
            SiteKind::Tangent(i) => {
                let a = config.alpha[i];
                let action = config.y_star[i] * (1.0 + rng.gen_range(-spread..=spread));
                let x: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                q[j - 1] = (2.0 * action / a).sqrt() * x.cos();
                p[j - 1] = -(2.0 * a * action).sqrt() * x.sin();
            }
            _ => {
                q[j - 1] = rng.gen_range(-amplitude..=amplitude);
                p[j - 1] = rng.gen_range(-amplitude..=amplitude);
            }
        }
    }
    (q, p)
}

/// Parameter box around the tangent frequencies of the chain: the tangent
/// `alpha` vary in `[alpha - half_width, alpha + half_width]`, the normal ones stay fixed.
pub fn parameter_box(config: &LatticeConfig, half_width: f64) -> ParameterBox {
    let tangent = &config.alpha[..config.n1];
    let normal = config.alpha[config.n1..].to_vec();
    ParameterBox {
        lo: tangent.iter().map(|a| a - half_width).collect(),
        hi: tangent.iter().map(|a| a + half_width).collect(),
        frequencies: Arc::new(move |xi: &[f64]| (tangent_frequency_map(xi), normal.clone())),
        w_sites: config.mode_sites().w,
    }
}
