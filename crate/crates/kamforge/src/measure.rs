//! Sampled estimates of the parameter measure removed by the
//! small-divisor conditions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{resonance_membership, ResonantPair};
use crate::error::{KamError, Result};
use crate::homological::{small_divisor_ok, DiophantineParams};
use crate::series::fourier_vectors;

/// Tangent and normal frequencies as functions of the parameter.
pub type FrequencyFn = Arc<dyn Fn(&[f64]) -> (Vec<f64>, Vec<f64>) + Send + Sync>;

#[derive(Clone)]
pub struct ParameterBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub frequencies: FrequencyFn,
    /// Lattice sites of the normal modes, used in the `<l>_d` weight.
    pub w_sites: Vec<u32>,
}

impl ParameterBox {
    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() || self.lo.iter().zip(&self.hi).any(|(l, h)| !(l < h)) {
            return Err(KamError::InvalidParameter("parameter box must be nonempty".into()));
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    MonteCarlo,
    /// Cell midpoints of a regular grid with about `samples` cells.
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub samples: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

/// The sample points of a plan, in index order.
pub fn sample_points(bx: &ParameterBox, plan: &SamplingPlan) -> Vec<Vec<f64>> {
    let n = bx.lo.len();
    match plan.mode {
        SamplingMode::MonteCarlo => {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            (0..plan.samples)
                .map(|_| (0..n).map(|i| rng.gen_range(bx.lo[i]..bx.hi[i])).collect())
                .collect()
        }
        SamplingMode::Grid => {
            let per_axis = ((plan.samples.max(1) as f64).powf(1.0 / n as f64).round() as usize).max(1);
            let total = per_axis.pow(n as u32);
            (0..total)
                .map(|mut idx| {
                    (0..n)
                        .map(|i| {
                            let cell = idx % per_axis;
                            idx /= per_axis;
                            bx.lo[i] + (bx.hi[i] - bx.lo[i]) * (cell as f64 + 0.5) / per_axis as f64
                        })
                        .collect()
                })
                .collect()
        }
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(hits: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = total as f64;
    let p = hits as f64 / n;
    let denom = 1.0 + Z * Z / n;
    let centre = (p + Z * Z / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + Z * Z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub gamma: f64,
    pub k_max: u32,
    pub samples: usize,
    pub excluded: usize,
    pub fraction: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// First failing pair of every excluded sample, by sample index.
    pub rejections: Vec<(usize, ResonantPair)>,
}

/// Fraction of sampled parameters inside some resonance zone with `0 < |k| + |l|`, `|k| <= k_max`.
pub fn excluded_fraction(bx: &ParameterBox, dio: &DiophantineParams, k_max: u32, plan: &SamplingPlan) -> Result<FractionEstimate> {
    bx.validate()?;
    if k_max < 1 {
        return Err(KamError::InvalidParameter("Fourier cutoff must be at least 1".into()));
    }
    let points = sample_points(bx, plan);
    let rejections: Vec<(usize, ResonantPair)> = points
        .par_iter()
        .enumerate()
        .filter_map(|(i, xi)| {
            let (omega, normal) = (bx.frequencies)(xi);
            let m = resonance_membership(&omega, &normal, k_max, &bx.w_sites, dio);
            m.failing.into_iter().next().map(|p| (i, p))
        })
        .collect();
    let (ci_lo, ci_hi) = wilson_interval(rejections.len(), points.len());
    Ok(FractionEstimate {
        gamma: dio.gamma,
        k_max,
        samples: points.len(),
        excluded: rejections.len(),
        fraction: rejections.len() as f64 / points.len().max(1) as f64,
        ci_lo,
        ci_hi,
        rejections,
    })
}

/// CSV with columns `gamma,K,fraction,ci_lo,ci_hi`.
pub fn fractions_csv(rows: &[FractionEstimate]) -> String {
    let mut out = String::from("gamma,K,fraction,ci_lo,ci_hi\n");
    for r in rows {
        out += &format!("{},{},{},{},{}\n", r.gamma, r.k_max, r.fraction, r.ci_lo, r.ci_hi);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellLoss {
    pub nu: usize,
    pub gamma: f64,
    pub k_prev: u32,
    pub k: u32,
    pub loss: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `gamma_0 / (1 + k_prev)`.
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepwiseLoss {
    pub shells: Vec<ShellLoss>,
    /// Smallest `c` with `loss <= c * envelope` on every shell after the first.
    pub fitted_c: f64,
    /// Same maximum taken over the lower 95% Wilson bounds.
    pub lower_c: f64,
    /// Whether `lower_c` stays within the admitted constant, i.e. no shell
    /// exceeds the envelope by a statistically significant margin.
    pub envelope_holds: bool,
}

fn in_shell(k: &[i32], lo: u32, hi: u32, first: bool) -> bool {
    let norm: u32 = k.iter().map(|v| v.unsigned_abs()).sum();
    norm <= hi && (norm > lo || (first && norm <= lo))
}

/// Loss of each step: the fraction of samples resonant for a new shell
/// `K_{nu-1} < |k| <= K_nu` at that step's `gamma`. The first entry covers `|k| <= K_0`.
pub fn stepwise_loss(
    bx: &ParameterBox,
    schedule: &[(f64, u32)],
    dio: &DiophantineParams,
    plan: &SamplingPlan,
    c_bound: f64,
) -> Result<StepwiseLoss> {
    bx.validate()?;
    let points = sample_points(bx, plan);
    let freqs: Vec<(Vec<f64>, Vec<f64>)> = points.par_iter().map(|xi| (bx.frequencies)(xi)).collect();
    let n = bx.lo.len();
    let gamma0 = schedule.first().map_or(0.0, |s| s.0);
    let mut shells = Vec::with_capacity(schedule.len());
    for (nu, &(gamma, k)) in schedule.iter().enumerate() {
        let k_prev = if nu == 0 { 0 } else { schedule[nu - 1].1 };
        let d = DiophantineParams { gamma, ..*dio };
        let ks: Vec<Vec<i32>> = fourier_vectors(n, k).into_iter().filter(|v| in_shell(v, k_prev, k, nu == 0)).collect();
        let hits = if ks.is_empty() {
            0
        } else {
            freqs
                .par_iter()
                .filter(|(omega, normal)| {
                    let ls = fourier_vectors(normal.len(), 2);
                    ks.iter().any(|kv| {
                        ls.iter().any(|l| {
                            small_divisor_ok(kv, l, omega, normal, &bx.w_sites, &d).is_ok_and(|c| !c.ok)
                        })
                    })
                })
                .count()
        };
        let (ci_lo, ci_hi) = wilson_interval(hits, points.len());
        shells.push(ShellLoss {
            nu,
            gamma,
            k_prev,
            k,
            loss: hits as f64 / points.len().max(1) as f64,
            ci_lo,
            ci_hi,
            envelope: gamma0 / (1.0 + k_prev as f64),
        });
    }
    let fitted_c = shells.iter().skip(1).fold(0.0f64, |m, s| m.max(s.loss / s.envelope));
    let lower_c = shells.iter().skip(1).fold(0.0f64, |m, s| m.max(s.ci_lo / s.envelope));
    let envelope_holds = lower_c <= c_bound;
    Ok(StepwiseLoss {
        shells,
        fitted_c,
        lower_c,
        envelope_holds,
    })
}

/// Largest difference quotient `|f(a) - f(b)| / |a - b|` over all sample
/// pairs; a lower bound for the true semi-norm.
pub fn lipschitz_seminorm<F: Fn(&[f64]) -> Vec<f64>>(f: F, points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(KamError::InvalidParameter("need at least two samples".into()));
    }
    let values: Vec<Vec<f64>> = points.iter().map(|p| f(p)).collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let gap = dist(&points[i], &points[j]);
            if gap > 0.0 {
                best = best.max(dist(&values[i], &values[j]) / gap);
            }
        }
    }
    Ok(best)
}

/// `|omega_* - omega| + gamma / (2 M) * lip`, the combination bounded in the final estimate.
pub fn frequency_shift_combination(shift: f64, lip: f64, gamma: f64, big_m: f64) -> f64 {
    shift + gamma / (2.0 * big_m) * lip
}

/// Sampled look at one resonance surface `<k,omega> + <l,Omega> = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroSetProbe {
    pub k: Vec<i32>,
    pub l: Vec<i32>,
    /// Sign changes of the divisor between neighbouring grid cells along the first axis.
    pub sign_changes: usize,
    /// Fraction of grid points with `|divisor| <= thickness`.
    pub thick_fraction: f64,
    pub thickness: f64,
}

/// Locates the zero set of one divisor on a regular grid and reports how
/// much of the grid lies within `thickness` of it.
pub fn probe_zero_set(bx: &ParameterBox, k: &[i32], l: &[i32], per_axis: usize, thickness: f64) -> Result<ZeroSetProbe> {
    bx.validate()?;
    let n = bx.lo.len();
    let plan = SamplingPlan {
        samples: per_axis.pow(n as u32),
        seed: 0,
        mode: SamplingMode::Grid,
    };
    let points = sample_points(bx, &plan);
    let divisor = |xi: &[f64]| {
        let (omega, normal) = (bx.frequencies)(xi);
        let a: f64 = k.iter().zip(&omega).map(|(&v, w)| v as f64 * w).sum();
        let b: f64 = l.iter().zip(&normal).map(|(&v, w)| v as f64 * w).sum();
        a + b
    };
    let values: Vec<f64> = points.iter().map(|p| divisor(p)).collect();
    let mut sign_changes = 0;
    for (i, pair) in values.windows(2).enumerate() {
        if (i + 1) % per_axis != 0 && pair[0].signum() != pair[1].signum() {
            sign_changes += 1;
        }
    }
    let thick = values.iter().filter(|v| v.abs() <= thickness).count();
    Ok(ZeroSetProbe {
        k: k.to_vec(),
        l: l.to_vec(),
        sign_changes,
        thick_fraction: thick as f64 / values.len() as f64,
        thickness,
    })
}
