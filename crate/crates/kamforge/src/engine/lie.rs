use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::series::{majorant_vf_norm, GradingCaps, ModeSites, TFSeries, WeightedNorm};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieOptions {
    /// Stop once an increment is below this fraction of the running norm.
    pub rel_tol: f64,
    pub max_terms: usize,
    /// Monomial pairs whose weighted coefficient product is below this are skipped; zero keeps all.
    pub coef_floor: f64,
    /// Terms outside these caps are discarded and their norm reported.
    pub outer: GradingCaps,
}

#[derive(Clone, Debug)]
pub struct LieResult {
    pub series: TFSeries,
    /// Number of bracket terms added after the identity.
    pub terms: usize,
    /// Majorant norm of each added term.
    pub increments: Vec<f64>,
    /// Everything dropped by the outer caps.
    pub discarded: TFSeries,
    /// Coefficient l1 bound of the pairs skipped under `coef_floor`.
    pub skipped_l1: f64,
}

/// `H o phi_F^1 = sum_k ad_F^k H / k!` with `ad_F H = {H, F}`.
pub fn lie_transform(
    h: &TFSeries,
    f: &TFSeries,
    opts: &LieOptions,
    nrm: &WeightedNorm,
    sites: &ModeSites,
) -> Result<LieResult> {
    h.dims.check(&f.dims)?;
    let (mut total, mut discarded) = h.partition(|i| opts.outer.contains(i));
    let mut increments = Vec::new();
    if f.is_empty() {
        return Ok(LieResult {
            series: total,
            terms: 0,
            increments,
            discarded,
            skipped_l1: 0.0,
        });
    }
    let mut running = majorant_vf_norm(&total, nrm, sites);
    let mut term = total.clone();
    let mut k = 0;
    let mut skipped_l1 = 0.0;
    while k < opts.max_terms {
        k += 1;
        let (bracket, skipped) = term.poisson_bracket_pruned(f, opts.coef_floor)?;
        skipped_l1 += skipped / factorial(k);
        let next = bracket.scale(Complex64::new(1.0 / k as f64, 0.0));
        let (kept, dropped) = next.partition(|i| opts.outer.contains(i));
        discarded.add_assign(&dropped)?;
        let inc = majorant_vf_norm(&kept, nrm, sites);
        total.add_assign(&kept)?;
        running = running.max(majorant_vf_norm(&total, nrm, sites));
        if k > 3 && inc >= increments[increments.len() - 1] && inc > opts.rel_tol * running {
            return Err(KamError::LieDivergence(k));
        }
        increments.push(inc);
        term = kept;
        if term.is_empty() || inc <= opts.rel_tol * running {
            break;
        }
    }
    Ok(LieResult {
        series: total,
        terms: k,
        increments,
        discarded,
        skipped_l1,
    })
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}
