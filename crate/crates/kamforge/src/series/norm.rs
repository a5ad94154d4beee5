use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::index::{Dims, GradingCaps};
use super::tf::TFSeries;
use crate::error::{KamError, Result};

/// Lattice sites of the degenerate pairs and of the retained normal modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSites {
    pub z: Vec<u32>,
    pub w: Vec<u32>,
}

impl ModeSites {
    pub fn check(&self, d: &Dims) -> Result<()> {
        if self.z.len() != d.b || self.w.len() != d.nw {
            return Err(KamError::Dimension(format!(
                "sites z={:?} w={:?} do not match {d:?}",
                self.z, self.w
            )));
        }
        Ok(())
    }

    /// Site of z component `c` (both `w0` and `w0bar` of a pair share it).
    pub fn z_site(&self, c: usize) -> u32 {
        self.z[c % self.z.len()]
    }
}

/// Parameters of the weighted vector-field norm on `D(s, r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    /// Spatial weight in `j^p e^{a j}`.
    pub a_wt: f64,
    pub p: f64,
    pub p_bar: f64,
    pub r: f64,
    pub s: f64,
    /// Exponent `a` of the normal-mode ball `r^a`.
    pub a_exp: f64,
}

impl WeightedNorm {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p_bar >= self.p
            && self.p >= 1.0
            && self.a_wt >= 0.0
            && self.r > 0.0
            && self.r < 1.0
            && self.s > 0.0
            && self.s <= 1.0
            && self.a_exp >= 2.0;
        if !ok {
            return Err(KamError::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn with_domain(&self, r: f64, s: f64) -> Self {
        WeightedNorm { r, s, ..*self }
    }

    fn site_weight(&self, j: u32, p: f64) -> f64 {
        (j as f64).powf(p) * (self.a_wt * j as f64).exp()
    }
}

/// Weighted l1 majorant of the vector-field norm of `H` on `D(s, r)`.
///
/// Each monomial is bounded on the domain `|Im x| < s`, `|y| < r^2`,
/// `|z_c| < r / (j^p e^{a j})`, `|w_j| < r^a / (j^p e^{a j})`; its partial
/// derivatives are then weighted per block: `1/r^{a-2}` for the `y`
/// derivative, `1/r^a` for the `x` derivative, `j^pbar e^{a j} / r^{a-1}`
/// for `z` and `j^pbar e^{a j}` for `w`, `wbar`.
pub fn majorant_vf_norm(h: &TFSeries, nrm: &WeightedNorm, sites: &ModeSites) -> f64 {
    let d = h.dims;
    let r = nrm.r;
    let a = nrm.a_exp;
    let r2 = r * r;
    let ra = r.powf(a);
    let zw: Vec<f64> = (0..d.nz()).map(|c| nrm.site_weight(sites.z_site(c), nrm.p)).collect();
    let zwb: Vec<f64> = (0..d.nz()).map(|c| nrm.site_weight(sites.z_site(c), nrm.p_bar)).collect();
    let ww: Vec<f64> = sites.w.iter().map(|&j| nrm.site_weight(j, nrm.p)).collect();
    let wwb: Vec<f64> = sites.w.iter().map(|&j| nrm.site_weight(j, nrm.p_bar)).collect();
    let mut total = 0.0;
    for (idx, c) in h.iter() {
        let mut bound = c.norm() * (idx.k_norm() as f64 * nrm.s).exp();
        bound *= r2.powi(idx.y_deg() as i32);
        for cc in 0..d.nz() {
            if idx.z[cc] > 0 {
                bound *= (r / zw[cc]).powi(idx.z[cc] as i32);
            }
        }
        for j in 0..d.nw {
            let e = idx.w[j] as i32 + idx.wb[j] as i32;
            if e > 0 {
                bound *= (ra / ww[j]).powi(e);
            }
        }
        if bound == 0.0 {
            continue;
        }
        let mut x_part = 0.0;
        let mut y_part = 0.0;
        for i in 0..d.n {
            x_part += idx.y[i] as f64 * bound / r2;
            y_part += (idx.k[i] as f64).abs() * bound;
        }
        let mut z_part = 0.0;
        for cc in 0..d.nz() {
            z_part += idx.z[cc] as f64 * bound * zw[cc] / r * zwb[cc];
        }
        let mut w_part = 0.0;
        for j in 0..d.nw {
            let e = idx.w[j] as f64 + idx.wb[j] as f64;
            w_part += e * bound * ww[j] / ra * wwb[j];
        }
        total += x_part / r.powf(a - 2.0) + y_part / ra + z_part / r.powf(a - 1.0) + w_part;
    }
    total
}

/// `sqrt(sum |v_j|^2 j^{2p} e^{2 a j})` over retained sites.
pub fn ellap_norm(v: &[Complex64], sites: &[u32], a: f64, p: f64) -> f64 {
    v.iter()
        .zip(sites)
        .map(|(x, &j)| {
            let wt = (j as f64).powf(p) * (a * j as f64).exp();
            x.norm_sqr() * wt * wt
        })
        .sum::<f64>()
        .sqrt()
}

/// Split `P` into the retained part `|k| <= k_max`, `2|i|+|j| <= m`,
/// `|l| <= 2` and its exact complement.
pub fn truncate(p: &TFSeries, k_max: u32, m: u32) -> (TFSeries, TFSeries) {
    let caps = GradingCaps::new(k_max, m);
    p.partition(|i| caps.contains(i))
}

/// The `x`-average: terms with `k = 0`.
pub fn average(r: &TFSeries) -> TFSeries {
    r.filter(|i| i.k_is_zero())
}
