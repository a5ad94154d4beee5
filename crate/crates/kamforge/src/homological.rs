//! Per-class linear solve of `{N, F} + R - [R] = 0` on the retained grading.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::normal_form::NormalForm;
use crate::series::{
    exponent_vectors, fourier_vectors, graded_yz, majorant_vf_norm, mode_pairs, ClassKey, Dims,
    GradingCaps, ModeSites, MultiIndex, TFSeries, WeightedNorm, MAX_ANGLES, MAX_MODES, MAX_Z,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub gamma: f64,
    pub tau: f64,
    /// Growth exponent of the normal frequencies.
    pub d: f64,
    /// Exponent of their tail correction.
    pub delta: f64,
}

impl DiophantineParams {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.gamma > 0.0) || self.tau < n as f64 - 1.0 || !(self.delta < self.d - 1.0) || self.d < 1.0 {
            return Err(KamError::InvalidParameter(format!("diophantine data {self:?}")));
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        DiophantineParams { gamma, ..*self }
    }
}

/// `max(1, |sum_j j^d l_j|)` over the retained mode sites.
pub fn bracket_weight(l: &[i32], sites: &[u32], d: f64) -> f64 {
    let s: f64 = l.iter().zip(sites).map(|(&v, &j)| v as f64 * (j as f64).powf(d)).sum();
    s.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivisorCheck {
    pub divisor: f64,
    pub threshold: f64,
    pub ok: bool,
}

impl DivisorCheck {
    pub fn margin(&self) -> f64 {
        self.divisor.abs() - self.threshold
    }
}

/// Tests `|<k,omega> + <l,Omega>| >= gamma <l>_d / (1+|k|)^tau`.
pub fn small_divisor_ok(
    k: &[i32],
    l: &[i32],
    tangent_freq: &[f64],
    normal_freq: &[f64],
    sites: &[u32],
    dio: &DiophantineParams,
) -> Result<DivisorCheck> {
    if k.iter().all(|&v| v == 0) && l.iter().all(|&v| v == 0) {
        return Err(KamError::InvalidParameter("divisor at (k, l) = (0, 0)".into()));
    }
    let kw: f64 = k.iter().zip(tangent_freq).map(|(&a, &b)| a as f64 * b).sum();
    let lw: f64 = l.iter().zip(normal_freq).map(|(&a, &b)| a as f64 * b).sum();
    let divisor = kw + lw;
    let knorm: i32 = k.iter().map(|v| v.abs()).sum();
    let threshold = dio.gamma * bracket_weight(l, sites, dio.d) / (1.0 + knorm as f64).powf(dio.tau);
    Ok(DivisorCheck {
        divisor,
        threshold,
        ok: divisor.abs() >= threshold,
    })
}

/// `ln A_rho`, evaluated by enumeration in log space to avoid overflow.
/// Empty sums give `-inf`.
pub fn log_a_rho(
    n: usize,
    k_max: u32,
    rho: f64,
    tau: f64,
    b: usize,
    m: u32,
    d: f64,
    w_sites: &[u32],
) -> f64 {
    let base = (2 * b) as f64;
    let ks: Vec<u32> = fourier_vectors(n, k_max)
        .iter()
        .map(|k| k.iter().map(|v| v.unsigned_abs()).sum::<u32>())
        .filter(|&kn| kn > 0)
        .collect();
    let nz = 2 * b;
    let yz: Vec<u32> = exponent_vectors(n, m / 2)
        .into_iter()
        .flat_map(|iy| {
            let yd: u32 = iy.iter().sum();
            exponent_vectors(nz, m - 2 * yd)
                .into_iter()
                .map(move |jz| yd + jz.iter().sum::<u32>())
        })
        .collect();
    let modes: Vec<(u32, f64)> = mode_pairs(w_sites.len(), 2)
        .into_iter()
        .map(|(w, wb)| {
            let l: Vec<i32> = (0..w_sites.len()).map(|j| w[j] as i32 - wb[j] as i32).collect();
            let deg: u32 = (0..w_sites.len()).map(|j| (w[j] + wb[j]) as u32).sum();
            (deg, bracket_weight(&l, w_sites, d).ln())
        })
        .collect();
    let mut logs = Vec::with_capacity(ks.len() * yz.len() * modes.len());
    for &kn in &ks {
        let lk = (1.0 + kn as f64).ln();
        for &deg_yz in &yz {
            for &(deg_l, lw) in &modes {
                let e = base.powi((deg_yz + deg_l) as i32);
                logs.push(2.0 * ((1.0 + e * tau) * lk - e * lw) - 2.0 * kn as f64 * rho);
            }
        }
    }
    if logs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|v| (v - top).exp()).sum();
    0.5 * (top + sum.ln())
}

/// One independent linear system: all unknowns sharing `k` and `l1 - l2`.
#[derive(Clone, Debug)]
pub struct ClassSystem {
    pub key: ClassKey,
    pub unknowns: Vec<MultiIndex>,
    pub matrix: DMatrix<Complex64>,
    pub rhs: DVector<Complex64>,
    pub divisor: DivisorCheck,
    /// Unknown counts per ordering level, in order.
    pub grade_blocks: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct HomologicalSystem {
    pub dims: Dims,
    pub caps: GradingCaps,
    pub normal: TFSeries,
    pub z_part: TFSeries,
    pub rhs: TFSeries,
    /// The part of the right-hand side left in the normal form.
    pub resonant: TFSeries,
    pub classes: Vec<ClassSystem>,
    pub dio: DiophantineParams,
    pub w_sites: Vec<u32>,
}

/// Build one system per class present in the non-resonant part of `r`.
pub fn assemble(
    nf: &NormalForm,
    r: &TFSeries,
    caps: &GradingCaps,
    w_sites: &[u32],
    dio: &DiophantineParams,
) -> Result<HomologicalSystem> {
    let d = nf.dims;
    d.check(&r.dims)?;
    nf.check_shape(caps.m_max)?;
    if w_sites.len() != d.nw {
        return Err(KamError::Dimension("mode sites vs retained modes".into()));
    }
    if let Some((idx, _)) = r.iter().find(|(i, _)| !caps.contains(i)) {
        return Err(KamError::Structural(format!("right-hand side term {idx:?} outside grading")));
    }
    let (resonant, active) = r.partition(|i| i.class_key().is_resonant_average());
    let mut by_class: BTreeMap<ClassKey, Vec<(MultiIndex, Complex64)>> = BTreeMap::new();
    for (idx, c) in active.iter() {
        by_class.entry(idx.class_key()).or_default().push((*idx, *c));
    }
    let normal = nf.to_series();
    let yz = graded_yz(&d, caps.m_max);
    let modes = mode_pairs(d.nw, caps.l_max);
    let keys: Vec<(ClassKey, Vec<(MultiIndex, Complex64)>)> = by_class.into_iter().collect();
    let classes = keys
        .into_par_iter()
        .map(|(key, terms)| build_class(nf, &normal, &yz, &modes, caps, w_sites, dio, key, &terms))
        .collect::<Result<Vec<_>>>()?;
    Ok(HomologicalSystem {
        dims: d,
        caps: *caps,
        normal,
        z_part: nf.z_dependent(),
        rhs: r.clone(),
        resonant,
        classes,
        dio: *dio,
        w_sites: w_sites.to_vec(),
    })
}

#[allow(clippy::too_many_arguments)]
fn build_class(
    nf: &NormalForm,
    normal: &TFSeries,
    yz: &[([u16; MAX_ANGLES], [u16; MAX_Z])],
    modes: &[([u16; MAX_MODES], [u16; MAX_MODES])],
    caps: &GradingCaps,
    w_sites: &[u32],
    dio: &DiophantineParams,
    key: ClassKey,
    terms: &[(MultiIndex, Complex64)],
) -> Result<ClassSystem> {
    let d = nf.dims;
    let k = key.k_vec(&d);
    let l = key.l_vec(&d);
    let divisor = small_divisor_ok(&k, &l, &nf.tangent_freq, &nf.normal_freq, w_sites, dio)?;
    if !divisor.ok {
        return Err(KamError::Resonance {
            k,
            l,
            divisor: divisor.divisor,
            threshold: divisor.threshold,
        });
    }
    let mut unknowns: Vec<MultiIndex> = modes
        .iter()
        .filter(|(w, wb)| key.admits(w, wb))
        .flat_map(|(w, wb)| yz.iter().map(move |(y, z)| key.member(*y, *z, *w, *wb)))
        .collect();
    unknowns.sort_by_key(|u| (block_weight(u), *u));
    let pos: BTreeMap<MultiIndex, usize> = unknowns.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let nu = unknowns.len();
    let mut matrix = DMatrix::<Complex64>::zeros(nu, nu);
    let one = Complex64::new(1.0, 0.0);
    for (col, u) in unknowns.iter().enumerate() {
        let image = normal.poisson_bracket(&TFSeries::monomial(d, *u, one))?;
        for (idx, c) in image.iter() {
            if idx.class_key() != key {
                return Err(KamError::Structural(format!(
                    "normal form couples class {key:?} to {idx:?}"
                )));
            }
            if !caps.contains(idx) {
                continue;
            }
            let row = pos[idx];
            matrix[(row, col)] += *c;
        }
    }
    let mut rhs = DVector::<Complex64>::zeros(nu);
    for (idx, c) in terms {
        rhs[pos[idx]] = -*c;
    }
    let mut grade_blocks = Vec::new();
    let mut last = None;
    for u in &unknowns {
        let g = block_weight(u);
        if last == Some(g) {
            *grade_blocks.last_mut().unwrap() += 1;
        } else {
            grade_blocks.push(1);
            last = Some(g);
        }
    }
    Ok(ClassSystem {
        key,
        unknowns,
        matrix,
        rhs,
        divisor,
        grade_blocks,
    })
}

/// Ordering weight under which every coupling block raises the level.
fn block_weight(u: &MultiIndex) -> u32 {
    u.grade() + u.w_deg()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassDiagnostic {
    pub k: Vec<i32>,
    pub l: Vec<i32>,
    pub divisor: f64,
    pub threshold: f64,
    pub cond: f64,
    pub residual: f64,
    /// Smallest of `ln|det block| - ln(bound)` over the grade blocks.
    pub det_log_margin: f64,
}

#[derive(Clone, Debug)]
pub struct HomologicalSolution {
    pub generator: TFSeries,
    pub correction: TFSeries,
    pub resonant: TFSeries,
    pub diagnostics: Vec<ClassDiagnostic>,
    pub residual_norm: f64,
    pub rhs_norm: f64,
}

impl HomologicalSolution {
    pub fn det_bound_holds(&self) -> bool {
        self.diagnostics.iter().all(|c| c.det_log_margin >= 0.0)
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from("k,class,divisor,threshold,cond,residual\n");
        for c in &self.diagnostics {
            let k: Vec<String> = c.k.iter().map(|v| v.to_string()).collect();
            let l: Vec<String> = c.l.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:e}",
                k.join(" "),
                l.join(" "),
                c.divisor,
                c.threshold,
                c.cond,
                c.residual
            );
        }
        out
    }
}

/// Residual tolerance relative to the right-hand side norm.
pub const RESIDUAL_TOL: f64 = 1e-9;

pub fn solve(sys: &HomologicalSystem, nrm: &WeightedNorm, sites: &ModeSites) -> Result<HomologicalSolution> {
    let d = sys.dims;
    let solved = sys
        .classes
        .par_iter()
        .map(|c| solve_class(c, sys))
        .collect::<Result<Vec<_>>>()?;
    let mut generator = TFSeries::zero(d);
    let mut diagnostics = Vec::with_capacity(solved.len());
    for (terms, diag) in solved {
        for (idx, c) in terms {
            generator.add_term(idx, c);
        }
        diagnostics.push(diag);
    }
    let image = sys.normal.poisson_bracket(&generator)?;
    let (in_grading, _) = image.partition(|i| sys.caps.contains(i));
    let residual = in_grading.add(&sys.rhs)?.sub(&sys.resonant)?;
    let residual_norm = majorant_vf_norm(&residual, nrm, sites);
    let rhs_norm = majorant_vf_norm(&sys.rhs, nrm, sites);
    if residual_norm > RESIDUAL_TOL * rhs_norm {
        return Err(KamError::SolverFailure {
            residual: residual_norm,
            tolerance: RESIDUAL_TOL * rhs_norm,
        });
    }
    let correction = z_block_overflow(&sys.z_part, &generator, &sys.caps)?;
    Ok(HomologicalSolution {
        generator,
        correction,
        resonant: sys.resonant.clone(),
        diagnostics,
        residual_norm,
        rhs_norm,
    })
}

/// Out-of-grading part of `dz(A) J dz(F)`.
pub fn z_block_overflow(a: &TFSeries, f: &TFSeries, caps: &GradingCaps) -> Result<TFSeries> {
    let b = a.dims.b;
    let mut acc = TFSeries::zero(a.dims);
    for c in 0..b {
        acc.add_assign(&a.dz(c).mul(&f.dz(c + b))?)?;
        acc = acc.sub(&a.dz(c + b).mul(&f.dz(c))?)?;
    }
    Ok(acc.partition(|i| !caps.contains(i)).0)
}

type ClassResult = (Vec<(MultiIndex, Complex64)>, ClassDiagnostic);

fn solve_class(c: &ClassSystem, sys: &HomologicalSystem) -> Result<ClassResult> {
    let d = sys.dims;
    let lu = c.matrix.clone().lu();
    let x = lu.solve(&c.rhs).ok_or_else(|| KamError::Resonance {
        k: c.key.k_vec(&d),
        l: c.key.l_vec(&d),
        divisor: c.divisor.divisor,
        threshold: c.divisor.threshold,
    })?;
    let residual = (&c.matrix * &x - &c.rhs).camax();
    let sv = c.matrix.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let lw = bracket_weight(&c.key.l_vec(&d), &sys.w_sites, sys.dio.d);
    let knorm = c.key.k_norm() as f64;
    let per_unknown = (sys.dio.gamma * lw / (2.0 * (1.0 + knorm).powf(sys.dio.tau))).ln();
    let mut det_log_margin = f64::INFINITY;
    let mut start = 0;
    for &size in &c.grade_blocks {
        let block = c.matrix.view((start, start), (size, size)).clone_owned();
        let log_det = block
            .lu()
            .u()
            .diagonal()
            .iter()
            .map(|v| v.norm().ln())
            .sum::<f64>();
        det_log_margin = det_log_margin.min(log_det - size as f64 * per_unknown);
        start += size;
    }
    let terms = c
        .unknowns
        .iter()
        .zip(x.iter())
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(u, v)| (*u, *v))
        .collect();
    let diag = ClassDiagnostic {
        k: c.key.k_vec(&d),
        l: c.key.l_vec(&d),
        divisor: c.divisor.divisor,
        threshold: c.divisor.threshold,
        cond,
        residual,
        det_log_margin,
    };
    Ok((terms, diag))
}
