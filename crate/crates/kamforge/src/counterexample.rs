//! A degenerate part whose gradient has a flat plateau: the degree
//! condition holds, weak convexity fails, and the equilibrium forced by a
//! small oscillating perturbation has no limit as the perturbation vanishes.

use serde::{Deserialize, Serialize};

use crate::degree::{
    brouwer_degree, degree_at, weak_convexity_check, BoxRegion, ConvexityOptions, ConvexityReport, DegreeProblem,
    FnField, VectorField,
};
use crate::error::{KamError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleConfig {
    /// Power of the plateau map outside `[-1, 1]`.
    pub sigma_exp: u32,
    /// Power of `eps` in the perturbation amplitude.
    pub ell_exp: u32,
    /// Decreasing grid of positive perturbation sizes.
    pub eps_grid: Vec<f64>,
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        CounterexampleConfig {
            sigma_exp: 1,
            ell_exp: 1,
            eps_grid: log_grid(1e-1, 1e-3, 4000),
        }
    }
}

/// `count` points from `hi` down to `lo`, log-spaced, endpoints excluded.
pub fn log_grid(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let (a, b) = (hi.ln(), lo.ln());
    (1..=count).map(|i| (a + (b - a) * i as f64 / (count + 1) as f64).exp()).collect()
}

impl CounterexampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_exp < 1 || self.ell_exp < 1 {
            return Err(KamError::InvalidParameter("exponents must be at least 1".into()));
        }
        if self.eps_grid.iter().any(|&e| !(e > 0.0 && e < 0.5)) {
            return Err(KamError::InvalidParameter("perturbation sizes must lie in (0, 0.5)".into()));
        }
        if self.eps_grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(KamError::InvalidParameter("perturbation grid must be decreasing".into()));
        }
        Ok(())
    }
}

/// First gradient component: zero on `[-1, 1]`, `±(|w| - 1)^sigma` outside.
pub fn plateau_gradient(w0: f64, sigma: u32) -> f64 {
    if w0 > 1.0 {
        (w0 - 1.0).powi(sigma as i32)
    } else if w0 < -1.0 {
        -(-w0 - 1.0).powi(sigma as i32)
    } else {
        0.0
    }
}

/// The full gradient `(plateau(w0), wbar0)`.
pub struct PlateauField {
    pub sigma: u32,
}

impl VectorField for PlateauField {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, z: &[f64]) -> Vec<f64> {
        vec![plateau_gradient(z[0], self.sigma), z[1]]
    }
}

/// Perturbation amplitude `eps^ell sin(1/eps)`, zero at `eps = 0`.
pub fn perturbation_amplitude(eps: f64, ell: u32) -> f64 {
    if eps == 0.0 {
        0.0
    } else {
        eps.powi(ell as i32) * (1.0 / eps).sin()
    }
}

/// Equilibrium in the `wbar0` direction: `wbar0 = -eps^ell sin(1/eps)`.
pub fn equilibrium(eps: f64, ell: u32) -> f64 {
    -perturbation_amplitude(eps, ell)
}

/// Preimage of `-amplitude` under the plateau map: the whole plateau when
/// the amplitude vanishes, otherwise a single point outside `[-1, 1]`.
pub fn plateau_preimage(amplitude: f64, sigma: u32) -> (f64, f64) {
    let target = -amplitude;
    if target == 0.0 {
        return (-1.0, 1.0);
    }
    let offset = target.abs().powf(1.0 / sigma as f64);
    let v = if target > 0.0 { 1.0 + offset } else { -1.0 - offset };
    (v, v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub z: [f64; 2],
    pub z_star: [f64; 2],
    /// `|grad(z) - grad(z_star)|`, exactly zero on the plateau.
    pub gradient_gap: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub degree: i32,
    /// Degrees at two boundary resolutions.
    pub degree_coarse: i32,
    pub degree_fine: i32,
    pub odd_on_box: bool,
    pub witness: Witness,
    /// Sampled falsifier on the whole box with `L = 2`.
    pub convexity: ConvexityReport,
    /// The linear second component alone passes with `L = 1`, `sigma = 1`.
    pub linear_component: ConvexityReport,
}

/// Confirms the degree condition and the failure of weak convexity.
pub fn verify_a0_split(cfg: &CounterexampleConfig) -> Result<SplitReport> {
    cfg.validate()?;
    let field = PlateauField { sigma: cfg.sigma_exp };
    let region = BoxRegion::symmetric(2.0, 2);
    let prob = DegreeProblem {
        map: &field,
        region: region.clone(),
        target: vec![0.0, 0.0],
        boundary_margin: 1e-9,
    };
    let degree = brouwer_degree(&prob, 8)?;
    let degree_coarse = degree_at(&prob, 16)?;
    let degree_fine = degree_at(&prob, 64)?;
    let mut odd_on_box = true;
    for i in -20..=20 {
        for j in -20..=20 {
            let z = [i as f64 / 10.5, j as f64 / 10.5];
            let a = field.eval(&z);
            let b = field.eval(&[-z[0], -z[1]]);
            odd_on_box &= a[0] == -b[0] && a[1] == -b[1];
        }
    }
    let (z, z_star) = ([0.2, 0.0], [0.5, 0.0]);
    let (gz, gs) = (field.eval(&z), field.eval(&z_star));
    let witness = Witness {
        z,
        z_star,
        gradient_gap: ((gz[0] - gs[0]).powi(2) + (gz[1] - gs[1]).powi(2)).sqrt(),
        distance: ((z[0] - z_star[0]).powi(2) + (z[1] - z_star[1]).powi(2)).sqrt(),
    };
    let convexity = weak_convexity_check(
        &field,
        &BoxRegion::symmetric(1.99, 2),
        &ConvexityOptions {
            l_exp: 2.0,
            sigma: 1e-6,
            samples: 4000,
            seed: 1,
            exclusion: 0.0,
            weight_p: Vec::new(),
            weight_pbar: Vec::new(),
        },
    );
    let linear = FnField {
        dim: 1,
        f: |z: &[f64]| z.to_vec(),
    };
    let linear_component = weak_convexity_check(
        &linear,
        &BoxRegion::symmetric(1.99, 1),
        &ConvexityOptions {
            l_exp: 1.0,
            sigma: 1.0,
            samples: 1000,
            seed: 2,
            exclusion: 0.0,
            weight_p: Vec::new(),
            weight_pbar: Vec::new(),
        },
    );
    Ok(SplitReport {
        degree,
        degree_coarse,
        degree_fine,
        odd_on_box,
        witness,
        convexity,
        linear_component,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationRow {
    pub eps: f64,
    pub equilibrium: f64,
    pub sign: i8,
    /// Matching interval in the plateau direction.
    pub preimage: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub rows: Vec<OscillationRow>,
    pub sign_changes: usize,
    /// Largest `|equilibrium / eps^ell + sin(1/eps)|` on the grid.
    pub identity_error: f64,
    /// Spread of `equilibrium / eps^ell` over the smallest decade of the grid;
    /// a convergent family would make this shrink.
    pub tail_spread: f64,
    /// Preimages seen on each side of the plateau.
    pub preimages_above: usize,
    pub preimages_below: usize,
}

impl OscillationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,equilibrium,sign\n");
        for r in &self.rows {
            out += &format!("{:e},{:e},{}\n", r.eps, r.equilibrium, r.sign);
        }
        out
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Solves the equilibrium equation on the grid and counts its sign changes.
pub fn equilibrium_oscillation(cfg: &CounterexampleConfig) -> Result<OscillationReport> {
    cfg.validate()?;
    let rows: Vec<OscillationRow> = cfg
        .eps_grid
        .iter()
        .map(|&eps| {
            let e = equilibrium(eps, cfg.ell_exp);
            OscillationRow {
                eps,
                equilibrium: e,
                sign: sign_of(e),
                preimage: plateau_preimage(perturbation_amplitude(eps, cfg.ell_exp), cfg.sigma_exp),
            }
        })
        .collect();
    let mut sign_changes = 0;
    let mut last = 0i8;
    for r in &rows {
        if r.sign != 0 {
            if last != 0 && r.sign != last {
                sign_changes += 1;
            }
            last = r.sign;
        }
    }
    let scaled = |r: &OscillationRow| r.equilibrium / r.eps.powi(cfg.ell_exp as i32);
    let identity_error = rows.iter().fold(0.0f64, |m, r| m.max((scaled(r) + (1.0 / r.eps).sin()).abs()));
    let smallest = rows.last().map_or(0.0, |r| r.eps);
    let tail: Vec<f64> = rows.iter().filter(|r| r.eps <= 10.0 * smallest).map(scaled).collect();
    let tail_spread = tail.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
        - tail.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    Ok(OscillationReport {
        preimages_above: rows.iter().filter(|r| r.preimage.0 > 1.0).count(),
        preimages_below: rows.iter().filter(|r| r.preimage.1 < -1.0).count(),
        rows,
        sign_changes,
        identity_error,
        tail_spread: if tail.is_empty() { 0.0 } else { tail_spread },
    })
}
