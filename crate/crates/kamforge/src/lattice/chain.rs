use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::series::{Dims, ModeSites};

/// Role of a lattice site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    /// Tangent site with its angle index.
    Tangent(usize),
    /// Degenerate site with its pair index.
    Degenerate(usize),
    /// Retained normal mode with its mode index.
    Normal(usize),
}

/// Finite Newton's-cradle chain: harmonic sites `1..=n1`, quartic sites
/// `n1+1..=n2`, harmonic sites `n2+1..=n2+modes`, nearest-neighbour
/// coupling of strength `eps` and free ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n1: usize,
    pub n2: usize,
    /// Frequencies of the harmonic sites in site order: the `n1` tangent sites, then the normal ones.
    pub alpha: Vec<f64>,
    /// Quartic coefficients of the degenerate sites.
    pub beta: Vec<f64>,
    pub eps: f64,
    pub modes: usize,
    /// Exponent of the interaction potential; only 1 (quadratic coupling) is supported.
    pub hertz_exp: f64,
    /// Expansion actions of the tangent sites.
    pub y_star: Vec<f64>,
}

impl LatticeConfig {
    /// The shipped example: two tangent sites, one degenerate site, three normal modes.
    pub fn example() -> Self {
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let normal = (4..=6).map(|j: u32| (j * j) as f64 + 0.1 * (j as f64).sqrt());
        LatticeConfig {
            n1: 2,
            n2: 3,
            alpha: [0.8, 0.8 * golden].into_iter().chain(normal).collect(),
            beta: vec![1.0],
            eps: 1e-6,
            modes: 3,
            hertz_exp: 1.0,
            y_star: vec![0.1, 0.1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(KamError::InvalidParameter(m));
        if self.hertz_exp != 1.0 {
            return bad(format!("interaction exponent {} is not supported (only 1)", self.hertz_exp));
        }
        if self.n1 < 1 || self.n2 <= self.n1 {
            return bad(format!("need 1 <= n1 < n2 (n1={}, n2={})", self.n1, self.n2));
        }
        if self.alpha.len() != self.n1 + self.modes {
            return bad(format!("alpha has {} entries, expected {}", self.alpha.len(), self.n1 + self.modes));
        }
        if self.beta.len() != self.n2 - self.n1 || self.beta.iter().any(|&b| b == 0.0 || !b.is_finite()) {
            return bad("beta must have one nonzero entry per degenerate site".into());
        }
        if self.alpha.iter().any(|&a| !(a > 0.0)) {
            return bad(format!("frequencies must be positive: {:?}", self.alpha));
        }
        if self.y_star.len() != self.n1 || self.y_star.iter().any(|&y| !(y > 0.0)) {
            return bad("y_star needs one positive action per tangent site".into());
        }
        if !self.eps.is_finite() || self.eps < 0.0 {
            return bad(format!("coupling {} must be finite and non-negative", self.eps));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        self.n2 + self.modes
    }

    /// Kind of the 1-based site `j`.
    pub fn kind(&self, j: usize) -> SiteKind {
        if j <= self.n1 {
            SiteKind::Tangent(j - 1)
        } else if j <= self.n2 {
            SiteKind::Degenerate(j - self.n1 - 1)
        } else {
            SiteKind::Normal(j - self.n2 - 1)
        }
    }

    /// Harmonic frequency of a tangent or normal site.
    pub fn alpha_at(&self, j: usize) -> f64 {
        match self.kind(j) {
            SiteKind::Tangent(i) => self.alpha[i],
            SiteKind::Normal(i) => self.alpha[self.n1 + i],
            SiteKind::Degenerate(_) => 0.0,
        }
    }

    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.n1, self.n2 - self.n1, self.modes)
    }

    pub fn mode_sites(&self) -> ModeSites {
        ModeSites {
            z: ((self.n1 + 1)..=self.n2).map(|j| j as u32).collect(),
            w: ((self.n2 + 1)..=self.sites()).map(|j| j as u32).collect(),
        }
    }
}

/// The chain Hamiltonian in canonical `(q, p)`.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub config: LatticeConfig,
}

pub fn build_lattice(config: &LatticeConfig) -> Result<Lattice> {
    config.validate()?;
    Ok(Lattice { config: config.clone() })
}

/// Sampled trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    /// Largest relative energy deviation over the samples.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let n = self.q.first().map_or(0, |v| v.len());
        let mut head = vec!["t".to_string()];
        head.extend((1..=n).map(|j| format!("q_{j}")));
        head.extend((1..=n).map(|j| format!("p_{j}")));
        let mut out = head.join(",") + "\n";
        for (i, t) in self.t.iter().enumerate() {
            let row: Vec<String> = std::iter::once(*t)
                .chain(self.q[i].iter().copied())
                .chain(self.p[i].iter().copied())
                .map(|v| format!("{v:e}"))
                .collect();
            out += &row.join(",");
            out.push('\n');
        }
        out
    }
}

impl Lattice {
    pub fn energy(&self, q: &[f64], p: &[f64]) -> f64 {
        let c = &self.config;
        let mut e = 0.0;
        for j in 1..=c.sites() {
            let (qj, pj) = (q[j - 1], p[j - 1]);
            e += match c.kind(j) {
                SiteKind::Degenerate(i) => {
                    let (q2, p2) = (qj * qj, pj * pj);
                    c.beta[i] * (q2 * q2 - 6.0 * q2 * p2 + p2 * p2)
                }
                _ => {
                    let a = c.alpha_at(j);
                    0.5 * a * a * qj * qj + 0.5 * pj * pj
                }
            };
        }
        for j in 1..c.sites() {
            let d = q[j] - q[j - 1];
            e += 0.5 * c.eps * d * d;
        }
        e
    }

    /// One symmetric splitting step: kicks from the coupling and `q^4`,
    /// drifts from `p^4`, the exact `q^2 p^2` flow, and exact rotations of
    /// the harmonic sites in the middle.
    pub fn step(&self, q: &mut [f64], p: &mut [f64], dt: f64) {
        let h = dt / 2.0;
        self.kick(q, p, h);
        self.quartic_drift(q, p, h);
        self.mixed_flow(q, p, h);
        self.rotate(q, p, dt);
        self.mixed_flow(q, p, h);
        self.quartic_drift(q, p, h);
        self.kick(q, p, h);
    }

    fn kick(&self, q: &[f64], p: &mut [f64], t: f64) {
        let c = &self.config;
        let n = c.sites();
        for j in 1..=n {
            let mut force = 0.0;
            if let SiteKind::Degenerate(i) = c.kind(j) {
                force -= 4.0 * c.beta[i] * q[j - 1].powi(3);
            }
            if j > 1 {
                force -= c.eps * (q[j - 1] - q[j - 2]);
            }
            if j < n {
                force += c.eps * (q[j] - q[j - 1]);
            }
            p[j - 1] += t * force;
        }
    }

    fn quartic_drift(&self, q: &mut [f64], p: &[f64], t: f64) {
        let c = &self.config;
        for j in (c.n1 + 1)..=c.n2 {
            let beta = c.beta[j - c.n1 - 1];
            q[j - 1] += t * 4.0 * beta * p[j - 1].powi(3);
        }
    }

    /// `-6 beta q^2 p^2` keeps `q p` fixed, so its flow is a pair of exponentials.
    fn mixed_flow(&self, q: &mut [f64], p: &mut [f64], t: f64) {
        let c = &self.config;
        for j in (c.n1 + 1)..=c.n2 {
            let beta = c.beta[j - c.n1 - 1];
            let rate = 12.0 * beta * q[j - 1] * p[j - 1] * t;
            q[j - 1] *= (-rate).exp();
            p[j - 1] *= rate.exp();
        }
    }

    fn rotate(&self, q: &mut [f64], p: &mut [f64], t: f64) {
        let c = &self.config;
        for j in 1..=c.sites() {
            if matches!(c.kind(j), SiteKind::Degenerate(_)) {
                continue;
            }
            let a = c.alpha_at(j);
            let (s, co) = (a * t).sin_cos();
            let (qj, pj) = (q[j - 1], p[j - 1]);
            q[j - 1] = qj * co + pj / a * s;
            p[j - 1] = -a * qj * s + pj * co;
        }
    }

    /// Integrates to `t_end` with step `dt`, sampling every `every` steps.
    pub fn integrate(&self, q0: &[f64], p0: &[f64], t_end: f64, dt: f64, every: usize) -> Result<Trajectory> {
        let n = self.config.sites();
        if q0.len() != n || p0.len() != n {
            return Err(KamError::Dimension(format!("state needs {n} sites")));
        }
        if !(dt > 0.0) || t_end < dt {
            return Err(KamError::InvalidParameter(format!("need dt > 0 and T >= dt (dt={dt}, T={t_end})")));
        }
        let every = every.max(1);
        let steps = (t_end / dt).round() as usize;
        let (mut q, mut p) = (q0.to_vec(), p0.to_vec());
        let e0 = self.energy(&q, &p);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        let mut traj = Trajectory {
            t: vec![0.0],
            q: vec![q.clone()],
            p: vec![p.clone()],
            energy_drift: 0.0,
        };
        for s in 1..=steps {
            self.step(&mut q, &mut p, dt);
            let t = s as f64 * dt;
            if q.iter().chain(&p).any(|v| !v.is_finite()) {
                return Err(KamError::BlowUp(t));
            }
            if s % every == 0 || s == steps {
                traj.energy_drift = traj.energy_drift.max((self.energy(&q, &p) - e0).abs() / scale);
                traj.t.push(t);
                traj.q.push(q.clone());
                traj.p.push(p.clone());
            }
        }
        Ok(traj)
    }
}
