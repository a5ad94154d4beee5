use num_complex::Complex64;

use super::chain::{Lattice, LatticeConfig, SiteKind};
use crate::error::Result;
use crate::normal_form::NormalForm;
use crate::series::{Dims, MultiIndex, Point, TFSeries};

/// The chain in normal-form coordinates: `H = N + eps P`.
#[derive(Clone, Debug)]
pub struct ReducedLattice {
    pub config: LatticeConfig,
    pub normal: NormalForm,
    /// Unscaled coupling; the Hamiltonian carries `eps` times it.
    pub perturbation: TFSeries,
    pub eps: f64,
    /// Total `y` degree kept in the square-root expansions.
    pub y_order: u32,
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Quartic degenerate part `sum beta (z_c^4 + z_{c+b}^4) / 2`.
pub fn quartic_degenerate(dims: Dims, beta: &[f64]) -> TFSeries {
    let mut g = TFSeries::zero(dims);
    for (c, &b) in beta.iter().enumerate() {
        for slot in [c, c + dims.b] {
            let mut idx = MultiIndex::zero();
            idx.z[slot] = 4;
            g.add_term(idx, re(b / 2.0));
        }
    }
    g
}

/// `g = (1/2p) sum z_c^{2p} + (1/2q) sum z_{c+b}^{2q}`.
pub fn remark1_g(p: u32, q: u32, dims: Dims) -> TFSeries {
    let mut g = TFSeries::zero(dims);
    for c in 0..dims.b {
        let mut idx = MultiIndex::zero();
        idx.z[c] = (2 * p) as u16;
        g.add_term(idx, re(1.0 / (2.0 * p as f64)));
        let mut idx = MultiIndex::zero();
        idx.z[c + dims.b] = (2 * q) as u16;
        g.add_term(idx, re(1.0 / (2.0 * q as f64)));
    }
    g
}

/// Taylor coefficients of `sqrt(y_star + y)` in `y`.
fn sqrt_coefficients(y_star: f64, order: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(order as usize + 1);
    let mut binom = 1.0;
    let mut c = y_star.sqrt();
    for n in 0..=order {
        out.push(binom * c);
        binom *= (0.5 - n as f64) / (n as f64 + 1.0);
        c /= y_star;
    }
    out
}

impl ReducedLattice {
    fn dims(&self) -> Dims {
        self.normal.dims
    }

    /// `q_j` as a series.
    fn site_q(&self, j: usize) -> TFSeries {
        let c = &self.config;
        let d = self.dims();
        let mut s = TFSeries::zero(d);
        match c.kind(j) {
            SiteKind::Tangent(i) => {
                let scale = (2.0 / c.alpha[i]).sqrt() / 2.0;
                for (n, a) in sqrt_coefficients(c.y_star[i], self.y_order).into_iter().enumerate() {
                    for sign in [1, -1] {
                        let mut idx = MultiIndex::zero();
                        idx.k[i] = sign;
                        idx.y[i] = n as u16;
                        s.add_term(idx, re(scale * a));
                    }
                }
            }
            SiteKind::Degenerate(i) => {
                for slot in [i, i + d.b] {
                    let mut idx = MultiIndex::zero();
                    idx.z[slot] = 1;
                    s.add_term(idx, re(0.5));
                }
            }
            SiteKind::Normal(i) => {
                let scale = 1.0 / (2.0 * c.alpha_at(j)).sqrt();
                let mut idx = MultiIndex::zero();
                idx.w[i] = 1;
                s.add_term(idx, re(scale));
                let mut idx = MultiIndex::zero();
                idx.wb[i] = 1;
                s.add_term(idx, re(scale));
            }
        }
        s
    }

    /// `q_j^2`, exact on tangent sites.
    fn site_q_squared(&self, j: usize) -> Result<TFSeries> {
        let c = &self.config;
        if let SiteKind::Tangent(i) = c.kind(j) {
            let mut s = TFSeries::zero(self.dims());
            let scale = 2.0 / c.alpha[i] / 4.0;
            for (kk, weight) in [(2i16, 1.0), (0, 2.0), (-2, 1.0)] {
                let mut idx = MultiIndex::zero();
                idx.k[i] = kk;
                s.add_term(idx, re(scale * weight * c.y_star[i]));
                idx.y[i] = 1;
                s.add_term(idx, re(scale * weight));
            }
            return Ok(s);
        }
        let q = self.site_q(j);
        q.mul(&q)
    }

    fn build_perturbation(&mut self) -> Result<()> {
        let n = self.config.sites();
        let mut p = TFSeries::zero(self.dims());
        for j in 1..n {
            p.add_assign(&self.site_q_squared(j)?.scale(re(0.5)))?;
            p.add_assign(&self.site_q_squared(j + 1)?.scale(re(0.5)))?;
            let order = self.y_order;
            let cross = self.site_q(j).mul(&self.site_q(j + 1))?.filter(|idx| idx.y_deg() <= order);
            p.add_assign(&cross.neg())?;
        }
        self.perturbation = p;
        Ok(())
    }

    /// The full reduced Hamiltonian `N + eps P`.
    pub fn hamiltonian(&self) -> Result<TFSeries> {
        self.normal.to_series().add(&self.perturbation.scale(re(self.eps)))
    }

    /// Maps a lattice state into reduced coordinates.
    pub fn to_reduced(&self, q: &[f64], p: &[f64]) -> Point {
        let c = &self.config;
        let d = self.dims();
        let mut pt = Point::zero(&d);
        for j in 1..=c.sites() {
            let (qj, pj) = (q[j - 1], p[j - 1]);
            match c.kind(j) {
                SiteKind::Tangent(i) => {
                    let a = c.alpha[i];
                    let action = (a * a * qj * qj + pj * pj) / (2.0 * a);
                    pt.x[i] = re((-pj / a).atan2(qj));
                    pt.y[i] = re(action - c.y_star[i]);
                }
                SiteKind::Degenerate(i) => {
                    pt.z[i] = Complex64::new(qj, -pj);
                    pt.z[i + d.b] = Complex64::new(qj, pj);
                }
                SiteKind::Normal(i) => {
                    let a = c.alpha_at(j);
                    let w = Complex64::new((a / 2.0).sqrt() * qj, -pj / (2.0 * a).sqrt());
                    pt.w[i] = w;
                    pt.wb[i] = w.conj();
                }
            }
        }
        pt
    }

    /// Inverse of [`Self::to_reduced`] on real-form points.
    pub fn to_lattice(&self, pt: &Point) -> (Vec<f64>, Vec<f64>) {
        let c = &self.config;
        let b = self.dims().b;
        let n = c.sites();
        let (mut q, mut p) = (vec![0.0; n], vec![0.0; n]);
        for j in 1..=n {
            let (qj, pj) = match c.kind(j) {
                SiteKind::Tangent(i) => {
                    let a = c.alpha[i];
                    let action = c.y_star[i] + pt.y[i].re;
                    let x = pt.x[i].re;
                    ((2.0 * action / a).sqrt() * x.cos(), -(2.0 * a * action).sqrt() * x.sin())
                }
                SiteKind::Degenerate(i) => {
                    let (z0, z1) = (pt.z[i], pt.z[i + b]);
                    (((z0 + z1) / 2.0).re, ((z1 - z0) / Complex64::new(0.0, 2.0)).re)
                }
                SiteKind::Normal(i) => {
                    let a = c.alpha_at(j);
                    let (w, wb) = (pt.w[i], pt.wb[i]);
                    (((w + wb) / (2.0 * a).sqrt()).re, (Complex64::new(0.0, (a / 2.0).sqrt()) * (w - wb)).re)
                }
            };
            q[j - 1] = qj;
            p[j - 1] = pj;
        }
        (q, p)
    }
}

/// Rewrites the chain in action-angle, degenerate-pair and normal-mode
/// coordinates around `y_star`, expanding square roots to total `y`
/// degree `y_order`.
pub fn to_normal_coordinates(lattice: &Lattice, y_order: u32) -> Result<ReducedLattice> {
    let c = &lattice.config;
    c.validate()?;
    let d = c.dims()?;
    let energy: f64 = c.alpha[..c.n1].iter().zip(&c.y_star).map(|(a, y)| a * y).sum();
    let normal = NormalForm::new(
        d,
        energy,
        c.alpha[..c.n1].to_vec(),
        c.alpha[c.n1..].to_vec(),
        quartic_degenerate(d, &c.beta),
        TFSeries::zero(d),
        2 * y_order + 4,
    )?;
    let mut reduced = ReducedLattice {
        config: c.clone(),
        normal,
        perturbation: TFSeries::zero(d),
        eps: c.eps,
        y_order,
    };
    if c.eps != 0.0 {
        reduced.build_perturbation()?;
    }
    Ok(reduced)
}
