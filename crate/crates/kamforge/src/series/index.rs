use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};

pub const MAX_ANGLES: usize = 8;
pub const MAX_Z: usize = 8;
pub const MAX_MODES: usize = 8;

/// Problem dimensions: `n` angles, `b` degenerate pairs (z has `2b`
/// components) and `nw` retained non-degenerate modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub b: usize,
    pub nw: usize,
}

impl Dims {
    pub fn new(n: usize, b: usize, nw: usize) -> Result<Self> {
        if n == 0 || n > MAX_ANGLES || 2 * b > MAX_Z || nw > MAX_MODES {
            return Err(KamError::Dimension(format!(
                "unsupported dims n={n}, b={b}, nw={nw}"
            )));
        }
        Ok(Dims { n, b, nw })
    }

    pub fn nz(&self) -> usize {
        2 * self.b
    }

    pub fn check(&self, other: &Dims) -> Result<()> {
        if self != other {
            return Err(KamError::Dimension(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Exponent data of one monomial `e^{i<k,x>} y^i z^j w^l1 wbar^l2`.
/// Unused slots beyond the active dimensions stay zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex {
    pub k: [i16; MAX_ANGLES],
    pub y: [u16; MAX_ANGLES],
    pub z: [u16; MAX_Z],
    pub w: [u16; MAX_MODES],
    pub wb: [u16; MAX_MODES],
}

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_parts(k: &[i32], y: &[u32], z: &[u32], w: &[u32], wb: &[u32]) -> Self {
        let mut idx = Self::zero();
        for (s, v) in idx.k.iter_mut().zip(k) {
            *s = *v as i16;
        }
        for (s, v) in idx.y.iter_mut().zip(y) {
            *s = *v as u16;
        }
        for (s, v) in idx.z.iter_mut().zip(z) {
            *s = *v as u16;
        }
        for (s, v) in idx.w.iter_mut().zip(w) {
            *s = *v as u16;
        }
        for (s, v) in idx.wb.iter_mut().zip(wb) {
            *s = *v as u16;
        }
        idx
    }

    /// `|k|`, the l1 norm of the Fourier index.
    pub fn k_norm(&self) -> u32 {
        self.k.iter().map(|v| v.unsigned_abs() as u32).sum()
    }

    pub fn y_deg(&self) -> u32 {
        self.y.iter().map(|&v| v as u32).sum()
    }

    pub fn z_deg(&self) -> u32 {
        self.z.iter().map(|&v| v as u32).sum()
    }

    pub fn w_deg(&self) -> u32 {
        self.w.iter().chain(self.wb.iter()).map(|&v| v as u32).sum()
    }

    /// Weighted degree `2|i| + |j|`.
    pub fn grade(&self) -> u32 {
        2 * self.y_deg() + self.z_deg()
    }

    pub fn k_is_zero(&self) -> bool {
        self.k.iter().all(|&v| v == 0)
    }

    pub fn w_balanced(&self) -> bool {
        self.w == self.wb
    }

    /// Pure z monomial: no angle, action or normal-mode dependence.
    pub fn is_pure_z(&self) -> bool {
        self.k_is_zero() && self.y_deg() == 0 && self.w_deg() == 0
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for i in 0..MAX_ANGLES {
            r.k[i] += o.k[i];
            r.y[i] += o.y[i];
        }
        for i in 0..MAX_Z {
            r.z[i] += o.z[i];
        }
        for i in 0..MAX_MODES {
            r.w[i] += o.w[i];
            r.wb[i] += o.wb[i];
        }
        r
    }

    /// Index of the (angle, mode-difference) class this monomial belongs to.
    pub fn class_key(&self) -> ClassKey {
        let mut l_diff = [0i16; MAX_MODES];
        for (j, v) in l_diff.iter_mut().enumerate() {
            *v = self.w[j] as i16 - self.wb[j] as i16;
        }
        ClassKey { k: self.k, l_diff }
    }

    pub fn k_vec(&self, d: &Dims) -> Vec<i32> {
        self.k[..d.n].iter().map(|&v| v as i32).collect()
    }

    /// `l1 - l2` over the retained modes.
    pub fn l_diff(&self, d: &Dims) -> Vec<i32> {
        (0..d.nw)
            .map(|j| self.w[j] as i32 - self.wb[j] as i32)
            .collect()
    }
}

/// The part of a multi-index preserved by the bracket with a normal form:
/// the Fourier index and the mode-exponent difference `l1 - l2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassKey {
    pub k: [i16; MAX_ANGLES],
    pub l_diff: [i16; MAX_MODES],
}

impl ClassKey {
    pub fn k_norm(&self) -> u32 {
        self.k.iter().map(|v| v.unsigned_abs() as u32).sum()
    }

    pub fn is_resonant_average(&self) -> bool {
        self.k.iter().all(|&v| v == 0) && self.l_diff.iter().all(|&v| v == 0)
    }

    pub fn k_vec(&self, d: &Dims) -> Vec<i32> {
        self.k[..d.n].iter().map(|&v| v as i32).collect()
    }

    pub fn l_vec(&self, d: &Dims) -> Vec<i32> {
        self.l_diff[..d.nw].iter().map(|&v| v as i32).collect()
    }

    /// Whether the mode pair `(l1, l2)` has this class's difference.
    pub fn admits(&self, w: &[u16; MAX_MODES], wb: &[u16; MAX_MODES]) -> bool {
        (0..MAX_MODES).all(|j| w[j] as i16 - wb[j] as i16 == self.l_diff[j])
    }

    pub fn member(
        &self,
        y: [u16; MAX_ANGLES],
        z: [u16; MAX_Z],
        w: [u16; MAX_MODES],
        wb: [u16; MAX_MODES],
    ) -> MultiIndex {
        MultiIndex { k: self.k, y, z, w, wb }
    }
}

/// Retained-index lattice: `|k| <= k_max`, `2|i|+|j| <= m_max`, `|l| <= l_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradingCaps {
    pub k_max: u32,
    pub m_max: u32,
    pub l_max: u32,
}

impl GradingCaps {
    pub fn new(k_max: u32, m_max: u32) -> Self {
        GradingCaps {
            k_max,
            m_max,
            l_max: 2,
        }
    }

    pub fn contains(&self, idx: &MultiIndex) -> bool {
        idx.k_norm() <= self.k_max && idx.grade() <= self.m_max && idx.w_deg() <= self.l_max
    }
}

/// Enumerate all integer vectors of length `n` with l1 norm at most `kmax`.
pub fn fourier_vectors(n: usize, kmax: u32) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let mut cur = vec![0i32; n];
    fn rec(pos: usize, left: i32, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in -left..=left {
            cur[pos] = v;
            rec(pos + 1, left - v.abs(), cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, kmax as i32, &mut cur, &mut out);
    out
}

/// Enumerate all non-negative exponent vectors of length `n` with total degree `<= deg`.
pub fn exponent_vectors(n: usize, deg: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(pos + 1, left - v, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, deg, &mut cur, &mut out);
    out
}

/// All `(i, j)` exponent pairs with `2|i| + |j| <= m`, graded ascending then lexicographic.
pub fn graded_yz(d: &Dims, m: u32) -> Vec<([u16; MAX_ANGLES], [u16; MAX_Z])> {
    let mut out = Vec::new();
    for iy in exponent_vectors(d.n, m / 2) {
        let yd: u32 = iy.iter().sum();
        for jz in exponent_vectors(d.nz(), m - 2 * yd) {
            let mut y = [0u16; MAX_ANGLES];
            let mut z = [0u16; MAX_Z];
            for (s, v) in y.iter_mut().zip(&iy) {
                *s = *v as u16;
            }
            for (s, v) in z.iter_mut().zip(&jz) {
                *s = *v as u16;
            }
            out.push((y, z));
        }
    }
    out.sort_by_key(|(y, z)| {
        let g: u32 = 2 * y.iter().map(|&v| v as u32).sum::<u32>() + z.iter().map(|&v| v as u32).sum::<u32>();
        (g, *y, *z)
    });
    out
}

/// All `(l1, l2)` normal-mode exponent pairs with `|l1| + |l2| <= lmax`.
pub fn mode_pairs(nw: usize, lmax: u32) -> Vec<([u16; MAX_MODES], [u16; MAX_MODES])> {
    let mut out = Vec::new();
    for v in exponent_vectors(2 * nw, lmax) {
        let mut w = [0u16; MAX_MODES];
        let mut wb = [0u16; MAX_MODES];
        for j in 0..nw {
            w[j] = v[j] as u16;
            wb[j] = v[nw + j] as u16;
        }
        out.push((w, wb));
    }
    out
}
