use std::collections::BTreeMap;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use super::index::{Dims, GradingCaps, MultiIndex, MAX_ANGLES, MAX_MODES, MAX_Z};
use crate::error::Result;

/// Coefficients at or below this magnitude are treated as exact zeros.
pub const PRUNE: f64 = 1e-300;

pub(crate) fn negligible(c: Complex64) -> bool {
    c.re.abs() <= PRUNE && c.im.abs() <= PRUNE
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Truncated Taylor-Fourier polynomial in `(x, y, z, w, wbar)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TFSeries {
    pub dims: Dims,
    terms: BTreeMap<MultiIndex, Complex64>,
}

/// A point of the complexified phase space.
#[derive(Clone, Debug)]
pub struct Point {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
    pub wb: Vec<Complex64>,
}

impl Point {
    pub fn zero(d: &Dims) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Point {
            x: vec![z; d.n],
            y: vec![z; d.n],
            z: vec![z; d.nz()],
            w: vec![z; d.nw],
            wb: vec![z; d.nw],
        }
    }
}

fn accumulate(dims: Dims, acc: FxHashMap<MultiIndex, Complex64>) -> TFSeries {
    let terms = acc.into_iter().filter(|(_, c)| !negligible(*c)).collect();
    TFSeries { dims, terms }
}

impl TFSeries {
    pub fn zero(dims: Dims) -> Self {
        TFSeries {
            dims,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I2: IntoIterator<Item = (MultiIndex, Complex64)>>(dims: Dims, it: I2) -> Self {
        let mut s = Self::zero(dims);
        for (idx, c) in it {
            s.add_term(idx, c);
        }
        s
    }

    pub fn monomial(dims: Dims, idx: MultiIndex, c: Complex64) -> Self {
        Self::from_terms(dims, [(idx, c)])
    }

    /// Adds `c` at `idx`, removing the entry if it cancels to zero.
    pub fn add_term(&mut self, idx: MultiIndex, c: Complex64) {
        if negligible(c) {
            return;
        }
        let e = self.terms.entry(idx).or_insert(Complex64::new(0.0, 0.0));
        *e += c;
        if negligible(*e) {
            self.terms.remove(&idx);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.terms.iter()
    }

    pub fn get(&self, idx: &MultiIndex) -> Complex64 {
        self.terms.get(idx).copied().unwrap_or_default()
    }

    pub fn add(&self, o: &TFSeries) -> Result<TFSeries> {
        self.dims.check(&o.dims)?;
        let mut r = self.clone();
        for (idx, c) in &o.terms {
            r.add_term(*idx, *c);
        }
        Ok(r)
    }

    pub fn sub(&self, o: &TFSeries) -> Result<TFSeries> {
        self.dims.check(&o.dims)?;
        let mut r = self.clone();
        for (idx, c) in &o.terms {
            r.add_term(*idx, -*c);
        }
        Ok(r)
    }

    pub fn add_assign(&mut self, o: &TFSeries) -> Result<()> {
        self.dims.check(&o.dims)?;
        for (idx, c) in &o.terms {
            self.add_term(*idx, *c);
        }
        Ok(())
    }

    pub fn scale(&self, f: Complex64) -> TFSeries {
        TFSeries::from_terms(self.dims, self.terms.iter().map(|(i, c)| (*i, *c * f)))
    }

    pub fn neg(&self) -> TFSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// Split into the terms satisfying `pred` and the rest.
    pub fn partition<P: Fn(&MultiIndex) -> bool>(&self, pred: P) -> (TFSeries, TFSeries) {
        let mut a = TFSeries::zero(self.dims);
        let mut b = TFSeries::zero(self.dims);
        for (idx, c) in &self.terms {
            if pred(idx) {
                a.terms.insert(*idx, *c);
            } else {
                b.terms.insert(*idx, *c);
            }
        }
        (a, b)
    }

    pub fn filter<P: Fn(&MultiIndex) -> bool>(&self, pred: P) -> TFSeries {
        self.partition(pred).0
    }

    /// Product; terms outside `cap` are returned in the second series.
    pub fn multiply(&self, o: &TFSeries, cap: Option<&GradingCaps>) -> Result<(TFSeries, TFSeries)> {
        self.dims.check(&o.dims)?;
        let mut acc: FxHashMap<MultiIndex, Complex64> = FxHashMap::default();
        for (ia, ca) in &self.terms {
            for (ib, cb) in &o.terms {
                *acc.entry(ia.add(ib)).or_default() += ca * cb;
            }
        }
        let full = accumulate(self.dims, acc);
        Ok(match cap {
            Some(c) => full.partition(|i| c.contains(i)),
            None => (full, TFSeries::zero(self.dims)),
        })
    }

    pub fn mul(&self, o: &TFSeries) -> Result<TFSeries> {
        Ok(self.multiply(o, None)?.0)
    }

    pub fn dx(&self, i: usize) -> TFSeries {
        let it = self.terms.iter().filter(|(idx, _)| idx.k[i] != 0).map(|(idx, c)| (*idx, c * I * idx.k[i] as f64));
        TFSeries::from_terms(self.dims, it)
    }

    pub fn dy(&self, i: usize) -> TFSeries {
        self.lower(|idx| &mut idx.y[i])
    }

    pub fn dz(&self, c: usize) -> TFSeries {
        self.lower(|idx| &mut idx.z[c])
    }

    pub fn dw(&self, j: usize) -> TFSeries {
        self.lower(|idx| &mut idx.w[j])
    }

    pub fn dwb(&self, j: usize) -> TFSeries {
        self.lower(|idx| &mut idx.wb[j])
    }

    fn lower<F: Fn(&mut MultiIndex) -> &mut u16>(&self, slot: F) -> TFSeries {
        let mut out = TFSeries::zero(self.dims);
        for (idx, c) in &self.terms {
            let mut j = *idx;
            let e = slot(&mut j);
            if *e == 0 {
                continue;
            }
            let f = *e as f64;
            *e -= 1;
            out.add_term(j, c * f);
        }
        out
    }

    /// Poisson bracket `{F,G} = -F_y G_x + F_x G_y + F_z J G_z - i F_wbar G_w + i F_w G_wbar`.
    pub fn poisson_bracket(&self, g: &TFSeries) -> Result<TFSeries> {
        self.dims.check(&g.dims)?;
        let d = self.dims;
        let mut acc: FxHashMap<MultiIndex, Complex64> = FxHashMap::default();
        for (a, ca) in &self.terms {
            for (b, cb) in &g.terms {
                bracket_pair(&d, a, *ca, b, *cb, &mut acc);
            }
        }
        Ok(accumulate(d, acc))
    }

    /// Bracket that skips every monomial pair whose coefficient product,
    /// times the crude derivative factor `deg(a) deg(b)`, is below `floor`.
    /// Also returns an upper bound on the coefficient l1 norm of the skipped part.
    pub fn poisson_bracket_pruned(&self, g: &TFSeries, floor: f64) -> Result<(TFSeries, f64)> {
        self.dims.check(&g.dims)?;
        let d = self.dims;
        let mut rhs: Vec<(&MultiIndex, Complex64, f64)> =
            g.terms.iter().map(|(b, cb)| (b, *cb, cb.norm() * pair_degree(b))).collect();
        rhs.sort_by(|x, y| y.2.total_cmp(&x.2));
        let mut tail = vec![0.0; rhs.len() + 1];
        for i in (0..rhs.len()).rev() {
            tail[i] = tail[i + 1] + rhs[i].2;
        }
        let mut acc: FxHashMap<MultiIndex, Complex64> = FxHashMap::default();
        let mut skipped = 0.0;
        for (a, ca) in &self.terms {
            let wa = ca.norm() * pair_degree(a);
            if wa == 0.0 {
                continue;
            }
            let cut = rhs.partition_point(|x| wa * x.2 >= floor);
            for &(b, cb, _) in &rhs[..cut] {
                bracket_pair(&d, a, *ca, b, cb, &mut acc);
            }
            skipped += wa * tail[cut];
        }
        Ok((accumulate(d, acc), skipped))
    }

    /// Evaluate at a complex point.
    pub fn eval(&self, p: &Point) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (idx, c) in &self.terms {
            s += c * monomial_value(&self.dims, idx, p);
        }
        s
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient-wise difference between two series.
    pub fn max_abs_diff(&self, o: &TFSeries) -> f64 {
        let mut m: f64 = 0.0;
        for (idx, c) in &self.terms {
            m = m.max((c - o.get(idx)).norm());
        }
        for (idx, c) in &o.terms {
            if !self.terms.contains_key(idx) {
                m = m.max(c.norm());
            }
        }
        m
    }

    /// Real-Hamiltonian symmetry: the coefficient at `(-k, i, j, l2, l1)`
    /// is the conjugate of the one at `(k, i, j, l1, l2)`, with `z` real.
    pub fn is_real(&self, tol: f64) -> bool {
        self.terms.iter().all(|(idx, c)| {
            let m = mirror(idx);
            (self.get(&m) - c.conj()).norm() <= tol * (1.0 + c.norm())
        })
    }

    /// Substitute `z -> z + h`.
    pub fn shift_z(&self, h: &[f64]) -> TFSeries {
        let d = self.dims;
        let nz = d.nz();
        let mut acc: FxHashMap<MultiIndex, Complex64> = FxHashMap::default();
        for (idx, c) in &self.terms {
            let mut partial: Vec<(MultiIndex, Complex64)> = vec![(*idx, *c)];
            for comp in 0..nz {
                let e = idx.z[comp] as u32;
                if e == 0 || h[comp] == 0.0 {
                    continue;
                }
                let mut next = Vec::with_capacity(partial.len() * (e as usize + 1));
                for (pi, pc) in &partial {
                    for keep in 0..=e {
                        let mut ni = *pi;
                        ni.z[comp] = keep as u16;
                        let coef = binomial(e, keep) * h[comp].powi((e - keep) as i32);
                        next.push((ni, pc * coef));
                    }
                }
                partial = next;
            }
            for (pi, pc) in partial {
                *acc.entry(pi).or_default() += pc;
            }
        }
        accumulate(d, acc)
    }
}

/// Index `(-k, i, j, l2, l1)` paired with `idx` under complex conjugation.
pub fn mirror(idx: &MultiIndex) -> MultiIndex {
    let mut m = *idx;
    for v in m.k.iter_mut() {
        *v = -*v;
    }
    m.w = idx.wb;
    m.wb = idx.w;
    m
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

pub(crate) fn monomial_value(d: &Dims, idx: &MultiIndex, p: &Point) -> Complex64 {
    let mut phase = 0.0 * I;
    for i in 0..d.n {
        if idx.k[i] != 0 {
            phase += p.x[i] * idx.k[i] as f64;
        }
    }
    let mut v = (I * phase).exp();
    for i in 0..d.n {
        if idx.y[i] > 0 {
            v *= p.y[i].powu(idx.y[i] as u32);
        }
    }
    for c in 0..d.nz() {
        if idx.z[c] > 0 {
            v *= p.z[c].powu(idx.z[c] as u32);
        }
    }
    for j in 0..d.nw {
        if idx.w[j] > 0 {
            v *= p.w[j].powu(idx.w[j] as u32);
        }
        if idx.wb[j] > 0 {
            v *= p.wb[j].powu(idx.wb[j] as u32);
        }
    }
    v
}

fn pair_degree(a: &MultiIndex) -> f64 {
    (a.k_norm() + a.y_deg() + a.z_deg() + a.w_deg()) as f64
}

#[inline]
fn bracket_pair(
    d: &Dims,
    a: &MultiIndex,
    ca: Complex64,
    b: &MultiIndex,
    cb: Complex64,
    acc: &mut FxHashMap<MultiIndex, Complex64>,
) {
    let base = a.add(b);
    let prod = ca * cb;
    for i in 0..d.n.min(MAX_ANGLES) {
        // i (k_a y_b - y_a k_b)
        let f = a.k[i] as f64 * b.y[i] as f64 - a.y[i] as f64 * b.k[i] as f64;
        if f != 0.0 {
            let mut t = base;
            t.y[i] -= 1;
            *acc.entry(t).or_default() += prod * I * f;
        }
    }
    for c in 0..d.b.min(MAX_Z / 2) {
        let cb_ = c + d.b;
        let f = a.z[c] as f64 * b.z[cb_] as f64 - a.z[cb_] as f64 * b.z[c] as f64;
        if f != 0.0 {
            let mut t = base;
            t.z[c] -= 1;
            t.z[cb_] -= 1;
            *acc.entry(t).or_default() += prod * f;
        }
    }
    for j in 0..d.nw.min(MAX_MODES) {
        let f = a.w[j] as f64 * b.wb[j] as f64 - a.wb[j] as f64 * b.w[j] as f64;
        if f != 0.0 {
            let mut t = base;
            t.w[j] -= 1;
            t.wb[j] -= 1;
            *acc.entry(t).or_default() += prod * I * f;
        }
    }
}
