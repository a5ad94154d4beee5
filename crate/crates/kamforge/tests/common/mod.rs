//! Brute-force reference implementations used as test oracles.
//!
//! Polynomials are flat lists of `(exponent vector, coefficient)` with the
//! exponent vector laid out as `[k.., y.., z.., w.., wbar..]`; nothing here
//! shares code with the library's series arithmetic.
#![allow(dead_code)]

use kamforge::series::{Dims, MultiIndex, TFSeries};
use num_complex::Complex64;
use rand::Rng;

pub type Naive = Vec<(Vec<i64>, Complex64)>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub struct Layout {
    pub n: usize,
    pub nz: usize,
    pub nw: usize,
}

impl Layout {
    pub fn of(d: &Dims) -> Self {
        Layout { n: d.n, nz: 2 * d.b, nw: d.nw }
    }
    pub fn len(&self) -> usize {
        2 * self.n + self.nz + 2 * self.nw
    }
    pub fn k(&self, i: usize) -> usize {
        i
    }
    pub fn y(&self, i: usize) -> usize {
        self.n + i
    }
    pub fn z(&self, c: usize) -> usize {
        2 * self.n + c
    }
    pub fn w(&self, j: usize) -> usize {
        2 * self.n + self.nz + j
    }
    pub fn wb(&self, j: usize) -> usize {
        2 * self.n + self.nz + self.nw + j
    }
}

pub fn to_naive(s: &TFSeries) -> Naive {
    let d = s.dims;
    s.iter()
        .map(|(idx, c)| {
            let mut v = Vec::new();
            v.extend(idx.k[..d.n].iter().map(|&x| x as i64));
            v.extend(idx.y[..d.n].iter().map(|&x| x as i64));
            v.extend(idx.z[..2 * d.b].iter().map(|&x| x as i64));
            v.extend(idx.w[..d.nw].iter().map(|&x| x as i64));
            v.extend(idx.wb[..d.nw].iter().map(|&x| x as i64));
            (v, *c)
        })
        .collect()
}

pub fn from_naive(d: Dims, p: &Naive) -> TFSeries {
    let l = Layout::of(&d);
    let mut s = TFSeries::zero(d);
    for (e, c) in p {
        let k: Vec<i32> = (0..l.n).map(|i| e[l.k(i)] as i32).collect();
        let y: Vec<u32> = (0..l.n).map(|i| e[l.y(i)] as u32).collect();
        let z: Vec<u32> = (0..l.nz).map(|i| e[l.z(i)] as u32).collect();
        let w: Vec<u32> = (0..l.nw).map(|i| e[l.w(i)] as u32).collect();
        let wb: Vec<u32> = (0..l.nw).map(|i| e[l.wb(i)] as u32).collect();
        s.add_term(MultiIndex::from_parts(&k, &y, &z, &w, &wb), *c);
    }
    s
}

/// Merge duplicate exponents.
pub fn merge(p: Naive) -> Naive {
    let mut acc: std::collections::HashMap<Vec<i64>, Complex64> = std::collections::HashMap::new();
    for (e, c) in p {
        *acc.entry(e).or_insert(Complex64::new(0.0, 0.0)) += c;
    }
    acc.into_iter().filter(|(_, c)| c.norm() > 0.0).collect()
}

pub fn naive_add(a: &Naive, b: &Naive) -> Naive {
    let mut v = a.clone();
    v.extend(b.iter().cloned());
    merge(v)
}

pub fn naive_scale(a: &Naive, f: Complex64) -> Naive {
    a.iter().map(|(e, c)| (e.clone(), c * f)).collect()
}

pub fn naive_mul(a: &Naive, b: &Naive) -> Naive {
    let mut v = Vec::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            v.push((e, ca * cb));
        }
    }
    merge(v)
}

/// Derivative in the angle `x_i`: multiplies by `i k_i`.
pub fn naive_dx(l: &Layout, a: &Naive, i: usize) -> Naive {
    merge(
        a.iter()
            .map(|(e, c)| (e.clone(), c * I * e[l.k(i)] as f64))
            .collect(),
    )
}

/// Derivative in a polynomial slot.
pub fn naive_dslot(a: &Naive, slot: usize) -> Naive {
    merge(
        a.iter()
            .filter(|(e, _)| e[slot] > 0)
            .map(|(e, c)| {
                let mut f = e.clone();
                f[slot] -= 1;
                (f, c * e[slot] as f64)
            })
            .collect(),
    )
}

/// Five-summand bracket assembled from separately differentiated factors.
pub fn naive_bracket(l: &Layout, f: &Naive, g: &Naive) -> Naive {
    let mut total: Naive = Vec::new();
    for i in 0..l.n {
        let t1 = naive_mul(&naive_dslot(f, l.y(i)), &naive_dx(l, g, i));
        total = naive_add(&total, &naive_scale(&t1, Complex64::new(-1.0, 0.0)));
        let t2 = naive_mul(&naive_dx(l, f, i), &naive_dslot(g, l.y(i)));
        total = naive_add(&total, &t2);
    }
    let b = l.nz / 2;
    for c in 0..b {
        let t = naive_mul(&naive_dslot(f, l.z(c)), &naive_dslot(g, l.z(c + b)));
        total = naive_add(&total, &t);
        let t = naive_mul(&naive_dslot(f, l.z(c + b)), &naive_dslot(g, l.z(c)));
        total = naive_add(&total, &naive_scale(&t, Complex64::new(-1.0, 0.0)));
    }
    for j in 0..l.nw {
        let t = naive_mul(&naive_dslot(f, l.wb(j)), &naive_dslot(g, l.w(j)));
        total = naive_add(&total, &naive_scale(&t, -I));
        let t = naive_mul(&naive_dslot(f, l.w(j)), &naive_dslot(g, l.wb(j)));
        total = naive_add(&total, &naive_scale(&t, I));
    }
    total
}

pub fn naive_max_diff(a: &Naive, b: &Naive) -> f64 {
    let d = naive_add(a, &naive_scale(b, Complex64::new(-1.0, 0.0)));
    d.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
}

/// Random series with `terms` monomials of total polynomial degree `<= deg`
/// and Fourier entries in `[-kmax, kmax]`.
pub fn random_series<R: Rng>(rng: &mut R, d: Dims, terms: usize, deg: u32, kmax: i32) -> TFSeries {
    let l = Layout::of(&d);
    let mut s = TFSeries::zero(d);
    for _ in 0..terms {
        let k: Vec<i32> = (0..l.n).map(|_| rng.gen_range(-kmax..=kmax)).collect();
        let mut left = rng.gen_range(0..=deg);
        let mut slots = vec![0u32; l.n + l.nz + 2 * l.nw];
        while left > 0 {
            let s = rng.gen_range(0..slots.len());
            slots[s] += 1;
            left -= 1;
        }
        let y = &slots[..l.n];
        let z = &slots[l.n..l.n + l.nz];
        let w = &slots[l.n + l.nz..l.n + l.nz + l.nw];
        let wb = &slots[l.n + l.nz + l.nw..];
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        s.add_term(MultiIndex::from_parts(&k, y, z, w, wb), c);
    }
    s
}

/// Adds the mirrored conjugate of every term so the series is real.
pub fn realify(s: &TFSeries) -> TFSeries {
    let mut r = s.clone();
    for (idx, c) in s.iter() {
        r.add_term(kamforge::series::mirror(idx), c.conj());
    }
    r
}

/// Direct evaluation of a naive polynomial at `(x, y, z, w, wbar)`.
pub fn naive_eval(l: &Layout, p: &Naive, pt: &[Complex64]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (e, c) in p {
        let mut phase = Complex64::new(0.0, 0.0);
        for i in 0..l.n {
            phase += pt[i] * e[l.k(i)] as f64;
        }
        let mut v = (I * phase).exp();
        for slot in l.n..l.len() {
            for _ in 0..e[slot] {
                v *= pt[slot];
            }
        }
        s += c * v;
    }
    s
}

pub mod model {
    use kamforge::degree::EquilibriumOptions;
    use kamforge::engine::*;
    use kamforge::homological::DiophantineParams;
    use kamforge::normal_form::NormalForm;
    use kamforge::series::*;
    use num_complex::Complex64;

    pub const GOLDEN: f64 = 1.618_033_988_749_895;

    /// Two angles, one degenerate pair at site 3, one normal mode at site 4.
    pub fn dims() -> Dims {
        Dims::new(2, 1, 1).unwrap()
    }

    pub fn tangent() -> Vec<f64> {
        vec![0.8, 0.8 * GOLDEN]
    }

    pub fn normal_freq() -> Vec<f64> {
        vec![16.0 + 0.1 * 2.0]
    }

    pub fn quartic(beta: f64) -> TFSeries {
        let d = dims();
        let mut g = TFSeries::zero(d);
        g.add_term(MultiIndex::from_parts(&[0, 0], &[0, 0], &[4, 0], &[0], &[0]), Complex64::new(beta / 2.0, 0.0));
        g.add_term(MultiIndex::from_parts(&[0, 0], &[0, 0], &[0, 4], &[0], &[0]), Complex64::new(beta / 2.0, 0.0));
        g
    }

    pub fn normal_form(m: u32) -> NormalForm {
        NormalForm::new(dims(), 0.0, tangent(), normal_freq(), quartic(1.0), TFSeries::zero(dims()), m).unwrap()
    }

    fn cos_term(s: &mut TFSeries, k: [i32; 2], y: [u32; 2], z: [u32; 2], w: u32, wb: u32, c: f64) {
        let half = Complex64::new(c / 2.0, 0.0);
        s.add_term(MultiIndex::from_parts(&k, &y, &z, &[w], &[wb]), half);
        s.add_term(MultiIndex::from_parts(&[-k[0], -k[1]], &y, &z, &[wb], &[w]), half);
    }

    /// A real perturbation touching every block.
    pub fn perturbation() -> TFSeries {
        let mut p = TFSeries::zero(dims());
        cos_term(&mut p, [1, 0], [0, 0], [0, 0], 0, 0, 1.0);
        cos_term(&mut p, [0, 1], [1, 0], [0, 0], 0, 0, 0.5);
        cos_term(&mut p, [1, -1], [0, 0], [1, 1], 0, 0, 0.3);
        cos_term(&mut p, [0, 1], [0, 0], [1, 0], 0, 0, 0.4);
        cos_term(&mut p, [0, 0], [0, 0], [1, 0], 1, 0, 0.2);
        cos_term(&mut p, [1, 0], [0, 0], [0, 0], 1, 0, 0.2);
        cos_term(&mut p, [0, 0], [1, 0], [0, 0], 0, 0, 0.6);
        cos_term(&mut p, [0, 0], [0, 0], [2, 0], 0, 0, 0.25);
        cos_term(&mut p, [0, 0], [0, 0], [0, 2], 0, 0, 0.25);
        p
    }

    pub fn config(policy: HypothesisPolicy) -> EngineConfig {
        let consts = structural_constants(2.0, 2, 1, 1.0, 2.0, 0.5).unwrap();
        EngineConfig {
            consts,
            dio: DiophantineParams { gamma: 1.0, tau: 1.0, d: 2.0, delta: 0.5 },
            norm: WeightedNorm { a_wt: 0.0, p: 1.0, p_bar: 1.0, r: 0.5, s: 1.0, a_exp: consts.a as f64 },
            sites: ModeSites { z: vec![3], w: vec![4] },
            s0: 1.0,
            rho0: 0.05,
            sigma0: 0.1,
            lip0: 1.0,
            k_floor: 5,
            k_ceiling: 5,
            policy,
            c_delta: 1.0,
            lie_rel_tol: 1e-16,
            lie_max_terms: 12,
            lie_coef_floor: 1e-22,
            outer_k_factor: 2,
            outer_grade_factor: 2,
            outer_modes: 4,
            equilibrium: EquilibriumOptions::default(),
        }
    }
}

fn binomial(n: i64, k: i64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `p(z + h)` by binomial expansion of every `z` power.
pub fn naive_shift_z(l: &Layout, p: &Naive, h: &[f64]) -> Naive {
    let mut out: Naive = Vec::new();
    for (e, c) in p {
        let mut partial: Naive = vec![(e.clone(), *c)];
        for (comp, &hc) in h.iter().enumerate() {
            let slot = l.z(comp);
            let mut next = Vec::new();
            for (f, d) in &partial {
                for keep in 0..=f[slot] {
                    let mut g = f.clone();
                    g[slot] = keep;
                    next.push((g, d * binomial(f[slot], keep) * hc.powi((f[slot] - keep) as i32)));
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    merge(out)
}
