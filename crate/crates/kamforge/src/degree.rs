//! Brouwer degree on boxes, equilibrium continuation, and the weak
//! convexity falsifier, all over real coordinates.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};

/// A map `R^N -> R^N` with a Jacobian (central differences unless overridden).
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut j = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        for c in 0..n {
            let h = 1e-6 * x[c].abs().max(1e-3);
            xp[c] = x[c] + h;
            let fp = self.eval(&xp);
            xp[c] = x[c] - h;
            let fm = self.eval(&xp);
            xp[c] = x[c];
            for r in 0..n {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }
}

/// Closure-backed field with a finite-difference Jacobian.
pub struct FnField<F: Fn(&[f64]) -> Vec<f64> + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn symmetric(half: f64, dim: usize) -> Self {
        BoxRegion {
            lo: vec![-half; dim],
            hi: vec![half; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| v >= l && v <= h)
    }
}

pub struct DegreeProblem<'a> {
    pub map: &'a dyn VectorField,
    pub region: BoxRegion,
    pub target: Vec<f64>,
    pub boundary_margin: f64,
}

pub const MAX_DEGREE_DIM: usize = 4;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Degree at one boundary resolution (cells per facet side).
pub fn degree_at(prob: &DegreeProblem, resolution: usize) -> Result<i32> {
    let n = prob.region.dim();
    if n == 0 || n > MAX_DEGREE_DIM {
        return Err(KamError::UnsupportedDimension(n));
    }
    if prob.map.dim() != n || prob.target.len() != n {
        return Err(KamError::Dimension("degree problem dimensions".into()));
    }
    let res = resolution.max(1);
    let shifted = |x: &[f64]| -> Vec<f64> {
        prob.map.eval(x).iter().zip(&prob.target).map(|(a, b)| a - b).collect()
    };
    if n == 1 {
        let a = shifted(&prob.region.lo);
        let b = shifted(&prob.region.hi);
        let found = a[0].abs().min(b[0].abs());
        if found < prob.boundary_margin {
            return Err(KamError::IllPosedBoundary {
                found,
                required: prob.boundary_margin,
            });
        }
        return Ok(((b[0].signum() - a[0].signum()) / 2.0) as i32);
    }
    let simplices = boundary_simplices(&prob.region, res);
    let mut cache: std::collections::HashMap<Vec<i64>, Vec<f64>> = std::collections::HashMap::new();
    let mut found = f64::INFINITY;
    let mut images: Vec<(f64, Vec<Vec<f64>>)> = Vec::with_capacity(simplices.len());
    for (orient, verts) in &simplices {
        let mut imgs = Vec::with_capacity(n);
        for v in verts {
            let key: Vec<i64> = v.iter().map(|x| (x * 1e12).round() as i64).collect();
            let img = cache.entry(key).or_insert_with(|| shifted(v)).clone();
            found = found.min(norm(&img));
            imgs.push(img);
        }
        images.push((*orient, imgs));
    }
    if found < prob.boundary_margin {
        return Err(KamError::IllPosedBoundary {
            found,
            required: prob.boundary_margin,
        });
    }
    'dirs: for attempt in 0..16 {
        let dir = probe_direction(n, attempt);
        let mut total = 0i32;
        for (orient, imgs) in &images {
            let a = DMatrix::from_fn(n, n, |r, c| imgs[c][r]);
            let det = a.determinant();
            if det == 0.0 {
                continue;
            }
            let Some(mu) = a.clone().lu().solve(&DVector::from_vec(dir.clone())) else {
                continue;
            };
            let scale = mu.amax();
            if mu.iter().any(|m| m.abs() <= 1e-10 * scale) {
                continue 'dirs;
            }
            if mu.iter().all(|&m| m > 0.0) {
                total += (orient.signum() * det.signum()) as i32;
            }
        }
        return Ok(total);
    }
    Err(KamError::IllPosedBoundary {
        found,
        required: prob.boundary_margin,
    })
}

/// Degree refined until two successive resolutions agree.
pub fn brouwer_degree(prob: &DegreeProblem, resolution: usize) -> Result<i32> {
    let mut res = resolution.max(1);
    let mut last = degree_at(prob, res)?;
    for _ in 0..5 {
        res *= 2;
        let next = degree_at(prob, res)?;
        if next == last {
            return Ok(next);
        }
        last = next;
    }
    Err(KamError::IllPosedBoundary {
        found: 0.0,
        required: prob.boundary_margin,
    })
}

fn probe_direction(n: usize, attempt: usize) -> Vec<f64> {
    let primes = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    let v: Vec<f64> = (0..n)
        .map(|i| {
            let p = primes[(i + attempt) % primes.len()];
            (p.sqrt() * (1.0 + attempt as f64 * 0.37)).sin() + 0.1 * (i as f64 + 1.0)
        })
        .collect();
    let nv = norm(&v);
    v.into_iter().map(|x| x / nv).collect()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Kuhn triangulation of every facet, each simplex with its orientation
/// sign relative to the outward normal.
fn boundary_simplices(region: &BoxRegion, res: usize) -> Vec<(f64, Vec<Vec<f64>>)> {
    let n = region.dim();
    let perms = permutations(n - 1);
    let mut out = Vec::new();
    for axis in 0..n {
        for side in [0usize, 1] {
            let free: Vec<usize> = (0..n).filter(|&a| a != axis).collect();
            let fixed = if side == 0 { region.lo[axis] } else { region.hi[axis] };
            let normal_sign = if side == 0 { -1.0 } else { 1.0 };
            let cells = res.pow((n - 1) as u32);
            for cell in 0..cells {
                let mut corner = vec![0usize; n - 1];
                let mut c = cell;
                for slot in corner.iter_mut() {
                    *slot = c % res;
                    c /= res;
                }
                for perm in &perms {
                    let mut steps = corner.clone();
                    let mut verts = Vec::with_capacity(n);
                    let point = |steps: &[usize]| -> Vec<f64> {
                        let mut p = vec![0.0; n];
                        p[axis] = fixed;
                        for (i, &a) in free.iter().enumerate() {
                            let t = steps[i] as f64 / res as f64;
                            p[a] = region.lo[a] + t * (region.hi[a] - region.lo[a]);
                        }
                        p
                    };
                    verts.push(point(&steps));
                    for &dir in perm {
                        steps[dir] += 1;
                        verts.push(point(&steps));
                    }
                    let m = DMatrix::from_fn(n, n, |r, col| {
                        if col == 0 {
                            if r == axis {
                                normal_sign
                            } else {
                                0.0
                            }
                        } else {
                            verts[col][r] - verts[0][r]
                        }
                    });
                    out.push((m.determinant().signum(), verts));
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    pub homotopy_steps: usize,
    pub grid_per_axis: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Per-component weights of the ball norm; empty means unit weights.
    pub weights: Vec<f64>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            homotopy_steps: 20,
            grid_per_axis: 7,
            tol: 1e-10,
            max_iter: 400,
            weights: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub point: Vec<f64>,
    pub offset: Vec<f64>,
    pub offset_norm: f64,
    pub residual: f64,
    pub roots_found: usize,
}

struct Homotopy<'a> {
    grad: &'a dyn VectorField,
    pert: &'a dyn VectorField,
    base: Vec<f64>,
    t: f64,
}

impl Homotopy<'_> {
    fn eval(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grad.eval(u);
        let p = self.pert.eval(u);
        (0..g.len()).map(|i| g[i] - self.base[i] + self.t * p[i]).collect()
    }
    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        self.grad.jacobian(u) + self.pert.jacobian(u) * self.t
    }
}

/// Levenberg-Marquardt iteration run until the residual stops improving.
fn solve_lm(h: &Homotopy, start: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut x = start.to_vec();
    let mut fx = h.eval(&x);
    let mut res = norm(&fx);
    let mut lambda = 1e-6;
    let mut stall = 0;
    for _ in 0..max_iter {
        if res == 0.0 {
            break;
        }
        let j = h.jacobian(&x);
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_vec(fx.clone());
        let scale = (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * scale;
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = (0..n).map(|i| x[i] + step[i]).collect();
            let ft = h.eval(&trial);
            let rt = norm(&ft);
            if rt < res {
                stall = if rt > 0.5 * res { stall + 1 } else { 0 };
                x = trial;
                fx = ft;
                res = rt;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted || stall > 60 {
            break;
        }
    }
    (x, res)
}

fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    if w.is_empty() {
        norm(v)
    } else {
        v.iter().zip(w).map(|(a, b)| (a * b) * (a * b)).sum::<f64>().sqrt()
    }
}

/// Root of `grad(u) - grad(0) + pert(u)` with `|u| <= radius`, returned as
/// `center + u`. Homotopy in the perturbation strength, then grid-seeded
/// restarts; the root of smallest offset wins.
pub fn find_equilibrium(
    grad: &dyn VectorField,
    pert: &dyn VectorField,
    center: &[f64],
    radius: f64,
    opts: &EquilibriumOptions,
) -> Result<Equilibrium> {
    let n = grad.dim();
    if pert.dim() != n || center.len() != n {
        return Err(KamError::Dimension("equilibrium problem dimensions".into()));
    }
    let zero = vec![0.0; n];
    let base = grad.eval(&zero);
    let mut h = Homotopy {
        grad,
        pert,
        base,
        t: 0.0,
    };
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut u = zero.clone();
    for step in 1..=opts.homotopy_steps.max(1) {
        h.t = step as f64 / opts.homotopy_steps.max(1) as f64;
        u = solve_lm(&h, &u, opts.max_iter).0;
    }
    h.t = 1.0;
    let (u, r) = solve_lm(&h, &u, opts.max_iter);
    candidates.push((u, r));
    let g = opts.grid_per_axis.max(1);
    let total = g.pow(n as u32);
    for idx in 0..total {
        let mut c = idx;
        let mut seed = vec![0.0; n];
        for s in seed.iter_mut() {
            let t = if g == 1 { 0.5 } else { (c % g) as f64 / (g - 1) as f64 };
            *s = radius * (2.0 * t - 1.0);
            c /= g;
        }
        if norm(&seed) > radius {
            continue;
        }
        candidates.push(solve_lm(&h, &seed, opts.max_iter));
    }
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut roots = 0;
    for (u, r) in candidates {
        let un = weighted_norm(&u, &opts.weights);
        let verified = norm(&h.eval(&u));
        if verified > opts.tol || r > opts.tol || un > radius * (1.0 + 1e-12) {
            continue;
        }
        roots += 1;
        let better = match &best {
            None => true,
            Some((bu, bn, _)) => {
                if (un - bn).abs() <= 1e-12 * radius.max(1e-300) {
                    u.partial_cmp(bu) == Some(std::cmp::Ordering::Less)
                } else {
                    un < *bn
                }
            }
        };
        if better {
            best = Some((u, un, verified));
        }
    }
    match best {
        Some((u, un, res)) => Ok(Equilibrium {
            point: u.iter().zip(center).map(|(a, b)| a + b).collect(),
            offset: u,
            offset_norm: un,
            residual: res,
            roots_found: roots,
        }),
        None => Err(KamError::EquilibriumNotFound {
            radius,
            residual: norm(&h.eval(&zero)),
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityOptions {
    pub l_exp: f64,
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
    /// Pairs closer than this are skipped (restricted-domain form); 0 tests all pairs.
    pub exclusion: f64,
    /// Component weights for the source norm; empty means unit weights.
    pub weight_p: Vec<f64>,
    /// Component weights for the target norm; empty means unit weights.
    pub weight_pbar: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub pass: bool,
    pub min_ratio: f64,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub pairs_tested: usize,
}

/// Sampled falsifier for `|grad(z) - grad(z*)| >= sigma |z - z*|^L`.
/// Draws uniform, boundary-anchored, coordinate-line and near-diagonal pairs.
pub fn weak_convexity_check(grad: &dyn VectorField, region: &BoxRegion, opts: &ConvexityOptions) -> ConvexityReport {
    let n = region.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let uniform = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|i| rng.gen_range(region.lo[i]..=region.hi[i])).collect()
    };
    let mut min_ratio = f64::INFINITY;
    let mut witness = None;
    let mut tested = 0;
    let diam = norm(&region.hi.iter().zip(&region.lo).map(|(h, l)| h - l).collect::<Vec<_>>());
    let mut attempts = 0;
    while tested < opts.samples && attempts < 20 * opts.samples.max(1) {
        attempts += 1;
        let z = uniform(&mut rng);
        let zs = match tested % 4 {
            0 => uniform(&mut rng),
            1 => {
                let mut p = uniform(&mut rng);
                let axis = rng.gen_range(0..n);
                p[axis] = if rng.gen_bool(0.5) { region.lo[axis] } else { region.hi[axis] };
                p
            }
            2 => {
                let mut p = z.clone();
                let axis = rng.gen_range(0..n);
                p[axis] = rng.gen_range(region.lo[axis]..=region.hi[axis]);
                p
            }
            _ => {
                let scale = diam * 10f64.powf(rng.gen_range(-4.0..-0.5));
                let p: Vec<f64> = z.iter().map(|v| v + scale * rng.gen_range(-1.0..1.0)).collect();
                if !region.contains(&p) {
                    continue;
                }
                p
            }
        };
        let dz: Vec<f64> = z.iter().zip(&zs).map(|(a, b)| a - b).collect();
        let dist = weighted_norm(&dz, &opts.weight_p);
        if dist == 0.0 || dist < opts.exclusion {
            continue;
        }
        tested += 1;
        let ga = grad.eval(&z);
        let gb = grad.eval(&zs);
        let dg: Vec<f64> = ga.iter().zip(&gb).map(|(a, b)| a - b).collect();
        let ratio = weighted_norm(&dg, &opts.weight_pbar) / dist.powf(opts.l_exp);
        if ratio < min_ratio {
            min_ratio = ratio;
            witness = Some((z, zs));
        }
    }
    let pass = min_ratio >= opts.sigma;
    ConvexityReport {
        pass,
        min_ratio,
        witness: if pass { None } else { witness },
        pairs_tested: tested,
    }
}
