use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::series::{Dims, MultiIndex, TFSeries};

/// Real-form state of a reduced system: real angles, actions and degenerate
/// coordinates, complex normal modes (`wbar = conj(w)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<Complex64>,
}

impl ReducedState {
    pub fn origin(d: &Dims) -> Self {
        ReducedState {
            x: vec![0.0; d.n],
            y: vec![0.0; d.n],
            z: vec![0.0; d.nz()],
            w: vec![Complex64::new(0.0, 0.0); d.nw],
        }
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).chain(&self.z).all(|v| v.is_finite())
            && self.w.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn axpy(&self, h: f64, v: &ReducedState) -> ReducedState {
        let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p + h * q).collect();
        ReducedState {
            x: f(&self.x, &v.x),
            y: f(&self.y, &v.y),
            z: f(&self.z, &v.z),
            w: self.w.iter().zip(&v.w).map(|(p, q)| p + q * h).collect(),
        }
    }

    fn max_diff(&self, o: &ReducedState) -> f64 {
        let f = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        f(&self.x, &o.x)
            .max(f(&self.y, &o.y))
            .max(f(&self.z, &o.z))
            .max(self.w.iter().zip(&o.w).fold(0.0f64, |m, (p, q)| m.max((p - q).norm())))
    }
}

const UNDERFLOW_FLOOR: f64 = 1e-200;

struct CompiledTerm {
    coef: Complex64,
    /// Ranges into the shared angle and exponent tables.
    k_end: u32,
    e_end: u32,
}

/// Gradient evaluator for one series, using power tables and
/// prefix/suffix products so every partial costs one pass per term.
struct Gradient {
    dims: Dims,
    terms: Vec<CompiledTerm>,
    /// Nonzero `(angle, Fourier number)` pairs of all terms, back to back.
    angles: Vec<(u32, i32)>,
    /// Nonzero `(variable, exponent)` pairs, variables laid out as `y`, `z`, `w`, `wbar`.
    exponents: Vec<(u32, u32)>,
    max_exp: Vec<u32>,
    max_k: Vec<i32>,
}

struct GradientValue {
    dx: Vec<Complex64>,
    /// Partials in the `y`, `z`, `w`, `wbar` layout.
    dpoly: Vec<Complex64>,
}

impl Gradient {
    fn new(h: &TFSeries) -> Self {
        let d = h.dims;
        let nv = d.n + d.nz() + 2 * d.nw;
        let mut g = Gradient {
            dims: d,
            terms: Vec::with_capacity(h.len()),
            angles: Vec::new(),
            exponents: Vec::new(),
            max_exp: vec![0; nv],
            max_k: vec![0; d.n],
        };
        for (idx, c) in h.iter() {
            let poly = idx.y[..d.n].iter().chain(&idx.z[..d.nz()]).chain(&idx.w[..d.nw]).chain(&idx.wb[..d.nw]);
            for (v, &e) in poly.enumerate().filter(|(_, &e)| e > 0) {
                g.exponents.push((v as u32, e as u32));
                g.max_exp[v] = g.max_exp[v].max(e as u32);
            }
            for (i, &k) in idx.k[..d.n].iter().enumerate().filter(|(_, &k)| k != 0) {
                g.angles.push((i as u32, k as i32));
                g.max_k[i] = g.max_k[i].max((k as i32).abs());
            }
            g.terms.push(CompiledTerm {
                coef: *c,
                k_end: g.angles.len() as u32,
                e_end: g.exponents.len() as u32,
            });
        }
        g
    }

    fn eval(&self, s: &ReducedState) -> GradientValue {
        let d = self.dims;
        let vars: Vec<Complex64> = s
            .y
            .iter()
            .chain(&s.z)
            .map(|&v| Complex64::new(v, 0.0))
            .chain(s.w.iter().copied())
            .chain(s.w.iter().map(|v| v.conj()))
            .collect();
        let powers: Vec<Vec<Complex64>> = vars
            .iter()
            .zip(&self.max_exp)
            .map(|(&v, &m)| {
                let mut t = vec![Complex64::new(1.0, 0.0); m as usize + 1];
                for e in 1..=m as usize {
                    t[e] = t[e - 1] * v;
                    // keeps products out of the subnormal range, where arithmetic is slow
                    if t[e].norm_sqr() < UNDERFLOW_FLOOR {
                        t[e] = Complex64::new(0.0, 0.0);
                    }
                }
                t
            })
            .collect();
        let phases: Vec<Vec<Complex64>> = s
            .x
            .iter()
            .zip(&self.max_k)
            .map(|(&x, &m)| (-m..=m).map(|k| Complex64::from_polar(1.0, k as f64 * x)).collect())
            .collect();
        let mut out = GradientValue {
            dx: vec![Complex64::new(0.0, 0.0); d.n],
            dpoly: vec![Complex64::new(0.0, 0.0); vars.len()],
        };
        let mut prefix = Vec::new();
        let (mut k_start, mut e_start) = (0usize, 0usize);
        for t in &self.terms {
            let angles = &self.angles[k_start..t.k_end as usize];
            let exps = &self.exponents[e_start..t.e_end as usize];
            k_start = t.k_end as usize;
            e_start = t.e_end as usize;
            let mut phase = t.coef;
            for &(i, k) in angles {
                phase *= phases[i as usize][(k + self.max_k[i as usize]) as usize];
            }
            prefix.clear();
            prefix.push(phase);
            for (slot, &(v, e)) in exps.iter().enumerate() {
                prefix.push(prefix[slot] * powers[v as usize][e as usize]);
            }
            let value = prefix[exps.len()];
            for &(i, k) in angles {
                out.dx[i as usize] += value * Complex64::new(0.0, k as f64);
            }
            let mut suffix = Complex64::new(1.0, 0.0);
            for (slot, &(v, e)) in exps.iter().enumerate().rev() {
                let (v, e) = (v as usize, e as usize);
                out.dpoly[v] += prefix[slot] * suffix * powers[v][e - 1] * e as f64;
                suffix *= powers[v][e];
            }
        }
        out
    }
}

/// Integrator for a reduced Hamiltonian `<omega, y> + <w, Omega wbar> + R`:
/// the linear part is flowed exactly and `R` by the implicit midpoint rule,
/// composed symmetrically.
pub struct ReducedFlow {
    dims: Dims,
    pub omega: Vec<f64>,
    pub normal_freq: Vec<f64>,
    rest: Gradient,
}

/// Sampled reduced trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReducedTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<ReducedState>,
}

const MIDPOINT_TOL: f64 = 4.0 * f64::EPSILON;
const MIDPOINT_MAX_ITER: usize = 60;

impl ReducedFlow {
    pub fn new(h: &TFSeries) -> Self {
        let d = h.dims;
        let mut rest = h.clone();
        let mut omega = vec![0.0; d.n];
        for (i, o) in omega.iter_mut().enumerate() {
            let mut idx = MultiIndex::zero();
            idx.y[i] = 1;
            *o = h.get(&idx).re;
            rest.add_term(idx, -h.get(&idx));
        }
        let mut normal_freq = vec![0.0; d.nw];
        for (j, o) in normal_freq.iter_mut().enumerate() {
            let mut idx = MultiIndex::zero();
            idx.w[j] = 1;
            idx.wb[j] = 1;
            *o = h.get(&idx).re;
            rest.add_term(idx, -h.get(&idx));
        }
        ReducedFlow {
            dims: d,
            omega,
            normal_freq,
            rest: Gradient::new(&rest),
        }
    }

    fn rest_field(&self, s: &ReducedState) -> ReducedState {
        let d = self.dims;
        let g = self.rest.eval(s);
        let (n, b, nw) = (d.n, d.b, d.nw);
        let z0 = n;
        let w0 = n + 2 * b;
        let wb0 = w0 + nw;
        ReducedState {
            x: (0..n).map(|i| g.dpoly[i].re).collect(),
            y: (0..n).map(|i| -g.dx[i].re).collect(),
            z: (0..2 * b)
                .map(|c| if c < b { g.dpoly[z0 + c + b].re } else { -g.dpoly[z0 + c - b].re })
                .collect(),
            w: (0..nw).map(|j| Complex64::new(0.0, 1.0) * g.dpoly[wb0 + j]).collect(),
        }
    }

    fn linear(&self, s: &mut ReducedState, t: f64) {
        for (x, o) in s.x.iter_mut().zip(&self.omega) {
            *x += o * t;
        }
        for (w, o) in s.w.iter_mut().zip(&self.normal_freq) {
            *w *= Complex64::from_polar(1.0, o * t);
        }
    }

    /// Fixed-point iteration on the field value at the midpoint, stopped
    /// once it settles to rounding level or stops improving.
    fn midpoint_step(&self, s: &ReducedState, h: f64) -> ReducedState {
        let mut field = self.rest_field(s);
        let mut last_change = f64::INFINITY;
        for _ in 0..MIDPOINT_MAX_ITER {
            let next = self.rest_field(&s.axpy(h / 2.0, &field));
            let change = next.max_diff(&field);
            let scale = next.max_diff(&ReducedState::origin(&self.dims));
            field = next;
            if change <= MIDPOINT_TOL * scale || change >= last_change {
                break;
            }
            last_change = change;
        }
        s.axpy(h, &field)
    }

    pub fn step(&self, s: &ReducedState, dt: f64) -> ReducedState {
        let mut u = s.clone();
        self.linear(&mut u, dt / 2.0);
        let mut u = self.midpoint_step(&u, dt);
        self.linear(&mut u, dt / 2.0);
        u
    }

    /// Integrates to `t_end`, calling `visit` after every step.
    pub fn drive<V: FnMut(f64, &ReducedState)>(
        &self,
        start: &ReducedState,
        t_end: f64,
        dt: f64,
        mut visit: V,
    ) -> Result<ReducedState> {
        if !(dt > 0.0) || t_end < dt {
            return Err(KamError::InvalidParameter(format!("need dt > 0 and T >= dt (dt={dt}, T={t_end})")));
        }
        let steps = (t_end / dt).round() as usize;
        let mut s = start.clone();
        visit(0.0, &s);
        for k in 1..=steps {
            s = self.step(&s, dt);
            let t = k as f64 * dt;
            if !s.is_finite() {
                return Err(KamError::BlowUp(t));
            }
            visit(t, &s);
        }
        Ok(s)
    }

    pub fn integrate(&self, start: &ReducedState, t_end: f64, dt: f64, every: usize) -> Result<ReducedTrajectory> {
        let every = every.max(1);
        let mut traj = ReducedTrajectory {
            t: Vec::new(),
            states: Vec::new(),
        };
        let mut count = 0usize;
        let last = self.drive(start, t_end, dt, |t, s| {
            if count.is_multiple_of(every) {
                traj.t.push(t);
                traj.states.push(s.clone());
            }
            count += 1;
        })?;
        if traj.t.last().is_some_and(|&t| t < t_end - dt / 2.0) {
            traj.t.push(t_end);
            traj.states.push(last);
        }
        Ok(traj)
    }
}

/// Drift and frequency measurements along the invariant torus of a reduced system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusDiagnostic {
    pub t_end: f64,
    pub dt: f64,
    pub sup_y: f64,
    pub sup_z: f64,
    pub sup_w: f64,
    /// Perturbation norm the drift is compared against.
    pub norm_scale: f64,
    /// Whether every drift stays within twice `norm_scale`.
    pub drift_ok: bool,
    pub omega_fit: Vec<f64>,
    pub omega_ref: Vec<f64>,
    /// Largest relative gap between fitted and reference frequencies.
    pub frequency_rel_error: f64,
}

/// Horizon of one hundred periods of the slowest angle.
pub fn default_horizon(omega: &[f64]) -> f64 {
    let slowest = omega.iter().fold(f64::INFINITY, |m, &w| m.min(w.abs()));
    100.0 * std::f64::consts::TAU / slowest
}

/// Integrates `h` from the torus `y = z = w = 0` and fits the angle
/// velocities by least squares.
pub fn torus_diagnostic(h: &TFSeries, omega_ref: &[f64], norm_scale: f64, t_end: f64, dt: f64) -> Result<TorusDiagnostic> {
    let d = h.dims;
    if omega_ref.len() != d.n {
        return Err(KamError::Dimension("reference frequency length".into()));
    }
    let flow = ReducedFlow::new(h);
    let (mut sup_y, mut sup_z, mut sup_w) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0.0;
    let mut sum_t = 0.0;
    let mut sum_tt = 0.0;
    let mut sum_x = vec![0.0; d.n];
    let mut sum_tx = vec![0.0; d.n];
    flow.drive(&ReducedState::origin(&d), t_end, dt, |t, s| {
        sup_y = s.y.iter().fold(sup_y, |m, v| m.max(v.abs()));
        sup_z = sup_z.max(s.z.iter().map(|v| v * v).sum::<f64>().sqrt());
        sup_w = sup_w.max(s.w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
        count += 1.0;
        sum_t += t;
        sum_tt += t * t;
        for i in 0..s.x.len() {
            sum_x[i] += s.x[i];
            sum_tx[i] += t * s.x[i];
        }
    })?;
    let var_t = sum_tt - sum_t * sum_t / count;
    let omega_fit: Vec<f64> = (0..d.n).map(|i| (sum_tx[i] - sum_t * sum_x[i] / count) / var_t).collect();
    let frequency_rel_error = omega_fit
        .iter()
        .zip(omega_ref)
        .fold(0.0f64, |m, (f, r)| m.max((f - r).abs() / r.abs().max(f64::MIN_POSITIVE)));
    let bound = 2.0 * norm_scale;
    Ok(TorusDiagnostic {
        t_end,
        dt,
        sup_y,
        sup_z,
        sup_w,
        norm_scale,
        drift_ok: sup_y <= bound && sup_z <= bound && sup_w <= bound,
        omega_fit,
        omega_ref: omega_ref.to_vec(),
        frequency_rel_error,
    })
}
