use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::degree::VectorField;
use crate::error::{KamError, Result};
use crate::normal_form::{is_coupling_class, NormalForm};
use crate::series::{Dims, MultiIndex, TFSeries};

/// Gradient of the real part of an `x`-independent pure-`z` polynomial,
/// with an exact Jacobian.
pub struct PolyGradient {
    nz: usize,
    /// `(exponents, coefficient)` of the polynomial.
    terms: Vec<(Vec<u32>, f64)>,
}

impl PolyGradient {
    /// Keeps the `k = 0`, pure-`z` terms of `s`.
    pub fn new(s: &TFSeries) -> Self {
        let nz = s.dims.nz();
        let terms = s
            .iter()
            .filter(|(i, _)| i.k_is_zero() && i.is_pure_z() && i.z_deg() > 0)
            .map(|(i, c)| ((0..nz).map(|j| i.z[j] as u32).collect(), c.re))
            .collect();
        PolyGradient { nz, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, c)| *c == 0.0)
    }

    fn partial(&self, x: &[f64], first: usize, second: Option<usize>) -> f64 {
        let mut total = 0.0;
        for (e, c) in &self.terms {
            let mut e = e.clone();
            let mut v = *c;
            for d in std::iter::once(first).chain(second) {
                if e[d] == 0 {
                    v = 0.0;
                    break;
                }
                v *= e[d] as f64;
                e[d] -= 1;
            }
            if v == 0.0 {
                continue;
            }
            for (xi, &p) in x.iter().zip(&e) {
                v *= xi.powi(p as i32);
            }
            total += v;
        }
        total
    }
}

impl VectorField for PolyGradient {
    fn dim(&self) -> usize {
        self.nz
    }

    fn eval(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nz).map(|c| self.partial(x, c, None)).collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.nz, self.nz, |r, c| self.partial(x, r, Some(c)))
    }
}

/// Split of a shifted Hamiltonian into normal-form pieces and leftovers.
#[derive(Clone, Debug)]
pub struct Routed {
    pub normal: NormalForm,
    /// Terms outside every normal-form class, plus imaginary parts of the scalar pieces.
    pub leftover: TFSeries,
    /// Real linear `z` coefficients among the leftovers: the gradient of the degenerate part at the origin.
    pub linear_z: Vec<f64>,
    /// Largest imaginary part removed from a real normal-form slot.
    pub imag_leak: f64,
}

/// Routes every term of `s` by class: the constant to the energy, `y_i` to
/// the tangent frequencies, `w_j wbar_j` to the normal frequencies, pure
/// `z` of degree at least two to the degenerate part, admissible mixed
/// averages to the coupling part, and everything else to the leftovers.
pub fn route(s: &TFSeries, m: u32) -> Result<Routed> {
    let d: Dims = s.dims;
    let mut energy = 0.0;
    let mut tangent = vec![0.0; d.n];
    let mut normal = vec![0.0; d.nw];
    let mut degenerate = TFSeries::zero(d);
    let mut coupling = TFSeries::zero(d);
    let mut leftover = TFSeries::zero(d);
    let mut linear_z = vec![0.0; d.nz()];
    let mut imag_leak: f64 = 0.0;
    let mut real_slot = |idx: &MultiIndex, c: &Complex64, slot: &mut f64, leftover: &mut TFSeries| {
        *slot += c.re;
        if c.im != 0.0 {
            imag_leak = imag_leak.max(c.im.abs());
            leftover.add_term(*idx, Complex64::new(0.0, c.im));
        }
    };
    for (idx, c) in s.iter() {
        if !idx.k_is_zero() {
            leftover.add_term(*idx, *c);
            continue;
        }
        if *idx == MultiIndex::zero() {
            real_slot(idx, c, &mut energy, &mut leftover);
        } else if let Some(i) = single_y(idx, d.n) {
            real_slot(idx, c, &mut tangent[i], &mut leftover);
        } else if let Some(j) = single_mode(idx, d.nw) {
            real_slot(idx, c, &mut normal[j], &mut leftover);
        } else if idx.is_pure_z() && idx.z_deg() >= 2 {
            degenerate.add_term(*idx, *c);
        } else if is_coupling_class(idx, m) {
            coupling.add_term(*idx, *c);
        } else {
            if idx.is_pure_z() && idx.z_deg() == 1 {
                let comp = (0..d.nz()).find(|&j| idx.z[j] == 1).unwrap_or(0);
                linear_z[comp] += c.re;
            }
            leftover.add_term(*idx, *c);
        }
    }
    let normal = NormalForm::new(d, energy, tangent, normal, degenerate, coupling, m)?;
    Ok(Routed {
        normal,
        leftover,
        linear_z,
        imag_leak,
    })
}

fn single_y(idx: &MultiIndex, n: usize) -> Option<usize> {
    if idx.y_deg() != 1 || idx.z_deg() != 0 || idx.w_deg() != 0 {
        return None;
    }
    (0..n).find(|&i| idx.y[i] == 1)
}

fn single_mode(idx: &MultiIndex, nw: usize) -> Option<usize> {
    if idx.y_deg() != 0 || idx.z_deg() != 0 || idx.w_deg() != 2 {
        return None;
    }
    (0..nw).find(|&j| idx.w[j] == 1 && idx.wb[j] == 1)
}

/// Output of [`translate`].
#[derive(Clone, Debug)]
pub struct Translated {
    pub normal: NormalForm,
    pub perturbation: TFSeries,
    pub linear_z: Vec<f64>,
    pub imag_leak: f64,
}

/// Applies `z -> z + shift` to the averaged normal part and the remainder,
/// routes the shifted normal part into the next normal form and appends
/// its non-admissible terms to the new perturbation.
pub fn translate(normal_bar: &TFSeries, remainder: &TFSeries, shift: &[f64], m: u32) -> Result<Translated> {
    normal_bar.dims.check(&remainder.dims)?;
    if shift.len() != normal_bar.dims.nz() {
        return Err(KamError::Dimension("shift length vs z components".into()));
    }
    let routed = route(&normal_bar.shift_z(shift), m)?;
    let mut perturbation = remainder.shift_z(shift);
    perturbation.add_assign(&routed.leftover)?;
    Ok(Translated {
        normal: routed.normal,
        perturbation,
        linear_z: routed.linear_z,
        imag_leak: routed.imag_leak,
    })
}
