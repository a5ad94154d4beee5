use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::series::{Dims, MultiIndex, TFSeries};

/// `N = energy + <tangent_freq, y> + <w, normal_freq wbar> + degenerate(z) + coupling`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub dims: Dims,
    pub energy: f64,
    pub tangent_freq: Vec<f64>,
    pub normal_freq: Vec<f64>,
    /// Pure-z part, no constant or linear terms.
    pub degenerate: TFSeries,
    /// Averaged mixed terms, restricted to [`is_coupling_class`].
    pub coupling: TFSeries,
}

/// Monomial classes allowed in the coupling part: `x`-independent,
/// balanced in `w`, and not already carried by the energy, the frequencies
/// or the degenerate part.
pub fn is_coupling_class(idx: &MultiIndex, m: u32) -> bool {
    if !idx.k_is_zero() || !idx.w_balanced() || idx.grade() > m {
        return false;
    }
    match idx.w_deg() {
        0 => idx.y_deg() >= 1 && !(idx.y_deg() == 1 && idx.z_deg() == 0),
        2 => idx.y_deg() + idx.z_deg() >= 1,
        _ => false,
    }
}

impl NormalForm {
    pub fn new(
        dims: Dims,
        energy: f64,
        tangent_freq: Vec<f64>,
        normal_freq: Vec<f64>,
        degenerate: TFSeries,
        coupling: TFSeries,
        m: u32,
    ) -> Result<Self> {
        let nf = NormalForm {
            dims,
            energy,
            tangent_freq,
            normal_freq,
            degenerate,
            coupling,
        };
        nf.check_shape(m)?;
        Ok(nf)
    }

    pub fn check_shape(&self, m: u32) -> Result<()> {
        let d = self.dims;
        if self.tangent_freq.len() != d.n || self.normal_freq.len() != d.nw {
            return Err(KamError::Dimension("frequency vector lengths".into()));
        }
        d.check(&self.degenerate.dims)?;
        d.check(&self.coupling.dims)?;
        for (idx, _) in self.degenerate.iter() {
            if !idx.is_pure_z() || idx.z_deg() < 2 {
                return Err(KamError::Structural(format!(
                    "degenerate part holds non-admissible term {idx:?}"
                )));
            }
        }
        for (idx, _) in self.coupling.iter() {
            if !is_coupling_class(idx, m) {
                return Err(KamError::Structural(format!(
                    "coupling part holds non-admissible term {idx:?}"
                )));
            }
        }
        Ok(())
    }

    /// The whole normal form as one series.
    pub fn to_series(&self) -> TFSeries {
        let d = self.dims;
        let mut s = self.degenerate.clone();
        for (idx, c) in self.coupling.iter() {
            s.add_term(*idx, *c);
        }
        s.add_term(MultiIndex::zero(), Complex64::new(self.energy, 0.0));
        for (i, &w) in self.tangent_freq.iter().enumerate() {
            let mut idx = MultiIndex::zero();
            idx.y[i] = 1;
            s.add_term(idx, Complex64::new(w, 0.0));
        }
        for (j, &w) in self.normal_freq.iter().enumerate() {
            let mut idx = MultiIndex::zero();
            idx.w[j] = 1;
            idx.wb[j] = 1;
            s.add_term(idx, Complex64::new(w, 0.0));
        }
        debug_assert_eq!(s.dims, d);
        s
    }

    /// The part that depends on `z`: degenerate plus coupling.
    pub fn z_dependent(&self) -> TFSeries {
        let mut s = self.degenerate.clone();
        for (idx, c) in self.coupling.iter() {
            s.add_term(*idx, *c);
        }
        s
    }
}

/// Serializable snapshot of the scalar parts of a normal form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormSummary {
    pub energy: f64,
    pub tangent_freq: Vec<f64>,
    pub normal_freq: Vec<f64>,
    pub degenerate_terms: usize,
    pub coupling_terms: usize,
}

impl From<&NormalForm> for NormalFormSummary {
    fn from(n: &NormalForm) -> Self {
        NormalFormSummary {
            energy: n.energy,
            tangent_freq: n.tangent_freq.clone(),
            normal_freq: n.normal_freq.clone(),
            degenerate_terms: n.degenerate.len(),
            coupling_terms: n.coupling.len(),
        }
    }
}
