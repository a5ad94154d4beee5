//! Explicit normal-form problems stored as JSON. Series are embedded in
//! the line-oriented term format of `kamforge::series::to_text`.

use std::path::Path;

use kamforge::engine::EngineConfig;
use kamforge::normal_form::NormalForm;
use kamforge::series::{from_text, to_text, Dims, TFSeries};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub energy: f64,
    pub tangent_freq: Vec<f64>,
    pub normal_freq: Vec<f64>,
    /// Grade bound of the normal form.
    pub m: u32,
    pub degenerate: String,
    #[serde(default)]
    pub coupling: Option<String>,
    pub perturbation: String,
    /// Parameter vector reported with the run; defaults to the tangent frequencies.
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    pub engine: EngineConfig,
}

pub struct Problem {
    pub normal: NormalForm,
    pub perturbation: TFSeries,
    pub xi: Vec<f64>,
    pub engine: EngineConfig,
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn from_parts(normal: &NormalForm, perturbation: &TFSeries, m: u32, xi: &[f64], engine: &EngineConfig) -> Self {
        ProblemFile {
            energy: normal.energy,
            tangent_freq: normal.tangent_freq.clone(),
            normal_freq: normal.normal_freq.clone(),
            m,
            degenerate: to_text(&normal.degenerate),
            coupling: (!normal.coupling.is_empty()).then(|| to_text(&normal.coupling)),
            perturbation: to_text(perturbation),
            xi: Some(xi.to_vec()),
            engine: engine.clone(),
        }
    }

    pub fn build(&self) -> Result<Problem, String> {
        let degenerate = from_text(&self.degenerate).map_err(|e| format!("degenerate: {e}"))?;
        let dims: Dims = degenerate.dims;
        let coupling = match &self.coupling {
            Some(t) => from_text(t).map_err(|e| format!("coupling: {e}"))?,
            None => TFSeries::zero(dims),
        };
        let perturbation = from_text(&self.perturbation).map_err(|e| format!("perturbation: {e}"))?;
        let normal = NormalForm::new(
            dims,
            self.energy,
            self.tangent_freq.clone(),
            self.normal_freq.clone(),
            degenerate,
            coupling,
            self.m,
        )
        .map_err(|e| format!("normal form: {e}"))?;
        dims.check(&perturbation.dims).map_err(|e| format!("perturbation: {e}"))?;
        Ok(Problem {
            xi: self.xi.clone().unwrap_or_else(|| self.tangent_freq.clone()),
            normal,
            perturbation,
            engine: self.engine.clone(),
        })
    }
}
