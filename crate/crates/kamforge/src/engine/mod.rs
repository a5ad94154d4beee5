//! The iteration: step schedule, hypothesis checks, Lie transform,
//! re-centring of the degenerate equilibrium, and the run loop.

mod constants;
mod hypotheses;
mod lie;
mod run;
mod schedule;
mod step;
mod translate;

pub use constants::{structural_constants, StructuralConstants};
pub use hypotheses::{check_hypotheses, HypothesisCheck, HypothesisReport};
pub use lie::{lie_transform, LieOptions, LieResult};
pub use run::{init_step0, run, Failure, FrequencyCheck, InitReport, RunOutput, RunReport, Termination, CONVERGED_NORM};
pub use schedule::{closed_form, fourier_cutoff, initial_params, schedule_next, ScheduleBase, StepParams};
pub use step::{
    kam_step, ln_smallness_bound, resonance_membership, EngineConfig, HypothesisPolicy, KamState, Membership,
    ResonantPair, StepRecord,
};
pub use translate::{route, translate, PolyGradient, Routed, Translated};
