//! Truncated Taylor-Fourier series in `(x, y, z, w, wbar)` with exact
//! coefficient bookkeeping and weighted majorant norms.

mod index;
mod norm;
mod text;
mod tf;

pub use index::{
    exponent_vectors, fourier_vectors, graded_yz, mode_pairs, ClassKey, Dims, GradingCaps,
    MultiIndex, MAX_ANGLES, MAX_MODES, MAX_Z,
};
pub use norm::{average, ellap_norm, majorant_vf_norm, truncate, ModeSites, WeightedNorm};
pub use text::{from_text, to_text};
pub use tf::{mirror, Point, TFSeries, PRUNE};
