pub mod counterexample;
pub mod degree;
pub mod engine;
pub mod error;
pub mod homological;
pub mod lattice;
pub mod measure;
pub mod normal_form;
pub mod series;

pub use error::{FailureKind, KamError, Result};
