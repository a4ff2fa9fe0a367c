//! Sparse support recovery from observations with two noise levels.
//!
//! The model is `Y = X beta* + Z` with an i.i.d. standard Gaussian design,
//! where the first `n1` rows carry noise variance `sigma1_sq` and the other
//! `n2` rows carry `sigma2_sq >= sigma1_sq`.

pub mod chernoff;
pub mod cubic;
pub mod decoders;
pub mod error;
pub mod harness;
pub mod io;
pub mod lasso;
pub mod model;
pub mod planner;
pub mod rng;

pub use error::{Error, Result};
pub use model::{MixedDataset, NoiseProfile, SparseSignal};
pub use planner::Setting;
