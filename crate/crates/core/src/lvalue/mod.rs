//! Central values `L(1/2, E_d)` through the approximate functional equation.

mod afe;
mod cache;
mod cutoff;
mod kernel;

pub use afe::{
    character_table, weighted_discriminants, CentralValue, LValueEngine, WeightedValue,
    DEFAULT_EPS, NONNEGATIVITY_TOL,
};
pub use cache::{default_cache_dir, LValueCache};
pub use cutoff::{phi_mellin, SmoothCutoff};
pub use kernel::CutoffKernel;
