//! Brute-force reference implementations used only by tests.
//!
//! Nothing here depends on `gwht-core`: every quantity is recomputed from
//! plain arrays with direct loops, grid search, or exhaustive enumeration,
//! so agreement with the production code is meaningful.

pub mod exponents;
pub mod grid;
pub mod info;
pub mod osrb;
pub mod types;
