//! Numerical laboratory for distributed hypothesis testing over the
//! Gray-Wyner network with privacy constraints.
//!
//! The crate is organised bottom-up:
//!
//! | Module        | Contents                                                   |
//! |---------------|------------------------------------------------------------|
//! | [`prob`]      | finite-alphabet pmfs, information measures, TV, continuity |
//! | [`types`]     | method of types: n-types, class sizes, typicality          |
//! | [`exponents`] | error exponents E0/E1/E2, theta*, rate-region checkers     |
//! | [`osrb`]      | finite-n random-binning exponents and empirical TV         |
//! | [`protocol`]  | Monte Carlo model of the binning protocol and detectors    |
//!
//! All information quantities are in bits.

pub mod error;
pub mod exponents;
pub mod osrb;
pub mod prob;
pub mod protocol;
pub mod rng;
pub mod serde_ext;
pub mod types;

pub use error::{Error, Result};
pub use prob::{Alphabet, CondPmf, JointPmf, Pmf};

/// Default cap on the number of objects any enumeration may touch.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;
