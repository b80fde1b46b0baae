//! Exact, enumeration-backed laboratory for two-terminal source encryption
//! with correlated keys.
//!
//! The crate builds concrete common-key cryptosystems of the form
//! `C_i = A_i (X_i + K_i)` over prime fields, computes their decoding error and
//! mutual-information leakage exactly at small blocklengths, constructs the
//! Slepian-Wolf / key rate regions, and certifies the finite-blocklength
//! inequalities of the converse argument atom by atom.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`pmf`] | joint PMFs, entropies, product extensions, sampling |
//! | [`region`] | `R_sw`, `R_key`, the inner region, outer region, sum-rate segment |
//! | [`crypto`] | linear encoders, ML decoding, decodable sets, error and leakage |
//! | [`birkhoff`] | preimage-set disjointness and the sum bounds built on it |
//! | [`converse`] | typical sets, the conditioned ensemble, inequality-chain reports |
//! | [`experiments`] | JSON-configured runs and CSV tables behind the `dselab` CLI |

pub mod birkhoff;
pub mod converse;
pub mod crypto;
pub mod error;
pub mod experiments;
pub mod gf;
pub mod numeric;
pub mod pmf;
pub mod region;

pub use error::{Error, Result};

/// Default cap on the number of enumerated states for exact computations.
pub const DEFAULT_BUDGET: u64 = 1 << 26;
