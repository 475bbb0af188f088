//! Simulation and verification of extremal functions and generalized
//! extremal indices for series schemes with random series sizes.
//!
//! A series scheme is a family `ξ_{n,1}, …, ξ_{n,ν_n}` with a random size
//! `ν_n`. Its maximum `M_n` is compared against the level `u_n(s)` solving
//! `E F_n(u_n(s))^{ν_n} = s`; the limit `ψ(s) = lim P(M_n ≤ u_n(s))` is the
//! extremal function.

pub mod copulas;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod normalizer;
pub mod numeric;
pub mod reference;
pub mod sampling;
pub mod systems;

pub use error::{Error, Result};
