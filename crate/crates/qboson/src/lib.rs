//! Exact rational verification toolkit for the multi-species q-Boson
//! system.
//!
//! The crate computes the eigenfunctions of the backward generator of the
//! multi-species q-Boson process by two independent constructions — a
//! Hecke-algebra sum over the symmetric group ([`hecke::eigenfunction_h`])
//! and a normalized vacuum matrix element of q-deformed boson operators
//! ([`fock::psi`]) — and verifies exactly, over arbitrary-precision
//! rationals, that the two agree together with the surrounding algebraic
//! structure: the eigenfunction property, the Yang-Baxter equation, the
//! monodromy commutation and recursion relations, exchange symmetries, the
//! one-particle-extraction recurrence, and the transfer-matrix
//! integrability of the periodic chain.
//!
//! - [`scalars`]: exact rationals, the structure functions `f` and `g`,
//!   parameter validation
//! - [`process`]: configurations, hop rates, the backward generator
//! - [`hecke`]: the R/Y operators, the intertwiner `phi`, `h`
//! - [`fock`]: boson operators, L-operator, monodromy, `psi` and `E`
//! - [`integrability`]: R-matrix, Yang-Baxter checks, transfer matrix
//! - [`recursion`]: the shared one-particle-extraction kernel
//! - [`suites`]: seeded verification suites behind the CLI
//! - [`report`]: machine-readable reports

pub mod error;
pub mod fock;
pub mod hecke;
pub mod integrability;
pub mod process;
pub mod recursion;
pub mod report;
pub mod rng;
pub mod scalars;
pub mod suites;

pub use error::{Error, Result};
pub use scalars::{f_factor, g_factor, validate_params, Rational, SpectralParams};
