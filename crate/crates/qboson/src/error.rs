//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A structure function was evaluated on its pole `z = w`.
    #[error("pole of f/g at z = w ({z} = {w})")]
    Pole { z: String, w: String },

    /// `Y_i(z, w)` is singular because `f(z, w) = 0`, i.e. `z = q^2 w`.
    #[error("singular Y operator: z = q^2 w ({z} = q^2 * {w})")]
    SingularY { z: String, w: String },

    /// A spectral-parameter invariant is violated.
    #[error("invalid parameters: {0}")]
    Param(String),

    /// A hop was requested for a color absent from the cluster.
    #[error("empty cluster: no particle of color {color} to move")]
    EmptyCluster { color: u8 },

    /// A tensor-slot or matrix index is out of range.
    #[error("index out of range: {0}")]
    Index(String),

    /// A ket is supported outside the working interval, or the interval is empty.
    #[error("interval error: {0}")]
    Interval(String),

    /// An amplitude left the fixed-counts sector of the periodic chain.
    #[error("sector leak: transfer matrix produced the out-of-sector state {state}")]
    SectorLeak { state: String },

    #[error("division by zero")]
    DivisionByZero,

    #[error("parse error: {0}")]
    Parse(String),

    /// An exact identity check failed; carries both sides verbatim.
    #[error("identity {identity} failed at {inputs}: lhs = {lhs}, rhs = {rhs}")]
    IdentityFailed {
        identity: String,
        inputs: String,
        lhs: String,
        rhs: String,
    },
}
