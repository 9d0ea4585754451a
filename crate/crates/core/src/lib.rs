//! Nonlocal p-Laplacian diffusion with two-point fluxes.
//!
//! The library discretizes the bond-based nonlocal diffusion model in which
//! points closer than a horizon `delta` interact through a singular radial
//! kernel. It provides
//!
//! * kernel constants and the spherical-quadrature identities that calibrate
//!   nonlocal energies against their local counterparts ([`kernel`]),
//! * cell-centered grids over the domain and its delta-halo, together with
//!   the delta-neighbor pair table ([`grid`], [`field`]),
//! * the nonlocal gradient/divergence/recovery/lift operators and the primal
//!   and complementary (dual) energies ([`operators`]),
//! * a damped-Newton state solver with duality and KKT certificates, plus a
//!   1D local reference solver ([`solver`]),
//! * the optimal conductivity-design loop under box and volume constraints
//!   ([`design`]),
//! * scripted experiment suites (identity verification, consistency sweeps,
//!   and localization studies over vanishing horizons) driven by the `nlplap`
//!   binary ([`experiments`], [`config`], [`report`]).

pub mod config;
pub mod design;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod operators;
pub mod quad;
pub mod report;
pub mod smooth;
pub mod solver;
mod special;

/// Crate-wide error type. Variants map onto the CLI exit-code classes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("horizon under-resolved: delta = {delta} but the grid requires delta >= 2h = {min}")]
    Resolution { delta: f64, min: f64 },
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
    },
    #[error("verification failed: {0}")]
    CheckFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the failure class (0 is success).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Resolution { .. } | Error::Json(_) => 2,
            Error::Convergence { .. } => 3,
            Error::CheckFailure(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

/// Signed power `sign(t) |t|^e`, continuous at zero for `e > 0`.
#[inline]
pub(crate) fn spow(t: f64, e: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(e)
    }
}
