//! Spectral toolkit for the mixed-dispersion fourth-order nonlinear
//! Schrodinger equation
//! `i u_t + eps Lap u + delta A u + lambda |u|^alpha u = 0`
//! with isotropic (`A = Lap^2`) or anisotropic
//! (`A = sum_{i<=d} d^4/dx_i^4`) fourth-order dispersion, on periodic boxes.
//!
//! The crate provides, bottom up:
//!
//! * [`grid`] — periodic grids, complex fields and the unitary FFT contract;
//! * [`dispersion`] — dispersion symbols and the exact free group;
//! * [`nonlinearity`] — the power nonlinearity, dealiasing, Lipschitz checks;
//! * [`integrators`] — Strang split-step evolution and the Picard iteration;
//! * [`analysis`] — rearrangements, Lorentz/Sobolev/time-weighted norms,
//!   exponent formulas and the admissible-region logic;
//! * [`experiments`] — reproducible studies (decay, self-similarity, Picard
//!   certification, vanishing-dispersion limits, radial preservation) with
//!   file persistence.
//!
//! Hot loops run data-parallel under the `parallel` feature (default) and
//! fall back to sequential code without it; results are bit-identical
//! either way.

pub mod analysis;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod grid;
pub mod integrators;
pub mod nonlinearity;
pub mod quadrature;

pub use error::{CoreError, Result};

/// Configures the rayon thread pool (no-op without the `parallel` feature).
///
/// Returns an error message when the pool was already initialized.
#[cfg(feature = "parallel")]
pub fn configure_threads(threads: usize) -> std::result::Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_threads: usize) -> std::result::Result<(), String> {
    Ok(())
}
