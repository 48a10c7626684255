//! Shared numerical primitives: associated Laguerre polynomials, adaptive
//! Gauss-Kronrod quadrature (1D and polar 2D), and the two minimizers used by the
//! physics layers (golden-section and seeded multistart Nelder-Mead).

mod laguerre;
mod optim;
mod polar;
mod quad;

pub use laguerre::laguerre_assoc;
pub use optim::{minimize_multistart, minimize_scalar, MinimizeResult, MultistartSpec};
pub use polar::{integrate_polar, PolarRegion};
pub use quad::{integrate_1d, integrate_1d_complex};

use thiserror::Error;

/// Tolerance and budget knobs for the adaptive quadratures.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureSpec {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-12,
            absolute_tolerance: 1e-13,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureSpec {
    /// Tightened copy handed to inner integrals of nested (2D) quadratures, so the
    /// outer error request still dominates.
    pub(crate) fn inner(&self) -> Self {
        Self {
            relative_tolerance: self.relative_tolerance * 0.1,
            absolute_tolerance: self.absolute_tolerance * 0.1,
            max_subdivisions: self.max_subdivisions,
        }
    }
}

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error(
        "quadrature did not converge: error estimate {achieved:.3e} above requested \
         {requested:.3e} after {subdivisions} subdivisions"
    )]
    NonConvergence {
        achieved: f64,
        requested: f64,
        subdivisions: usize,
    },
    #[error("domain error: {0}")]
    DomainError(String),
}
