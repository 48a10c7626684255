//! Quantum optics of Laguerre-Gaussian (LG) beams diffracted through spatial masks.
//!
//! A mask (e.g. a circular iris) placed in the beam path couples LG modes that are
//! orthonormal in free space. The coupling is a contraction `B` of overlap integrals
//! over the transmitting region; embedding `B` as the signal block of a unitary on an
//! enlarged mode space (signal + absorption modes) turns the mask into a lossy
//! multiport beam splitter. Quantum states are then propagated either exactly on
//! Gaussian states (means + covariances) or in a truncated Fock space, and the
//! absorption modes are traced out.
//!
//! Module map:
//! - [`numerics`]: quadrature, Laguerre polynomials, scalar/simplex minimizers.
//! - [`modes`]: beam geometry and LG mode amplitudes.
//! - [`mask`]: mode-coupling (overlap) matrices for masks.
//! - [`dilation`]: unitary completion of the coupling contraction.
//! - [`gaussian`]: symplectic propagation of Gaussian states, homodyne noise,
//!   photon-number covariance, Wigner grids.
//! - [`fock`]: truncated Fock-space propagation, joint photon statistics,
//!   Clauser-Horne minimization, Hong-Ou-Mandel coincidence.

pub mod dilation;
pub mod fock;
pub mod gaussian;
pub mod grid;
pub mod mask;
pub mod modes;
pub mod numerics;

pub use num_complex::Complex64;
