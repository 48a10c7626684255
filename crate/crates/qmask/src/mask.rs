//! Mode coupling induced by a spatial mask.
//!
//! A thin mask at plane `z0` multiplies the field by its transmission indicator.
//! In the LG basis this is the matrix of overlaps over the transmitting region,
//!
//! ```text
//! B[m][m'] = int_S u_m(r, phi, z0) u_{m'}^*(r, phi, z0) r dr dphi,
//! ```
//!
//! a contraction (all singular values <= 1) that plays the role of the classical
//! transfer matrix. For a circular iris the azimuthal integral forces l = l' and
//! the entry reduces to a single radial integral
//!
//! ```text
//! B = delta_{ll'} C exp[i (2p - 2p') zeta(z0)],
//! C = sqrt(p! p'! / ((|l|+p)! (|l|+p')!))
//!     int_0^T x^{|l|} e^{-x} L_p^{|l|}(x) L_{p'}^{|l|}(x) dx,   T = 2 a^2 / w(z0)^2,
//! ```
//!
//! which recovers the Laguerre orthonormality (B -> identity) as the iris opens.

use crate::modes::{BeamGeometry, ClassicalCoefficients, ModeIndex};
use crate::numerics::{
    integrate_1d, integrate_polar, NumericsError, PolarRegion, QuadratureSpec,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

/// Shape and axial position of a thin mask.
#[derive(Clone)]
pub enum MaskSpec {
    /// Hard circular aperture of the given radius, centered on the beam axis.
    CircularIris { radius: f64, z0: f64 },
    /// Arbitrary transmitting region given as a polar-coordinate predicate.
    GeneralAperture {
        transmit: Arc<dyn Fn(f64, f64) -> bool + Send + Sync>,
        z0: f64,
    },
}

impl MaskSpec {
    pub fn iris(radius: f64, z0: f64) -> Self {
        assert!(radius > 0.0, "iris radius must be positive");
        Self::CircularIris { radius, z0 }
    }

    pub fn general<F>(z0: f64, transmit: F) -> Self
    where
        F: Fn(f64, f64) -> bool + Send + Sync + 'static,
    {
        Self::GeneralAperture { transmit: Arc::new(transmit), z0 }
    }

    pub fn z0(&self) -> f64 {
        match self {
            Self::CircularIris { z0, .. } | Self::GeneralAperture { z0, .. } => *z0,
        }
    }

    pub fn transmits(&self, r: f64, phi: f64) -> bool {
        match self {
            Self::CircularIris { radius, .. } => r < *radius,
            Self::GeneralAperture { transmit, .. } => transmit(r, phi),
        }
    }
}

impl std::fmt::Debug for MaskSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::CircularIris { radius, z0 } => f
                .debug_struct("CircularIris")
                .field("radius", radius)
                .field("z0", z0)
                .finish(),
            Self::GeneralAperture { z0, .. } => f
                .debug_struct("GeneralAperture")
                .field("z0", z0)
                .finish_non_exhaustive(),
        }
    }
}

/// Mode-coupling matrix over an ordered signal basis. Row = input mode, column
/// = output mode, so a classical coefficient row vector maps as `A' = A B`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    pub basis: Vec<ModeIndex>,
    pub entries: DMatrix<Complex64>,
}

impl CouplingMatrix {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, m: ModeIndex) -> Option<usize> {
        self.basis.iter().position(|&b| b == m)
    }

    /// Largest singular value; <= 1 (up to round-off) for any transmission mask.
    pub fn spectral_norm(&self) -> f64 {
        self.entries
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(0.0f64, |acc, &s| acc.max(s))
    }
}

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("coefficients reference mode {0}, which is outside the coupling basis")]
    BasisMismatch(ModeIndex),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The normalized radial overlap integral `C` for a circular iris: both modes
/// share the azimuthal index magnitude `l_abs`, and `t = 2 a^2 / w(z0)^2` is the
/// squared iris radius in beam-width units.
pub fn coupling_radial(
    t: f64,
    l_abs: u32,
    p: u32,
    p_prime: u32,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(NumericsError::DomainError(format!(
            "radial cutoff must be finite and nonnegative, got {t}"
        )));
    }
    // sqrt(p! p'! / ((|l|+p)! (|l|+p')!)) built as a product of ratios.
    let mut prefactor = 1.0;
    for k in (p + 1)..=(p + l_abs) {
        prefactor /= f64::from(k).sqrt();
    }
    for k in (p_prime + 1)..=(p_prime + l_abs) {
        prefactor /= f64::from(k).sqrt();
    }
    let alpha = f64::from(l_abs);
    // Beyond x ~ 120 the e^{-x} weight is below 1e-52; cap the interval so very
    // open irises do not waste subdivisions on dead range.
    let upper = t.min(120.0);
    let integral = integrate_1d(
        |x| {
            x.powi(l_abs as i32)
                * (-x).exp()
                * crate::numerics::laguerre_assoc(p, alpha, x)
                * crate::numerics::laguerre_assoc(p_prime, alpha, x)
        },
        0.0,
        upper,
        spec,
    )?;
    Ok(prefactor * integral)
}

/// Coupling coefficient `B[m][m']` of the mask between two LG modes.
pub fn coupling_coefficient(
    g: &BeamGeometry,
    mask: &MaskSpec,
    m: ModeIndex,
    m_prime: ModeIndex,
    spec: &QuadratureSpec,
) -> Result<Complex64, MaskError> {
    match mask {
        MaskSpec::CircularIris { radius, z0 } => {
            if m.l != m_prime.l {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let w = g.beam_width(*z0);
            let t = 2.0 * radius * radius / (w * w);
            let c = coupling_radial(t, m.l.unsigned_abs(), m.p, m_prime.p, spec)?;
            let phase = 2.0 * (f64::from(m.p) - f64::from(m_prime.p)) * g.gouy_phase(*z0);
            Ok(Complex64::from_polar(c, phase))
        }
        MaskSpec::GeneralAperture { transmit, z0 } => {
            let transmit = Arc::clone(transmit);
            let region = PolarRegion::new(g.support_radius(*z0), move |r: f64, phi: f64| {
                transmit(r, phi)
            });
            let v = integrate_polar(
                |r, phi| {
                    g.lg_amplitude(m, r, phi, *z0) * g.lg_amplitude(m_prime, r, phi, *z0).conj()
                },
                &region,
                spec,
            )?;
            Ok(v)
        }
    }
}

/// Assemble the full coupling matrix over a signal basis. The matrix is
/// Hermitian (the mask acts as a real indicator), so only the upper triangle is
/// integrated.
pub fn build_coupling_matrix(
    g: &BeamGeometry,
    mask: &MaskSpec,
    basis: &[ModeIndex],
    spec: &QuadratureSpec,
) -> Result<CouplingMatrix, MaskError> {
    assert!(!basis.is_empty(), "signal basis must be nonempty");
    for (i, m) in basis.iter().enumerate() {
        assert!(
            !basis[..i].contains(m),
            "duplicate mode {m} in signal basis"
        );
    }
    let n = basis.len();
    let mut entries = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let v = coupling_coefficient(g, mask, basis[i], basis[j], spec)?;
            entries[(i, j)] = v;
            entries[(j, i)] = v.conj();
        }
    }
    Ok(CouplingMatrix { basis: basis.to_vec(), entries })
}

/// Default two-mode signal basis {(0,0), (0,1)}: the fundamental plus the first
/// radial mode of the same azimuthal order.
pub fn default_signal_basis() -> Vec<ModeIndex> {
    vec![ModeIndex::new(0, 0), ModeIndex::new(0, 1)]
}

/// All modes with |l| <= l_abs_max and p <= p_max, in (l, p) order.
pub fn rectangular_basis(l_abs_max: u32, p_max: u32) -> Vec<ModeIndex> {
    let mut basis = Vec::new();
    for l in -(l_abs_max as i32)..=(l_abs_max as i32) {
        for p in 0..=p_max {
            basis.push(ModeIndex::new(l, p));
        }
    }
    basis
}

/// Map classical mode coefficients through the mask: `A'_{m'} = sum_m A_m B[m][m']`.
pub fn propagate_classical(
    coeffs: &ClassicalCoefficients,
    b: &CouplingMatrix,
) -> Result<ClassicalCoefficients, MaskError> {
    let n = b.dim();
    let mut input = vec![Complex64::new(0.0, 0.0); n];
    for (&m, &a) in &coeffs.amplitudes {
        let i = b.index_of(m).ok_or(MaskError::BasisMismatch(m))?;
        input[i] = a;
    }
    let mut out = ClassicalCoefficients::new();
    for j in 0..n {
        let mut a = Complex64::new(0.0, 0.0);
        for i in 0..n {
            a += input[i] * b.entries[(i, j)];
        }
        out.set(b.basis[j], a);
    }
    Ok(out)
}

/// Iris radius at the focal plane whose fundamental-mode power transmission
/// `1 - e^{-2 a^2 / w0^2}` equals `fraction`.
pub fn radius_from_transmission(g: &BeamGeometry, fraction: f64) -> Result<f64, MaskError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(MaskError::Numerics(NumericsError::DomainError(format!(
            "transmission fraction must lie strictly inside (0, 1), got {fraction}"
        ))));
    }
    Ok(g.w0 * (-0.5 * (1.0 - fraction).ln()).sqrt())
}
