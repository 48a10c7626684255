//! Paraxial beam geometry and Laguerre-Gaussian (LG) mode amplitudes.
//!
//! An LG mode is labeled by an azimuthal index `l` (sign = handedness of the
//! phase winding) and a radial index `p` (number of intensity rings beyond the
//! central spot). The set is orthonormal over any fixed transverse plane.

use crate::grid::Grid2;
use crate::numerics::{
    integrate_polar, laguerre_assoc, NumericsError, PolarRegion, QuadratureSpec,
};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Azimuthal and radial indices of an LG mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex {
    pub l: i32,
    pub p: u32,
}

impl ModeIndex {
    pub fn new(l: i32, p: u32) -> Self {
        Self { l, p }
    }
}

impl std::fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(l={}, p={})", self.l, self.p)
    }
}

/// Focused-beam geometry: waist, wavelength, and the derived Rayleigh range
/// `z_R = pi w0^2 / lambda` that sets the scale of all z dependence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamGeometry {
    pub w0: f64,
    pub wavelength: f64,
    pub rayleigh_range: f64,
}

impl BeamGeometry {
    pub fn from_waist(w0: f64, wavelength: f64) -> Self {
        assert!(w0 > 0.0 && wavelength > 0.0, "waist and wavelength must be positive");
        Self { w0, wavelength, rayleigh_range: PI * w0 * w0 / wavelength }
    }

    pub fn from_rayleigh(rayleigh_range: f64, wavelength: f64) -> Self {
        assert!(
            rayleigh_range > 0.0 && wavelength > 0.0,
            "Rayleigh range and wavelength must be positive"
        );
        Self { w0: (rayleigh_range * wavelength / PI).sqrt(), wavelength, rayleigh_range }
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Beam radius `w(z) = w0 sqrt(1 + (z/z_R)^2)`.
    pub fn beam_width(&self, z: f64) -> f64 {
        let u = z / self.rayleigh_range;
        self.w0 * (1.0 + u * u).sqrt()
    }

    /// Gouy phase `zeta(z) = atan(z/z_R)`, in (-pi/2, pi/2).
    pub fn gouy_phase(&self, z: f64) -> f64 {
        (z / self.rayleigh_range).atan()
    }

    /// Inverse wavefront curvature `1/R(z) = z / (z^2 + z_R^2)`; finite at the
    /// focus where R itself diverges.
    pub fn inv_radius(&self, z: f64) -> f64 {
        z / (z * z + self.rayleigh_range * self.rayleigh_range)
    }

    /// Real radial profile of the mode: everything in the amplitude except the
    /// three pure phases (azimuthal, curvature, Gouy). Carries the sign of the
    /// Laguerre polynomial.
    pub fn radial_profile(&self, m: ModeIndex, r: f64, z: f64) -> f64 {
        let la = m.l.unsigned_abs();
        let w = self.beam_width(z);
        let x = 2.0 * r * r / (w * w);
        // sqrt(p! / (p+|l|)!) without forming either factorial.
        let mut ratio = 1.0;
        for k in (m.p + 1)..=(m.p + la) {
            ratio /= f64::from(k);
        }
        let norm = (2.0 / PI * ratio).sqrt() / w;
        norm * x.sqrt().powi(la as i32)
            * laguerre_assoc(m.p, f64::from(la), x)
            * (-0.5 * x).exp()
    }

    /// Complex LG amplitude `u_{l,p}(r, phi, z)`, normalized so that its squared
    /// modulus integrates to 1 over any transverse plane.
    pub fn lg_amplitude(&self, m: ModeIndex, r: f64, phi: f64, z: f64) -> Complex64 {
        let la = m.l.unsigned_abs();
        let phase = f64::from(m.l) * phi + f64::from(2 * m.p + la + 1) * self.gouy_phase(z)
            - 0.5 * self.wavenumber() * r * r * self.inv_radius(z);
        Complex64::from_polar(self.radial_profile(m, r, z), phase)
    }

    /// Radius beyond which the mode envelope at plane `z` has decayed below
    /// ~1e-16 of its peak; used to truncate full-plane integrals.
    pub fn support_radius(&self, z: f64) -> f64 {
        6.0 * self.beam_width(z)
    }
}

impl Default for BeamGeometry {
    /// 795 nm light focused to a 2.5 cm Rayleigh range (waist ~79.5 um).
    fn default() -> Self {
        Self::from_rayleigh(0.025, 795e-9)
    }
}

/// Full-plane overlap `<u_a, u_b> = int u_a u_b^* r dr dphi` at plane `z`.
pub fn overlap(
    g: &BeamGeometry,
    a: ModeIndex,
    b: ModeIndex,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64, NumericsError> {
    let region = PolarRegion::disk(g.support_radius(z));
    integrate_polar(
        |r, phi| g.lg_amplitude(a, r, phi, z) * g.lg_amplitude(b, r, phi, z).conj(),
        &region,
        spec,
    )
}

/// Squared-norm of a mode over the plane at `z`; equals 1 up to quadrature error.
pub fn norm_check(
    g: &BeamGeometry,
    m: ModeIndex,
    z: f64,
    spec: &QuadratureSpec,
) -> Result<f64, NumericsError> {
    overlap(g, m, m, z, spec).map(|v| v.re)
}

/// Sampled intensity `|u|^2` on a centered square of half-width `half_width`.
pub fn intensity_grid(
    g: &BeamGeometry,
    m: ModeIndex,
    z: f64,
    half_width: f64,
    n: usize,
) -> Grid2 {
    assert!(n >= 2, "grid resolution must be at least 2x2");
    Grid2::sample((-half_width, half_width), (-half_width, half_width), n, n, |x, y| {
        let r = x.hypot(y);
        let phi = y.atan2(x);
        g.lg_amplitude(m, r, phi, z).norm_sqr()
    })
}

/// Finite superposition of LG modes: a classical beam expressed in the mode
/// basis. Keys are mode indices, values the complex amplitudes `A_{l,p}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassicalCoefficients {
    pub amplitudes: BTreeMap<ModeIndex, Complex64>,
}

impl ClassicalCoefficients {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, m: ModeIndex, a: Complex64) {
        if a == Complex64::new(0.0, 0.0) {
            self.amplitudes.remove(&m);
        } else {
            self.amplitudes.insert(m, a);
        }
    }

    pub fn get(&self, m: ModeIndex) -> Complex64 {
        self.amplitudes.get(&m).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Total power carried by the superposition, `sum |A|^2`.
    pub fn total_power(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Field of the superposition at a point.
    pub fn field_at(&self, g: &BeamGeometry, r: f64, phi: f64, z: f64) -> Complex64 {
        self.amplitudes
            .iter()
            .map(|(&m, &a)| a * g.lg_amplitude(m, r, phi, z))
            .sum()
    }
}

impl FromIterator<(ModeIndex, Complex64)> for ClassicalCoefficients {
    fn from_iter<T: IntoIterator<Item = (ModeIndex, Complex64)>>(iter: T) -> Self {
        let mut c = Self::new();
        for (m, a) in iter {
            c.set(m, a);
        }
        c
    }
}
