//! Tensor-product cubature in polar coordinates: an adaptive radial integral
//! whose integrand is itself an adaptive azimuthal integral. Aperture shapes
//! enter as a predicate; points outside contribute zero and the adaptive rules
//! localize the resulting edges.

use super::quad::adaptive;
use super::{NumericsError, QuadratureSpec};
use num_complex::Complex64;
use std::cell::RefCell;
use std::f64::consts::TAU;

/// Integration region in the transverse plane: a membership predicate in polar
/// coordinates plus the radius beyond which the integrand is negligible (for
/// Gaussian-envelope integrands, where the envelope drops below ~1e-16 of peak).
#[derive(Clone, Copy, Debug)]
pub struct PolarRegion<R> {
    pub inside: R,
    pub r_max: f64,
}

impl PolarRegion<fn(f64, f64) -> bool> {
    /// Full disk of the given radius.
    pub fn disk(r_max: f64) -> Self {
        Self { inside: |_, _| true, r_max }
    }
}

impl<R: Fn(f64, f64) -> bool> PolarRegion<R> {
    pub fn new(r_max: f64, inside: R) -> Self {
        Self { inside, r_max }
    }
}

/// Integrate `f(r, phi)` (including the polar Jacobian, i.e. this computes
/// the area integral of `f`) over the region.
pub fn integrate_polar<F, R>(
    f: F,
    region: &PolarRegion<R>,
    spec: &QuadratureSpec,
) -> Result<Complex64, NumericsError>
where
    F: Fn(f64, f64) -> Complex64,
    R: Fn(f64, f64) -> bool,
{
    if !(region.r_max.is_finite() && region.r_max >= 0.0) {
        return Err(NumericsError::DomainError(format!(
            "polar region radius must be finite and nonnegative, got {}",
            region.r_max
        )));
    }
    let inner_spec = spec.inner();
    let inner_failure: RefCell<Option<NumericsError>> = RefCell::new(None);

    let radial = |r: f64| -> Complex64 {
        if inner_failure.borrow().is_some() {
            return Complex64::new(0.0, 0.0);
        }
        let ring = adaptive(
            &|phi: f64| {
                if (region.inside)(r, phi) {
                    f(r, phi)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            },
            0.0,
            TAU,
            &inner_spec,
        );
        match ring {
            Ok(v) => v * r,
            Err(e) => {
                *inner_failure.borrow_mut() = Some(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };

    let outer = adaptive(&radial, 0.0, region.r_max, spec);
    if let Some(e) = inner_failure.into_inner() {
        return Err(e);
    }
    outer
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn one(_r: f64, _phi: f64) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn unit_disk_area() {
        let got = integrate_polar(one, &PolarRegion::disk(1.0), &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(got.re, PI, max_relative = 1e-12);
        assert!(got.im.abs() < 1e-14);
    }

    #[test]
    fn annulus_area_via_predicate() {
        let region = PolarRegion::new(1.0, |r: f64, _phi: f64| r > 0.5);
        let got = integrate_polar(one, &region, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(got.re, PI * (1.0 - 0.25), epsilon = 1e-9);
    }

    #[test]
    fn half_plane_cut() {
        let region = PolarRegion::new(2.0, |_r: f64, phi: f64| phi < PI);
        let got = integrate_polar(one, &region, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(got.re, 2.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn normalized_gaussian_over_plane() {
        // (1/pi) e^{-r^2} integrates to 1; r = 8 leaves a tail below 1e-27.
        let f = |r: f64, _phi: f64| Complex64::new((-r * r).exp() / PI, 0.0);
        let got = integrate_polar(f, &PolarRegion::disk(8.0), &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(got.re, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn azimuthal_phase_orthogonality() {
        // e^{2 i phi} averages to zero on any circularly symmetric region.
        let f = |r: f64, phi: f64| Complex64::new(0.0, 2.0 * phi).exp() * (-r * r).exp();
        let got = integrate_polar(f, &PolarRegion::disk(6.0), &QuadratureSpec::default()).unwrap();
        assert!(got.norm() < 1e-12, "got {got}");
    }
}
