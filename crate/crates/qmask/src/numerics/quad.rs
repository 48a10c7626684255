//! Adaptive Gauss-Kronrod quadrature on finite intervals.
//!
//! The kernel is the classic 10-21 pair: a 21-point Kronrod rule whose
//! even-indexed abscissae form the embedded 10-point Gauss rule, giving a
//! cheap error estimate per interval. Bisection is globally adaptive: the
//! interval with the worst error estimate splits first.

use super::{NumericsError, QuadratureSpec};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Abscissae of the 21-point Kronrod rule on [-1, 1] (positive half; the rule is
// symmetric). Entries 1, 3, 5, 7, 9 are the 10-point Gauss abscissae.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

// Kronrod weights matching XGK.
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Weights of the embedded 10-point Gauss rule (positive half).
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Value type a quadrature can accumulate. Implemented for `f64` and `Complex64`.
pub(crate) trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn sub(self, other: Self) -> Self {
        self - other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// One application of the 10-21 pair on [a, b]. Returns the Kronrod estimate,
/// the rescaled error bound, and the round-off floor `50 eps int|f|` below
/// which this interval's error cannot be driven.
fn qk21<T, F>(f: &F, a: f64, b: f64) -> (T, f64, f64)
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut fv = [T::zero(); 21];
    fv[10] = fc;
    for (j, &x) in XGK.iter().enumerate().take(10) {
        fv[j] = f(center - half * x);
        fv[20 - j] = f(center + half * x);
    }

    let mut resk = fv[10].scale(WGK[10]);
    let mut resg = T::zero();
    let mut resabs = WGK[10] * fv[10].magnitude();
    for j in 0..10 {
        let sum = fv[j].add(fv[20 - j]);
        resk = resk.add(sum.scale(WGK[j]));
        resabs += WGK[j] * (fv[j].magnitude() + fv[20 - j].magnitude());
        if j % 2 == 1 {
            resg = resg.add(sum.scale(WG[j / 2]));
        }
    }

    // resasc: integral of |f - mean| over the interval, for the error rescale.
    let mean = resk.scale(0.5);
    let mut resasc = WGK[10] * fv[10].sub(mean).magnitude();
    for j in 0..10 {
        resasc +=
            WGK[j] * (fv[j].sub(mean).magnitude() + fv[20 - j].sub(mean).magnitude());
    }

    let value = resk.scale(half);
    resabs *= half.abs();
    resasc *= half.abs();

    let mut err = resk.sub(resg).scale(half).magnitude();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        err = if scale < 1.0 { resasc * scale } else { resasc };
    }
    let mut floor = 0.0;
    let tiny = f64::MIN_POSITIVE / (50.0 * f64::EPSILON);
    if resabs > tiny {
        floor = 50.0 * f64::EPSILON * resabs;
        err = err.max(floor);
    }
    (value, err, floor)
}

struct Interval<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    floor: f64,
}

impl<T> PartialEq for Interval<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Interval<T> {}
impl<T> PartialOrd for Interval<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Interval<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

pub(crate) fn adaptive<T, F>(f: &F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<T, NumericsError>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(NumericsError::DomainError(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(T::zero());
    }

    let (value, error, floor) = qk21(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, error, floor });
    let mut total_error = error;
    let mut total_floor = floor;
    let mut total_value = value;
    let mut subdivisions = 0usize;

    let tolerance = |v: T| -> f64 {
        spec.absolute_tolerance.max(spec.relative_tolerance * v.magnitude())
    };

    // Success either at the requested tolerance or when every leaf error sits at
    // its round-off floor, i.e. further bisection cannot help.
    let done = |err: f64, flr: f64, v: T| err <= tolerance(v) || err <= flr * (1.0 + 1e-6);

    while !done(total_error, total_floor, total_value) {
        if subdivisions >= spec.max_subdivisions {
            return Err(NumericsError::NonConvergence {
                achieved: total_error,
                requested: tolerance(total_value),
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one interval");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval at floating-point resolution; cannot split further.
            return Err(NumericsError::NonConvergence {
                achieved: total_error,
                requested: tolerance(total_value),
                subdivisions,
            });
        }
        let (lv, le, lf) = qk21(f, worst.a, mid);
        let (rv, re, rf) = qk21(f, mid, worst.b);
        total_error += le + re - worst.error;
        total_floor += lf + rf - worst.floor;
        total_value = total_value.add(lv.add(rv).sub(worst.value));
        heap.push(Interval { a: worst.a, b: mid, value: lv, error: le, floor: lf });
        heap.push(Interval { a: mid, b: worst.b, value: rv, error: re, floor: rf });
        subdivisions += 1;
    }

    // Re-sum from the leaves for a cleaner final value than the running update.
    let mut sum = T::zero();
    for iv in heap.iter() {
        sum = sum.add(iv.value);
    }
    Ok(sum)
}

/// Integrate a real function over [a, b] to the requested tolerances.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64, NumericsError>
where
    F: Fn(f64) -> f64,
{
    adaptive(&f, a, b, spec)
}

/// Integrate a complex-valued function over [a, b]; the error estimate is taken
/// on the complex modulus, so both components converge together.
pub fn integrate_1d_complex<F>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64, NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    adaptive(&f, a, b, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::laguerre_assoc;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn constant_and_line() {
        assert_relative_eq!(
            integrate_1d(|_| 1.0, 0.0, 1.0, &spec()).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            integrate_1d(|x| x, 0.0, 2.0, &spec()).unwrap(),
            2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn exponential_against_antiderivative() {
        // \int_0^T e^{-x} dx = 1 - e^{-T}; the value at this particular T also
        // pins the hard-iris fundamental-mode transmission used elsewhere.
        let t = 1.390_778_420_283_467_3;
        let got = integrate_1d(|x| (-x).exp(), 0.0, t, &spec()).unwrap();
        let expected = 1.0 - (-t).exp();
        assert_relative_eq!(got, expected, max_relative = 1e-13);
        assert_relative_eq!(got, 0.751_118_505_1, max_relative = 1e-9);
    }

    #[test]
    fn laguerre_orthonormality_weighted() {
        // \int_0^inf e^{-x} L_1(x) L_1(x) dx = 1 and cross terms vanish; the
        // e^{-x} weight makes 60 an effectively infinite upper limit.
        let s = spec();
        let diag = integrate_1d(
            |x| (-x).exp() * laguerre_assoc(1, 0.0, x) * laguerre_assoc(1, 0.0, x),
            0.0,
            60.0,
            &s,
        )
        .unwrap();
        assert_relative_eq!(diag, 1.0, max_relative = 1e-12);
        let cross = integrate_1d(
            |x| (-x).exp() * laguerre_assoc(0, 0.0, x) * laguerre_assoc(2, 0.0, x),
            0.0,
            60.0,
            &s,
        )
        .unwrap();
        assert!(cross.abs() < 1e-12, "cross term {cross:e}");
    }

    #[test]
    fn oscillatory_complex_phase() {
        // \int_0^{2pi} e^{i k x} dx = 0 for integer k != 0, = 2pi for k = 0.
        let s = spec();
        let z = integrate_1d_complex(
            |x| Complex64::new(0.0, 3.0 * x).exp(),
            0.0,
            2.0 * std::f64::consts::PI,
            &s,
        )
        .unwrap();
        assert!(z.norm() < 1e-12, "got {z}");
        let z0 = integrate_1d_complex(
            |_| Complex64::new(1.0, 0.0),
            0.0,
            2.0 * std::f64::consts::PI,
            &s,
        )
        .unwrap();
        assert_relative_eq!(z0.re, 2.0 * std::f64::consts::PI, max_relative = 1e-14);
    }

    #[test]
    fn step_discontinuity() {
        // Adaptive bisection must localize a jump: \int_0^1 [x < 0.3] dx = 0.3.
        let got = integrate_1d(|x| if x < 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, &spec()).unwrap();
        assert_relative_eq!(got, 0.3, epsilon = 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let tight = QuadratureSpec {
            relative_tolerance: 1e-14,
            absolute_tolerance: 1e-15,
            max_subdivisions: 2,
        };
        let r = integrate_1d(|x| (1e4 * x).sin() / (x + 1e-3), 0.0, 1.0, &tight);
        assert!(matches!(r, Err(NumericsError::NonConvergence { .. })));
    }

    proptest! {
        #[test]
        fn polynomials_to_degree_ten_are_near_exact(
            coeffs in proptest::collection::vec(-3.0f64..3.0, 11),
            a in -2.0f64..0.0,
            b in 0.1f64..2.0,
        ) {
            // Degree <= 10 is inside the exactness range of both embedded rules,
            // so even the unsplit kernel must reproduce the antiderivative.
            let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
            let anti = |x: f64| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * x.powi(k as i32 + 1) / (k as f64 + 1.0))
                    .sum::<f64>()
            };
            let got = integrate_1d(poly, a, b, &spec()).unwrap();
            let expected = anti(b) - anti(a);
            let scale = expected.abs().max(1.0);
            prop_assert!((got - expected).abs() <= 1e-12 * scale);
        }
    }
}
