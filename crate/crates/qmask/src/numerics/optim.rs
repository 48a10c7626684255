//! Derivative-free minimizers: golden-section search for smooth 1D objectives
//! (homodyne angle scans) and a seeded multistart Nelder-Mead for the
//! low-dimensional nonconvex searches (coincidence-probability combinations over
//! detector displacements). Determinism matters more than speed here: the same
//! inputs and seed must reproduce bitwise-identical curves.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimum of `g` on `[a, b]`, refined until the bracket is
/// narrower than 1e-10. Returns `(argmin, min)`.
pub fn minimize_scalar<G: Fn(f64) -> f64>(g: G, a: f64, b: f64) -> (f64, f64) {
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while hi - lo > 1e-10 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2);
        }
    }
    let xm = 0.5 * (lo + hi);
    (xm, g(xm))
}

/// Search box and budget for the multistart minimizer.
#[derive(Clone, Debug)]
pub struct MultistartSpec {
    /// Number of Nelder-Mead restarts from pseudo-random points.
    pub starts: usize,
    /// Seed for the start-point stream; same seed, same results.
    pub seed: u64,
    /// Per-coordinate lower bounds of the start-point box.
    pub lower: Vec<f64>,
    /// Per-coordinate upper bounds of the start-point box.
    pub upper: Vec<f64>,
    /// Iteration cap per Nelder-Mead run.
    pub max_iterations: usize,
}

impl MultistartSpec {
    pub fn symmetric_box(dim: usize, half_width: f64) -> Self {
        Self {
            starts: 24,
            seed: 0,
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
            max_iterations: 2000,
        }
    }
}

/// Outcome of a multistart search, with enough diagnostics to judge whether the
/// budget was adequate.
#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Total objective evaluations across all starts.
    pub evaluations: usize,
    /// How many restarts terminated by simplex collapse rather than hitting the
    /// iteration cap.
    pub converged_starts: usize,
}

/// Uniform f64 in [0, 1) with the full 53-bit mantissa, drawn from the raw
/// 64-bit stream so the value stream is stable across rand API versions.
fn uniform_unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Best Nelder-Mead result over `spec.starts` deterministic pseudo-random start
/// points inside the box. The objective must be bounded below on the box.
pub fn minimize_multistart<G: Fn(&[f64]) -> f64>(g: G, n: usize, spec: &MultistartSpec) -> MinimizeResult {
    assert!(n > 0 && n <= 16, "dimension {n} outside supported range 1..=16");
    assert_eq!(spec.lower.len(), n, "lower bounds length mismatch");
    assert_eq!(spec.upper.len(), n, "upper bounds length mismatch");

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let starts: Vec<Vec<f64>> = (0..spec.starts.max(1))
        .map(|_| {
            (0..n)
                .map(|i| spec.lower[i] + (spec.upper[i] - spec.lower[i]) * uniform_unit(&mut rng))
                .collect()
        })
        .collect();

    let mut best_x = starts[0].clone();
    let mut best_f = f64::INFINITY;
    let mut evaluations = 0usize;
    let mut converged_starts = 0usize;

    for x0 in &starts {
        let scale: Vec<f64> = (0..n).map(|i| 0.1 * (spec.upper[i] - spec.lower[i]).abs().max(1e-3)).collect();
        let run = nelder_mead(&g, x0, &scale, spec.max_iterations);
        evaluations += run.evaluations;
        if run.converged {
            converged_starts += 1;
        }
        if run.value < best_f {
            best_f = run.value;
            best_x = run.x;
        }
    }

    MinimizeResult { x: best_x, value: best_f, evaluations, converged_starts }
}

struct NmRun {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
    converged: bool,
}

fn nelder_mead<G: Fn(&[f64]) -> f64>(g: &G, x0: &[f64], scale: &[f64], max_iterations: usize) -> NmRun {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        g(x)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale[i];
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut converged = false;
    for _ in 0..max_iterations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));

        let f_spread = (simplex[n].1 - simplex[0].1).abs();
        let x_spread = (0..n)
            .map(|i| {
                simplex
                    .iter()
                    .map(|(v, _)| (v[i] - simplex[0].0[i]).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if f_spread <= 1e-12 * (1.0 + simplex[0].1.abs()) && x_spread <= 1e-9 {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(v, _)| v[i]).sum::<f64>() / n as f64)
            .collect();

        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + alpha * (centroid[i] - simplex[n].0[i]))
            .collect();
        let f_reflect = eval(&reflect);

        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + gamma * (reflect[i] - centroid[i]))
                .collect();
            let f_expand = eval(&expand);
            simplex[n] = if f_expand < f_reflect { (expand, f_expand) } else { (reflect, f_reflect) };
        } else if f_reflect < simplex[n - 1].1 {
            simplex[n] = (reflect, f_reflect);
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|i| centroid[i] + rho * (simplex[n].0[i] - centroid[i]))
                .collect();
            let f_contract = eval(&contract);
            if f_contract < simplex[n].1 {
                simplex[n] = (contract, f_contract);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        entry.0[i] = best[i] + sigma * (entry.0[i] - best[i]);
                    }
                    entry.1 = eval(&entry.0);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, value) = simplex.swap_remove(0);
    NmRun { x, value, evaluations: evals, converged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn cosine_minimum_at_pi() {
        // Near a smooth minimum the objective is flat to machine precision over
        // a ~sqrt(eps) neighborhood, so the argmin is only good to ~1e-7.
        let (x, f) = minimize_scalar(f64::cos, 0.0, 2.0 * PI);
        assert_relative_eq!(x, PI, epsilon = 1e-7);
        assert_relative_eq!(f, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn quadrature_form_extremum() {
        // a cos^2 t + b sin^2 t with a < b attains a at t = 0 or pi.
        let (a, b) = (0.3, 1.7);
        let g = |t: f64| a * t.cos().powi(2) + b * t.sin().powi(2);
        let (x, f) = minimize_scalar(g, -0.5, 2.0);
        assert_relative_eq!(f, a, epsilon = 1e-12);
        assert!(x.abs() < 1e-4 || (x - PI).abs() < 1e-4);
    }

    #[test]
    fn rotated_covariance_block_recovers_eigenvalue() {
        // Variance of cos(t) q + sin(t) p under a rotated diagonal covariance:
        // minimum over t is the smaller eigenvalue.
        let (lam1, lam2, rot) = (0.2f64, 1.9f64, 0.7f64);
        let (c, s) = (rot.cos(), rot.sin());
        // V = R diag(lam1, lam2) R^T
        let vxx = c * c * lam1 + s * s * lam2;
        let vpp = s * s * lam1 + c * c * lam2;
        let vxp = c * s * (lam1 - lam2);
        let g = |t: f64| {
            let (ct, st) = (t.cos(), t.sin());
            ct * ct * vxx + 2.0 * ct * st * vxp + st * st * vpp
        };
        let (_, f) = minimize_scalar(g, 0.0, PI);
        assert_relative_eq!(f, lam1, epsilon = 1e-12);
    }

    #[test]
    fn norm_squared_minimum_at_origin() {
        let spec = MultistartSpec::symmetric_box(3, 2.0);
        let r = minimize_multistart(|x| x.iter().map(|v| v * v).sum(), 3, &spec);
        assert!(r.value < 1e-12);
        for v in &r.x {
            assert!(v.abs() < 1e-6);
        }
        assert!(r.converged_starts > 0);
    }

    #[test]
    fn rosenbrock_valley() {
        let rosenbrock =
            |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let spec = MultistartSpec {
            starts: 16,
            seed: 0,
            lower: vec![-3.0, -3.0],
            upper: vec![3.0, 3.0],
            max_iterations: 4000,
        };
        let r = minimize_multistart(rosenbrock, 2, &spec);
        assert!((r.x[0] - 1.0).abs() < 1e-6, "x = {:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-6, "x = {:?}", r.x);
        assert!(r.value < 1e-10);
    }

    #[test]
    fn multistart_is_bitwise_deterministic() {
        let himmelblau = |x: &[f64]| {
            (x[0] * x[0] + x[1] - 11.0).powi(2) + (x[0] + x[1] * x[1] - 7.0).powi(2)
        };
        let spec = MultistartSpec {
            starts: 12,
            seed: 7,
            lower: vec![-5.0, -5.0],
            upper: vec![5.0, 5.0],
            max_iterations: 1500,
        };
        let a = minimize_multistart(himmelblau, 2, &spec);
        let b = minimize_multistart(himmelblau, 2, &spec);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
        assert_eq!(a.x[1].to_bits(), b.x[1].to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }
}
