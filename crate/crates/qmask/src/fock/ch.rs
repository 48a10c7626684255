//! Clauser-Horne combination for a two-mode state with displaced on/off
//! detectors. A detector at setting `alpha` registers "no click" with the
//! probability of projecting onto the coherent state |alpha> (displace by
//! -alpha, then project on vacuum). The CH combination
//!
//! ```text
//! CH = P(a1,b1) + P(a1,b2) + P(a2,b1) - P(a2,b2) - P(a1) - P(b1)
//! ```
//!
//! stays >= -1 for every local-realistic (in particular every separable)
//! state; values below -1 witness entanglement of the one-photon-superposition
//! kind.

use super::{FockDensity, FockError};
use crate::numerics::{minimize_multistart, MultistartSpec};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug)]
pub struct ChSettings {
    /// Nelder-Mead restarts over the 8 displacement parameters.
    pub starts: usize,
    pub seed: u64,
    /// Half-width of the start box per real displacement coordinate.
    pub box_half_width: f64,
    pub max_iterations: usize,
}

impl Default for ChSettings {
    fn default() -> Self {
        Self { starts: 24, seed: 0, box_half_width: 2.0, max_iterations: 2000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ChResult {
    pub value: f64,
    pub alpha: [Complex64; 2],
    pub beta: [Complex64; 2],
    pub evaluations: usize,
    pub converged_starts: usize,
}

/// Flat element list with precomputed factorial roots, so one objective
/// evaluation is a short linear pass.
struct Elements {
    entries: Vec<(u8, u8, u8, u8, Complex64)>,
    inv_sqrt_fact: Vec<f64>,
}

impl Elements {
    fn new(rho: &FockDensity) -> Self {
        assert_eq!(rho.labels.len(), 2, "CH is defined for a two-mode state");
        let mut entries = Vec::with_capacity(rho.elements.len());
        let mut top = 0u8;
        for ((s, t), v) in &rho.elements {
            entries.push((s[0], s[1], t[0], t[1], *v));
            top = top.max(s[0]).max(s[1]).max(t[0]).max(t[1]);
        }
        let mut inv_sqrt_fact = vec![1.0; usize::from(top) + 1];
        for n in 1..inv_sqrt_fact.len() {
            inv_sqrt_fact[n] = inv_sqrt_fact[n - 1] / (n as f64).sqrt();
        }
        Self { entries, inv_sqrt_fact }
    }

    /// <alpha|n> = e^{-|alpha|^2/2} conj(alpha)^n / sqrt(n!).
    fn coherent_row(&self, alpha: Complex64) -> Vec<Complex64> {
        let gauss = (-0.5 * alpha.norm_sqr()).exp();
        let mut row = Vec::with_capacity(self.inv_sqrt_fact.len());
        let mut pow = Complex64::new(1.0, 0.0);
        for inv in &self.inv_sqrt_fact {
            row.push(pow * gauss * inv);
            pow *= alpha.conj();
        }
        row
    }

    /// Joint no-click probability <alpha, beta| rho |alpha, beta>.
    fn joint(&self, da: &[Complex64], db: &[Complex64]) -> f64 {
        self.entries
            .iter()
            .map(|&(s0, s1, t0, t1, v)| {
                let c_s = da[usize::from(s0)] * db[usize::from(s1)];
                let c_t = da[usize::from(t0)] * db[usize::from(t1)];
                (v * c_s * c_t.conj()).re
            })
            .sum()
    }

    /// No-click marginal of one side; `side` picks which mode the detector
    /// watches while the other is summed over.
    fn marginal(&self, d: &[Complex64], side: usize) -> f64 {
        self.entries
            .iter()
            .filter(|&&(s0, s1, t0, t1, _)| if side == 0 { s1 == t1 } else { s0 == t0 })
            .map(|&(s0, s1, t0, t1, v)| {
                let (sn, tn) = if side == 0 { (s0, t0) } else { (s1, t1) };
                (v * d[usize::from(sn)] * d[usize::from(tn)].conj()).re
            })
            .sum()
    }

    fn ch(&self, alpha: [Complex64; 2], beta: [Complex64; 2]) -> f64 {
        let da: Vec<Vec<Complex64>> = alpha.iter().map(|&a| self.coherent_row(a)).collect();
        let db: Vec<Vec<Complex64>> = beta.iter().map(|&b| self.coherent_row(b)).collect();
        self.joint(&da[0], &db[0]) + self.joint(&da[0], &db[1]) + self.joint(&da[1], &db[0])
            - self.joint(&da[1], &db[1])
            - self.marginal(&da[0], 0)
            - self.marginal(&db[0], 1)
    }
}

/// CH combination at explicit detector displacements.
pub fn ch_value(rho: &FockDensity, alpha: [Complex64; 2], beta: [Complex64; 2]) -> f64 {
    Elements::new(rho).ch(alpha, beta)
}

fn unpack_params(x: &[f64]) -> ([Complex64; 2], [Complex64; 2]) {
    (
        [Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3])],
        [Complex64::new(x[4], x[5]), Complex64::new(x[6], x[7])],
    )
}

/// Minimize the CH combination over the four complex displacements.
/// Deterministic for a fixed seed.
pub fn ch_min(rho: &FockDensity, settings: &ChSettings) -> Result<ChResult, FockError> {
    let elements = Elements::new(rho);
    let objective = |x: &[f64]| {
        let (alpha, beta) = unpack_params(x);
        elements.ch(alpha, beta)
    };
    let spec = MultistartSpec {
        starts: settings.starts,
        seed: settings.seed,
        max_iterations: settings.max_iterations,
        ..MultistartSpec::symmetric_box(8, settings.box_half_width)
    };
    let result = minimize_multistart(objective, 8, &spec);
    if result.converged_starts == 0 {
        return Err(FockError::ChNotConverged { best: result.value });
    }
    let (alpha, beta) = unpack_params(&result.x);
    Ok(ChResult {
        value: result.value,
        alpha,
        beta,
        evaluations: result.evaluations,
        converged_starts: result.converged_starts,
    })
}
