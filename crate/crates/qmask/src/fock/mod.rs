//! Truncated Fock-space engine for non-Gaussian inputs and photon-counting
//! observables: joint photon-number distributions, single-photon channel
//! decompositions, Hong-Ou-Mandel coincidences, and CH-inequality
//! minimization over displaced on/off detectors.
//!
//! States are sparse maps from occupation tuples to complex amplitudes. A
//! transfer matrix `J` acts by substituting every input creation operator,
//! `a^dag_in,j -> sum_k J_kj a'^dag_k`, and expanding the resulting polynomial
//! on the vacuum; total photon number is conserved ket by ket, so the
//! expansion is exact on the truncated component.

mod ch;

pub use ch::{ch_min, ch_value, ChResult, ChSettings};

use crate::dilation::{ModeLabel, TransferMatrix};
use crate::numerics::laguerre_assoc;
use num_complex::Complex64;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::BuildHasherDefault;
use thiserror::Error;

/// Accumulation map with a fixed-seed hasher: iteration order, and therefore
/// the last-ulp rounding of merged amplitudes, is reproducible across runs.
type AmpMap = HashMap<u128, Complex64, BuildHasherDefault<DefaultHasher>>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum FockError {
    #[error("mode {0} is not part of this state")]
    UnknownLabel(ModeLabel),
    #[error("mode {0} appears in more than one factor state")]
    LabelCollision(ModeLabel),
    #[error("state and transfer matrix disagree on mode {0}")]
    LabelMismatch(ModeLabel),
    #[error("total photon number {needed} exceeds the cutoff {cutoff}")]
    CutoffExceeded { needed: u32, cutoff: u32 },
    #[error("CH minimization did not converge from any start; best value {best}")]
    ChNotConverged { best: f64 },
}

/// Pure state on an ordered mode list, stored as occupation tuple -> amplitude.
/// Truncation may discard weight, so the squared norm is <= 1, never
/// renormalized here.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector {
    pub labels: Vec<ModeLabel>,
    pub amplitudes: BTreeMap<Vec<u8>, Complex64>,
    pub cutoff: u32,
}

/// Density operator in the same sparse occupation basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FockDensity {
    pub labels: Vec<ModeLabel>,
    pub elements: BTreeMap<(Vec<u8>, Vec<u8>), Complex64>,
    pub cutoff: u32,
}

fn total(occ: &[u8]) -> u32 {
    occ.iter().map(|&n| u32::from(n)).sum()
}

impl FockVector {
    pub fn vacuum(labels: &[ModeLabel], cutoff: u32) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(vec![0; labels.len()], Complex64::new(1.0, 0.0));
        Self { labels: labels.to_vec(), amplitudes, cutoff }
    }

    /// Basis ket with the given occupations.
    pub fn single(labels: &[ModeLabel], occupations: &[u8], cutoff: u32) -> Self {
        assert_eq!(labels.len(), occupations.len());
        assert!(total(occupations) <= cutoff, "occupation exceeds cutoff");
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(occupations.to_vec(), Complex64::new(1.0, 0.0));
        Self { labels: labels.to_vec(), amplitudes, cutoff }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, occupations: &[u8]) -> Complex64 {
        self.amplitudes.get(occupations).copied().unwrap_or(ZERO)
    }

    pub fn index_of(&self, label: ModeLabel) -> Result<usize, FockError> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(FockError::UnknownLabel(label))
    }
}

impl FockDensity {
    pub fn trace(&self) -> f64 {
        self.elements
            .iter()
            .filter(|((s, t), _)| s == t)
            .map(|(_, v)| v.re)
            .sum()
    }

    pub fn element(&self, bra: &[u8], ket: &[u8]) -> Complex64 {
        self.elements
            .get(&(bra.to_vec(), ket.to_vec()))
            .copied()
            .unwrap_or(ZERO)
    }

    pub fn index_of(&self, label: ModeLabel) -> Result<usize, FockError> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(FockError::UnknownLabel(label))
    }

    /// Largest deviation from Hermitian symmetry, for sanity checks.
    pub fn hermiticity_defect(&self) -> f64 {
        self.elements
            .iter()
            .map(|((s, t), v)| (*v - self.element(t, s).conj()).norm())
            .fold(0.0, f64::max)
    }
}

/// Single-mode squeezed vacuum up to `n_max` photons: even amplitudes
/// `c_2n = (-e^{i theta} tanh r)^n sqrt((2n)!) / (2^n n!) / sqrt(cosh r)`.
pub fn squeezed_vacuum_fock(label: ModeLabel, r: f64, theta: f64, n_max: u32) -> FockVector {
    assert!(n_max % 2 == 0, "cutoff must be even for a squeezed vacuum");
    let fact = factorials(n_max as usize);
    let base = -Complex64::from_polar(r.tanh(), theta);
    let mut amplitudes = BTreeMap::new();
    let mut pow = Complex64::new(1.0, 0.0);
    for n in 0..=(n_max / 2) {
        let c = pow * fact[(2 * n) as usize].sqrt()
            / (2f64.powi(n as i32) * fact[n as usize] * r.cosh().sqrt());
        amplitudes.insert(vec![(2 * n) as u8], c);
        pow *= base;
    }
    FockVector { labels: vec![label], amplitudes, cutoff: n_max }
}

/// Tensor product of pure states on disjoint modes. The cutoff adds; callers
/// usually follow with [`truncate_total`].
pub fn product(states: &[FockVector]) -> Result<FockVector, FockError> {
    let mut labels: Vec<ModeLabel> = Vec::new();
    for s in states {
        for &l in &s.labels {
            if labels.contains(&l) {
                return Err(FockError::LabelCollision(l));
            }
            labels.push(l);
        }
    }
    let mut amplitudes = BTreeMap::new();
    amplitudes.insert(Vec::new(), Complex64::new(1.0, 0.0));
    let mut cutoff = 0;
    for s in states {
        let mut next = BTreeMap::new();
        for (occ, amp) in &amplitudes {
            for (tail, tail_amp) in &s.amplitudes {
                let mut key = occ.clone();
                key.extend_from_slice(tail);
                next.insert(key, amp * tail_amp);
            }
        }
        amplitudes = next;
        cutoff += s.cutoff;
    }
    Ok(FockVector { labels, amplitudes, cutoff })
}

/// Drop every ket whose total photon number exceeds `n_max`. Weight is lost,
/// not renormalized.
pub fn truncate_total(state: &FockVector, n_max: u32) -> FockVector {
    let amplitudes = state
        .amplitudes
        .iter()
        .filter(|(occ, _)| total(occ) <= n_max)
        .map(|(occ, amp)| (occ.clone(), *amp))
        .collect();
    FockVector { labels: state.labels.clone(), amplitudes, cutoff: n_max }
}

fn factorials(n_max: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(n_max + 1);
    f.push(1.0);
    for n in 1..=n_max {
        f.push(f[n - 1] * n as f64);
    }
    f
}

fn unpack(key: u128, dim: usize) -> Vec<u8> {
    (0..dim).map(|k| ((key >> (8 * k)) & 0xff) as u8).collect()
}

/// All ways to distribute `n` quanta of one input mode over the output modes,
/// as (packed occupation delta, coefficient). The coefficient is
/// `sqrt(n!) prod_k col_k^{m_k} / m_k!`, i.e. the substitution weight for one
/// normalized input factor; modes with a zero matrix entry are skipped.
fn compositions(n: u8, col: &[Complex64], fact: &[f64]) -> Vec<(u128, Complex64)> {
    let mut out = Vec::new();
    let scale = fact[n as usize].sqrt();
    let mut stack: Vec<(usize, u8, u128, Complex64)> =
        vec![(0, n, 0, Complex64::new(scale, 0.0))];
    while let Some((k, remaining, delta, coeff)) = stack.pop() {
        if k == col.len() - 1 {
            if col[k] == ZERO && remaining > 0 {
                continue;
            }
            let c = coeff * col[k].powu(u32::from(remaining)) / fact[remaining as usize];
            out.push((delta | u128::from(remaining) << (8 * k), c));
            continue;
        }
        let top = if col[k] == ZERO { 0 } else { remaining };
        for m in 0..=top {
            let c = coeff * col[k].powu(u32::from(m)) / fact[m as usize];
            stack.push((k + 1, remaining - m, delta | u128::from(m) << (8 * k), c));
        }
    }
    out
}

/// Propagate a pure state through a transfer matrix. The state must cover all
/// signal modes of `t` (absorption modes it omits are fed vacuum); output
/// modes carry `t`'s labels in `t`'s order. Unitary `t` preserves the norm.
pub fn apply_transfer_fock(
    state: &FockVector,
    t: &TransferMatrix,
) -> Result<FockVector, FockError> {
    let dim = t.dim();
    assert!(dim <= 16, "occupation keys are packed 8 bits per mode");
    let mut position = Vec::with_capacity(state.labels.len());
    for &l in &state.labels {
        position.push(t.index_of(l).ok_or(FockError::LabelMismatch(l))?);
    }
    let max_total = state.amplitudes.keys().map(|occ| total(occ)).max().unwrap_or(0);
    if max_total > state.cutoff {
        return Err(FockError::CutoffExceeded { needed: max_total, cutoff: state.cutoff });
    }

    let fact = factorials(max_total as usize);
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .map(|j| (0..dim).map(|k| t.matrix[(k, j)]).collect())
        .collect();
    let mut comp_cache: HashMap<(usize, u8), Vec<(u128, Complex64)>> = HashMap::new();

    let mut accumulated = AmpMap::default();
    for (occ, &amp) in &state.amplitudes {
        let mut table = AmpMap::default();
        table.insert(0, amp);
        for (i, &n) in occ.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let j = position[i];
            let deltas = comp_cache
                .entry((j, n))
                .or_insert_with(|| compositions(n, &columns[j], &fact));
            let mut next = AmpMap::with_capacity_and_hasher(
                table.len() * deltas.len(),
                Default::default(),
            );
            for (&key, &coeff) in &table {
                for &(delta, dcoeff) in deltas.iter() {
                    *next.entry(key + delta).or_insert(ZERO) += coeff * dcoeff;
                }
            }
            table = next;
        }
        for (key, coeff) in table {
            *accumulated.entry(key).or_insert(ZERO) += coeff;
        }
    }

    let mut amplitudes = BTreeMap::new();
    for (key, coeff) in accumulated {
        let occ = unpack(key, dim);
        let boost: f64 = occ.iter().map(|&n| fact[n as usize].sqrt()).product();
        amplitudes.insert(occ, coeff * boost);
    }
    let out = FockVector { labels: t.labels.clone(), amplitudes, cutoff: state.cutoff };
    debug_assert!(out.norm_sqr() <= state.norm_sqr() + 1e-9);
    Ok(out)
}

/// Outer product |psi><psi|. Quadratic in the number of kets; intended for
/// small vectors (use [`reduced_density`] to go from a large pure state
/// straight to a few-mode density).
pub fn to_density(state: &FockVector) -> FockDensity {
    let mut elements = BTreeMap::new();
    for (s, a) in &state.amplitudes {
        for (t, b) in &state.amplitudes {
            elements.insert((s.clone(), t.clone()), a * b.conj());
        }
    }
    FockDensity { labels: state.labels.clone(), elements, cutoff: state.cutoff }
}

fn split_key(occ: &[u8], keep_idx: &[usize], env_idx: &[usize]) -> (Vec<u8>, Vec<u8>) {
    (
        keep_idx.iter().map(|&i| occ[i]).collect(),
        env_idx.iter().map(|&i| occ[i]).collect(),
    )
}

/// Reduced density of a pure state on the kept modes, tracing out the rest:
/// kets are grouped by environment occupation and each group contributes one
/// conditional outer product.
pub fn reduced_density(
    state: &FockVector,
    keep: &[ModeLabel],
) -> Result<FockDensity, FockError> {
    let keep_idx: Vec<usize> = keep
        .iter()
        .map(|&l| state.index_of(l))
        .collect::<Result<_, _>>()?;
    let env_idx: Vec<usize> = (0..state.labels.len())
        .filter(|i| !keep_idx.contains(i))
        .collect();

    let mut groups: BTreeMap<Vec<u8>, Vec<(Vec<u8>, Complex64)>> = BTreeMap::new();
    for (occ, &amp) in &state.amplitudes {
        let (kept, env) = split_key(occ, &keep_idx, &env_idx);
        groups.entry(env).or_default().push((kept, amp));
    }
    let mut elements = BTreeMap::new();
    for members in groups.values() {
        for (s, a) in members {
            for (t, b) in members {
                *elements
                    .entry((s.clone(), t.clone()))
                    .or_insert(ZERO) += a * b.conj();
            }
        }
    }
    Ok(FockDensity { labels: keep.to_vec(), elements, cutoff: state.cutoff })
}

/// Trace a density down to the kept modes by summing elements whose discarded
/// occupations match.
pub fn partial_trace_fock(
    rho: &FockDensity,
    keep: &[ModeLabel],
) -> Result<FockDensity, FockError> {
    let keep_idx: Vec<usize> = keep
        .iter()
        .map(|&l| rho.index_of(l))
        .collect::<Result<_, _>>()?;
    let env_idx: Vec<usize> = (0..rho.labels.len())
        .filter(|i| !keep_idx.contains(i))
        .collect();
    let mut elements = BTreeMap::new();
    for ((s, t), v) in &rho.elements {
        let (s_keep, s_env) = split_key(s, &keep_idx, &env_idx);
        let (t_keep, t_env) = split_key(t, &keep_idx, &env_idx);
        if s_env == t_env {
            *elements.entry((s_keep, t_keep)).or_insert(ZERO) += v;
        }
    }
    Ok(FockDensity { labels: keep.to_vec(), elements, cutoff: rho.cutoff })
}

/// Joint photon-number table of two modes, marginalized over the other kept
/// modes. Probabilities sum to the (possibly truncated) trace.
#[derive(Clone, Debug, Default)]
pub struct JointDistribution {
    pub probabilities: BTreeMap<(u8, u8), f64>,
}

impl JointDistribution {
    pub fn probability(&self, n_i: u8, n_j: u8) -> f64 {
        self.probabilities.get(&(n_i, n_j)).copied().unwrap_or(0.0)
    }

    pub fn mass(&self) -> f64 {
        self.probabilities.values().sum()
    }

    /// Covariance of the two photon numbers under the table normalized to
    /// unit mass.
    pub fn covariance(&self) -> f64 {
        let mass = self.mass();
        assert!(mass > 0.0, "empty distribution");
        let mut mi = 0.0;
        let mut mj = 0.0;
        let mut mij = 0.0;
        for (&(ni, nj), &p) in &self.probabilities {
            mi += f64::from(ni) * p;
            mj += f64::from(nj) * p;
            mij += f64::from(ni) * f64::from(nj) * p;
        }
        mij / mass - (mi / mass) * (mj / mass)
    }
}

pub fn joint_distribution(
    rho: &FockDensity,
    mode_i: ModeLabel,
    mode_j: ModeLabel,
) -> Result<JointDistribution, FockError> {
    let i = rho.index_of(mode_i)?;
    let j = rho.index_of(mode_j)?;
    let mut probabilities = BTreeMap::new();
    for ((s, t), v) in &rho.elements {
        if s == t {
            *probabilities.entry((s[i], s[j])).or_insert(0.0) += v.re;
        }
    }
    Ok(JointDistribution { probabilities })
}

/// Same table computed directly from a pure state, without building the
/// density: P(n, n') = sum over environment occupations of |amplitude|^2.
pub fn joint_distribution_pure(
    state: &FockVector,
    mode_i: ModeLabel,
    mode_j: ModeLabel,
) -> Result<JointDistribution, FockError> {
    let i = state.index_of(mode_i)?;
    let j = state.index_of(mode_j)?;
    let mut probabilities = BTreeMap::new();
    for (occ, amp) in &state.amplitudes {
        *probabilities.entry((occ[i], occ[j])).or_insert(0.0) += amp.norm_sqr();
    }
    Ok(JointDistribution { probabilities })
}

/// Photon-number covariance of two modes from the joint table.
pub fn photon_cov_fock(
    rho: &FockDensity,
    mode_i: ModeLabel,
    mode_j: ModeLabel,
) -> Result<f64, FockError> {
    Ok(joint_distribution(rho, mode_i, mode_j)?.covariance())
}

/// Send one photon into `input` and reduce to the signal modes: the result is
/// vacuum with weight `1 - sum_k |J_k,in|^2` plus the normalized one-photon
/// superposition with amplitudes proportional to the matrix column. Returns
/// (vacuum weight, normalized superposition); an all-absorbing transfer gives
/// weight 1 and an empty vector.
pub fn single_photon_output(
    t: &TransferMatrix,
    input: ModeLabel,
) -> Result<(f64, FockVector), FockError> {
    let j = t.index_of(input).ok_or(FockError::UnknownLabel(input))?;
    assert!(j < t.signal_dim, "input must be a signal mode");
    let n_sig = t.signal_dim;
    let column: Vec<Complex64> = (0..n_sig).map(|k| t.matrix[(k, j)]).collect();
    let weight: f64 = column.iter().map(|c| c.norm_sqr()).sum();
    let vacuum_weight = 1.0 - weight;
    let labels = t.signal_labels().to_vec();
    let mut amplitudes = BTreeMap::new();
    if weight > 1e-300 {
        for (k, c) in column.iter().enumerate() {
            if *c != ZERO {
                let mut occ = vec![0u8; n_sig];
                occ[k] = 1;
                amplitudes.insert(occ, c / weight.sqrt());
            }
        }
    }
    Ok((vacuum_weight, FockVector { labels, amplitudes, cutoff: 1 }))
}

/// Coincidence probability for one photon in each of the first two signal
/// modes, from the engine and from the matrix-element closed form.
#[derive(Clone, Copy, Debug)]
pub struct Coincidence {
    pub engine: f64,
    pub closed_form: f64,
}

/// Two-photon coincidence after the transfer. Indistinguishable photons enter
/// together as |1,1> and interfere (two-path amplitude sum); distinguishable
/// photons are two independent single-photon runs combined at the probability
/// level.
pub fn hom_coincidence(
    t: &TransferMatrix,
    distinguishable: bool,
) -> Result<Coincidence, FockError> {
    assert!(t.signal_dim >= 2, "needs two signal modes");
    let dim = t.dim();
    let (j00, j01) = (t.matrix[(0, 0)], t.matrix[(0, 1)]);
    let (j10, j11) = (t.matrix[(1, 0)], t.matrix[(1, 1)]);

    let one_at = |k: usize| -> Vec<u8> {
        let mut occ = vec![0u8; dim];
        occ[k] = 1;
        occ
    };

    if distinguishable {
        let closed_form = (j00 * j11).norm_sqr() + (j01 * j10).norm_sqr();
        // Two separate single-photon runs; coincidence = one lands in each mode.
        let mut lands = [[0.0; 2]; 2];
        for (run, input) in [0usize, 1].into_iter().enumerate() {
            let state = FockVector::single(&t.labels, &one_at(input), 2);
            let out = apply_transfer_fock(&state, t)?;
            for k in 0..2 {
                lands[run][k] = out.amplitude(&one_at(k)).norm_sqr();
            }
        }
        let engine = lands[0][0] * lands[1][1] + lands[0][1] * lands[1][0];
        Ok(Coincidence { engine, closed_form })
    } else {
        let closed_form = (j00 * j11 + j01 * j10).norm_sqr();
        let mut occ = vec![0u8; dim];
        occ[0] = 1;
        occ[1] = 1;
        let state = FockVector::single(&t.labels, &occ, 2);
        let out = apply_transfer_fock(&state, t)?;
        let engine = out.amplitude(&occ).norm_sqr();
        Ok(Coincidence { engine, closed_form })
    }
}

/// Wigner function of the n-photon Fock state at one phase-space point,
/// for n in {0, 1}.
pub fn wigner_fock(n: u8, q: f64, p: f64) -> f64 {
    assert!(n <= 1, "only vacuum and single-photon profiles are provided");
    let s = q * q + p * p;
    let gauss = (-s).exp() / std::f64::consts::PI;
    match n {
        0 => gauss,
        _ => -gauss * laguerre_assoc(1, 0.0, 2.0 * s),
    }
}
