//! Gaussian-state engine: squeezed/displaced states as quadrature means and
//! covariances, exact propagation through a transfer matrix, and the derived
//! observables (homodyne noise, squeeze/antisqueeze levels, photon-number
//! covariance, Wigner grids).
//!
//! Conventions: `a = (q + i p) / sqrt(2)`, vacuum covariance `I/2`, mean vector
//! ordered `(q_1..q_M, p_1..p_M)`. A transfer matrix `U` acts by substituting
//! input quadratures with output ones,
//!
//! ```text
//! q_in = Re(U) q_out - Im(U) p_out,      p_in = Re(U) p_out + Im(U) q_out,
//! ```
//!
//! i.e. `x_in = R(U) x_out` with the orthogonal `R(U) = [[Re U, -Im U], [Im U, Re U]]`,
//! giving `V_out = R(U)^T V_in R(U)` and the same map for means. Noise levels in
//! dB are `10 log10(Var / (1/2))`.

use crate::dilation::{DilationError, ModeLabel, TransferMatrix};
use crate::grid::Grid2;
use crate::mask::{self, MaskError, MaskSpec};
use crate::modes::BeamGeometry;
use crate::numerics::{minimize_scalar, QuadratureSpec};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Squeezing and displacement of a single-mode input state: squeeze parameter
/// `xi = r e^{i theta}` followed by displacement `alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeSpec {
    pub r: f64,
    pub theta: f64,
    pub alpha: Complex64,
}

impl SqueezeSpec {
    pub fn vacuum() -> Self {
        Self { r: 0.0, theta: 0.0, alpha: Complex64::new(0.0, 0.0) }
    }

    pub fn squeezed(r: f64, theta: f64) -> Self {
        Self { r, theta, alpha: Complex64::new(0.0, 0.0) }
    }
}

/// Gaussian state over an ordered list of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    pub labels: Vec<ModeLabel>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("mode {0} appears in more than one factor state")]
    LabelCollision(ModeLabel),
    #[error("state and transfer matrix disagree on mode {0}")]
    LabelMismatch(ModeLabel),
    #[error("mode {0} is not part of this state")]
    UnknownLabel(ModeLabel),
    #[error("local-oscillator vector is zero")]
    ZeroVector,
    #[error("state has nonzero mean (norm {norm:.3e}); photon-number covariance here assumes squeezed-vacuum-class states")]
    NonZeroMean { norm: f64 },
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Dilation(#[from] DilationError),
}

impl GaussianState {
    pub fn mode_count(&self) -> usize {
        self.labels.len()
    }

    pub fn index_of(&self, label: ModeLabel) -> Result<usize, GaussianError> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or(GaussianError::UnknownLabel(label))
    }

    /// 2x2 covariance block of one mode, rows/cols ordered (q, p).
    pub fn mode_cov(&self, label: ModeLabel) -> Result<[[f64; 2]; 2], GaussianError> {
        let i = self.index_of(label)?;
        let m = self.mode_count();
        Ok([
            [self.cov[(i, i)], self.cov[(i, m + i)]],
            [self.cov[(m + i, i)], self.cov[(m + i, m + i)]],
        ])
    }

    pub fn mode_mean(&self, label: ModeLabel) -> Result<(f64, f64), GaussianError> {
        let i = self.index_of(label)?;
        let m = self.mode_count();
        Ok((self.mean[i], self.mean[m + i]))
    }

    /// Mean photon number of one mode, `(Var q + Var p + qbar^2 + pbar^2 - 1)/2`.
    pub fn mean_photons(&self, label: ModeLabel) -> Result<f64, GaussianError> {
        let c = self.mode_cov(label)?;
        let (qb, pb) = self.mode_mean(label)?;
        Ok(0.5 * (c[0][0] + c[1][1] + qb * qb + pb * pb - 1.0))
    }

    pub fn total_mean_photons(&self) -> f64 {
        self.labels
            .iter()
            .map(|&l| self.mean_photons(l).expect("own label"))
            .sum()
    }

    /// Gaussian purity `1 / (2^M sqrt(det V))`; 1 for pure states.
    pub fn purity(&self) -> f64 {
        let m = self.mode_count() as i32;
        1.0 / (2f64.powi(m) * self.cov.determinant().sqrt())
    }

    /// Smallest eigenvalue of `V + (i/2) Omega`; nonnegative (up to round-off)
    /// exactly when the state satisfies the uncertainty bound.
    pub fn uncertainty_defect(&self) -> f64 {
        let m = self.mode_count();
        let n = 2 * m;
        let mut vc = DMatrix::from_fn(n, n, |i, j| Complex64::new(self.cov[(i, j)], 0.0));
        for k in 0..m {
            // [q_k, p_k] = i: Omega has +1 in the (q_k, p_k) slot.
            vc[(k, m + k)] += Complex64::new(0.0, 0.5);
            vc[(m + k, k)] -= Complex64::new(0.0, 0.5);
        }
        let eig = nalgebra::SymmetricEigen::new(vc);
        eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Vacuum on the given modes: zero mean, covariance I/2.
pub fn vacuum(labels: &[ModeLabel]) -> GaussianState {
    let n = 2 * labels.len();
    GaussianState {
        labels: labels.to_vec(),
        mean: DVector::zeros(n),
        cov: DMatrix::identity(n, n) * 0.5,
    }
}

/// Single-mode displaced squeezed state. The covariance is
/// `R(theta/2) diag(e^{-2r}, e^{2r})/2 R(theta/2)^T`: at `theta = 0` the q
/// quadrature is the squeezed one. The mean is `(sqrt2 Re alpha, sqrt2 Im alpha)`.
pub fn displaced_squeezed(label: ModeLabel, spec: &SqueezeSpec) -> GaussianState {
    assert!(spec.r >= 0.0, "squeeze magnitude must be nonnegative");
    let (c, s) = ((spec.theta / 2.0).cos(), (spec.theta / 2.0).sin());
    let (lo, hi) = (0.5 * (-2.0 * spec.r).exp(), 0.5 * (2.0 * spec.r).exp());
    let cov = DMatrix::from_row_slice(
        2,
        2,
        &[
            c * c * lo + s * s * hi,
            c * s * (lo - hi),
            c * s * (lo - hi),
            s * s * lo + c * c * hi,
        ],
    );
    GaussianState {
        labels: vec![label],
        mean: DVector::from_column_slice(&[
            std::f64::consts::SQRT_2 * spec.alpha.re,
            std::f64::consts::SQRT_2 * spec.alpha.im,
        ]),
        cov,
    }
}

/// Tensor product of independent states: block sum of means and covariances.
pub fn product(states: &[GaussianState]) -> Result<GaussianState, GaussianError> {
    let mut labels: Vec<ModeLabel> = Vec::new();
    for s in states {
        for &l in &s.labels {
            if labels.contains(&l) {
                return Err(GaussianError::LabelCollision(l));
            }
            labels.push(l);
        }
    }
    let m_total = labels.len();
    let mut mean = DVector::zeros(2 * m_total);
    let mut cov = DMatrix::zeros(2 * m_total, 2 * m_total);
    let mut offset = 0;
    for s in states {
        let m = s.mode_count();
        for a in 0..m {
            mean[offset + a] = s.mean[a];
            mean[m_total + offset + a] = s.mean[m + a];
            for b in 0..m {
                cov[(offset + a, offset + b)] = s.cov[(a, b)];
                cov[(offset + a, m_total + offset + b)] = s.cov[(a, m + b)];
                cov[(m_total + offset + a, offset + b)] = s.cov[(m + a, b)];
                cov[(m_total + offset + a, m_total + offset + b)] = s.cov[(m + a, m + b)];
            }
        }
        offset += m;
    }
    Ok(GaussianState { labels, mean, cov })
}

/// The orthogonal phase-space map `R(U) = [[Re U, -Im U], [Im U, Re U]]`.
pub fn phase_space_map(u: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = u[(i, j)].re;
            m[(i, n + j)] = -u[(i, j)].im;
            m[(n + i, j)] = u[(i, j)].im;
            m[(n + i, n + j)] = u[(i, j)].re;
        }
    }
    m
}

/// Propagate a Gaussian state through a transfer matrix. The state must cover
/// every signal mode of `t`; absorption modes it does not mention are fed
/// vacuum automatically. Output modes carry `t`'s labels in `t`'s order.
pub fn apply_transfer(
    s: &GaussianState,
    t: &TransferMatrix,
) -> Result<GaussianState, GaussianError> {
    for &l in &s.labels {
        if t.index_of(l).is_none() {
            return Err(GaussianError::LabelMismatch(l));
        }
    }
    let n = t.dim();
    // Assemble the input in t's label order, vacuum-padding absorption modes.
    let mut mean = DVector::zeros(2 * n);
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    let m_in = s.mode_count();
    let mut source: Vec<Option<usize>> = Vec::with_capacity(n);
    for (k, &label) in t.labels.iter().enumerate() {
        match s.labels.iter().position(|&l| l == label) {
            Some(i) => source.push(Some(i)),
            None => {
                if matches!(label, ModeLabel::Signal(_)) {
                    return Err(GaussianError::LabelMismatch(label));
                }
                source.push(None);
                cov[(k, k)] = 0.5;
                cov[(n + k, n + k)] = 0.5;
            }
        }
    }
    for (k1, src1) in source.iter().enumerate() {
        let Some(i1) = src1 else { continue };
        mean[k1] = s.mean[*i1];
        mean[n + k1] = s.mean[m_in + *i1];
        for (k2, src2) in source.iter().enumerate() {
            let Some(i2) = src2 else { continue };
            cov[(k1, k2)] = s.cov[(*i1, *i2)];
            cov[(k1, n + k2)] = s.cov[(*i1, m_in + *i2)];
            cov[(n + k1, k2)] = s.cov[(m_in + *i1, *i2)];
            cov[(n + k1, n + k2)] = s.cov[(m_in + *i1, m_in + *i2)];
        }
    }

    let m = phase_space_map(&t.matrix);
    let mean_out = m.transpose() * mean;
    let mut cov_out = m.transpose() * cov * &m;
    // Symmetrize away round-off.
    for i in 0..2 * n {
        for j in (i + 1)..2 * n {
            let v = 0.5 * (cov_out[(i, j)] + cov_out[(j, i)]);
            cov_out[(i, j)] = v;
            cov_out[(j, i)] = v;
        }
    }
    Ok(GaussianState { labels: t.labels.clone(), mean: mean_out, cov: cov_out })
}

/// Keep only the listed modes (result ordered as `keep`), dropping the rest.
pub fn partial_trace(
    s: &GaussianState,
    keep: &[ModeLabel],
) -> Result<GaussianState, GaussianError> {
    let m_in = s.mode_count();
    let mut idx = Vec::with_capacity(keep.len());
    for &label in keep {
        idx.push(s.index_of(label)?);
    }
    let m = keep.len();
    let mut mean = DVector::zeros(2 * m);
    let mut cov = DMatrix::zeros(2 * m, 2 * m);
    for (a, &i) in idx.iter().enumerate() {
        mean[a] = s.mean[i];
        mean[m + a] = s.mean[m_in + i];
        for (b, &j) in idx.iter().enumerate() {
            cov[(a, b)] = s.cov[(i, j)];
            cov[(a, m + b)] = s.cov[(i, m_in + j)];
            cov[(m + a, b)] = s.cov[(m_in + i, j)];
            cov[(m + a, m + b)] = s.cov[(m_in + i, m_in + j)];
        }
    }
    Ok(GaussianState { labels: keep.to_vec(), mean, cov })
}

/// Variance of the rotated quadrature `cos(t) q_v + sin(t) p_v` of the mode
/// defined by the normalized vector `v` over the state's modes.
fn projected_quadrature_covariance(
    s: &GaussianState,
    v: &[Complex64],
) -> [[f64; 2]; 2] {
    let m = s.mode_count();
    // q_v = sum_j (Re v_j q_j + Im v_j p_j); p_v = sum_j (Re v_j p_j - Im v_j q_j).
    let mut fq = DVector::zeros(2 * m);
    let mut fp = DVector::zeros(2 * m);
    for (j, vj) in v.iter().enumerate() {
        fq[j] = vj.re;
        fq[m + j] = vj.im;
        fp[j] = -vj.im;
        fp[m + j] = vj.re;
    }
    let qq = (&s.cov * &fq).dot(&fq);
    let pp = (&s.cov * &fp).dot(&fp);
    let qp = (&s.cov * &fp).dot(&fq);
    [[qq, qp], [qp, pp]]
}

fn eigenvalues_2x2(c: &[[f64; 2]; 2]) -> (f64, f64) {
    let tr = c[0][0] + c[1][1];
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 - disc, tr / 2.0 + disc)
}

fn to_db(variance: f64) -> f64 {
    10.0 * (variance / 0.5).log10()
}

/// Minimum homodyne noise, in dB relative to vacuum, measured in the spatial
/// mode given by `lo` (pairs of mode label and complex LO amplitude). The LO
/// normalization and global phase drop out.
pub fn homodyne_min_noise(
    s: &GaussianState,
    lo: &[(ModeLabel, Complex64)],
) -> Result<f64, GaussianError> {
    let norm_sq: f64 = lo.iter().map(|(_, a)| a.norm_sqr()).sum();
    if norm_sq < 1e-24 {
        return Err(GaussianError::ZeroVector);
    }
    let mut v = vec![Complex64::new(0.0, 0.0); s.mode_count()];
    for &(label, a) in lo {
        let i = s.index_of(label)?;
        v[i] += a / norm_sq.sqrt();
    }
    let block = projected_quadrature_covariance(s, &v);
    let (lo_eig, _) = eigenvalues_2x2(&block);
    Ok(to_db(lo_eig))
}

/// Squeeze and antisqueeze levels of a single mode: both eigenvalues of its
/// quadrature covariance block, in dB relative to vacuum. Pure squeezed states
/// give a symmetric pair; loss-degraded states do not.
pub fn squeeze_antisqueeze(
    s: &GaussianState,
    label: ModeLabel,
) -> Result<(f64, f64), GaussianError> {
    let c = s.mode_cov(label)?;
    let (lo, hi) = eigenvalues_2x2(&c);
    Ok((to_db(lo), to_db(hi)))
}

/// Photon-number covariance `Cov(n_i, n_j)` of a zero-mean Gaussian state via
/// moment factorization: `|<a_i^dag a_j>|^2 + |<a_i a_j>|^2`.
pub fn photon_cov(
    s: &GaussianState,
    mode_i: ModeLabel,
    mode_j: ModeLabel,
) -> Result<f64, GaussianError> {
    let mean_norm = s.mean.norm();
    if mean_norm > 1e-9 {
        return Err(GaussianError::NonZeroMean { norm: mean_norm });
    }
    let i = s.index_of(mode_i)?;
    let j = s.index_of(mode_j)?;
    assert!(i != j, "photon-number covariance is defined between distinct modes");
    let m = s.mode_count();
    let (qq, pp) = (s.cov[(i, j)], s.cov[(m + i, m + j)]);
    let (qp, pq) = (s.cov[(i, m + j)], s.cov[(m + i, j)]);
    // <a_i^dag a_j> and <a_i a_j> from quadrature second moments (i != j).
    let adag_a = Complex64::new(qq + pp, qp - pq) * 0.5;
    let a_a = Complex64::new(qq - pp, qp + pq) * 0.5;
    Ok(adag_a.norm_sqr() + a_a.norm_sqr())
}

/// Wigner function of one mode on a centered square grid:
/// `W(q, p) = exp(-delta^T V^{-1} delta / 2) / (2 pi sqrt(det V))`.
pub fn wigner_grid(
    s: &GaussianState,
    label: ModeLabel,
    half_width: f64,
    n: usize,
) -> Result<Grid2, GaussianError> {
    let c = s.mode_cov(label)?;
    let (qb, pb) = s.mode_mean(label)?;
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let inv = [
        [c[1][1] / det, -c[0][1] / det],
        [-c[1][0] / det, c[0][0] / det],
    ];
    let norm = 1.0 / (std::f64::consts::TAU * det.sqrt());
    Ok(Grid2::sample(
        (-half_width, half_width),
        (-half_width, half_width),
        n,
        n,
        |q, p| {
            let (dq, dp) = (q - qb, p - pb);
            let quad = inv[0][0] * dq * dq + (inv[0][1] + inv[1][0]) * dq * dp + inv[1][1] * dp * dp;
            norm * (-0.5 * quad).exp()
        },
    ))
}

/// Minimum homodyne noise vs iris position for the two-squeezed-mode setup:
/// the local oscillator enters in the fundamental mode, both signal modes carry
/// the given squeezed inputs, and the detector sees the iris-diffracted LO
/// projected back onto the signal modes.
pub fn noise_scan(
    g: &BeamGeometry,
    inputs: &(SqueezeSpec, SqueezeSpec),
    radius: f64,
    z0_list: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<f64>, GaussianError> {
    let basis = mask::default_signal_basis();
    let mut out = Vec::with_capacity(z0_list.len());
    for &z0 in z0_list {
        let b = mask::build_coupling_matrix(g, &MaskSpec::iris(radius, z0), &basis, spec)?;
        let t = crate::dilation::dilate(&b)?;
        let signal = t.signal_labels().to_vec();

        let input = product(&[
            displaced_squeezed(signal[0], &inputs.0),
            displaced_squeezed(signal[1], &inputs.1),
        ])?;
        let reduced = partial_trace(&apply_transfer(&input, &t)?, &signal)?;

        // The LO starts in the fundamental mode; after the iris its signal-mode
        // decomposition is the corresponding row of B.
        let lo: Vec<(ModeLabel, Complex64)> = (0..basis.len())
            .map(|j| (signal[j], b.entries[(0, j)]))
            .collect();
        out.push(homodyne_min_noise(&reduced, &lo)?);
    }
    Ok(out)
}

/// Scan of the minimized quadrature variance over an explicit homodyne angle,
/// used to confirm the golden-section result against a dense sample.
pub fn min_noise_by_angle(s: &GaussianState, lo: &[(ModeLabel, Complex64)]) -> Result<f64, GaussianError> {
    let norm_sq: f64 = lo.iter().map(|(_, a)| a.norm_sqr()).sum();
    if norm_sq < 1e-24 {
        return Err(GaussianError::ZeroVector);
    }
    let mut v = vec![Complex64::new(0.0, 0.0); s.mode_count()];
    for &(label, a) in lo {
        let i = s.index_of(label)?;
        v[i] += a / norm_sq.sqrt();
    }
    let block = projected_quadrature_covariance(s, &v);
    let g = move |t: f64| {
        let (ct, st) = (t.cos(), t.sin());
        ct * ct * block[0][0] + 2.0 * ct * st * block[0][1] + st * st * block[1][1]
    };
    let (_, var) = minimize_scalar(g, 0.0, std::f64::consts::PI);
    Ok(to_db(var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::dilate;
    use crate::mask::{build_coupling_matrix, default_signal_basis};
    use crate::modes::ModeIndex;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sig(p: u32) -> ModeLabel {
        ModeLabel::Signal(ModeIndex::new(0, p))
    }

    fn iris_transfer(radius_w0: f64, z0_zr: f64) -> (crate::mask::CouplingMatrix, TransferMatrix) {
        let g = BeamGeometry::default();
        let b = build_coupling_matrix(
            &g,
            &MaskSpec::iris(radius_w0 * g.w0, z0_zr * g.rayleigh_range),
            &default_signal_basis(),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let t = dilate(&b).unwrap();
        (b, t)
    }

    fn fifty_fifty() -> TransferMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(s, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, s),
                Complex64::new(s, 0.0),
            ],
        );
        TransferMatrix::new(vec![sig(0), sig(1)], m, 2)
    }

    #[test]
    fn squeezed_state_moments() {
        let v = displaced_squeezed(sig(0), &SqueezeSpec::vacuum());
        assert!((v.cov.clone() - DMatrix::identity(2, 2) * 0.5).norm() < 1e-15);
        assert_eq!(v.mean.norm(), 0.0);

        let s = displaced_squeezed(sig(0), &SqueezeSpec::squeezed(0.3, 0.0));
        assert_relative_eq!(s.cov[(0, 0)], 0.5 * (-0.6f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(s.cov[(1, 1)], 0.5 * (0.6f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(s.purity(), 1.0, max_relative = 1e-12);

        let d = displaced_squeezed(
            sig(0),
            &SqueezeSpec { r: 0.0, theta: 0.0, alpha: Complex64::from_polar(1.5, PI) },
        );
        assert_relative_eq!(d.mean[0], -1.5 * 2f64.sqrt(), max_relative = 1e-14);
        assert!(d.mean[1].abs() < 1e-15);
    }

    #[test]
    fn squeeze_angle_rotates_principal_axes() {
        let theta = 0.325 * PI;
        let s = displaced_squeezed(sig(0), &SqueezeSpec::squeezed(0.4, theta));
        // Eigenvalues unchanged by the rotation; eigenvector of the small one
        // sits at angle -theta/2 from the q axis... the covariance is
        // R(theta/2) diag R(theta/2)^T, so rotating back by theta/2 diagonalizes.
        let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let qq = s.cov[(0, 0)];
        let qp = s.cov[(0, 1)];
        let pp = s.cov[(1, 1)];
        let back = c * c * qq + 2.0 * c * sn * qp + sn * sn * pp;
        assert_relative_eq!(back, 0.5 * (-0.8f64).exp(), max_relative = 1e-12);
        let (lo, hi) = eigenvalues_2x2(&[[qq, qp], [qp, pp]]);
        assert_relative_eq!(lo, 0.5 * (-0.8f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(hi, 0.5 * (0.8f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn product_blocks_and_collisions() {
        let two = product(&[vacuum(&[sig(0)]), vacuum(&[sig(1)])]).unwrap();
        assert_eq!(two.mode_count(), 2);
        assert!((two.cov.clone() - DMatrix::identity(4, 4) * 0.5).norm() < 1e-15);

        let err = product(&[vacuum(&[sig(0)]), vacuum(&[sig(0)])]);
        assert!(matches!(err, Err(GaussianError::LabelCollision(_))));

        // Block order follows the factor order, q block then p block globally.
        let a = displaced_squeezed(sig(0), &SqueezeSpec::squeezed(0.5, 0.0));
        let b = displaced_squeezed(sig(1), &SqueezeSpec::squeezed(0.2, 0.0));
        let ab = product(&[a.clone(), b]).unwrap();
        assert_relative_eq!(ab.cov[(0, 0)], a.cov[(0, 0)], max_relative = 1e-15);
        assert_relative_eq!(ab.cov[(2, 2)], a.cov[(1, 1)], max_relative = 1e-15);
        assert_eq!(ab.cov[(0, 1)], 0.0);
    }

    #[test]
    fn transfer_preserves_vacuum_and_is_orthogonal() {
        let (_, t) = iris_transfer(0.8339, 0.4);
        let m = phase_space_map(&t.matrix);
        assert!((m.transpose() * &m - DMatrix::identity(8, 8)).norm() < 1e-12);

        let out = apply_transfer(&vacuum(t.signal_labels()), &t).unwrap();
        assert!((out.cov.clone() - DMatrix::identity(8, 8) * 0.5).norm() < 1e-12);
        assert!(out.mean.norm() < 1e-14);
    }

    #[test]
    fn transfer_label_requirements() {
        let (_, t) = iris_transfer(0.8339, 0.0);
        // A state on a mode the transfer matrix does not know -> mismatch.
        let stray = vacuum(&[ModeLabel::Signal(ModeIndex::new(2, 0))]);
        assert!(matches!(
            apply_transfer(&stray, &t),
            Err(GaussianError::LabelMismatch(_))
        ));
        // Missing signal mode -> mismatch (only absorption modes are padded).
        let partial = vacuum(&[sig(0)]);
        assert!(matches!(
            apply_transfer(&partial, &t),
            Err(GaussianError::LabelMismatch(_))
        ));
    }

    #[test]
    fn identity_transfer_is_a_no_op() {
        let t = TransferMatrix::new(vec![sig(0), sig(1)], DMatrix::identity(2, 2), 2);
        let s = product(&[
            displaced_squeezed(sig(0), &SqueezeSpec { r: 0.7, theta: 0.3, alpha: Complex64::new(0.2, -0.1) }),
            displaced_squeezed(sig(1), &SqueezeSpec::squeezed(0.1, 1.0)),
        ])
        .unwrap();
        let out = apply_transfer(&s, &t).unwrap();
        assert!((out.cov.clone() - s.cov.clone()).norm() < 1e-14);
        assert!((out.mean.clone() - s.mean.clone()).norm() < 1e-14);
    }

    #[test]
    fn energy_is_conserved_over_all_outputs() {
        let (_, t) = iris_transfer(0.7, -0.6);
        let input = product(&[
            displaced_squeezed(sig(0), &SqueezeSpec { r: 1.0, theta: 0.2, alpha: Complex64::new(0.5, 0.5) }),
            displaced_squeezed(sig(1), &SqueezeSpec::squeezed(0.4, 1.3)),
        ])
        .unwrap();
        let n_in = input.total_mean_photons();
        let out = apply_transfer(&input, &t).unwrap();
        assert_relative_eq!(out.total_mean_photons(), n_in, epsilon = 1e-10);
        // Tracing to the signal modes drops the absorbed share.
        let reduced = partial_trace(&out, t.signal_labels()).unwrap();
        assert!(reduced.total_mean_photons() <= n_in + 1e-12);
    }

    #[test]
    fn partial_trace_behavior() {
        let a = displaced_squeezed(sig(0), &SqueezeSpec::squeezed(0.6, 0.4));
        let b = displaced_squeezed(sig(1), &SqueezeSpec::squeezed(0.2, 0.0));
        let ab = product(&[a.clone(), b]).unwrap();
        let back = partial_trace(&ab, &[sig(0)]).unwrap();
        assert!((back.cov.clone() - a.cov.clone()).norm() < 1e-14);
        assert_relative_eq!(back.purity(), 1.0, max_relative = 1e-12);

        assert!(matches!(
            partial_trace(&ab, &[ModeLabel::Absorption(9)]),
            Err(GaussianError::UnknownLabel(_))
        ));

        // Pure input through a lossy iris: global state stays pure, the signal
        // restriction becomes mixed.
        let (_, t) = iris_transfer(0.8339, 0.0);
        let input = product(&[
            displaced_squeezed(sig(0), &SqueezeSpec::squeezed(1.0, 0.0)),
            displaced_squeezed(sig(1), &SqueezeSpec::squeezed(1.0, 0.0)),
        ])
        .unwrap();
        let out = apply_transfer(&input, &t).unwrap();
        assert_relative_eq!(out.purity(), 1.0, max_relative = 1e-9);
        let reduced = partial_trace(&out, t.signal_labels()).unwrap();
        assert!(reduced.purity() < 1.0 - 1e-3);
        assert!(reduced.uncertainty_defect() > -1e-9);
    }

    #[test]
    fn homodyne_noise_of_known_states() {
        let vac = vacuum(&[sig(0)]);
        let one = [(sig(0), Complex64::new(1.0, 0.0))];
        assert!(homodyne_min_noise(&vac, &one).unwrap().abs() < 1e-12);

        let s = displaced_squeezed(sig(0), &SqueezeSpec::squeezed(0.3, 0.0));
        let db = homodyne_min_noise(&s, &one).unwrap();
        assert_relative_eq!(db, -2.605_766_891_4, max_relative = 1e-9);

        // Global scale and phase of the LO drop out.
        let scaled = [(sig(0), Complex64::from_polar(3.7, 1.2))];
        assert_relative_eq!(
            homodyne_min_noise(&s, &scaled).unwrap(),
            db,
            max_relative = 1e-12
        );
        assert!(matches!(
            homodyne_min_noise(&s, &[(sig(0), Complex64::new(0.0, 0.0))]),
            Err(GaussianError::ZeroVector)
        ));
        // The golden-section angle scan agrees with the eigenvalue route.
        assert_relative_eq!(
            min_noise_by_angle(&s, &one).unwrap(),
            db,
            epsilon = 1e-9
        );
    }

    #[test]
    fn squeeze_antisqueeze_levels() {
        let (lo, hi) = squeeze_antisqueeze(&vacuum(&[sig(0)]), sig(0)).unwrap();
        assert!(lo.abs() < 1e-12 && hi.abs() < 1e-12);

        let s = displaced_squeezed(sig(0), &SqueezeSpec::squeezed(0.5, 0.9));
        let (lo, hi) = squeeze_antisqueeze(&s, sig(0)).unwrap();
        assert_relative_eq!(lo, -10.0 * (2.0 * 0.5) * std::f64::consts::LOG10_E, max_relative = 1e-10);
        assert_relative_eq!(hi, -lo, max_relative = 1e-10);

        // Loss makes the pair asymmetric: squeeze + antisqueeze > 0.
        let (_, t) = iris_transfer(0.8339, 0.0);
        let input = product(&[
            displaced_squeezed(sig(0), &SqueezeSpec::squeezed(1.0, 0.0)),
            displaced_squeezed(sig(1), &SqueezeSpec::squeezed(1.0, 0.0)),
        ])
        .unwrap();
        let reduced = partial_trace(&apply_transfer(&input, &t).unwrap(), &[sig(0)]).unwrap();
        let (lo, hi) = squeeze_antisqueeze(&reduced, sig(0)).unwrap();
        assert!(lo + hi > 1e-3, "sum {lo} + {hi}");
    }

    // Independent oracle for the two-squeezed-mode iris covariance, written
    // directly from the second moments of the output modes:
    // <a0'^dag a1'> and <a0' a1'> summed over the two input modes.
    fn covariance_oracle(
        c00: f64,
        c01: f64,
        c11: f64,
        zeta: f64,
        r0: f64,
        th0: f64,
        r1: f64,
        th1: f64,
    ) -> f64 {
        let u00 = Complex64::new(c00, 0.0);
        let u11 = Complex64::new(c11, 0.0);
        let u01 = Complex64::from_polar(c01, -2.0 * zeta);
        let u10 = Complex64::from_polar(c01, 2.0 * zeta);
        let (s0, c0h) = (r0.sinh(), r0.cosh());
        let (s1, c1h) = (r1.sinh(), r1.cosh());
        let adag_a = u00 * u01.conj() * s0 * s0 + u10 * u11.conj() * s1 * s1;
        let a_a = u00.conj() * u01.conj() * Complex64::from_polar(s0 * c0h, th0)
            + u10.conj() * u11.conj() * Complex64::from_polar(s1 * c1h, th1);
        adag_a.norm_sqr() + a_a.norm_sqr()
    }

    fn iris_photon_cov(radius_w0: f64, z0_zr: f64, specs: (SqueezeSpec, SqueezeSpec)) -> f64 {
        let (_, t) = iris_transfer(radius_w0, z0_zr);
        let input = product(&[
            displaced_squeezed(sig(0), &specs.0),
            displaced_squeezed(sig(1), &specs.1),
        ])
        .unwrap();
        let reduced =
            partial_trace(&apply_transfer(&input, &t).unwrap(), t.signal_labels()).unwrap();
        photon_cov(&reduced, sig(0), sig(1)).unwrap()
    }

    #[test]
    fn photon_covariance_of_iris_output() {
        // Product inputs are uncorrelated.
        let input = product(&[
            displaced_squeezed(sig(0), &SqueezeSpec::squeezed(1.0, 0.0)),
            displaced_squeezed(sig(1), &SqueezeSpec::squeezed(1.0, 0.0)),
        ])
        .unwrap();
        assert!(photon_cov(&input, sig(0), sig(1)).unwrap().abs() < 1e-14);

        // The iris correlates them; frozen value for the reference iris.
        let cov = iris_photon_cov(
            0.8339,
            0.0,
            (SqueezeSpec::squeezed(1.0, 0.0), SqueezeSpec::squeezed(1.0, 0.0)),
        );
        assert_relative_eq!(cov, 0.648_750_152_220_938, max_relative = 1e-9);
        assert!((cov - 0.65).abs() < 0.005);

        // Against the moment oracle, including away from the focus.
        let g = BeamGeometry::default();
        for (radius, z0, r0, th0, r1, th1) in [
            (0.8339, 0.0, 1.0, 0.0, 1.0, 0.0),
            (0.9, 0.7, 0.8, 0.4, 0.5, -0.9),
            (1.2, -0.3, 0.3, 2.0, 0.9, 0.325 * PI),
        ] {
            let got = iris_photon_cov(
                radius,
                z0,
                (SqueezeSpec::squeezed(r0, th0), SqueezeSpec::squeezed(r1, th1)),
            );
            let w = g.beam_width(z0 * g.rayleigh_range);
            let t_par = 2.0 * (radius * g.w0 / w).powi(2);
            let et = (-t_par).exp();
            let expected = covariance_oracle(
                1.0 - et,
                t_par * et,
                1.0 - et * (1.0 + t_par * t_par),
                g.gouy_phase(z0 * g.rayleigh_range),
                r0,
                th0,
                r1,
                th1,
            );
            assert_relative_eq!(got, expected, max_relative = 1e-9);
        }

        // Displacement invalidates the zero-mean factorization.
        let displaced = product(&[
            displaced_squeezed(
                sig(0),
                &SqueezeSpec { r: 0.2, theta: 0.0, alpha: Complex64::new(0.4, 0.0) },
            ),
            displaced_squeezed(sig(1), &SqueezeSpec::squeezed(0.2, 0.0)),
        ])
        .unwrap();
        assert!(matches!(
            photon_cov(&displaced, sig(0), sig(1)),
            Err(GaussianError::NonZeroMean { .. })
        ));
    }

    #[test]
    fn lossless_balanced_splitter_reference() {
        let t = fifty_fifty();
        let input = product(&[
            displaced_squeezed(sig(0), &SqueezeSpec::squeezed(1.0, 0.0)),
            displaced_squeezed(sig(1), &SqueezeSpec::squeezed(1.0, 0.0)),
        ])
        .unwrap();
        let out = apply_transfer(&input, &t).unwrap();
        let cov = photon_cov(&out, sig(0), sig(1)).unwrap();
        assert_relative_eq!(cov, 0.25 * (2f64).sinh().powi(2), max_relative = 1e-12);
    }

    #[test]
    fn gouy_phase_trades_against_squeezing_angles() {
        // The output covariance depends on z0 and the input angles only through
        // T and 4 zeta + theta0 - theta1: moving the iris while adjusting its
        // radius (fixed T) and compensating the angle leaves it unchanged.
        let g = BeamGeometry::default();
        let z0 = 0.6 * g.rayleigh_range;
        let zeta = g.gouy_phase(z0);
        let radius_a = 0.8339 * g.beam_width(z0) / g.w0; // same T as the reference iris
        let cov_a = iris_photon_cov(
            radius_a,
            0.6,
            (SqueezeSpec::squeezed(1.0, 0.0), SqueezeSpec::squeezed(1.0, 0.0)),
        );
        let cov_b = iris_photon_cov(
            0.8339,
            0.0,
            (SqueezeSpec::squeezed(1.0, 4.0 * zeta), SqueezeSpec::squeezed(1.0, 0.0)),
        );
        assert_relative_eq!(cov_a, cov_b, max_relative = 1e-10);
    }

    #[test]
    fn wigner_samples() {
        let vac = vacuum(&[sig(0)]);
        let grid = wigner_grid(&vac, sig(0), 4.0, 81).unwrap();
        assert_relative_eq!(grid.at(40, 40), 1.0 / PI, max_relative = 1e-10);
        assert_relative_eq!(grid.integral(), 1.0, epsilon = 1e-6);

        // theta = 0: narrow in q, broad in p; no tilt.
        let s = displaced_squeezed(sig(0), &SqueezeSpec::squeezed(0.8, 0.0));
        let grid = wigner_grid(&s, sig(0), 10.0, 161).unwrap();
        assert_relative_eq!(grid.integral(), 1.0, epsilon = 1e-6);
        let center = 80;
        // Moving along q from the center decays faster than along p.
        assert!(grid.at(center + 10, center) < grid.at(center, center + 10));
    }

    #[test]
    fn noise_scan_limits() {
        let g = BeamGeometry::default();
        let inputs = (SqueezeSpec::squeezed(0.3, 0.0), SqueezeSpec::squeezed(0.4, 0.325 * PI));
        let zs: Vec<f64> = (-2..=2).map(|k| f64::from(k) * g.rayleigh_range).collect();
        let spec = QuadratureSpec::default();

        // Open iris: LO stays in the fundamental mode, which carries the first
        // squeezed state untouched.
        let open = noise_scan(&g, &inputs, 10.0 * g.w0, &zs, &spec).unwrap();
        for v in &open {
            assert_relative_eq!(*v, -2.605_766_891_4, epsilon = 1e-6);
        }

        // Nearly closed: detector sees vacuum.
        let closed = noise_scan(&g, &inputs, 1e-3 * g.w0, &[0.0], &spec).unwrap();
        assert!(closed[0].abs() < 1e-6, "closed-iris noise {}", closed[0]);

        // Mid-size iris: the curve actually depends on the iris position.
        let mid = noise_scan(&g, &inputs, 0.8 * g.w0, &zs, &spec).unwrap();
        let spread = mid.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - mid.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread > 0.1, "flat curve, spread {spread}");
    }
}
