//! Unitary completion of the lossy coupling matrix.
//!
//! The coupling matrix `B` is a contraction, not a unitary: light outside the
//! aperture is absorbed. Appending one absorption mode per signal mode and
//! embedding `B` as the signal-signal block of
//!
//! ```text
//! U = | V S W'   V C V' |        B = V S W'  (SVD),  C = sqrt(I - S^2),
//!     | W C W'  -W S V' |        ' denoting the conjugate transpose,
//! ```
//!
//! yields a unitary `U` on the doubled mode space. Absorption modes always start
//! in vacuum and are traced out after propagation. The completion is not unique;
//! any unitary remix of the absorption outputs is equally valid and must leave
//! every reduced signal observable unchanged, which `completion_invariance_check`
//! certifies.

use crate::gaussian::{self, GaussianState, SqueezeSpec};
use crate::mask::CouplingMatrix;
use crate::modes::ModeIndex;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A mode of the enlarged space: either a propagating LG signal mode or one of
/// the absorption modes introduced by the completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeLabel {
    Signal(ModeIndex),
    Absorption(u32),
}

impl std::fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Signal(m) => write!(f, "l{}p{}", m.l, m.p),
            Self::Absorption(k) => write!(f, "A{k}"),
        }
    }
}

/// Unitary transfer matrix over signal + absorption modes. Column `j` holds the
/// decomposition of input mode `j` over the output modes (rows), so creation
/// operators map as `a_in_j^dag -> sum_k U[k][j] a_out_k^dag`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub labels: Vec<ModeLabel>,
    pub matrix: DMatrix<Complex64>,
    pub signal_dim: usize,
}

impl TransferMatrix {
    pub fn new(labels: Vec<ModeLabel>, matrix: DMatrix<Complex64>, signal_dim: usize) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "transfer matrix must be square");
        assert_eq!(labels.len(), matrix.nrows(), "one label per mode");
        assert!(signal_dim <= labels.len());
        Self { labels, matrix, signal_dim }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn signal_labels(&self) -> &[ModeLabel] {
        &self.labels[..self.signal_dim]
    }

    /// The signal-signal block (what a classical field sees).
    pub fn signal_block(&self) -> DMatrix<Complex64> {
        self.matrix.view((0, 0), (self.signal_dim, self.signal_dim)).into()
    }

    pub fn index_of(&self, label: ModeLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }
}

#[derive(Debug, Error)]
pub enum DilationError {
    #[error("coupling matrix is not passive: singular value {singular_value} exceeds 1 + 1e-9")]
    NotPassive { singular_value: f64 },
}

/// Complete a coupling matrix to a unitary transfer matrix with one absorption
/// mode per signal mode. Deterministic: the completion is fixed by the SVD.
/// Singular values within 1e-9 above 1 are treated as round-off and clamped.
pub fn dilate(b: &CouplingMatrix) -> Result<TransferMatrix, DilationError> {
    let n = b.dim();
    let svd = b.entries.clone().svd(true, true);
    let v = svd.u.expect("SVD with u requested");
    let w_t = svd.v_t.expect("SVD with v_t requested");

    let mut sigma = DVector::zeros(n);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > 1.0 + 1e-9 {
            return Err(DilationError::NotPassive { singular_value: s });
        }
        sigma[i] = s.min(1.0);
    }
    let cosines: DVector<f64> = sigma.map(|s| (1.0 - s * s).max(0.0).sqrt());

    let to_complex_diag = |d: &DVector<f64>| {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j { Complex64::new(d[i], 0.0) } else { Complex64::new(0.0, 0.0) }
        })
    };
    let s_mat = to_complex_diag(&sigma);
    let c_mat = to_complex_diag(&cosines);
    let w = w_t.adjoint();

    let signal_signal = &v * &s_mat * &w_t;
    let signal_abs = &v * &c_mat * v.adjoint();
    let abs_signal = &w * &c_mat * &w_t;
    let abs_abs = -(&w * &s_mat * v.adjoint());

    let mut u = DMatrix::from_element(2 * n, 2 * n, Complex64::new(0.0, 0.0));
    u.view_mut((0, 0), (n, n)).copy_from(&signal_signal);
    u.view_mut((0, n), (n, n)).copy_from(&signal_abs);
    u.view_mut((n, 0), (n, n)).copy_from(&abs_signal);
    u.view_mut((n, n), (n, n)).copy_from(&abs_abs);

    let mut labels: Vec<ModeLabel> = b.basis.iter().map(|&m| ModeLabel::Signal(m)).collect();
    labels.extend((1..=n as u32).map(ModeLabel::Absorption));

    Ok(TransferMatrix::new(labels, u, n))
}

/// Frobenius norm of `U U^dag - I`; zero for a valid transfer matrix.
pub fn verify_unitary(t: &TransferMatrix) -> f64 {
    let n = t.dim();
    let gram = &t.matrix * t.matrix.adjoint();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            sum += (gram[(i, j)] - expected).norm_sqr();
        }
    }
    sum.sqrt()
}

/// Haar-ish random unitary from a seeded complex Ginibre draw followed by QR.
fn seeded_unitary(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let mut normal = || {
        // Box-Muller on open-interval uniforms.
        let u1: f64 = (1.0 - uniform()).max(f64::MIN_POSITIVE);
        let u2: f64 = uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let g = DMatrix::from_fn(n, n, |_, _| Complex64::new(normal(), normal()));
    g.qr().q()
}

/// Build the default completion and a second valid completion (absorption
/// outputs remixed by a seeded random unitary), run a fixed battery of squeezed
/// and displaced inputs through both, and return the largest deviation of any
/// reduced signal-state mean or covariance entry. Physical answer: zero.
pub fn completion_invariance_check(b: &CouplingMatrix, alt_seed: u64) -> Result<f64, DilationError> {
    let t = dilate(b)?;
    let n = t.signal_dim;

    let mut alt_matrix = t.matrix.clone();
    let remix = seeded_unitary(n, alt_seed);
    let absorption_rows: DMatrix<Complex64> = t.matrix.view((n, 0), (n, 2 * n)).into();
    alt_matrix.view_mut((n, 0), (n, 2 * n)).copy_from(&(&remix * &absorption_rows));
    let t_alt = TransferMatrix::new(t.labels.clone(), alt_matrix, n);

    let battery = [
        SqueezeSpec { r: 1.0, theta: 0.0, alpha: Complex64::new(0.0, 0.0) },
        SqueezeSpec { r: 0.3, theta: 0.0, alpha: Complex64::new(0.0, 0.0) },
        SqueezeSpec { r: 0.4, theta: 0.325 * std::f64::consts::PI, alpha: Complex64::new(0.0, 0.0) },
        SqueezeSpec { r: 0.7, theta: 1.1, alpha: Complex64::new(0.8, -0.4) },
    ];

    let signal = t.signal_labels().to_vec();
    let mut worst = 0.0f64;
    for offset in 0..battery.len() {
        let parts: Vec<GaussianState> = signal
            .iter()
            .enumerate()
            .map(|(i, &label)| {
                gaussian::displaced_squeezed(label, &battery[(i + offset) % battery.len()])
            })
            .collect();
        let input = gaussian::product(&parts).expect("disjoint labels");

        let reduced = gaussian::partial_trace(
            &gaussian::apply_transfer(&input, &t).expect("labels cover"),
            &signal,
        )
        .expect("signal labels present");
        let reduced_alt = gaussian::partial_trace(
            &gaussian::apply_transfer(&input, &t_alt).expect("labels cover"),
            &signal,
        )
        .expect("signal labels present");

        for (a, b) in reduced.mean.iter().zip(reduced_alt.mean.iter()) {
            worst = worst.max((a - b).abs());
        }
        for (a, b) in reduced.cov.iter().zip(reduced_alt.cov.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}
