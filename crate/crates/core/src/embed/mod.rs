//! Invariant-subspace estimators for multilayer networks.
//!
//! [`bcjse`] is the bias-corrected joint spectral embedding; [`sos`], [`base`],
//! [`mase`] and [`hetero_pca`] are the comparison estimators. All of them are
//! also available by name through [`EstimatorRegistry`].

mod registry;

pub use registry::{
    Base, Bcjse, EstimatorParams, EstimatorRegistry, HeteroPca, Mase, RegistryError, Sos, SubspaceEstimator,
};

use thiserror::Error;

use crate::linalg::{self, EigPair, LinalgError, Mat, OrthoBasis, SymMatrix};
use crate::model::LayerSource;

pub const HPCA_DEFAULT_MAX_ITERS: usize = 1000;
pub const HPCA_DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, EmbedError>;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Eigendecompositions performed on the `n×n` target (outer passes for
    /// BCJSE, imputation rounds for HeteroPCA, 1 otherwise).
    pub iterations: usize,
    /// Final estimated bias diagonal, when the estimator forms one.
    pub bias_diagonal: Option<Vec<f64>>,
    pub degenerate_gap: bool,
    /// False only when an iterative estimator hit its iteration cap.
    pub converged: bool,
}

/// An orthonormal subspace estimate with its leading eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub basis: OrthoBasis,
    pub eigenvalues: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl Embedding {
    fn from_eig(eig: EigPair, iterations: usize, bias_diagonal: Option<Vec<f64>>) -> Self {
        Self {
            diagnostics: Diagnostics {
                iterations,
                bias_diagonal,
                degenerate_gap: eig.degenerate_gap,
                converged: true,
            },
            basis: eig.basis,
            eigenvalues: eig.values,
        }
    }

    /// Wraps a known basis, e.g. the true `U` when checking plug-in
    /// estimators. Eigenvalues are reported as zero.
    pub fn from_basis(basis: OrthoBasis) -> Self {
        let d = basis.d();
        Self {
            basis,
            eigenvalues: vec![0.0; d],
            diagnostics: Diagnostics {
                converged: true,
                ..Diagnostics::default()
            },
        }
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }
}

/// Number of outer passes `R` and bias-calibration steps `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BcjseConfig {
    pub d: usize,
    pub r_outer: usize,
    pub s_inner: usize,
}

impl BcjseConfig {
    pub fn new(d: usize, r_outer: usize, s_inner: usize) -> Result<Self> {
        if d == 0 || r_outer == 0 || s_inner == 0 {
            return Err(EmbedError::InvalidConfig(format!(
                "need d, R, S >= 1, got d={d}, R={r_outer}, S={s_inner}"
            )));
        }
        Ok(Self { d, r_outer, s_inner })
    }
}

fn check_rank(layers: &dyn LayerSource, d: usize) -> Result<()> {
    if d == 0 || d > layers.n() {
        return Err(EmbedError::InvalidConfig(format!(
            "rank d={d} must lie in 1..={}",
            layers.n()
        )));
    }
    Ok(())
}

/// `Σ_t A_t A_t`.
pub fn gram_sum(layers: &dyn LayerSource) -> SymMatrix {
    layers.gram_sum()
}

/// Bias-corrected joint spectral embedding.
///
/// Starting from `Û_0 = 0`, each outer pass `r` rebuilds the bias estimate
/// from zero by `S` fixed-point steps
/// `M̂ ← −diag(ÛÛᵀ {H(AAᵀ) − M̂} ÛÛᵀ)` with `Û = Û_{r−1}`,
/// then sets `Û_r` to the top-`d` eigenvectors of `H(AAᵀ) − M̂`.
/// With `R = 1` the bias estimate stays zero and the result is exactly the
/// hollowed embedding [`base`].
pub fn bcjse(layers: &dyn LayerSource, cfg: BcjseConfig) -> Result<Embedding> {
    check_rank(layers, cfg.d)?;
    let hollowed = linalg::hollow(&layers.gram_sum());
    bcjse_hollowed(&hollowed, cfg)
}

pub(crate) fn bcjse_hollowed(hollowed: &SymMatrix, cfg: BcjseConfig) -> Result<Embedding> {
    let n = hollowed.n();
    let mut current = linalg::top_d_eigs(hollowed, cfg.d)?;
    let mut bias = vec![0.0; n];
    for _ in 1..cfg.r_outer {
        bias = calibrate_bias(hollowed, current.basis.as_matrix(), cfg.s_inner);
        let mut target = hollowed.as_matrix().clone();
        for (i, b) in bias.iter().enumerate() {
            target[(i, i)] -= b;
        }
        current = linalg::top_d_eigs(&SymMatrix::from_upper(target), cfg.d)?;
    }
    Ok(Embedding::from_eig(current, cfg.r_outer, Some(bias)))
}

/// `S` steps of `M̂_s = −diag(UUᵀ (H − M̂_{s−1}) UUᵀ)` from `M̂_0 = 0`.
///
/// With `K = Uᵀ(H − M̂)U = UᵀHU − Σ_i M̂_ii u_i u_iᵀ`, the diagonal entry is
/// `−u_iᵀ K u_i` for row `u_i` of `U`.
fn calibrate_bias(hollowed: &SymMatrix, u: &Mat, steps: usize) -> Vec<f64> {
    let n = u.nrows();
    let d = u.ncols();
    let projected = u.transpose() * hollowed.as_matrix() * u;
    let mut bias = vec![0.0; n];
    for _ in 0..steps {
        let mut k = projected.clone();
        for (i, &b) in bias.iter().enumerate() {
            if b != 0.0 {
                let row = u.row(i);
                k -= row.transpose() * row * b;
            }
        }
        for (i, slot) in bias.iter_mut().enumerate() {
            let row = u.row(i);
            let mut q = 0.0;
            for a in 0..d {
                for c in 0..d {
                    q += row[a] * k[(a, c)] * row[c];
                }
            }
            *slot = -q;
        }
    }
    bias
}

/// Sum-of-squares embedding: top-`d` eigenvectors of `AAᵀ`.
pub fn sos(layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
    check_rank(layers, d)?;
    let eig = linalg::top_d_eigs(&layers.gram_sum(), d)?;
    Ok(Embedding::from_eig(eig, 1, None))
}

/// Hollowed (bias-adjusted) embedding: top-`d` eigenvectors of `H(AAᵀ)`.
pub fn base(layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
    check_rank(layers, d)?;
    let eig = linalg::top_d_eigs(&linalg::hollow(&layers.gram_sum()), d)?;
    Ok(Embedding::from_eig(eig, 1, Some(vec![0.0; layers.n()])))
}

/// Multiple adjacency spectral embedding: top-`d` eigenvectors of
/// `Σ_t V_t V_tᵀ`, where `V_t` holds the `d` algebraically largest
/// eigenvectors of layer `t`.
pub fn mase(layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
    check_rank(layers, d)?;
    let n = layers.n();
    let mut projector_sum = Mat::zeros(n, n);
    for t in 0..layers.m() {
        let eig = linalg::top_d_eigs(&layers.layer(t), d)?;
        let v = eig.basis.as_matrix();
        projector_sum.gemm(1.0, v, &v.transpose(), 1.0);
    }
    let eig = linalg::top_d_eigs(&SymMatrix::from_upper(projector_sum), d)?;
    Ok(Embedding::from_eig(eig, 1, None))
}

/// HeteroPCA: start from `N = H(AAᵀ)` and repeatedly replace the diagonal of
/// `N` with that of its rank-`d` eigen-truncation until the change in the
/// diagonal drops to `tol·‖N‖_F`. Hitting `max_iters` is reported through
/// [`Diagnostics::converged`], not as an error.
pub fn hetero_pca(layers: &dyn LayerSource, d: usize, max_iters: usize, tol: f64) -> Result<Embedding> {
    check_rank(layers, d)?;
    if max_iters == 0 || !(tol > 0.0) {
        return Err(EmbedError::InvalidConfig(format!(
            "HeteroPCA needs max_iters >= 1 and tol > 0, got {max_iters}, {tol}"
        )));
    }
    let mut work = linalg::hollow(&layers.gram_sum()).into_inner();
    let n = work.nrows();
    let mut diag = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let eig = linalg::top_d_eigs(&SymMatrix::from_upper(work.clone()), d)?;
        let next = linalg::low_rank_diagonal(&eig);
        let change = diag
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        for (i, x) in next.iter().enumerate() {
            work[(i, i)] = *x;
        }
        diag = next;
        if change <= tol * work.norm() {
            converged = true;
            break;
        }
    }
    let eig = linalg::top_d_eigs(&SymMatrix::from_upper(work), d)?;
    let mut out = Embedding::from_eig(eig, iterations, Some(diag));
    out.diagnostics.converged = converged;
    Ok(out)
}

/// Smallest `(R, S)` with `R ≥ ½·log m / log n + 1` and
/// `S ≥ max(1, ½·log m / log n)`.
pub fn recommend_rs(m: usize, n: usize) -> (usize, usize) {
    let ratio = (m.max(1) as f64).ln() / (n.max(2) as f64).ln();
    // Absorb rounding in the logarithms, e.g. m = n² must give ratio 2.
    let ceil = |x: f64| (x - 1e-12).ceil().max(1.0) as usize;
    (ceil(0.5 * ratio + 1.0), ceil(0.5 * ratio))
}
