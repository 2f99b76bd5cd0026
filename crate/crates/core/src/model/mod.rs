//! COSIE models, their membership-based reductions, and the exact diagonal
//! bias of the hollowed sum-of-squares matrix.

mod layers;
mod rng;
mod sim;

pub use layers::{sample_layers, DenseStack, Layer, LayerSource, LayerStack, Provenance};
pub use rng::ReplicateStream;
pub use sim::{
    assortative_schedule, balanced_labels, block_schedule, build_mlsbm, build_sim41, build_sim42, mixed_schedule,
    sim41_latent, sim42_membership, sim42_mixed_weight, LayerDesign,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError, Mat, OrthoBasis, SymMatrix};

/// Slack allowed outside `[0, 1]` before a probability counts as invalid.
pub const PROB_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge probability {value} at layer {layer}, entry ({i}, {j}) is outside [0, 1]")]
    ProbabilityOutOfRange {
        layer: usize,
        i: usize,
        j: usize,
        value: f64,
    },
    #[error("ZᵀZ is singular (smallest eigenvalue {0:e})")]
    SingularMembership(f64),
    #[error("layer index {index} out of range for {m} layers")]
    LayerIndex { index: usize, m: usize },
    #[error("layer is not a symmetric 0/1 matrix: {0}")]
    NotBinary(String),
    #[error("malformed layer file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Membership profiles, one probability vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    z: Mat,
}

impl MembershipMatrix {
    pub fn new(z: Mat) -> Result<Self> {
        let (n, k) = z.shape();
        if n == 0 || k == 0 || k > n {
            return Err(ModelError::InvalidParameter(format!(
                "membership matrix must be n×K with 1 <= K <= n, got {n}×{k}"
            )));
        }
        for (i, row) in z.row_iter().enumerate() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(ModelError::InvalidParameter(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(ModelError::InvalidParameter(format!("row {i} sums to {sum}, not 1")));
            }
        }
        let ztz = SymMatrix::from_upper(z.transpose() * &z);
        let (values, _) = linalg::sym_eigen(&ztz)?;
        let smallest = *values.last().unwrap();
        if smallest <= 1e-10 * n as f64 {
            return Err(ModelError::SingularMembership(smallest));
        }
        Ok(Self { z })
    }

    /// One-hot rows from community labels in `0..k`.
    pub fn one_hot(labels: &[usize], k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(ModelError::InvalidParameter(format!(
                "label {bad} out of range for {k} communities"
            )));
        }
        Self::new(DMatrix::from_fn(labels.len(), k, |i, c| {
            if labels[i] == c {
                1.0
            } else {
                0.0
            }
        }))
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn k(&self) -> usize {
        self.z.ncols()
    }

    pub fn as_matrix(&self) -> &Mat {
        &self.z
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.z.row(i).iter().copied().collect()
    }

    /// Community labels when every row is one-hot.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.z
            .row_iter()
            .map(|row| {
                let hot = row.iter().position(|&x| x == 1.0)?;
                row.iter()
                    .enumerate()
                    .all(|(c, &x)| c == hot || x == 0.0)
                    .then_some(hot)
            })
            .collect()
    }

    /// `‖z_a − z_b‖₂`.
    pub fn profile_distance(&self, a: usize, b: usize) -> f64 {
        (self.z.row(a) - self.z.row(b)).norm()
    }
}

/// Common subspace independent edge model: `P_t = U B_t Uᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosieModel {
    basis: OrthoBasis,
    scores: Vec<Mat>,
}

impl CosieModel {
    /// Validates that every score matrix is symmetric and that every implied
    /// edge probability lies in `[0, 1]` (up to [`PROB_SLACK`]).
    pub fn new(basis: OrthoBasis, scores: Vec<Mat>) -> Result<Self> {
        let d = basis.d();
        if scores.is_empty() {
            return Err(ModelError::InvalidParameter("a model needs at least one layer".into()));
        }
        let mut symmetric = Vec::with_capacity(scores.len());
        for (t, b) in scores.into_iter().enumerate() {
            if b.shape() != (d, d) {
                return Err(ModelError::InvalidParameter(format!(
                    "score matrix {t} is {}×{}, expected {d}×{d}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            symmetric.push(SymMatrix::new(b)?.into_inner());
        }
        let model = Self {
            basis,
            scores: symmetric,
        };
        let mut cache = ProbabilityCache::default();
        for t in 0..model.m() {
            let p = cache.raw(&model, t);
            for j in 0..model.n() {
                for i in 0..=j {
                    let value = p[(i, j)];
                    if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&value) || !value.is_finite() {
                        return Err(ModelError::ProbabilityOutOfRange { layer: t, i, j, value });
                    }
                }
            }
        }
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn d(&self) -> usize {
        self.basis.d()
    }

    pub fn m(&self) -> usize {
        self.scores.len()
    }

    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    pub fn scores(&self) -> &[Mat] {
        &self.scores
    }

    /// `P_t`, clamped to `[0, 1]`.
    pub fn edge_probabilities(&self, t: usize) -> Result<SymMatrix> {
        if t >= self.m() {
            return Err(ModelError::LayerIndex { index: t, m: self.m() });
        }
        Ok(clamp_probabilities(raw_probabilities(&self.basis, &self.scores[t])))
    }

    /// `BBᵀ = Σ_t B_t²`.
    pub fn score_gram(&self) -> Mat {
        let d = self.d();
        self.scores.iter().fold(Mat::zeros(d, d), |acc, b| acc + b * b)
    }

    /// All layers' probability matrices, computing each distinct score matrix
    /// once.
    pub fn probability_layers(&self) -> Vec<SymMatrix> {
        let mut cache = ProbabilityCache::default();
        (0..self.m()).map(|t| cache.clamped(self, t)).collect()
    }

    /// A noiseless stack whose layers are the probability matrices.
    pub fn expected_stack(&self) -> DenseStack {
        DenseStack::new(self.probability_layers()).expect("model layers share one dimension")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDescriptor::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let desc: ModelDescriptor = serde_json::from_str(text)?;
        desc.into_model()
    }
}

fn raw_probabilities(basis: &OrthoBasis, score: &Mat) -> Mat {
    let u = basis.as_matrix();
    u * score * u.transpose()
}

fn clamp_probabilities(p: Mat) -> SymMatrix {
    SymMatrix::from_upper(p.map(|x| x.clamp(0.0, 1.0)))
}

/// Reuses the last probability matrix while consecutive layers share a score
/// matrix, which is the common case for block designs.
#[derive(Default)]
struct ProbabilityCache {
    last: Option<(usize, Mat)>,
}

impl ProbabilityCache {
    fn raw(&mut self, model: &CosieModel, t: usize) -> Mat {
        if let Some((s, p)) = &self.last {
            if model.scores[*s] == model.scores[t] {
                return p.clone();
            }
        }
        let p = raw_probabilities(&model.basis, &model.scores[t]);
        self.last = Some((t, p.clone()));
        p
    }

    fn clamped(&mut self, model: &CosieModel, t: usize) -> SymMatrix {
        clamp_probabilities(self.raw(model, t))
    }
}

const MODEL_SCHEMA: &str = "mlspec.cosie-model/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDescriptor {
    schema: String,
    n: usize,
    d: usize,
    /// Rows of `U`.
    basis: Vec<Vec<f64>>,
    /// Each score matrix as rows.
    scores: Vec<Vec<Vec<f64>>>,
}

impl From<&CosieModel> for ModelDescriptor {
    fn from(model: &CosieModel) -> Self {
        let rows = |m: &Mat| m.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self {
            schema: MODEL_SCHEMA.into(),
            n: model.n(),
            d: model.d(),
            basis: rows(model.basis.as_matrix()),
            scores: model.scores.iter().map(rows).collect(),
        }
    }
}

impl ModelDescriptor {
    fn into_model(self) -> Result<CosieModel> {
        if self.schema != MODEL_SCHEMA {
            return Err(ModelError::Format(format!("unsupported schema {:?}", self.schema)));
        }
        let from_rows = |rows: &[Vec<f64>], r: usize, c: usize| -> Result<Mat> {
            if rows.len() != r || rows.iter().any(|row| row.len() != c) {
                return Err(ModelError::Format(format!("expected a {r}×{c} matrix")));
            }
            Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
        };
        let basis = OrthoBasis::new(from_rows(&self.basis, self.n, self.d)?)?;
        let scores = self
            .scores
            .iter()
            .map(|s| from_rows(s, self.d, self.d))
            .collect::<Result<Vec<_>>>()?;
        CosieModel::new(basis, scores)
    }
}

/// `U = X(XᵀX)^{-1/2}`, `B_t = (XᵀX)^{1/2} C_t (XᵀX)^{1/2}`, so that
/// `P_t = X C_t Xᵀ`.
pub fn factor_to_cosie(x: &Mat, blocks: &[Mat]) -> Result<CosieModel> {
    let k = x.ncols();
    let xtx = SymMatrix::from_upper(x.transpose() * x);
    let root = linalg::sqrt_psd(&xtx)?;
    let inv_root = linalg::inv_sqrt_spd(&xtx).map_err(|e| match e {
        LinalgError::RankDeficient(v) => ModelError::SingularMembership(v),
        other => other.into(),
    })?;
    let basis = OrthoBasis::new(x * inv_root)?;
    let scores = blocks
        .iter()
        .enumerate()
        .map(|(t, c)| {
            if c.shape() != (k, k) {
                return Err(ModelError::InvalidParameter(format!(
                    "block matrix {t} is {}×{}, expected {k}×{k}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            Ok(&root * c * &root)
        })
        .collect::<Result<Vec<_>>>()?;
    CosieModel::new(basis, scores)
}

/// COSIE representation of a multilayer mixed-membership (or block) model.
pub fn membership_to_cosie(z: &MembershipMatrix, blocks: &[Mat]) -> Result<CosieModel> {
    for (t, c) in blocks.iter().enumerate() {
        if c.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(ModelError::InvalidParameter(format!(
                "block matrix {t} has entries outside [0, 1]"
            )));
        }
    }
    factor_to_cosie(z.as_matrix(), blocks)
}

/// The diagonal `M` with `M_ii = −Σ_t Σ_j P_tij²`.
pub fn bias_matrix(model: &CosieModel) -> SymMatrix {
    let n = model.n();
    let mut diag = vec![0.0; n];
    let mut cache = ProbabilityCache::default();
    for t in 0..model.m() {
        let p = cache.clamped(model, t);
        let p = p.as_matrix();
        for (j, col) in p.column_iter().enumerate() {
            // Column j equals row j by symmetry.
            diag[j] -= col.norm_squared();
        }
    }
    SymMatrix::from_diagonal(&diag)
}
