use nalgebra::{Cholesky, DVector};

use super::{chi2_sf, InferError, Result};
use crate::embed::Embedding;
use crate::linalg::{self, Mat, SymMatrix};
use crate::model::{CosieModel, LayerSource};

/// Plug-in probabilities are clamped to `[ε, 1 − ε]` before forming
/// variances, so every `σ̂²` is strictly positive.
pub const PROB_CLAMP: f64 = 1e-6;

/// Plug-in scores `B̂_t = ÛᵀA_tÛ` and the probabilities they imply.
#[derive(Debug, Clone)]
pub struct PluginEstimates {
    basis: Mat,
    scores: Vec<Mat>,
    /// `Û B̂_t`, so that `P̂_tij` is a length-`d` dot product.
    loadings: Vec<Mat>,
    clamp_count: usize,
}

impl PluginEstimates {
    pub fn new(layers: &dyn LayerSource, emb: &Embedding) -> Result<Self> {
        if emb.n() != layers.n() {
            return Err(InferError::InvalidInput(format!(
                "embedding has {} rows, layers have {} vertices",
                emb.n(),
                layers.n()
            )));
        }
        let u = emb.basis.as_matrix().clone();
        let scores: Vec<Mat> = (0..layers.m())
            .map(|t| {
                let b = layers.project(t, &u);
                (&b + b.transpose()) * 0.5
            })
            .collect();
        let loadings: Vec<Mat> = scores.iter().map(|b| &u * b).collect();
        let mut out = Self {
            basis: u,
            scores,
            loadings,
            clamp_count: 0,
        };
        out.clamp_count = (0..out.m())
            .map(|t| {
                out.raw_layer(t)
                    .iter()
                    .filter(|&&p| !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p))
                    .count()
            })
            .sum();
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn m(&self) -> usize {
        self.scores.len()
    }

    pub fn scores(&self) -> &[Mat] {
        &self.scores
    }

    /// Entries of `P̂_t` that fell outside `[ε, 1 − ε]`, over all `m·n²`
    /// ordered pairs.
    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    /// `e_iᵀ Û B̂_t Ûᵀ e_j` before clamping.
    pub fn p_hat_raw(&self, t: usize, i: usize, j: usize) -> f64 {
        self.loadings[t].row(i).dot(&self.basis.row(j))
    }

    pub fn p_hat(&self, t: usize, i: usize, j: usize) -> f64 {
        self.p_hat_raw(t, i, j).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
    }

    pub fn sigma2_hat(&self, t: usize, i: usize, j: usize) -> f64 {
        let p = self.p_hat(t, i, j);
        p * (1.0 - p)
    }

    fn raw_layer(&self, t: usize) -> Mat {
        &self.loadings[t] * self.basis.transpose()
    }

    /// `σ̂²_t` as an `n×n` matrix.
    pub fn sigma2_layer(&self, t: usize) -> Mat {
        self.raw_layer(t).map(|p| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            p * (1.0 - p)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceKind {
    True,
    Plugin,
}

/// `F_i`, `G_i` and the asymptotic covariance
/// `Γ_i = (BBᵀ)⁻¹(F_i + G_i)(BBᵀ)⁻¹` of row `i` of the embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceObjects {
    pub vertex: usize,
    pub f: Mat,
    pub g: Mat,
    pub gamma: Mat,
    pub kind: VarianceKind,
}

fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

/// `Uᵀ diag(w) U`.
fn weighted_gram(u: &Mat, w: impl Iterator<Item = f64>) -> Mat {
    let d = u.ncols();
    let mut out = Mat::zeros(d, d);
    for (j, wj) in w.enumerate() {
        if wj == 0.0 {
            continue;
        }
        for a in 0..d {
            let left = wj * u[(j, a)];
            for c in a..d {
                out[(a, c)] += left * u[(j, c)];
            }
        }
    }
    for a in 0..d {
        for c in 0..a {
            out[(a, c)] = out[(c, a)];
        }
    }
    out
}

fn inverse_score_gram(scores: &[Mat], d: usize) -> Result<Mat> {
    let bb = scores.iter().fold(Mat::zeros(d, d), |acc, b| acc + b * b);
    let (values, vectors) = linalg::sym_eigen(&SymMatrix::new(symmetrize(&bb))?)?;
    let max = values[0];
    let min = *values.last().expect("d >= 1");
    if !(min > 1e-12 * max.abs()) || max <= 0.0 {
        return Err(InferError::SingularScoreGram { min, max });
    }
    let inv_values = Mat::from_diagonal(&DVector::from_iterator(d, values.iter().map(|v| 1.0 / v)));
    Ok(&vectors * inv_values * vectors.transpose())
}

/// Shared accumulation for the true and plug-in variants.
/// `sigma2(t)` yields the `n×n` variance matrix of layer `t`; it is only
/// called again when the score matrix changes between consecutive layers.
fn accumulate(
    u: &Mat,
    scores: &[Mat],
    mut sigma2: impl FnMut(usize) -> Result<Mat>,
    vertices: &[usize],
    kind: VarianceKind,
) -> Result<Vec<VarianceObjects>> {
    let n = u.nrows();
    let d = u.ncols();
    if let Some(&bad) = vertices.iter().find(|&&i| i >= n) {
        return Err(InferError::InvalidInput(format!("vertex {bad} out of range for n={n}")));
    }
    let inv = inverse_score_gram(scores, d)?;
    let mut f = vec![Mat::zeros(d, d); vertices.len()];
    let mut g_weights = vec![DVector::<f64>::zeros(n); vertices.len()];
    let mut current: Option<Mat> = None;
    for (t, b) in scores.iter().enumerate() {
        if t == 0 || scores[t - 1] != *b {
            current = Some(sigma2(t)?);
        }
        let s = current.as_ref().expect("set on first layer");
        for (slot, &i) in vertices.iter().enumerate() {
            let k = weighted_gram(u, s.row(i).iter().copied());
            f[slot] += b * k * b;
            // g_l += Σ_j σ²_tij σ²_tjl
            g_weights[slot] += (s.row(i) * s).transpose();
        }
    }
    Ok(vertices
        .iter()
        .enumerate()
        .map(|(slot, &i)| {
            let f_i = symmetrize(&f[slot]);
            let g_i = weighted_gram(u, g_weights[slot].iter().copied());
            let gamma = symmetrize(&(&inv * (&f_i + &g_i) * &inv));
            VarianceObjects {
                vertex: i,
                f: f_i,
                g: g_i,
                gamma,
                kind,
            }
        })
        .collect())
}

/// Variance objects at vertex `i` from the true model, with
/// `σ²_tij = P_tij(1 − P_tij)`.
pub fn variance_objects_true(model: &CosieModel, i: usize) -> Result<VarianceObjects> {
    let u = model.basis().as_matrix();
    let sigma2 = |t: usize| -> Result<Mat> {
        let p = model
            .edge_probabilities(t)
            .map_err(|e| InferError::InvalidInput(e.to_string()))?;
        Ok(p.as_matrix().map(|p| p * (1.0 - p)))
    };
    Ok(accumulate(u, model.scores(), sigma2, &[i], VarianceKind::True)?.remove(0))
}

/// Plug-in variance objects at vertex `i`.
pub fn variance_objects_plugin(layers: &dyn LayerSource, emb: &Embedding, i: usize) -> Result<VarianceObjects> {
    let plugin = PluginEstimates::new(layers, emb)?;
    Ok(variance_objects_plugin_batch(&plugin, &[i])?.remove(0))
}

/// Plug-in variance objects for several vertices, forming each `σ̂²_t` once.
pub fn variance_objects_plugin_batch(plugin: &PluginEstimates, vertices: &[usize]) -> Result<Vec<VarianceObjects>> {
    accumulate(
        &plugin.basis,
        &plugin.scores,
        |t| Ok(plugin.sigma2_layer(t)),
        vertices,
        VarianceKind::Plugin,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipTestReport {
    pub i1: usize,
    pub i2: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub gamma_hat_i1: Mat,
    pub gamma_hat_i2: Mat,
    pub clamp_count: usize,
}

/// `δᵀ Σ⁻¹ δ` with `Σ` symmetrized and solved by Cholesky.
pub fn test_statistic(delta: &DVector<f64>, covariance: &Mat) -> Result<f64> {
    let sym = symmetrize(covariance);
    let (values, _) = linalg::sym_eigen(&SymMatrix::new(sym.clone())?)?;
    let min = *values.last().expect("d >= 1");
    let not_pd = || InferError::NotPositiveDefinite {
        min_eigenvalue: min,
        covariance: sym.clone(),
    };
    if !(min > 0.0) {
        return Err(not_pd());
    }
    let chol = Cholesky::new(sym.clone()).ok_or_else(not_pd)?;
    let solved = chol.solve(delta);
    Ok(delta.dot(&solved).max(0.0))
}

/// Tests `H₀: z_{i1} = z_{i2}` with
/// `T = (θ̂_{i1} − θ̂_{i2})ᵀ (Γ̂_{i1} + Γ̂_{i2})⁻¹ (θ̂_{i1} − θ̂_{i2})`
/// referred to `χ²_d`.
pub fn membership_test(
    layers: &dyn LayerSource,
    emb: &Embedding,
    i1: usize,
    i2: usize,
) -> Result<MembershipTestReport> {
    membership_tests(layers, emb, &[(i1, i2)])?.remove(0)
}

/// Several pair tests sharing one set of plug-in estimates. The outer error
/// covers failures common to all pairs; per-pair covariance failures are
/// reported individually.
pub fn membership_tests(
    layers: &dyn LayerSource,
    emb: &Embedding,
    pairs: &[(usize, usize)],
) -> Result<Vec<Result<MembershipTestReport>>> {
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| a == b) {
        return Err(InferError::InvalidInput(format!(
            "pair ({a}, {b}) tests a vertex against itself"
        )));
    }
    let plugin = PluginEstimates::new(layers, emb)?;
    let mut vertices: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    vertices.sort_unstable();
    vertices.dedup();
    let objects = variance_objects_plugin_batch(&plugin, &vertices)?;
    let gamma_of = |v: usize| &objects[vertices.binary_search(&v).expect("collected above")].gamma;
    let u = emb.basis.as_matrix();
    let d = u.ncols();
    Ok(pairs
        .iter()
        .map(|&(i1, i2)| {
            let delta = (u.row(i1) - u.row(i2)).transpose();
            let (g1, g2) = (gamma_of(i1), gamma_of(i2));
            let statistic = test_statistic(&delta, &(g1 + g2))?;
            Ok(MembershipTestReport {
                i1,
                i2,
                statistic,
                df: d,
                p_value: chi2_sf(d, statistic),
                gamma_hat_i1: g1.clone(),
                gamma_hat_i2: g2.clone(),
                clamp_count: plugin.clamp_count(),
            })
        })
        .collect())
}
