//! The two simulation designs and the block schedules they share.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{factor_to_cosie, membership_to_cosie, CosieModel, MembershipMatrix, ModelError, Result};
use crate::linalg::Mat;

fn check_block_params(a: f64, b: f64, rho: f64) -> Result<()> {
    if !(0.0 < b && b < a) {
        return Err(ModelError::InvalidParameter(format!(
            "need 0 < b < a, got a={a}, b={b}"
        )));
    }
    if !(0.0..=1.0).contains(&rho) || rho * a > 1.0 {
        return Err(ModelError::InvalidParameter(format!(
            "need 0 <= rho <= 1 and rho*a <= 1, got rho={rho}"
        )));
    }
    Ok(())
}

/// First half of the layers `ρ[[a, b], [b, a]]`, second half `ρ[[b, a], [a, b]]`.
/// The two halves cancel in `Σ_t C_t` beyond rank one.
pub fn mixed_schedule(m: usize, a: f64, b: f64, rho: f64) -> Result<Vec<Mat>> {
    check_block_params(a, b, rho)?;
    if m == 0 || m % 2 != 0 {
        return Err(ModelError::InvalidParameter(format!(
            "m must be positive and even, got {m}"
        )));
    }
    let assortative = Mat::from_row_slice(2, 2, &[a, b, b, a]) * rho;
    let flipped = Mat::from_row_slice(2, 2, &[b, a, a, b]) * rho;
    Ok((0..m)
        .map(|t| {
            if t < m / 2 {
                assortative.clone()
            } else {
                flipped.clone()
            }
        })
        .collect())
}

/// Every layer `ρ[[a, b], [b, a]]`.
pub fn assortative_schedule(m: usize, a: f64, b: f64, rho: f64) -> Result<Vec<Mat>> {
    check_block_params(a, b, rho)?;
    if m == 0 {
        return Err(ModelError::InvalidParameter("m must be positive".into()));
    }
    Ok(vec![Mat::from_row_slice(2, 2, &[a, b, b, a]) * rho; m])
}

/// The `n×2` latent matrix on a quarter circle: for `t_i` equidistant on
/// `[0, 1]` over `n/2` points, rows `i` are `(sin(πt_i/2), cos(πt_i/2))` and
/// rows `n/2 + i` are `(cos(πt_i/2), sin(πt_i/2))`.
pub fn sim41_latent(n: usize) -> Result<Mat> {
    if n < 4 || n % 2 != 0 {
        return Err(ModelError::InvalidParameter(format!(
            "n must be even and >= 4, got {n}"
        )));
    }
    let half = n / 2;
    let mut x = Mat::zeros(n, 2);
    for i in 0..half {
        let t = i as f64 / (half - 1) as f64;
        let (s, c) = (FRAC_PI_2 * t).sin_cos();
        x[(i, 0)] = s;
        x[(i, 1)] = c;
        x[(half + i, 0)] = c;
        x[(half + i, 1)] = s;
    }
    Ok(x)
}

/// Quarter-circle latent positions with the mixed block schedule.
/// Edge probabilities are `P_t = X C_t Xᵀ`.
pub fn build_sim41(n: usize, m: usize, a: f64, b: f64, rho: f64) -> Result<CosieModel> {
    let x = sim41_latent(n)?;
    let blocks = mixed_schedule(m, a, b, rho)?;
    factor_to_cosie(&x, &blocks)
}

/// Mixed weight `t_i` of the `i`-th mixed vertex (`i` in `1..=n-2n₀`):
/// equidistant points `0.1 = t_0 < … < t_{n-2n₀} = 0.9`.
pub fn sim42_mixed_weight(n: usize, n0: usize, i: usize) -> f64 {
    0.1 + 0.8 * i as f64 / (n - 2 * n0) as f64
}

/// `n₀` pure rows `[1, 0]`, `n₀` pure rows `[0, 1]`, then mixed rows
/// `[t_i, 1 − t_i]`.
pub fn sim42_membership(n: usize, n0: usize) -> Result<MembershipMatrix> {
    if n0 == 0 || 2 * n0 >= n {
        return Err(ModelError::InvalidParameter(format!(
            "need 0 < 2*n0 < n, got n={n}, n0={n0}"
        )));
    }
    let z = DMatrix::from_fn(n, 2, |i, c| {
        if i < n0 {
            [1.0, 0.0][c]
        } else if i < 2 * n0 {
            [0.0, 1.0][c]
        } else {
            let t = sim42_mixed_weight(n, n0, i - 2 * n0 + 1);
            [t, 1.0 - t][c]
        }
    });
    MembershipMatrix::new(z)
}

/// Mixed-membership design with the mixed block schedule.
pub fn build_sim42(n: usize, n0: usize, m: usize, a: f64, b: f64, rho: f64) -> Result<(CosieModel, MembershipMatrix)> {
    let z = sim42_membership(n, n0)?;
    let blocks = mixed_schedule(m, a, b, rho)?;
    Ok((membership_to_cosie(&z, &blocks)?, z))
}

/// How block matrices vary across layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerDesign {
    /// First half assortative, second half with the roles of `a` and `b`
    /// swapped.
    #[default]
    Mixed,
    Assortative,
}

/// `K×K` block schedule: assortative layers are `ρ(bJ + (a − b)I)`, flipped
/// layers `ρ(aJ + (b − a)I)`. For `K = 2` this is [`mixed_schedule`] or
/// [`assortative_schedule`].
pub fn block_schedule(design: LayerDesign, m: usize, k: usize, a: f64, b: f64, rho: f64) -> Result<Vec<Mat>> {
    check_block_params(a, b, rho)?;
    if k < 2 {
        return Err(ModelError::InvalidParameter(format!(
            "need at least two blocks, got {k}"
        )));
    }
    let block = |diag: f64, off: f64| Mat::from_fn(k, k, |r, c| rho * if r == c { diag } else { off });
    match design {
        LayerDesign::Assortative => {
            if m == 0 {
                return Err(ModelError::InvalidParameter("m must be positive".into()));
            }
            Ok(vec![block(a, b); m])
        }
        LayerDesign::Mixed => {
            if m == 0 || m % 2 != 0 {
                return Err(ModelError::InvalidParameter(format!(
                    "m must be positive and even, got {m}"
                )));
            }
            Ok((0..m)
                .map(|t| if t < m / 2 { block(a, b) } else { block(b, a) })
                .collect())
        }
    }
}

/// Contiguous, as-equal-as-possible community labels.
pub fn balanced_labels(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| i * k / n).collect()
}

/// Multilayer stochastic block model with the given labels.
pub fn build_mlsbm(labels: &[usize], k: usize, blocks: &[Mat]) -> Result<(CosieModel, MembershipMatrix)> {
    let z = MembershipMatrix::one_hot(labels, k)?;
    Ok((membership_to_cosie(&z, blocks)?, z))
}
