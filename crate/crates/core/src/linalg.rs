//! Dense symmetric linear algebra primitives.
//!
//! Everything here is deterministic: the eigensolver is a Householder
//! tridiagonalization followed by implicit-shift QL, with a fixed eigenvector
//! sign convention, so identical inputs give identical output bits.

use nalgebra::DMatrix;
use thiserror::Error;

pub type Mat = DMatrix<f64>;

/// Orthonormality tolerance on `‖UᵀU − I‖_F`.
pub const ORTHO_TOL: f64 = 1e-10;
/// Singular values at or below this make the matrix sign undefined.
pub const SIGN_RANK_TOL: f64 = 1e-12;
/// Gap below which `λ_d` and `λ_{d+1}` are treated as tied.
pub const DEGENERATE_GAP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("columns are not orthonormal (‖UᵀU − I‖_F = {0:e})")]
    NotOrthonormal(f64),
    #[error("eigensolver did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("rank-deficient alignment: smallest singular value {0:e}")]
    RankDeficient(f64),
    #[error("non-finite entry in input")]
    NonFinite,
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A square matrix that is symmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    /// Validates symmetry up to `1e-12` relative to the largest entry, then
    /// mirrors the upper triangle so the stored matrix is exactly symmetric.
    pub fn new(m: Mat) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected a nonempty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let scale = m.amax().max(1.0);
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > 1e-12 * scale {
            return Err(LinalgError::NotSymmetric(worst));
        }
        Ok(Self::from_upper(m))
    }

    /// Copies the upper triangle onto the lower one without checking.
    pub(crate) fn from_upper(mut m: Mat) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in 0..j {
                m[(j, i)] = m[(i, j)];
            }
        }
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(Mat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(Mat::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.0[(i, i)]).collect()
    }
}

/// An `n×d` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis(Mat);

impl OrthoBasis {
    pub fn new(columns: Mat) -> Result<Self> {
        let (n, d) = columns.shape();
        if d == 0 || d > n {
            return Err(LinalgError::DimensionMismatch(format!(
                "basis must satisfy 1 <= d <= n, got n={n}, d={d}"
            )));
        }
        let dev = orthonormality_defect(&columns);
        if !(dev <= ORTHO_TOL) {
            return Err(LinalgError::NotOrthonormal(dev));
        }
        Ok(Self(columns))
    }

    pub(crate) fn new_unchecked(columns: Mat) -> Self {
        Self(columns)
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    /// `U·Q` for an orthogonal `d×d` matrix `Q`.
    pub fn rotate(&self, q: &Mat) -> Result<Self> {
        if q.nrows() != self.d() || q.ncols() != self.d() {
            return Err(LinalgError::DimensionMismatch(format!(
                "rotation must be {0}x{0}",
                self.d()
            )));
        }
        Self::new(&self.0 * q)
    }
}

/// `‖UᵀU − I‖_F`.
pub fn orthonormality_defect(u: &Mat) -> f64 {
    let gram = u.transpose() * u;
    (gram - Mat::identity(u.ncols(), u.ncols())).norm()
}

/// Leading eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigPair {
    /// Descending algebraic order.
    pub values: Vec<f64>,
    pub basis: OrthoBasis,
    /// `λ_d` tied with `λ_{d+1}`; the basis is then one deterministic choice
    /// among many.
    pub degenerate_gap: bool,
}

/// Full symmetric eigendecomposition: eigenvalues in descending order and the
/// matching eigenvectors as columns, with the sign convention applied.
pub fn sym_eigen(a: &SymMatrix) -> Result<(Vec<f64>, Mat)> {
    let n = a.n();
    let src = a.as_matrix();
    // Row-major working copy.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            v[i * n + j] = src[(i, j)];
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut v, &mut d, &mut e);
    // tql2 rotates eigenvector columns; keep them as contiguous rows.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[j * n + i] = v[i * n + j];
        }
    }
    tql2(n, &mut z, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ties in solver order.
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let row = &z[k * n..(k + 1) * n];
        let sign = sign_of_dominant(row);
        for i in 0..n {
            vectors[(i, col)] = sign * row[i];
        }
    }
    Ok((values, vectors))
}

/// `+1` if the entry of largest magnitude (lowest index on ties) is
/// nonnegative, `-1` otherwise.
fn sign_of_dominant(v: &[f64]) -> f64 {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// The `d` algebraically largest eigenvalues of `a` with orthonormal
/// eigenvectors.
pub fn top_d_eigs(a: &SymMatrix, d: usize) -> Result<EigPair> {
    let n = a.n();
    if d == 0 || d > n {
        return Err(LinalgError::DimensionMismatch(format!(
            "requested d={d} eigenpairs of an {n}x{n} matrix"
        )));
    }
    let (values, vectors) = sym_eigen(a)?;
    let scale = values.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let degenerate_gap = d < n && (values[d - 1] - values[d]).abs() <= DEGENERATE_GAP_TOL * scale;
    Ok(EigPair {
        values: values[..d].to_vec(),
        basis: OrthoBasis::new_unchecked(vectors.columns(0, d).into_owned()),
        degenerate_gap,
    })
}

/// Householder reduction to tridiagonal form (row-major `v`, in place).
/// On return `d` holds the diagonal, `e[1..]` the subdiagonal, and `v` the
/// accumulated orthogonal transformation.
fn tred2(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`. Eigenvectors are the rows
/// of `z` (row `k` pairs with `d[k]`).
fn tql2(n: usize, z: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let cap = 64 * n;
    let mut iterations = 0usize;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            loop {
                iterations += 1;
                if iterations > cap {
                    return Err(LinalgError::NoConvergence(cap));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for k in 0..n {
                        let t = zi1[k];
                        zi1[k] = s * zi[k] + c * t;
                        zi[k] = c * zi[k] - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    if d.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NoConvergence(cap));
    }
    Ok(())
}

/// `H(A) = A − diag(A)`.
pub fn hollow(a: &SymMatrix) -> SymMatrix {
    let mut m = a.as_matrix().clone();
    m.fill_diagonal(0.0);
    SymMatrix(m)
}

/// `sgn(H) = W₁W₂ᵀ` where `H = W₁ΣW₂ᵀ`.
pub fn matrix_sign(h: &Mat) -> Result<Mat> {
    if h.nrows() != h.ncols() || h.nrows() == 0 {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix sign needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let svd = h.clone().svd(true, true);
    let smallest = svd.singular_values.min();
    if !(smallest > SIGN_RANK_TOL) {
        return Err(LinalgError::RankDeficient(smallest));
    }
    let (Some(w1), Some(w2t)) = (svd.u, svd.v_t) else {
        unreachable!("both singular factors were requested")
    };
    Ok(w1 * w2t)
}

/// The orthogonal `W = sgn(ÛᵀU)`; `Û·W` is the estimate aligned with `U`.
pub fn align(u_hat: &OrthoBasis, u: &OrthoBasis) -> Result<Mat> {
    if u_hat.n() != u.n() || u_hat.d() != u.d() {
        return Err(LinalgError::DimensionMismatch(format!(
            "cannot align {}x{} with {}x{}",
            u_hat.n(),
            u_hat.d(),
            u.n(),
            u.d()
        )));
    }
    matrix_sign(&(u_hat.as_matrix().transpose() * u.as_matrix()))
}

/// `‖Û·sgn(ÛᵀU) − U‖` as a matrix, the row-wise estimation error.
pub fn aligned_difference(u_hat: &OrthoBasis, u: &OrthoBasis) -> Result<Mat> {
    let w = align(u_hat, u)?;
    Ok(u_hat.as_matrix() * w - u.as_matrix())
}

/// Maximum row Euclidean norm.
pub fn two_to_infty(a: &Mat) -> f64 {
    a.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub spectral: f64,
    pub frobenius: f64,
    pub max_entry: f64,
}

pub fn norms(a: &Mat) -> Norms {
    let frobenius = a.norm();
    let max_entry = a.amax();
    let spectral = if a.is_empty() || max_entry == 0.0 {
        0.0
    } else {
        let gram = SymMatrix::from_upper(a.transpose() * a);
        match top_d_eigs(&gram, 1) {
            Ok(eig) => eig.values[0].max(0.0).sqrt(),
            // Fall back to the SVD rather than failing a diagnostic.
            Err(_) => a.clone().svd(false, false).singular_values.max(),
        }
    };
    Norms {
        spectral,
        frobenius,
        max_entry,
    }
}

/// Singular values of `UᵀV` in descending order: the cosines of the principal
/// angles between the two subspaces.
pub fn principal_cosines(u: &OrthoBasis, v: &OrthoBasis) -> Result<Vec<f64>> {
    if u.n() != v.n() || u.d() != v.d() {
        return Err(LinalgError::DimensionMismatch(format!(
            "cannot compare {}x{} with {}x{}",
            u.n(),
            u.d(),
            v.n(),
            v.d()
        )));
    }
    let cross = u.as_matrix().transpose() * v.as_matrix();
    let mut s: Vec<f64> = cross
        .svd(false, false)
        .singular_values
        .iter()
        .map(|x| x.clamp(0.0, 1.0))
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// `√(1 − cos²)` for each principal cosine, in the same order.
pub fn principal_sines(u: &OrthoBasis, v: &OrthoBasis) -> Result<Vec<f64>> {
    Ok(principal_cosines(u, v)?
        .into_iter()
        .map(|c| (1.0 - c * c).max(0.0).sqrt())
        .collect())
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn inv_sqrt_spd(a: &SymMatrix) -> Result<Mat> {
    spd_power(a, -0.5)
}

/// Square root of a symmetric positive semidefinite matrix.
pub fn sqrt_psd(a: &SymMatrix) -> Result<Mat> {
    spd_power(a, 0.5)
}

fn spd_power(a: &SymMatrix, power: f64) -> Result<Mat> {
    let (values, vectors) = sym_eigen(a)?;
    let scale = values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if power < 0.0 && values.iter().any(|&x| x <= 1e-14 * scale.max(f64::MIN_POSITIVE)) {
        return Err(LinalgError::RankDeficient(*values.last().unwrap()));
    }
    let n = a.n();
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        let w = lam.max(0.0).powf(power);
        for i in 0..n {
            scaled[(i, k)] *= w;
        }
    }
    Ok(SymMatrix::from_upper(scaled * vectors.transpose()).into_inner())
}

/// `Σ_k λ_k v_k v_kᵀ` restricted to its diagonal, for eigenpairs in `eig`.
pub fn low_rank_diagonal(eig: &EigPair) -> Vec<f64> {
    let basis = eig.basis.as_matrix();
    (0..basis.nrows())
        .map(|i| {
            eig.values
                .iter()
                .enumerate()
                .map(|(k, lam)| lam * basis[(i, k)] * basis[(i, k)])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        SymMatrix::new(m).unwrap()
    }

    fn random_orthogonal(d: usize, rng: &mut impl Rng) -> Mat {
        let g = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        g.qr().q()
    }

    #[test]
    fn diagonal_matrix_eigs() {
        let a = SymMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let eig = top_d_eigs(&a, 2).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0]);
        let b = eig.basis.as_matrix();
        assert_eq!(b.column(0).as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(b.column(1).as_slice(), &[0.0, 1.0, 0.0]);
        assert!(!eig.degenerate_gap);
    }

    #[test]
    fn identity_eigs_unit_vector_with_positive_dominant_entry() {
        let eig = top_d_eigs(&SymMatrix::identity(3), 1).unwrap();
        assert_eq!(eig.values, vec![1.0]);
        let v = eig.basis.as_matrix().column(0);
        assert!((v.norm() - 1.0).abs() < 1e-15);
        let dominant = v
            .iter()
            .cloned()
            .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        assert!(dominant > 0.0);
        assert!(eig.degenerate_gap);
    }

    #[test]
    fn one_by_one_and_bad_d() {
        let a = SymMatrix::new(Mat::from_element(1, 1, -2.5)).unwrap();
        let eig = top_d_eigs(&a, 1).unwrap();
        assert_eq!(eig.values, vec![-2.5]);
        assert_eq!(eig.basis.as_matrix()[(0, 0)], 1.0);
        assert!(matches!(top_d_eigs(&a, 2), Err(LinalgError::DimensionMismatch(_))));
        assert!(matches!(top_d_eigs(&a, 0), Err(LinalgError::DimensionMismatch(_))));
    }

    #[test]
    fn residuals_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 5, 17, 40] {
            let a = random_sym(n, &mut rng);
            let eig = top_d_eigs(&a, n).unwrap();
            for w in eig.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
            let b = eig.basis.as_matrix();
            for (k, lam) in eig.values.iter().enumerate() {
                let v = b.column(k);
                let r = (a.as_matrix() * v - v * *lam).norm();
                assert!(r <= 1e-9 * (1.0 + lam.abs()), "residual {r}");
            }
            assert!(orthonormality_defect(b) < 1e-12);
            let again = top_d_eigs(&a, n).unwrap();
            assert_eq!(eig, again);
        }
    }

    #[test]
    fn symmetric_matrix_rejects_asymmetry() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 3.0]);
        assert!(matches!(SymMatrix::new(m), Err(LinalgError::NotSymmetric(_))));
        assert!(SymMatrix::new(Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn hollow_examples() {
        assert_eq!(hollow(&SymMatrix::identity(3)), SymMatrix::zeros(3));
        let a = SymMatrix::new(Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0])).unwrap();
        let h = hollow(&a);
        assert_eq!(h.as_matrix(), &Mat::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]));
        assert_eq!(hollow(&h), h);
    }

    #[test]
    fn matrix_sign_of_orthogonal_and_scaled_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..6 {
            let q = random_orthogonal(d, &mut rng);
            let s = matrix_sign(&q).unwrap();
            assert!((s - &q).norm() < 1e-10);
            let two = Mat::identity(d, d) * 2.0;
            assert!((matrix_sign(&two).unwrap() - Mat::identity(d, d)).norm() < 1e-12);
        }
    }

    #[test]
    fn matrix_sign_rank_deficient() {
        let h = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(matrix_sign(&h), Err(LinalgError::RankDeficient(_))));
    }

    /// Minimizes ‖W − H‖_F over all 2×2 rotations and reflections on a grid,
    /// refining around the best cell.
    fn grid_nearest_orthogonal(h: &Mat) -> (Mat, f64) {
        let candidate = |theta: f64, reflect: bool| {
            let (s, c) = theta.sin_cos();
            if reflect {
                Mat::from_row_slice(2, 2, &[c, s, s, -c])
            } else {
                Mat::from_row_slice(2, 2, &[c, -s, s, c])
            }
        };
        let mut best = (Mat::identity(2, 2), f64::INFINITY);
        for reflect in [false, true] {
            let mut lo = 0.0;
            let mut hi = std::f64::consts::TAU;
            for _ in 0..6 {
                let steps = 2000;
                let width = (hi - lo) / steps as f64;
                let mut local = (lo, f64::INFINITY);
                for k in 0..=steps {
                    let theta = lo + width * k as f64;
                    let dist = (candidate(theta, reflect) - h).norm();
                    if dist < local.1 {
                        local = (theta, dist);
                    }
                }
                lo = local.0 - width;
                hi = local.0 + width;
                if local.1 < best.1 {
                    best = (candidate(local.0, reflect), local.1);
                }
            }
        }
        best
    }

    #[test]
    fn matrix_sign_matches_grid_search_at_d2() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = Mat::from_fn(2, 2, |_, _| rng.random_range(-2.0..2.0));
            let s = matrix_sign(&h).unwrap();
            let (w, dist) = grid_nearest_orthogonal(&h);
            assert!((s.clone() - &h).norm() <= dist + 1e-9);
            assert!((s - w).norm() < 1e-6);
        }
    }

    #[test]
    fn matrix_sign_3x3_is_orthogonal_and_optimal_against_random_orthogonals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = Mat::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let s = matrix_sign(&h).unwrap();
        assert!(orthonormality_defect(&s) < 1e-10);
        let best = (s - &h).norm();
        for _ in 0..2000 {
            let q = random_orthogonal(3, &mut rng);
            assert!((q - &h).norm() >= best - 1e-12);
        }
    }

    fn random_basis(n: usize, d: usize, rng: &mut impl Rng) -> OrthoBasis {
        let g = Mat::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        OrthoBasis::new(g.qr().q().columns(0, d).into_owned()).unwrap()
    }

    #[test]
    fn align_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_basis(10, 3, &mut rng);
        assert!((align(&u, &u).unwrap() - Mat::identity(3, 3)).norm() < 1e-10);
        let q = random_orthogonal(3, &mut rng);
        let uq = u.rotate(&q).unwrap();
        assert!((align(&uq, &u).unwrap() - q.transpose()).norm() < 1e-10);
    }

    #[test]
    fn align_matches_grid_search_at_d2() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let u = random_basis(12, 2, &mut rng);
            let u_hat = random_basis(12, 2, &mut rng);
            let w = align(&u_hat, &u).unwrap();
            // ‖ÛW − U‖² = 2d − 2 tr(WᵀÛᵀU): the grid oracle on ÛᵀU applies.
            let cross = u_hat.as_matrix().transpose() * u.as_matrix();
            let (w_grid, _) = grid_nearest_orthogonal(&cross);
            let ours = (u_hat.as_matrix() * &w - u.as_matrix()).norm();
            let grid = (u_hat.as_matrix() * &w_grid - u.as_matrix()).norm();
            assert!(ours <= grid + 1e-9);
        }
    }

    #[test]
    fn two_to_infty_examples() {
        assert_eq!(two_to_infty(&Mat::zeros(3, 2)), 0.0);
        assert_eq!(two_to_infty(&Mat::identity(4, 4)), 1.0);
        assert_eq!(two_to_infty(&Mat::from_row_slice(2, 2, &[3.0, 4.0, 1.0, 0.0])), 5.0);
    }

    #[test]
    fn norms_examples() {
        let z = norms(&Mat::zeros(3, 3));
        assert_eq!((z.spectral, z.frobenius, z.max_entry), (0.0, 0.0, 0.0));
        let i = norms(&Mat::identity(4, 4));
        assert!((i.spectral - 1.0).abs() < 1e-14);
        assert!((i.frobenius - 2.0).abs() < 1e-14);
        assert_eq!(i.max_entry, 1.0);
    }

    #[test]
    fn principal_cosines_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_basis(8, 3, &mut rng);
        for c in principal_cosines(&u, &u).unwrap() {
            assert!((c - 1.0).abs() < 1e-12);
        }
        let e1 = OrthoBasis::new(Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
        let e2 = OrthoBasis::new(Mat::from_column_slice(3, 1, &[0.0, 1.0, 0.0])).unwrap();
        assert_eq!(principal_cosines(&e1, &e2).unwrap(), vec![0.0]);
        assert_eq!(principal_sines(&e1, &e2).unwrap(), vec![1.0]);
        let v = random_basis(7, 3, &mut rng);
        assert!(principal_cosines(&u, &v).is_err());
    }

    #[test]
    fn ortho_basis_validation() {
        assert!(OrthoBasis::new(Mat::from_element(3, 1, 1.0)).is_err());
        assert!(OrthoBasis::new(Mat::identity(2, 3)).is_err());
        assert!(OrthoBasis::new(Mat::identity(3, 2)).is_ok());
    }

    #[test]
    fn fractional_powers() {
        let a = SymMatrix::new(Mat::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0])).unwrap();
        let r = sqrt_psd(&a).unwrap();
        assert!((&r * &r - a.as_matrix()).norm() < 1e-12);
        let ir = inv_sqrt_spd(&a).unwrap();
        assert!((&ir * a.as_matrix() * &ir - Mat::identity(2, 2)).norm() < 1e-12);
        assert!(inv_sqrt_spd(&SymMatrix::zeros(2)).is_err());
    }
}
