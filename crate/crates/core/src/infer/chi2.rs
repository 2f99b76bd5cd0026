use statrs::distribution::{ChiSquared, ContinuousCDF};

fn dist(df: usize) -> ChiSquared {
    ChiSquared::new(df.max(1) as f64).expect("positive degrees of freedom")
}

/// Upper tail `P(χ²_df > x)`, i.e. the regularized upper incomplete gamma
/// `Q(df/2, x/2)`. Saturates at 1 for `x ≤ 0`.
pub fn chi2_sf(df: usize, x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 1.0;
    }
    dist(df).sf(x).clamp(0.0, 1.0)
}

pub fn chi2_cdf(df: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    dist(df).cdf(x).clamp(0.0, 1.0)
}

/// `q` with `P(χ²_df ≤ q) = p`.
pub fn chi2_quantile(df: usize, p: f64) -> f64 {
    dist(df).inverse_cdf(p)
}
