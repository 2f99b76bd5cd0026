use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use mlspec_core::embed::{EstimatorParams, EstimatorRegistry};
use mlspec_core::infer::{KMEANS_DEFAULT_MAX_ITERS, KMEANS_DEFAULT_RESTARTS};
use mlspec_core::model::LayerDesign;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SubspaceError,
    PowerTable,
    NullDist,
    Ellipse,
    Community,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::SubspaceError,
        ExperimentKind::PowerTable,
        ExperimentKind::NullDist,
        ExperimentKind::Ellipse,
        ExperimentKind::Community,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SubspaceError => "subspace-error",
            ExperimentKind::PowerTable => "power-table",
            ExperimentKind::NullDist => "null-dist",
            ExperimentKind::Ellipse => "ellipse",
            ExperimentKind::Community => "community",
        }
    }

    /// Whether the model is the mixed-membership design with `n0` pure
    /// vertices per community.
    fn uses_mixed_membership(self) -> bool {
        matches!(
            self,
            ExperimentKind::PowerTable | ExperimentKind::NullDist | ExperimentKind::Ellipse
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmeansParams {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for KmeansParams {
    fn default() -> Self {
        Self {
            restarts: KMEANS_DEFAULT_RESTARTS,
            max_iters: KMEANS_DEFAULT_MAX_ITERS,
        }
    }
}

/// One experiment. Vertex indices (`pairs`, `vertex`) are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0: Option<usize>,
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    pub rho: Vec<f64>,
    #[serde(default)]
    pub design: LayerDesign,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub tuning: EstimatorParams,
    #[serde(default)]
    pub kmeans: KmeansParams,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "default_threads")]
    pub threads: usize,
    /// Replace sampled layers by their expected values.
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
}

fn default_k() -> usize {
    2
}

fn default_d() -> usize {
    2
}

fn default_threads() -> usize {
    1
}

fn default_estimators() -> Vec<String> {
    ["sos", "mase", "base", "hpca", "bcjse"].map(String::from).to_vec()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Serialization of everything that affects results (output location
    /// and thread count excluded).
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        c.threads = 1;
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.n < 2 || self.m == 0 || self.replicates == 0 || self.threads == 0 || self.d == 0 {
            return bad("n >= 2 and m, replicates, threads, d >= 1 are required".into());
        }
        if self.d > self.n {
            return bad(format!("d={} exceeds n={}", self.d, self.n));
        }
        if self.rho.is_empty() {
            return bad("rho grid is empty".into());
        }
        if !(0.0 < self.b && self.b < self.a) {
            return bad(format!("need 0 < b < a, got a={}, b={}", self.a, self.b));
        }
        for &rho in &self.rho {
            if !(0.0..=1.0).contains(&rho) || rho * self.a > 1.0 {
                return bad(format!("rho={rho} must lie in [0, 1] with rho*a <= 1"));
            }
        }
        if self.tuning.r_outer == 0 || self.tuning.s_inner == 0 {
            return bad("tuning needs r_outer, s_inner >= 1".into());
        }
        if self.tuning.hpca_max_iters == 0 || !(self.tuning.hpca_tol > 0.0) {
            return bad("tuning needs hpca_max_iters >= 1 and hpca_tol > 0".into());
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iters == 0 {
            return bad("kmeans restarts and max_iters must be positive".into());
        }
        let registry = EstimatorRegistry::with_builtins();
        if self.estimators.is_empty() {
            return bad("estimator list is empty".into());
        }
        for name in &self.estimators {
            if let Err(e) = registry.build(name, &self.tuning) {
                return bad(e.to_string());
            }
        }
        if self.kind.uses_mixed_membership() {
            let Some(n0) = self.n0 else {
                return bad(format!("{} needs n0", self.kind.as_str()));
            };
            if n0 == 0 || 2 * n0 >= self.n {
                return bad(format!("need 0 < 2*n0 < n, got n0={n0}"));
            }
            if self.m % 2 != 0 {
                return bad("the mixed design needs an even m".into());
            }
        } else if self.n0.is_some() {
            return bad(format!("n0 is not used by {}", self.kind.as_str()));
        }
        match self.kind {
            ExperimentKind::SubspaceError => {
                if self.n % 2 != 0 || self.n < 4 || self.m % 2 != 0 {
                    return bad("subspace-error needs even n >= 4 and even m".into());
                }
                if self.d != 2 {
                    return bad("the quarter-circle model has rank 2".into());
                }
            }
            ExperimentKind::Community => {
                if self.k < 2 || self.k > self.n {
                    return bad(format!("need 2 <= k <= n, got k={}", self.k));
                }
                if self.d != self.k {
                    return bad(format!("community needs d = k, got d={}, k={}", self.d, self.k));
                }
                if self.design == LayerDesign::Mixed && self.m % 2 != 0 {
                    return bad("the mixed design needs an even m".into());
                }
            }
            _ => {
                if self.d != 2 || self.k != 2 {
                    return bad("the mixed-membership design has two communities (k = d = 2)".into());
                }
            }
        }
        for &[i1, i2] in self.pairs.iter().flatten() {
            if i1 == 0 || i2 == 0 || i1 > self.n || i2 > self.n || i1 == i2 {
                return bad(format!(
                    "pair ({i1}, {i2}) must be two distinct vertices in 1..={}",
                    self.n
                ));
            }
        }
        if let Some(v) = self.vertex {
            if v == 0 || v > self.n {
                return bad(format!("vertex {v} outside 1..={}", self.n));
            }
        }
        Ok(())
    }

    /// 1-based vertex pairs tested by the power table: `(1, n0)` for size,
    /// then eleven mixed vertices spanning the upper third of the mixed
    /// block (`{400, 410, …, 500}` at `n = 500, n0 = 100`).
    pub fn power_pairs(&self) -> Vec<[usize; 2]> {
        if let Some(p) = &self.pairs {
            return p.clone();
        }
        let n0 = self.n0.unwrap_or(1);
        let mixed = (self.n - 2 * n0) as f64;
        let mut pairs = vec![[1, n0]];
        for k in 0..=10 {
            let offset = (mixed * (2.0 / 3.0 + k as f64 / 30.0)).round() as usize;
            let i2 = (2 * n0 + offset).min(self.n);
            if !pairs.iter().any(|p| p[1] == i2) {
                pairs.push([1, i2]);
            }
        }
        pairs
    }

    /// 1-based vertex pair for the null distribution: two pure vertices of
    /// the first community.
    pub fn null_pair(&self) -> [usize; 2] {
        self.pairs
            .as_ref()
            .and_then(|p| p.first().copied())
            .unwrap_or([1, self.n0.unwrap_or(2)])
    }

    /// 1-based vertex for the ellipse study; defaults to the middle mixed
    /// vertex.
    pub fn ellipse_vertex(&self) -> usize {
        self.vertex.unwrap_or_else(|| {
            let n0 = self.n0.unwrap_or(0);
            2 * n0 + (self.n - 2 * n0) / 2
        })
    }

    /// Reduced-size defaults that run in minutes.
    pub fn desk_preset(kind: ExperimentKind) -> Self {
        let mut cfg = Self::full_preset(kind);
        match kind {
            ExperimentKind::SubspaceError => {
                cfg.m = 1600;
                cfg.rho = vec![0.3, 0.5];
                cfg.replicates = 50;
            }
            ExperimentKind::PowerTable | ExperimentKind::NullDist | ExperimentKind::Ellipse => {
                cfg.n = 200;
                cfg.n0 = Some(50);
                cfg.m = 100;
                cfg.rho = vec![0.04];
                cfg.replicates = 400;
            }
            ExperimentKind::Community => {
                cfg.n = 150;
                cfg.m = 400;
                cfg.rho = vec![0.2];
                cfg.replicates = 100;
            }
        }
        cfg
    }

    /// The published simulation sizes.
    pub fn full_preset(kind: ExperimentKind) -> Self {
        let base = Self {
            kind,
            n: 80,
            m: 6400,
            n0: None,
            a: 0.8,
            b: 0.6,
            k: 2,
            rho: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            design: LayerDesign::Mixed,
            estimators: default_estimators(),
            d: 2,
            tuning: EstimatorParams::default(),
            kmeans: KmeansParams::default(),
            replicates: 500,
            seed: 20240601,
            output: None,
            threads: 1,
            noiseless: false,
            pairs: None,
            vertex: None,
        };
        match kind {
            ExperimentKind::SubspaceError => base,
            ExperimentKind::PowerTable | ExperimentKind::NullDist | ExperimentKind::Ellipse => Self {
                n: 500,
                n0: Some(100),
                m: 200,
                a: 0.9,
                b: 0.1,
                rho: vec![0.01, 0.02, 0.03, 0.04],
                estimators: vec!["bcjse".into()],
                replicates: 1000,
                ..base
            },
            ExperimentKind::Community => Self {
                n: 500,
                m: 400,
                rho: vec![0.1, 0.2],
                estimators: vec!["bcjse".into()],
                replicates: 200,
                ..base
            },
        }
    }
}
