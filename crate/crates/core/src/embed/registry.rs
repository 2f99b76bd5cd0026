use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    base, bcjse, hetero_pca, mase, recommend_rs, sos, BcjseConfig, Embedding, Result, HPCA_DEFAULT_MAX_ITERS,
    HPCA_DEFAULT_TOL,
};
use crate::model::LayerSource;

/// A subspace estimator selectable by name.
pub trait SubspaceEstimator: Send + Sync {
    fn name(&self) -> &str;
    fn estimate(&self, layers: &dyn LayerSource, d: usize) -> Result<Embedding>;
}

/// Tuning shared by the built-in estimators. Unused fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorParams {
    pub r_outer: usize,
    pub s_inner: usize,
    /// Derive `(R, S)` from the layer count and network size instead.
    pub recommend_rs: bool,
    pub hpca_max_iters: usize,
    pub hpca_tol: f64,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            r_outer: 2,
            s_inner: 1,
            recommend_rs: false,
            hpca_max_iters: HPCA_DEFAULT_MAX_ITERS,
            hpca_tol: HPCA_DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("unknown estimator {name:?}; known: {known}")]
    Unknown { name: String, known: String },
    #[error("estimator {0:?} is already registered")]
    Duplicate(String),
}

pub struct Sos;
pub struct Base;
pub struct Mase;

pub struct HeteroPca {
    pub max_iters: usize,
    pub tol: f64,
}

pub struct Bcjse {
    /// `None` means use [`recommend_rs`] for each input.
    pub schedule: Option<(usize, usize)>,
}

impl SubspaceEstimator for Sos {
    fn name(&self) -> &str {
        "sos"
    }
    fn estimate(&self, layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
        sos(layers, d)
    }
}

impl SubspaceEstimator for Base {
    fn name(&self) -> &str {
        "base"
    }
    fn estimate(&self, layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
        base(layers, d)
    }
}

impl SubspaceEstimator for Mase {
    fn name(&self) -> &str {
        "mase"
    }
    fn estimate(&self, layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
        mase(layers, d)
    }
}

impl SubspaceEstimator for HeteroPca {
    fn name(&self) -> &str {
        "hpca"
    }
    fn estimate(&self, layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
        hetero_pca(layers, d, self.max_iters, self.tol)
    }
}

impl SubspaceEstimator for Bcjse {
    fn name(&self) -> &str {
        "bcjse"
    }
    fn estimate(&self, layers: &dyn LayerSource, d: usize) -> Result<Embedding> {
        let (r, s) = self.schedule.unwrap_or_else(|| recommend_rs(layers.m(), layers.n()));
        bcjse(layers, BcjseConfig::new(d, r, s)?)
    }
}

pub type Factory = fn(&EstimatorParams) -> Box<dyn SubspaceEstimator>;

/// Name → constructor table.
pub struct EstimatorRegistry {
    factories: BTreeMap<String, Factory>,
}

impl EstimatorRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// `sos`, `mase`, `base`, `hpca` and `bcjse`.
    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        let builtins: [(&str, Factory); 5] = [
            ("sos", |_| Box::new(Sos)),
            ("mase", |_| Box::new(Mase)),
            ("base", |_| Box::new(Base)),
            ("hpca", |p| {
                Box::new(HeteroPca {
                    max_iters: p.hpca_max_iters,
                    tol: p.hpca_tol,
                })
            }),
            ("bcjse", |p| {
                Box::new(Bcjse {
                    schedule: (!p.recommend_rs).then_some((p.r_outer, p.s_inner)),
                })
            }),
        ];
        for (name, f) in builtins {
            reg.register(name, f).expect("builtin names are distinct");
        }
        reg
    }

    pub fn register(&mut self, name: &str, factory: Factory) -> std::result::Result<(), RegistryError> {
        if self.factories.contains_key(name) {
            return Err(RegistryError::Duplicate(name.to_string()));
        }
        self.factories.insert(name.to_string(), factory);
        Ok(())
    }

    pub fn build(
        &self,
        name: &str,
        params: &EstimatorParams,
    ) -> std::result::Result<Box<dyn SubspaceEstimator>, RegistryError> {
        match self.factories.get(name) {
            Some(f) => Ok(f(params)),
            None => Err(RegistryError::Unknown {
                name: name.to_string(),
                known: self.names().join(", "),
            }),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}

impl Default for EstimatorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
