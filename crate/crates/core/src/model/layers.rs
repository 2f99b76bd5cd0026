use std::io::{Read, Write};

use rand::Rng;

use super::{CosieModel, ModelError, ProbabilityCache, ReplicateStream, Result};
use crate::linalg::{Mat, SymMatrix};

/// Read access to a vertex-aligned collection of symmetric layers, binary or
/// real-valued.
pub trait LayerSource: Sync {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    /// `Σ_t A_t A_t`, i.e. `AAᵀ` for the concatenation `A = [A_1, …, A_m]`.
    fn gram_sum(&self) -> SymMatrix;
    /// Layer `t` as a dense matrix.
    fn layer(&self, t: usize) -> SymMatrix;
    /// `Uᵀ A_t U`.
    fn project(&self, t: usize, u: &Mat) -> Mat;
}

/// One binary symmetric layer stored as sorted adjacency lists (CSR).
/// Self-loops appear as `i ∈ neighbors(i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Layer {
    /// Builds a layer from upper-triangular pairs `(i, j)` with `i <= j`.
    pub fn from_upper_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut degree = vec![0u32; n];
        for &(i, j) in edges {
            if i > j || j >= n {
                return Err(ModelError::NotBinary(format!("bad edge ({i}, {j}) for n={n}")));
            }
            degree[i] += 1;
            if i != j {
                degree[j] += 1;
            }
        }
        let mut offsets = vec![0u32; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n] as usize];
        for &(i, j) in edges {
            targets[fill[i] as usize] = j as u32;
            fill[i] += 1;
            if i != j {
                targets[fill[j] as usize] = i as u32;
                fill[j] += 1;
            }
        }
        for i in 0..n {
            let row = &mut targets[offsets[i] as usize..offsets[i + 1] as usize];
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(ModelError::NotBinary(format!("duplicate edge at vertex {i}")));
            }
        }
        Ok(Self { offsets, targets })
    }

    /// Builds a layer from a dense matrix that must be symmetric with entries
    /// in `{0, 1}`.
    pub fn from_dense(a: &Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(ModelError::NotBinary("matrix is not square".into()));
        }
        let mut edges = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let x = a[(i, j)];
                if x != 0.0 && x != 1.0 {
                    return Err(ModelError::NotBinary(format!("entry ({i}, {j}) = {x}")));
                }
                if x != a[(j, i)] {
                    return Err(ModelError::NotBinary(format!("asymmetric at ({i}, {j})")));
                }
                if i <= j && x == 1.0 {
                    edges.push((i, j));
                }
            }
        }
        Self::from_upper_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Number of stored (directed) entries, i.e. the count of ones in the
    /// dense matrix.
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    pub fn to_dense(&self) -> Mat {
        let n = self.n();
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for &j in self.neighbors(i) {
                a[(i, j as usize)] = 1.0;
            }
        }
        a
    }
}

/// Seed provenance of a sampled stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub master_seed: u64,
    pub replicate: u64,
}

/// `m` binary symmetric `n×n` adjacency matrices on a common vertex set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerStack {
    n: usize,
    layers: Vec<Layer>,
    provenance: Option<Provenance>,
}

const MAGIC: &[u8; 4] = b"MLSL";
const FORMAT_VERSION: u32 = 1;

impl LayerStack {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(ModelError::InvalidParameter("a stack needs at least one layer".into()));
        };
        let n = first.n();
        if n == 0 || layers.iter().any(|l| l.n() != n) {
            return Err(ModelError::InvalidParameter(
                "layers must share one nonzero dimension".into(),
            ));
        }
        Ok(Self {
            n,
            layers,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Layers reordered by `perm` (layer `k` of the result is `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            n: self.n,
            layers: perm.iter().map(|&t| self.layers[t].clone()).collect(),
            provenance: self.provenance,
        }
    }

    /// Flat binary form: magic `MLSL`, then little-endian `u32` version, `m`
    /// and `n`, then per layer the upper triangle (diagonal included) in
    /// row-major order packed eight cells per byte, least significant bit
    /// first, each layer padded to a whole byte.
    pub fn write_to(&self, mut out: impl Write) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.layers.len() as u32).to_le_bytes())?;
        out.write_all(&(self.n as u32).to_le_bytes())?;
        let cells = self.n * (self.n + 1) / 2;
        for layer in &self.layers {
            let mut bytes = vec![0u8; cells.div_ceil(8)];
            let mut cell = 0usize;
            for i in 0..self.n {
                let row = layer.neighbors(i);
                let start = row.partition_point(|&j| (j as usize) < i);
                for &j in &row[start..] {
                    let k = cell + (j as usize - i);
                    bytes[k / 8] |= 1 << (k % 8);
                }
                cell += self.n - i;
            }
            out.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn read_from(mut input: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ModelError::Format("bad magic".into()));
        }
        let mut word = [0u8; 4];
        let mut next_u32 = |input: &mut dyn Read| -> Result<u32> {
            input.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let version = next_u32(&mut input)?;
        if version != FORMAT_VERSION {
            return Err(ModelError::Format(format!("unsupported version {version}")));
        }
        let m = next_u32(&mut input)? as usize;
        let n = next_u32(&mut input)? as usize;
        if m == 0 || n == 0 {
            return Err(ModelError::Format("empty stack".into()));
        }
        let cells = n * (n + 1) / 2;
        let mut bytes = vec![0u8; cells.div_ceil(8)];
        let mut layers = Vec::with_capacity(m);
        for _ in 0..m {
            input.read_exact(&mut bytes)?;
            let mut edges = Vec::new();
            let mut cell = 0usize;
            for i in 0..n {
                for j in i..n {
                    if bytes[cell / 8] >> (cell % 8) & 1 == 1 {
                        edges.push((i, j));
                    }
                    cell += 1;
                }
            }
            layers.push(Layer::from_upper_edges(n, &edges)?);
        }
        Self::new(layers)
    }
}

impl LayerSource for LayerStack {
    fn n(&self) -> usize {
        self.n
    }

    fn m(&self) -> usize {
        self.layers.len()
    }

    /// Counts common neighbours: `(Σ_t A_t²)_ij = Σ_t Σ_k [i ~ k][k ~ j]`.
    /// All sums are small integers, so the result is exact.
    fn gram_sum(&self) -> SymMatrix {
        let n = self.n;
        // Column-major upper triangle of an n×n matrix.
        let mut g = vec![0.0f64; n * n];
        for layer in &self.layers {
            for k in 0..n {
                let nb = layer.neighbors(k);
                for (a, &i) in nb.iter().enumerate() {
                    let i = i as usize;
                    for &j in &nb[a..] {
                        g[j as usize * n + i] += 1.0;
                    }
                }
            }
        }
        SymMatrix::from_upper(Mat::from_vec(n, n, g))
    }

    fn layer(&self, t: usize) -> SymMatrix {
        SymMatrix::from_upper(self.layers[t].to_dense())
    }

    fn project(&self, t: usize, u: &Mat) -> Mat {
        let layer = &self.layers[t];
        let d = u.ncols();
        let mut au = Mat::zeros(self.n, d);
        for i in 0..self.n {
            for &j in layer.neighbors(i) {
                for c in 0..d {
                    au[(i, c)] += u[(j as usize, c)];
                }
            }
        }
        u.transpose() * au
    }
}

/// Real-valued layers, used for noiseless checks where `A_t := P_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStack {
    layers: Vec<SymMatrix>,
}

impl DenseStack {
    pub fn new(layers: Vec<SymMatrix>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(ModelError::InvalidParameter("a stack needs at least one layer".into()));
        };
        let n = first.n();
        if layers.iter().any(|l| l.n() != n) {
            return Err(ModelError::InvalidParameter("layers must share one dimension".into()));
        }
        Ok(Self { layers })
    }

    pub fn from_stack(stack: &LayerStack) -> Self {
        Self {
            layers: (0..stack.m()).map(|t| stack.layer(t)).collect(),
        }
    }
}

impl LayerSource for DenseStack {
    fn n(&self) -> usize {
        self.layers[0].n()
    }

    fn m(&self) -> usize {
        self.layers.len()
    }

    fn gram_sum(&self) -> SymMatrix {
        let n = self.n();
        let mut g = Mat::zeros(n, n);
        for a in &self.layers {
            let a = a.as_matrix();
            g.gemm(1.0, a, a, 1.0);
        }
        SymMatrix::from_upper(g)
    }

    fn layer(&self, t: usize) -> SymMatrix {
        self.layers[t].clone()
    }

    fn project(&self, t: usize, u: &Mat) -> Mat {
        u.transpose() * self.layers[t].as_matrix() * u
    }
}

/// Draws `A_tij ~ Bernoulli(P_tij)` independently for every layer `t` and
/// every `i <= j` (self-loops included), mirroring to `j > i`.
///
/// Layer `t` uses its own stream from `stream`, so the result does not depend
/// on the order in which layers are generated.
pub fn sample_layers(model: &CosieModel, stream: &ReplicateStream) -> LayerStack {
    let n = model.n();
    let mut cache = ProbabilityCache::default();
    let mut layers = Vec::with_capacity(model.m());
    let mut edges = Vec::new();
    for t in 0..model.m() {
        let p = cache.clamped(model, t);
        let p = p.as_matrix();
        let mut rng = stream.layer_rng(t);
        edges.clear();
        for i in 0..n {
            for j in i..n {
                if rng.random::<f64>() < p[(j, i)] {
                    edges.push((i, j));
                }
            }
        }
        layers.push(Layer::from_upper_edges(n, &edges).expect("sampled edges are well formed"));
    }
    LayerStack::new(layers)
        .expect("model has at least one layer")
        .with_provenance(Provenance {
            master_seed: stream.master_seed(),
            replicate: stream.replicate(),
        })
}
