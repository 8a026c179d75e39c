//! Multilayer inhomogeneous random graphs.
//!
//! Conditionally on the weights, the edge count between `i <= j` in layer `l`
//! is `Poisson(g_l(x))` (multi-edge layers) or `Bernoulli(g_l(x))`
//! (single-edge layers), with `x = W_il W_jl / T_l` and `T_l = sum_i W_il`.
//! Self-loops are allowed and contribute their multiplicity to the degree
//! once, following `D_il = sum_j A_ijl` literally. Many graph libraries count
//! a self-loop twice; this crate does not.

mod alias;
mod fast;
mod io;
mod naive;

pub use alias::AliasTable;
pub use fast::{generate_fast, FAST_CHUNK_NODES};
pub use naive::generate_naive;

use serde::{Deserialize, Serialize};

use crate::error::{MirgError, Result};
use crate::samplers::RngStream;
use crate::weights::WeightMatrix;

/// Connection function `g` mapping the normalized weight product to an edge
/// rate (multi-edge) or probability (single-edge).
///
/// Every variant is linear at the origin with slope `c = 1`. The three
/// nonlinear ones satisfy `|g(x) - x| <= M x^(1+nu)` for `x < delta` with
/// `M = delta = nu = 1`, and all are bounded by `min(x, 1)` except identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionFn {
    /// `g(x) = x`
    Identity,
    /// `g(x) = min(x, 1)`
    CapOne,
    /// `g(x) = x / (1 + x)`
    Odds,
    /// `g(x) = 1 - exp(-x)`
    ExpComplement,
}

impl ConnectionFn {
    pub const ALL: [ConnectionFn; 4] = [
        ConnectionFn::Identity,
        ConnectionFn::CapOne,
        ConnectionFn::Odds,
        ConnectionFn::ExpComplement,
    ];

    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ConnectionFn::Identity => x,
            ConnectionFn::CapOne => x.min(1.0),
            ConnectionFn::Odds => {
                if x.is_infinite() {
                    1.0
                } else {
                    x / (1.0 + x)
                }
            }
            ConnectionFn::ExpComplement => -(-x).exp_m1(),
        }
    }

    /// Linear coefficient `c` in `g(x) = c x + O(x^(1+nu))`.
    pub fn slope(self) -> f64 {
        1.0
    }

    /// Exponent `nu` of the remainder; `None` when `g` is exactly linear.
    pub fn remainder_exponent(self) -> Option<f64> {
        match self {
            ConnectionFn::Identity => None,
            _ => Some(1.0),
        }
    }

    /// `(M, delta)` such that `|g(x) - c x| <= M x^(1+nu)` for `x < delta`.
    pub fn remainder_constants(self) -> (f64, f64) {
        (1.0, 1.0)
    }

    pub fn is_bounded_by_one(self) -> bool {
        !matches!(self, ConnectionFn::Identity)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConnectionFn::Identity => "identity",
            ConnectionFn::CapOne => "cap_one",
            ConnectionFn::Odds => "odds",
            ConnectionFn::ExpComplement => "exp_complement",
        }
    }
}

impl std::str::FromStr for ConnectionFn {
    type Err = MirgError;

    fn from_str(s: &str) -> Result<Self> {
        ConnectionFn::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| MirgError::param(format!("unknown connection function {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    /// Poisson edge counts; multiple edges allowed.
    MultiEdge,
    /// Bernoulli edges; at most one edge per pair.
    SingleEdge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub g: ConnectionFn,
}

impl LayerSpec {
    pub fn multi(g: ConnectionFn) -> Self {
        Self {
            kind: LayerKind::MultiEdge,
            g,
        }
    }

    pub fn single(g: ConnectionFn) -> Self {
        Self {
            kind: LayerKind::SingleEdge,
            g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == LayerKind::SingleEdge && !self.g.is_bounded_by_one() {
            return Err(MirgError::param(format!(
                "single-edge layers need g with range in [0, 1]; {} is unbounded",
                self.g.name()
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for LayerSpec {
    type Err = MirgError;

    /// Parses `multi:identity`, `single:exp_complement`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (kind, g) = s
            .split_once(':')
            .ok_or_else(|| MirgError::param(format!("layer spec {s:?} is not kind:g")))?;
        let kind = match kind {
            "multi" | "multi_edge" => LayerKind::MultiEdge,
            "single" | "single_edge" => LayerKind::SingleEdge,
            other => return Err(MirgError::param(format!("unknown layer kind {other:?}"))),
        };
        let spec = LayerSpec { kind, g: g.parse()? };
        spec.validate()?;
        Ok(spec)
    }
}

/// One undirected edge slot `i <= j` (0-based) with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub i: u32,
    pub j: u32,
    pub multiplicity: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub kind: LayerKind,
    /// Sorted by `(i, j)`, no duplicate slots.
    pub edges: Vec<Edge>,
}

impl Layer {
    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|e| e.multiplicity as u64).sum()
    }
}

/// Per-layer sparse edge lists (the adjacency cube).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultilayerGraph {
    n: usize,
    layers: Vec<Layer>,
}

impl MultilayerGraph {
    pub fn new(n: usize, layers: Vec<Layer>) -> Result<Self> {
        for (l, layer) in layers.iter().enumerate() {
            let mut prev: Option<(u32, u32)> = None;
            for e in &layer.edges {
                if e.i > e.j || e.j as usize >= n {
                    return Err(MirgError::Format(format!(
                        "layer {}: invalid edge ({}, {}) for n = {n}",
                        l + 1,
                        e.i + 1,
                        e.j + 1
                    )));
                }
                if e.multiplicity == 0
                    || (layer.kind == LayerKind::SingleEdge && e.multiplicity != 1)
                {
                    return Err(MirgError::Format(format!(
                        "layer {}: bad multiplicity {} on ({}, {})",
                        l + 1,
                        e.multiplicity,
                        e.i + 1,
                        e.j + 1
                    )));
                }
                if prev.is_some_and(|p| p >= (e.i, e.j)) {
                    return Err(MirgError::Format(format!(
                        "layer {}: edges unsorted or duplicated at ({}, {})",
                        l + 1,
                        e.i + 1,
                        e.j + 1
                    )));
                }
                prev = Some((e.i, e.j));
            }
        }
        Ok(Self { n, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn edge_count(&self, l: usize) -> u64 {
        self.layers[l].total_multiplicity()
    }
}

/// Builds a sorted layer from unsorted `(i, j)` slot hits, summing repeats.
pub(crate) fn collect_layer(kind: LayerKind, mut hits: Vec<u64>) -> Layer {
    hits.sort_unstable();
    let mut edges: Vec<Edge> = Vec::new();
    for key in hits {
        let (i, j) = ((key >> 32) as u32, key as u32);
        match edges.last_mut() {
            Some(last) if last.i == i && last.j == j => last.multiplicity += 1,
            _ => edges.push(Edge {
                i,
                j,
                multiplicity: 1,
            }),
        }
    }
    Layer { kind, edges }
}

#[inline]
pub(crate) fn slot_key(a: usize, b: usize) -> u64 {
    let (i, j) = if a <= b { (a, b) } else { (b, a) };
    ((i as u64) << 32) | j as u64
}

/// Nonnegative integer `n x L` degree matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeMatrix {
    n: usize,
    layers: usize,
    data: Vec<u64>,
}

impl DegreeMatrix {
    pub fn new(n: usize, layers: usize, data: Vec<u64>) -> Result<Self> {
        if data.len() != n * layers {
            return Err(MirgError::Shape(format!(
                "expected {} degrees for {n}x{layers}, got {}",
                n * layers,
                data.len()
            )));
        }
        Ok(Self { n, layers, data })
    }

    pub fn zeros(n: usize, layers: usize) -> Self {
        Self {
            n,
            layers,
            data: vec![0; n * layers],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    #[inline]
    pub fn get(&self, i: usize, l: usize) -> u64 {
        self.data[i * self.layers + l]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.layers..(i + 1) * self.layers]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> {
        self.data.chunks_exact(self.layers.max(1)).take(self.n)
    }

    pub fn column_sum(&self, l: usize) -> u64 {
        self.rows().map(|r| r[l]).sum()
    }
}

/// `D_il = sum_j A_ijl`; an off-diagonal edge adds its multiplicity to both
/// endpoints, a self-loop adds it once.
pub fn degrees(g: &MultilayerGraph) -> DegreeMatrix {
    let layers = g.layers.len();
    let mut d = DegreeMatrix::zeros(g.n, layers);
    for (l, layer) in g.layers.iter().enumerate() {
        for e in &layer.edges {
            let m = e.multiplicity as u64;
            d.data[e.i as usize * layers + l] += m;
            if e.i != e.j {
                d.data[e.j as usize * layers + l] += m;
            }
        }
    }
    d
}

/// Checks preconditions shared by the generators and returns `T_l` per layer.
pub(crate) fn layer_masses(w: &WeightMatrix, layers: &[LayerSpec]) -> Result<Vec<f64>> {
    if layers.len() != w.layers() {
        return Err(MirgError::Shape(format!(
            "{} layer specs for {} weight columns",
            layers.len(),
            w.layers()
        )));
    }
    if w.n() > u32::MAX as usize {
        return Err(MirgError::param("node count exceeds u32 range"));
    }
    for spec in layers {
        spec.validate()?;
    }
    (0..w.layers())
        .map(|l| {
            let t = w.layer_mass(l);
            if t > 0.0 {
                Ok(t)
            } else {
                Err(MirgError::DegenerateWeights { layer: l + 1 })
            }
        })
        .collect()
}

/// `sum_j g_l(w_il w_jl / T_l)` per layer: the conditional mean degree of
/// node `i` given the weights.
pub fn conditional_mean_degree(w: &WeightMatrix, layers: &[LayerSpec], i: usize) -> Result<Vec<f64>> {
    if i >= w.n() {
        return Err(MirgError::Range(format!("node {i} out of 0..{}", w.n())));
    }
    if layers.len() != w.layers() {
        return Err(MirgError::Shape("layer count mismatch".into()));
    }
    Ok(layers
        .iter()
        .enumerate()
        .map(|(l, spec)| {
            let t = w.layer_mass(l);
            if t <= 0.0 {
                return 0.0;
            }
            let wi = w.get(i, l);
            w.rows().map(|r| spec.g.eval(wi * r[l] / t)).sum()
        })
        .collect())
}

/// Draws node `i`'s degree vector from its exact conditional law given the
/// weights: `Poisson(sum_j g(x_ij))` on multi-edge layers and a sum of
/// independent `Bernoulli(g(x_ij))` on single-edge layers. Equal in law to
/// reading row `i` off a full generated graph, at `O(nL)` cost.
pub fn sample_node_degrees(
    w: &WeightMatrix,
    layers: &[LayerSpec],
    i: usize,
    rng: &mut RngStream,
) -> Result<Vec<u64>> {
    let masses = layer_masses(w, layers)?;
    if i >= w.n() {
        return Err(MirgError::Range(format!("node {i} out of 0..{}", w.n())));
    }
    Ok(layers
        .iter()
        .zip(&masses)
        .enumerate()
        .map(|(l, (spec, &t))| {
            let wi = w.get(i, l);
            match spec.kind {
                LayerKind::MultiEdge => {
                    let rate = w.rows().map(|r| spec.g.eval(wi * r[l] / t)).sum();
                    rng.poisson(rate)
                }
                LayerKind::SingleEdge => w
                    .rows()
                    .filter(|r| rng.bernoulli(spec.g.eval(wi * r[l] / t)))
                    .count() as u64,
            }
        })
        .collect())
}

/// Independent `Poisson(c_l w_il)` entries: the mixed-Poisson limit law of
/// the degree vector.
pub fn sample_asymptotic_degrees(w: &WeightMatrix, c: &[f64], rng: &mut RngStream) -> Result<DegreeMatrix> {
    if c.len() != w.layers() {
        return Err(MirgError::Shape(format!(
            "{} scale factors for {} layers",
            c.len(),
            w.layers()
        )));
    }
    if c.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(MirgError::param("scale factors must be positive"));
    }
    let mut data = Vec::with_capacity(w.n() * w.layers());
    for row in w.rows() {
        for (x, s) in row.iter().zip(c) {
            data.push(rng.poisson(x * s));
        }
    }
    DegreeMatrix::new(w.n(), w.layers(), data)
}

pub use io::{read_degree_csv, read_edge_list, write_degree_csv, write_edge_list};
