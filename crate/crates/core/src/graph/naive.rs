use super::{collect_layer, layer_masses, slot_key, LayerKind, LayerSpec, MultilayerGraph};
use crate::error::Result;
use crate::samplers::RngStream;
use crate::weights::WeightMatrix;

/// Reference generator: one independent draw per slot `i <= j` per layer,
/// `O(n^2 L)`. Serves as the oracle for [`super::generate_fast`].
pub fn generate_naive(
    w: &WeightMatrix,
    layers: &[LayerSpec],
    rng: &mut RngStream,
) -> Result<MultilayerGraph> {
    let masses = layer_masses(w, layers)?;
    let n = w.n();
    let mut out = Vec::with_capacity(layers.len());
    for (l, (spec, &t)) in layers.iter().zip(&masses).enumerate() {
        let col = w.column(l);
        let mut hits = Vec::new();
        for i in 0..n {
            for j in i..n {
                let p = spec.g.eval(col[i] * col[j] / t);
                let count = match spec.kind {
                    LayerKind::MultiEdge => rng.poisson(p),
                    LayerKind::SingleEdge => rng.bernoulli(p) as u64,
                };
                for _ in 0..count {
                    hits.push(slot_key(i, j));
                }
            }
        }
        out.push(collect_layer(spec.kind, hits));
    }
    MultilayerGraph::new(n, out)
}
