//! Expected `O(n + m)` generators with the same conditional law as the naive
//! path.
//!
//! Multi-edge layers superpose two Poisson processes that together put rate
//! `x_ij = w_i w_j / T` on every slot: `Poisson(T/2)` ordered endpoint pairs
//! drawn iid from `w / T` through an alias table (rate `x_ij` off the
//! diagonal, `x_ii / 2` on it) plus an extra `Poisson(x_ii / 2)` self-loop
//! count per node. Thinning each event by `g(x) / x` then yields exact
//! `Poisson(g(x))` counts since every `g` here satisfies `g(x) <= x`.
//!
//! Single-edge layers use skip sampling over partners sorted by decreasing
//! weight: geometric jumps under the running bound `p = min(x, 1)`, which
//! can only decrease along the row, then acceptance with `g(x) / p`. All
//! single-edge `g` satisfy `g(x) <= min(x, 1)`.
//!
//! Work is split into fixed node chunks, each with a stream derived from the
//! layer stream and the chunk index, so output is independent of the thread
//! count.

use rayon::prelude::*;

use super::{
    collect_layer, layer_masses, slot_key, AliasTable, ConnectionFn, Layer, LayerKind, LayerSpec,
    MultilayerGraph,
};
use crate::error::Result;
use crate::samplers::RngStream;
use crate::weights::WeightMatrix;

/// Nodes per independently seeded generation chunk.
pub const FAST_CHUNK_NODES: usize = 8192;

pub fn generate_fast(
    w: &WeightMatrix,
    layers: &[LayerSpec],
    rng: &mut RngStream,
) -> Result<MultilayerGraph> {
    let masses = layer_masses(w, layers)?;
    let base = rng.fork();
    let out: Vec<Layer> = layers
        .par_iter()
        .zip(masses.par_iter())
        .enumerate()
        .map(|(l, (spec, &t))| {
            let stream = base.derive(l as u64);
            let col = w.column(l);
            match spec.kind {
                LayerKind::MultiEdge => multi_edge_layer(&col, t, spec.g, &stream),
                LayerKind::SingleEdge => single_edge_layer(&col, t, spec.g, &stream),
            }
        })
        .collect();
    MultilayerGraph::new(w.n(), out)
}

fn chunk_count(n: usize) -> usize {
    n.div_ceil(FAST_CHUNK_NODES).max(1)
}

/// Probability of keeping an identity-process event on a slot with
/// normalized product `x > 0`.
#[inline]
fn keep_ratio(g: ConnectionFn, x: f64) -> f64 {
    match g {
        ConnectionFn::Identity => 1.0,
        _ => g.eval(x) / x,
    }
}

fn multi_edge_layer(col: &[f64], total: f64, g: ConnectionFn, stream: &RngStream) -> Layer {
    let n = col.len();
    let table = AliasTable::new(col).expect("positive layer mass");
    let chunks = chunk_count(n);
    let pair_rate = total / 2.0 / chunks as f64;
    let hits: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.derive(c as u64);
            let mut hits = Vec::new();
            let events = rng.poisson(pair_rate);
            for _ in 0..events {
                let a = table.sample(&mut rng);
                let b = table.sample(&mut rng);
                let x = col[a] * col[b] / total;
                if g == ConnectionFn::Identity || rng.unit() < keep_ratio(g, x) {
                    hits.push(slot_key(a, b));
                }
            }
            let lo = c * FAST_CHUNK_NODES;
            let hi = ((c + 1) * FAST_CHUNK_NODES).min(n);
            for (i, &wi) in col.iter().enumerate().take(hi).skip(lo) {
                if wi == 0.0 {
                    continue;
                }
                let x = wi * wi / total;
                let extra = rng.poisson(x / 2.0);
                let keep = keep_ratio(g, x);
                for _ in 0..extra {
                    if g == ConnectionFn::Identity || rng.unit() < keep {
                        hits.push(slot_key(i, i));
                    }
                }
            }
            hits
        })
        .collect();
    collect_layer(LayerKind::MultiEdge, hits.concat())
}

fn single_edge_layer(col: &[f64], total: f64, g: ConnectionFn, stream: &RngStream) -> Layer {
    let n = col.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| col[b as usize].total_cmp(&col[a as usize]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| col[i as usize]).collect();
    let chunks = chunk_count(n);
    let hits: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.derive(c as u64);
            let mut hits = Vec::new();
            let lo = c * FAST_CHUNK_NODES;
            let hi = ((c + 1) * FAST_CHUNK_NODES).min(n);
            for a in lo..hi {
                let wa = sorted[a];
                if wa == 0.0 {
                    break;
                }
                let mut j = a;
                let mut bound = (wa * sorted[j] / total).min(1.0);
                while j < n && bound > 0.0 {
                    if bound < 1.0 {
                        let skip = (rng.open01().ln() / (-bound).ln_1p()).floor();
                        if skip >= (n - j) as f64 {
                            break;
                        }
                        j += skip as usize;
                    }
                    let x = wa * sorted[j] / total;
                    if rng.unit() * bound < g.eval(x) {
                        hits.push(slot_key(order[a] as usize, order[j] as usize));
                    }
                    bound = x.min(1.0);
                    j += 1;
                }
            }
            hits
        })
        .collect();
    collect_layer(LayerKind::SingleEdge, hits.concat())
}
