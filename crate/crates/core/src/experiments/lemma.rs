use serde::Serialize;

use super::{replicate_stream, run_replicates, ExperimentConfig, ExperimentKind};
use crate::error::{MirgError, Result};
use crate::graph::{sample_asymptotic_degrees, sample_node_degrees};
use crate::weights::{sample_weights, WeightModelSpec};

/// Degrees `0..GRID` per layer are tabulated.
pub const LEMMA_GRID: u64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaCell {
    pub m1: u64,
    pub m2: u64,
    pub graph: f64,
    pub limit: f64,
    pub diff: f64,
    /// Two-sample standard error of `diff`.
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub n: usize,
    pub replicates: usize,
    pub cells: Vec<LemmaCell>,
    pub max_abs_diff: f64,
    pub max_std_error: f64,
}

impl LemmaReport {
    /// Largest discrepancy below three times the largest cell standard
    /// error.
    pub fn pass(&self) -> bool {
        self.max_abs_diff < 3.0 * self.max_std_error
    }
}

fn weight_model(cfg: &ExperimentConfig) -> WeightModelSpec {
    WeightModelSpec::SingleFactor {
        alpha: cfg.alpha[0],
        angle: WeightModelSpec::cone_angle(),
    }
}

fn tabulate(rows: impl Iterator<Item = (u64, u64)>) -> Vec<u64> {
    let g = LEMMA_GRID as usize;
    let mut counts = vec![0u64; g * g];
    for (a, b) in rows {
        if a < LEMMA_GRID && b < LEMMA_GRID {
            counts[a as usize * g + b as usize] += 1;
        }
    }
    counts
}

/// Joint pmf of node 0's degree pair in a graph of `cfg.n` nodes against
/// draws from the mixed-Poisson limit, `cfg.replicates` samples per side.
pub fn run_lemma_degree(cfg: &ExperimentConfig) -> Result<LemmaReport> {
    if cfg.experiment != ExperimentKind::Lemma {
        return Err(MirgError::Config(format!("{} config passed to lemma", cfg.experiment.name())));
    }
    cfg.validate()?;
    let spec = weight_model(cfg);
    let graph_side = run_replicates(cfg.workers, cfg.replicates, |rep| -> Result<(u64, u64)> {
        let mut rng = replicate_stream(cfg.seed, ExperimentKind::Lemma, 0, rep as u64);
        let w = sample_weights(&spec, cfg.n, &mut rng)?;
        let d = sample_node_degrees(&w, &cfg.layers, 0, &mut rng)?;
        Ok((d[0], d[1]))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut rng = replicate_stream(cfg.seed, ExperimentKind::Lemma, 1, 0);
    let w = sample_weights(&spec, cfg.replicates, &mut rng)?;
    let limit_side = sample_asymptotic_degrees(&w, &cfg.slopes(), &mut rng)?;

    let a = tabulate(graph_side.into_iter());
    let b = tabulate(limit_side.rows().map(|r| (r[0], r[1])));
    let r = cfg.replicates as f64;
    let mut cells = Vec::with_capacity(a.len());
    for m1 in 0..LEMMA_GRID {
        for m2 in 0..LEMMA_GRID {
            let idx = (m1 * LEMMA_GRID + m2) as usize;
            let (p, q) = (a[idx] as f64 / r, b[idx] as f64 / r);
            cells.push(LemmaCell {
                m1,
                m2,
                graph: p,
                limit: q,
                diff: p - q,
                std_error: ((p * (1.0 - p) + q * (1.0 - q)) / r).sqrt(),
            });
        }
    }
    let max_abs_diff = cells.iter().map(|c| c.diff.abs()).fold(0.0, f64::max);
    let max_std_error = cells.iter().map(|c| c.std_error).fold(0.0, f64::max);
    Ok(LemmaReport {
        n: cfg.n,
        replicates: cfg.replicates,
        cells,
        max_abs_diff,
        max_std_error,
    })
}
