use serde::Serialize;

use super::{replicate_stream, run_replicates, ExperimentConfig, ExperimentKind};
use crate::cones::{example31_limit, example31_scale};
use crate::error::{MirgError, Result};
use crate::evt::OrderStatistics;
use crate::graph::sample_asymptotic_degrees;
use crate::weights::{sample_weights, WeightModelSpec};

/// Thresholds for the scaled diagonal distance.
pub const EXAMPLE31_U: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
/// Thresholds for the mean-to-distance ratio.
pub const EXAMPLE31_V: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 1000.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitCell {
    pub k: usize,
    pub u: f64,
    pub v: f64,
    /// `t P(...)` at `t = n / k`, pooled over replicates.
    pub estimate: f64,
    /// Poisson standard error `sqrt(count) / (k * replicates)`.
    pub std_error: f64,
    pub limit: f64,
}

impl LimitCell {
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            (self.estimate - self.limit) / self.std_error
        } else if self.estimate == self.limit {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Hill estimate on `|D1 - D2|` of the first replicate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HillCheck {
    pub k: usize,
    pub alpha_hat: f64,
    pub target: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example31Report {
    pub alpha: f64,
    pub n: usize,
    pub replicates: usize,
    pub cells: Vec<LimitCell>,
    pub hill: Vec<HillCheck>,
}

impl Example31Report {
    pub fn cell(&self, k: usize, u: f64, v: f64) -> Option<&LimitCell> {
        self.cells.iter().find(|c| c.k == k && c.u == u && c.v == v)
    }
}

/// Per sample: `|D1 - D2|` and `sqrt(2) D1 / sqrt(W1) / |D1 - D2|`.
struct Draws {
    dist: Vec<f64>,
    ratio: Vec<f64>,
}

fn draw(cfg: &ExperimentConfig, alpha: f64, rep: u64) -> Result<Draws> {
    let mut rng = replicate_stream(cfg.seed, ExperimentKind::Example31, 0, rep);
    let w = sample_weights(&WeightModelSpec::FullDependence { alpha }, cfg.n, &mut rng)?;
    let d = sample_asymptotic_degrees(&w, &[1.0, 1.0], &mut rng)?;
    let mut out = Draws {
        dist: Vec::with_capacity(cfg.n),
        ratio: Vec::with_capacity(cfg.n),
    };
    for (row, wr) in d.rows().zip(w.rows()) {
        let diff = row[0].abs_diff(row[1]) as f64;
        out.dist.push(diff);
        out.ratio.push(if diff > 0.0 {
            std::f64::consts::SQRT_2 * row[0] as f64 / wr[0].sqrt() / diff
        } else {
            f64::INFINITY
        });
    }
    Ok(out)
}

/// Monte Carlo check of the joint limit of the scaled diagonal distance
/// and the ratio, on fully dependent Pareto weights with asymptotic degrees.
///
/// The distance is scaled by `K / (2 b0(t))` with `K` from
/// [`example31_scale`] and `b0(t) = t^(1 / (2 alpha))` the `1 - 1/t`
/// quantile of `sqrt(W)`.
pub fn run_example31(cfg: &ExperimentConfig) -> Result<Example31Report> {
    if cfg.experiment != ExperimentKind::Example31 {
        return Err(MirgError::Config(format!("{} config passed to example31", cfg.experiment.name())));
    }
    cfg.validate()?;
    let alpha = cfg.alpha[0];
    let ks = cfg.ks_for(alpha)?;
    if let Some(&k) = ks.iter().find(|&&k| k >= cfg.n) {
        return Err(MirgError::Range(format!("k = {k} must be below n = {}", cfg.n)));
    }
    let reps = run_replicates(cfg.workers, cfg.replicates, |rep| draw(cfg, alpha, rep as u64))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let scale = example31_scale(alpha);
    let mut cells = Vec::new();
    for &k in &ks {
        let t = cfg.n as f64 / k as f64;
        let b0 = t.powf(1.0 / (2.0 * alpha));
        let c = scale / (2.0 * b0);
        for &u in &EXAMPLE31_U {
            for &v in &EXAMPLE31_V {
                let count: usize = reps
                    .iter()
                    .map(|r| {
                        r.dist
                            .iter()
                            .zip(&r.ratio)
                            .filter(|(d, q)| **d * c > u && **q > v)
                            .count()
                    })
                    .sum();
                let denom = (k * reps.len()) as f64;
                cells.push(LimitCell {
                    k,
                    u,
                    v,
                    estimate: count as f64 / denom,
                    std_error: (count as f64).sqrt() / denom,
                    limit: example31_limit(u, v, alpha)?,
                });
            }
        }
    }

    let stats = OrderStatistics::new(&reps[0].dist)?;
    let hill = ks
        .iter()
        .map(|&k| {
            let est = stats.hill(k)?;
            Ok(HillCheck {
                k,
                alpha_hat: est.alpha_hat.unwrap_or(f64::INFINITY),
                target: 2.0 * alpha,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Example31Report {
        alpha,
        n: cfg.n,
        replicates: reps.len(),
        cells,
        hill,
    })
}
