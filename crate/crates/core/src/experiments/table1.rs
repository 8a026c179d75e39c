use log::warn;

use super::{replicate_stream, run_replicates, ExperimentConfig, ExperimentKind, HillRow, SummaryTable};
use crate::error::{MirgError, Result};
use crate::evt::{degree_norms, OrderStatistics};
use crate::graph::{degrees, generate_fast};
use crate::weights::{sample_weights, WeightModelSpec};

/// Per replicate: `alpha_hat` at each `k`, or the reason it is missing.
type ReplicateResult = Result<Vec<Result<f64>>>;

fn one_replicate(cfg: &ExperimentConfig, alpha: f64, ks: &[usize], point: u64, rep: u64) -> ReplicateResult {
    let mut rng = replicate_stream(cfg.seed, ExperimentKind::Table1, point, rep);
    let spec = WeightModelSpec::SingleFactor {
        alpha,
        angle: WeightModelSpec::cone_angle(),
    };
    let w = sample_weights(&spec, cfg.n, &mut rng)?;
    let g = generate_fast(&w, &cfg.layers, &mut rng)?;
    let r = degree_norms(&degrees(&g), cfg.p)?;
    let stats = OrderStatistics::new(&r.values)?;
    Ok(ks
        .iter()
        .map(|&k| {
            let est = stats.hill(k)?;
            est.alpha_hat
                .ok_or(MirgError::DegenerateTail { index: k + 1 })
        })
        .collect())
}

/// One entry per replicate: `None` if it aborted, else `alpha_hat` per `k`
/// with `None` where the estimate failed.
pub type ReplicateRows = Vec<Option<Vec<Option<f64>>>>;

/// Raw `alpha_hat` values for `cfg.alpha[point]` and the `k` grid, rows in
/// replicate order.
pub fn table1_estimates(
    cfg: &ExperimentConfig,
    point: usize,
) -> Result<(Vec<usize>, ReplicateRows)> {
    let alpha = cfg.alpha[point];
    let ks = cfg.ks_for(alpha)?;
    let results = run_replicates(cfg.workers, cfg.replicates, |rep| {
        one_replicate(cfg, alpha, &ks, point as u64, rep as u64)
    })?;
    let rows = results
        .into_iter()
        .enumerate()
        .map(|(rep, r)| match r {
            Ok(per_k) => Some(
                per_k
                    .into_iter()
                    .zip(&ks)
                    .map(|(e, k)| {
                        e.map_err(|err| warn!("alpha {alpha} replicate {rep} k {k}: {err}"))
                            .ok()
                    })
                    .collect(),
            ),
            Err(err) => {
                warn!("alpha {alpha} replicate {rep} aborted: {err}");
                None
            }
        })
        .collect();
    Ok((ks, rows))
}

pub fn run_table1(cfg: &ExperimentConfig) -> Result<SummaryTable> {
    if cfg.experiment != ExperimentKind::Table1 {
        return Err(MirgError::Config(format!("{} config passed to table1", cfg.experiment.name())));
    }
    cfg.validate()?;
    let mut table = SummaryTable::default();
    for (point, &alpha) in cfg.alpha.iter().enumerate() {
        let (ks, rows) = table1_estimates(cfg, point)?;
        let completed: Vec<&Vec<Option<f64>>> = rows.iter().flatten().collect();
        table.dropped_replicates += rows.len() - completed.len();
        for (j, &k) in ks.iter().enumerate() {
            let est: Vec<f64> = completed.iter().filter_map(|r| r[j]).collect();
            let m = est.len();
            let (bias, mse) = if m == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let mf = m as f64;
                (
                    est.iter().map(|a| a - alpha).sum::<f64>() / mf,
                    est.iter().map(|a| (a - alpha).powi(2)).sum::<f64>() / mf,
                )
            };
            table.hill.push(HillRow {
                alpha,
                k,
                bias,
                mse,
                replicates: m,
                dropped: completed.len() - m,
                outside_theory: alpha <= 1.0,
            });
        }
    }
    Ok(table)
}
