use log::warn;
use serde::Serialize;

use super::stats::quantile_sorted;
use super::{replicate_stream, run_replicates, BandRow, ExperimentConfig, ExperimentKind, SummaryTable};
use crate::cones::{xi_eta, ConeSpec};
use crate::error::{MirgError, Result};
use crate::evt::{hillish_pair, Orientation};
use crate::graph::{degrees, generate_fast};
use crate::weights::{sample_weights, WeightModelSpec};

/// A run of consecutive `k` on which every trace stays inside a band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PlateauWindow {
    pub k_start: usize,
    pub k_end: usize,
}

impl PlateauWindow {
    pub fn width(&self) -> usize {
        self.k_end - self.k_start
    }
}

/// Widest window of consecutive grid points with `k <= k_limit` on which
/// all `traces` lie in `[lo, hi]`. Ties keep the smallest `k_start`.
pub fn scan_plateau(ks: &[usize], traces: &[&[f64]], lo: f64, hi: f64, k_limit: usize) -> Option<PlateauWindow> {
    let inside = |j: usize| ks[j] <= k_limit && traces.iter().all(|t| t[j] >= lo && t[j] <= hi);
    let mut best: Option<PlateauWindow> = None;
    let mut start: Option<usize> = None;
    for j in 0..=ks.len() {
        if j < ks.len() && inside(j) {
            start.get_or_insert(j);
            continue;
        }
        if let Some(s) = start.take() {
            let w = PlateauWindow {
                k_start: ks[s],
                k_end: ks[j - 1],
            };
            if best.is_none_or(|b| w.width() > b.width()) {
                best = Some(w);
            }
        }
    }
    best
}

/// Slope of the upper boundary ray of the mixture's cone, used for `xi`.
fn xi_slope() -> f64 {
    match ConeSpec::mixture_wedge() {
        ConeSpec::Wedge { upper, .. } => upper,
        _ => unreachable!("mixture cone is a wedge"),
    }
}

type Traces = (Vec<f64>, Vec<f64>);

fn one_replicate(cfg: &ExperimentConfig, alpha: f64, alpha0: f64, ks: &[usize], point: u64, rep: u64) -> Result<Traces> {
    let mut rng = replicate_stream(cfg.seed, ExperimentKind::Hrv, point, rep);
    let w = sample_weights(&WeightModelSpec::HrvMixture { alpha, alpha0 }, cfg.n, &mut rng)?;
    let g = generate_fast(&w, &cfg.layers, &mut rng)?;
    let pairs = xi_eta(&degrees(&g), xi_slope())?;
    let (pos, neg) = hillish_pair(&pairs.xi, &pairs.eta, ks)?;
    Ok((pos.values, neg.values))
}

fn band_row(alpha: f64, alpha0: f64, orientation: Orientation, k: usize, mut vals: Vec<f64>) -> BandRow {
    vals.sort_by(f64::total_cmp);
    let mean = if vals.is_empty() {
        f64::NAN
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    BandRow {
        alpha,
        alpha0,
        orientation,
        k,
        mean,
        q10: quantile_sorted(&vals, 0.10),
        q25: quantile_sorted(&vals, 0.25),
        q75: quantile_sorted(&vals, 0.75),
        q90: quantile_sorted(&vals, 0.90),
        replicates: vals.len(),
    }
}

pub fn run_hrv_figure(cfg: &ExperimentConfig) -> Result<SummaryTable> {
    if cfg.experiment != ExperimentKind::Hrv {
        return Err(MirgError::Config(format!("{} config passed to hrv", cfg.experiment.name())));
    }
    cfg.validate()?;
    let mut table = SummaryTable::default();
    for (ai, &alpha) in cfg.alpha.iter().enumerate() {
        let ks = cfg.ks_for(alpha)?;
        for (bi, &alpha0) in cfg.alpha0.iter().enumerate() {
            let point = (ai * cfg.alpha0.len() + bi) as u64;
            let results = run_replicates(cfg.workers, cfg.replicates, |rep| {
                one_replicate(cfg, alpha, alpha0, &ks, point, rep as u64)
            })?;
            let done: Vec<Traces> = results
                .into_iter()
                .enumerate()
                .filter_map(|(rep, r)| {
                    r.map_err(|e| warn!("alpha0 {alpha0} replicate {rep} aborted: {e}")).ok()
                })
                .collect();
            table.dropped_replicates += cfg.replicates - done.len();
            for orientation in [Orientation::Positive, Orientation::Negative] {
                for (j, &k) in ks.iter().enumerate() {
                    let vals = done
                        .iter()
                        .map(|(p, n)| match orientation {
                            Orientation::Positive => p[j],
                            Orientation::Negative => n[j],
                        })
                        .collect();
                    table.bands.push(band_row(alpha, alpha0, orientation, k, vals));
                }
            }
        }
    }
    Ok(table)
}

/// Mean traces of one `(alpha, alpha0)` cell, positive then negative, on
/// the shared `k` grid.
pub fn mean_traces(table: &SummaryTable, alpha: f64, alpha0: f64) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let pick = |o: Orientation| -> Vec<&BandRow> {
        table
            .bands
            .iter()
            .filter(|b| b.alpha == alpha && b.alpha0 == alpha0 && b.orientation == o)
            .collect()
    };
    let pos = pick(Orientation::Positive);
    let neg = pick(Orientation::Negative);
    (
        pos.iter().map(|b| b.k).collect(),
        pos.iter().map(|b| b.mean).collect(),
        neg.iter().map(|b| b.mean).collect(),
    )
}
