//! Simulation harness: Hill bias/MSE tables, Hillish quantile bands, the
//! degree-law check and the diagonal-distance limit check.
//!
//! Every replicate owns an RNG stream keyed by `(seed, experiment,
//! parameter index, replicate)` and writes into its own result slot; the
//! aggregation afterwards is sequential, so outputs do not depend on the
//! worker count.

mod config;
mod example31;
mod hrv;
mod lemma;
mod output;
mod stats;
mod table1;

pub use config::{ConfigFile, ExperimentConfig, ExperimentKind, Scale};
pub use example31::{run_example31, Example31Report, HillCheck, LimitCell, EXAMPLE31_U, EXAMPLE31_V};
pub use hrv::{mean_traces, run_hrv_figure, scan_plateau, PlateauWindow};
pub use lemma::{run_lemma_degree, LemmaCell, LemmaReport, LEMMA_GRID};
pub use output::{emit_outputs, format_sig};
pub use stats::{quantile_sorted, runs_test};
pub use table1::{run_table1, table1_estimates, ReplicateRows};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{MirgError, Result};
use crate::evt::Orientation;
use crate::samplers::{stream_key, RngStream};

/// Bias and MSE of `1 / H_{k,n}` over completed replicates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HillRow {
    pub alpha: f64,
    pub k: usize,
    pub bias: f64,
    pub mse: f64,
    pub replicates: usize,
    /// Replicates whose estimate failed at this `k`.
    pub dropped: usize,
    /// `alpha <= 1`, where the consistency theory does not apply.
    pub outside_theory: bool,
}

/// Pointwise summary of Hillish traces across replicates at one `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandRow {
    pub alpha: f64,
    pub alpha0: f64,
    pub orientation: Orientation,
    pub k: usize,
    pub mean: f64,
    pub q10: f64,
    pub q25: f64,
    pub q75: f64,
    pub q90: f64,
    pub replicates: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SummaryTable {
    pub hill: Vec<HillRow>,
    pub bands: Vec<BandRow>,
    /// Replicates that failed before any estimate, over all parameter points.
    pub dropped_replicates: usize,
}

/// Result of any experiment.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Table1(SummaryTable),
    Hrv(SummaryTable),
    Lemma(LemmaReport),
    Example31(Example31Report),
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        ExperimentKind::Table1 => Outcome::Table1(run_table1(cfg)?),
        ExperimentKind::Hrv => Outcome::Hrv(run_hrv_figure(cfg)?),
        ExperimentKind::Lemma => Outcome::Lemma(run_lemma_degree(cfg)?),
        ExperimentKind::Example31 => Outcome::Example31(run_example31(cfg)?),
    })
}

/// Stream for replicate `rep` at parameter point `point` of experiment
/// `kind`.
pub fn replicate_stream(seed: u64, kind: ExperimentKind, point: u64, rep: u64) -> RngStream {
    RngStream::new(seed, stream_key(&[kind.code(), point, rep]))
}

/// Runs `f(0..count)` on a pool of `workers` threads, results in index
/// order.
pub(crate) fn run_replicates<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| MirgError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}
