use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MirgError, Result};
use crate::evt::{select_kn, Norm};
use crate::graph::{ConnectionFn, LayerSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Hill bias and MSE on total degree.
    Table1,
    /// Hillish quantile bands for the two-component mixture.
    #[serde(alias = "hrv_figure")]
    Hrv,
    /// Joint pmf of one node's degrees against the mixed-Poisson limit.
    #[serde(alias = "lemma_degree")]
    Lemma,
    /// Diagonal distance of fully dependent degrees.
    Example31,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Table1,
        ExperimentKind::Hrv,
        ExperimentKind::Lemma,
        ExperimentKind::Example31,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Table1 => "table1",
            ExperimentKind::Hrv => "hrv",
            ExperimentKind::Lemma => "lemma",
            ExperimentKind::Example31 => "example31",
        }
    }

    pub(crate) fn code(self) -> u64 {
        match self {
            ExperimentKind::Table1 => 1,
            ExperimentKind::Hrv => 2,
            ExperimentKind::Lemma => 3,
            ExperimentKind::Example31 => 4,
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = MirgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table1" => Ok(ExperimentKind::Table1),
            "hrv" | "hrv_figure" => Ok(ExperimentKind::Hrv),
            "lemma" | "lemma_degree" => Ok(ExperimentKind::Lemma),
            "example31" => Ok(ExperimentKind::Example31),
            other => Err(MirgError::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

/// Default problem sizes: a desk profile that finishes in minutes on one
/// machine and the published sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

/// A fully resolved experiment description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub replicates: usize,
    pub alpha: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub k_list: Vec<usize>,
    /// Use every `k` in `1..=k_max` when `k_list` is empty.
    pub k_max: Option<usize>,
    /// Use `select_kn(n, alpha, kappa)` when neither `k_list` nor `k_max`
    /// is set.
    pub kappa: Option<f64>,
    pub layers: Vec<LayerSpec>,
    pub p: Norm,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
}

/// On-disk form: every field optional, unknown keys rejected. Missing
/// fields fall back to the experiment's defaults.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<ExperimentKind>,
    pub n: Option<usize>,
    pub replicates: Option<usize>,
    pub alpha: Option<OneOrMany>,
    pub alpha0: Option<OneOrMany>,
    pub k_list: Option<Vec<usize>>,
    pub k_max: Option<usize>,
    pub kappa: Option<f64>,
    /// Strings such as `"multi:identity"` or `"single:odds"`.
    pub layers: Option<Vec<String>>,
    pub p: Option<NormValue>,
    pub seed: Option<u64>,
    #[serde(alias = "parallelism")]
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub paper_scale: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// `p = 2`, `p = 1.5` or `p = "inf"`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NormValue {
    Number(f64),
    Text(String),
}

impl NormValue {
    fn resolve(&self) -> Result<Norm> {
        match self {
            NormValue::Number(p) => Norm::new(*p),
            NormValue::Text(s) => s.parse(),
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind, scale: Scale) -> Self {
        let paper = scale == Scale::Paper;
        let multi = LayerSpec::multi;
        let single = LayerSpec::single;
        let base = ExperimentConfig {
            experiment: kind,
            n: 0,
            replicates: 0,
            alpha: vec![],
            alpha0: vec![],
            k_list: vec![],
            k_max: None,
            kappa: None,
            layers: vec![],
            p: Norm::P(1.0),
            seed: 1,
            workers: default_workers(),
            output_dir: PathBuf::from("out").join(kind.name()),
        };
        match kind {
            ExperimentKind::Table1 => {
                let mut k_list = vec![100, 200, 500, 1_000, 5_000, 10_000];
                if paper {
                    k_list.push(100_000);
                }
                ExperimentConfig {
                    n: if paper { 1_000_000 } else { 100_000 },
                    replicates: if paper { 1000 } else { 100 },
                    alpha: vec![1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
                    k_list,
                    layers: vec![multi(ConnectionFn::CapOne), single(ConnectionFn::Odds)],
                    ..base
                }
            }
            ExperimentKind::Hrv => ExperimentConfig {
                n: if paper { 2_000_000 } else { 200_000 },
                replicates: if paper { 1000 } else { 100 },
                alpha: vec![1.1],
                alpha0: vec![1.3, 2.5],
                k_max: Some(if paper { 4000 } else { 2000 }),
                layers: vec![multi(ConnectionFn::Identity), single(ConnectionFn::ExpComplement)],
                ..base
            },
            ExperimentKind::Lemma => ExperimentConfig {
                n: if paper { 100_000 } else { 10_000 },
                replicates: 100_000,
                alpha: vec![1.5],
                layers: vec![multi(ConnectionFn::Identity), multi(ConnectionFn::Identity)],
                ..base
            },
            ExperimentKind::Example31 => ExperimentConfig {
                n: if paper { 10_000_000 } else { 1_000_000 },
                replicates: 1,
                alpha: vec![1.0],
                k_list: vec![1000, 2000],
                layers: vec![multi(ConnectionFn::Identity), multi(ConnectionFn::Identity)],
                ..base
            },
        }
    }

    /// Merges a parsed file over the defaults for its experiment. The scale
    /// comes from the file's `paper_scale` key unless `force_paper` is set.
    pub fn from_file(file: ConfigFile, kind: Option<ExperimentKind>, force_paper: bool) -> Result<Self> {
        let kind = match (file.experiment, kind) {
            (Some(a), Some(b)) if a != b => {
                return Err(MirgError::Config(format!(
                    "config is for {} but {} was requested",
                    a.name(),
                    b.name()
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => {
                return Err(MirgError::Config("config does not name an experiment".into()))
            }
        };
        let scale = if force_paper || file.paper_scale.unwrap_or(false) {
            Scale::Paper
        } else {
            Scale::Desk
        };
        let mut cfg = ExperimentConfig::defaults(kind, scale);
        if let Some(v) = file.n {
            cfg.n = v;
        }
        if let Some(v) = file.replicates {
            cfg.replicates = v;
        }
        if let Some(v) = file.alpha {
            cfg.alpha = v.into_vec();
        }
        if let Some(v) = file.alpha0 {
            cfg.alpha0 = v.into_vec();
        }
        // an explicit k rule replaces the default one
        if file.k_list.is_some() || file.k_max.is_some() || file.kappa.is_some() {
            cfg.k_list = file.k_list.unwrap_or_default();
            cfg.k_max = file.k_max;
            cfg.kappa = file.kappa;
        }
        if let Some(v) = file.layers {
            cfg.layers = v.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = file.p {
            cfg.p = v.resolve()?;
        }
        if let Some(v) = file.seed {
            cfg.seed = v;
        }
        if let Some(v) = file.workers {
            cfg.workers = v;
        }
        if let Some(v) = file.output_dir {
            cfg.output_dir = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_toml(text: &str) -> Result<ConfigFile> {
        toml::from_str(text).map_err(|e| MirgError::Config(e.to_string()))
    }

    pub fn load(path: &Path, kind: Option<ExperimentKind>, force_paper: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MirgError::io(path, e))?;
        Self::from_file(Self::parse_toml(&text)?, kind, force_paper)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(MirgError::Config(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.alpha.is_empty() {
            return bad("alpha must list at least one value".into());
        }
        if let Some(a) = self.alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return bad(format!("alpha must be positive, got {a}"));
        }
        for &a0 in &self.alpha0 {
            if self.alpha.iter().any(|&a| a0 < a) {
                return bad(format!("alpha0 = {a0} must be >= every alpha"));
            }
        }
        if self.k_list.contains(&0) {
            return bad("k values must be at least 1".into());
        }
        if self.experiment != ExperimentKind::Lemma
            && self.k_list.is_empty()
            && self.k_max.is_none()
            && self.kappa.is_none()
        {
            return bad("one of k_list, k_max or kappa is required".into());
        }
        if self.k_max == Some(0) {
            return bad("k_max must be at least 1".into());
        }
        let expected_layers = 2;
        if self.layers.len() != expected_layers {
            return bad(format!(
                "{} expects {expected_layers} layers, got {}",
                self.experiment.name(),
                self.layers.len()
            ));
        }
        for l in &self.layers {
            l.validate()?;
        }
        match self.experiment {
            ExperimentKind::Hrv if self.alpha0.is_empty() => {
                bad("hrv needs at least one alpha0".into())
            }
            ExperimentKind::Example31
                if self
                    .layers
                    .iter()
                    .any(|l| *l != LayerSpec::multi(ConnectionFn::Identity)) =>
            {
                bad("example31 is defined for two multi-edge identity layers".into())
            }
            _ => Ok(()),
        }
    }

    /// The `k` values to evaluate at tail index `alpha`, ascending.
    pub fn ks_for(&self, alpha: f64) -> Result<Vec<usize>> {
        let mut ks = if !self.k_list.is_empty() {
            self.k_list.clone()
        } else if let Some(kmax) = self.k_max {
            (1..=kmax).collect()
        } else if let Some(kappa) = self.kappa {
            vec![select_kn(self.n, alpha, kappa)?]
        } else {
            return Err(MirgError::Config("no k rule configured".into()));
        };
        ks.sort_unstable();
        ks.dedup();
        Ok(ks)
    }

    /// Linear slopes `c_l` of the configured connection functions.
    pub fn slopes(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.g.slope()).collect()
    }
}
