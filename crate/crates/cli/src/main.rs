use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use mirg_core::cones::xi_eta;
use mirg_core::evt::{degree_norms, hillish_pair, write_hill_csv, write_hillish_csv, OrderStatistics};
use mirg_core::experiments::{self, emit_outputs, ExperimentConfig, Outcome, Scale};
use mirg_core::graph::{degrees, generate_fast, generate_naive, read_degree_csv, read_edge_list, write_degree_csv, write_edge_list};
use mirg_core::oracles::{bernoulli_poisson_tv, check_pb3_bound, check_poisson_moment_bound, maximal_coupling, Pb3Report};
use mirg_core::samplers::{stream_key, RngStream};
use mirg_core::weights::sample_weights;
use mirg_core::{
    ExperimentKind, LayerKind, LayerSpec, MirgError, Norm, Result, WeightMatrix, WeightModelSpec,
};

#[derive(Parser)]
#[command(name = "mirg", version, about = "Simulate multilayer inhomogeneous random graphs and estimate degree tails")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment config file (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Node count
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file, or directory for `experiment`; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the published problem sizes as defaults
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample weights and a graph; writes the edge list
    Generate(GenerateArgs),
    /// Degree matrix of an edge list
    Degrees(DegreesArgs),
    /// Hill estimates on per-node degree norms
    Hill(HillArgs),
    /// Hillish traces on (xi, eta) pairs of a two-layer degree matrix
    Hillish(HillishArgs),
    /// Run a simulation study and write CSV and SVG output
    Experiment {
        #[arg(value_parser = parse_kind)]
        kind: ExperimentKind,
    },
    /// Numeric checks of the coupling and moment bounds
    Verify {
        #[arg(value_enum)]
        check: Check,
        /// Monte Carlo draws per grid point
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    SingleFactor,
    FullDependence,
    HrvMixture,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "single-factor")]
    model: Model,
    #[arg(long, default_value_t = 1.5)]
    alpha: f64,
    #[arg(long)]
    alpha0: Option<f64>,
    /// Read weights from a CSV instead of sampling them
    #[arg(long, conflicts_with_all = ["model", "alpha", "alpha0"])]
    weights: Option<PathBuf>,
    /// Comma-separated layer specs, e.g. multi:cap_one,single:odds
    #[arg(long, value_delimiter = ',', default_value = "multi:identity,single:exp_complement")]
    layers: Vec<String>,
    /// Use the per-slot reference generator
    #[arg(long)]
    naive: bool,
    #[arg(long)]
    weights_out: Option<PathBuf>,
    #[arg(long)]
    degrees_out: Option<PathBuf>,
}

#[derive(Args)]
struct DegreesArgs {
    /// Edge list (TSV layer, i, j, multiplicity)
    #[arg(long)]
    edges: PathBuf,
    /// Layer specs; only the kind is used
    #[arg(long, value_delimiter = ',')]
    layers: Vec<String>,
}

#[derive(Args)]
struct HillArgs {
    /// Degree CSV (node,d1,...,dL)
    #[arg(long)]
    input: PathBuf,
    /// Norm order for R_i, or "inf"
    #[arg(long, default_value = "1")]
    p: String,
    #[arg(long, value_delimiter = ',', required_unless_present = "k_max")]
    k: Vec<usize>,
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args)]
struct HillishArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1.5)]
    slope: f64,
    #[arg(long)]
    k_max: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Coupling,
    Moments,
    Pb3,
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    s.parse().map_err(|e: MirgError| e.to_string())
}

fn open_in(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| MirgError::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => File::create(p)
            .map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>)
            .map_err(|e| MirgError::Io {
                path: p.to_path_buf(),
                source: e,
            }),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn parse_layers(specs: &[String]) -> Result<Vec<LayerSpec>> {
    specs.iter().map(|s| s.parse()).collect()
}

fn generate(common: &Common, args: &GenerateArgs) -> Result<()> {
    let seed = common.seed.unwrap_or(1);
    let mut rng = RngStream::new(seed, stream_key(&[0x67656e]));
    let w = match &args.weights {
        Some(path) => WeightMatrix::read_csv(open_in(path)?)?,
        None => {
            let spec = match args.model {
                Model::SingleFactor => WeightModelSpec::SingleFactor {
                    alpha: args.alpha,
                    angle: WeightModelSpec::cone_angle(),
                },
                Model::FullDependence => WeightModelSpec::FullDependence { alpha: args.alpha },
                Model::HrvMixture => WeightModelSpec::HrvMixture {
                    alpha: args.alpha,
                    alpha0: args.alpha0.ok_or_else(|| {
                        MirgError::Config("--alpha0 is required for hrv-mixture".into())
                    })?,
                },
            };
            sample_weights(&spec, common.n.unwrap_or(10_000), &mut rng)?
        }
    };
    let layers = parse_layers(&args.layers)?;
    let g = if args.naive {
        generate_naive(&w, &layers, &mut rng)?
    } else {
        generate_fast(&w, &layers, &mut rng)?
    };
    info!(
        "n = {}, edges per layer {:?}",
        g.n(),
        (0..layers.len()).map(|l| g.edge_count(l)).collect::<Vec<_>>()
    );
    if let Some(p) = &args.weights_out {
        w.write_csv(open_out(Some(p))?)?;
    }
    if let Some(p) = &args.degrees_out {
        write_degree_csv(&degrees(&g), open_out(Some(p))?)?;
    }
    write_edge_list(&g, open_out(common.out.as_deref())?)
}

fn degree_cmd(common: &Common, args: &DegreesArgs) -> Result<()> {
    let kinds: Vec<LayerKind> = parse_layers(&args.layers)?.iter().map(|l| l.kind).collect();
    let g = read_edge_list(
        open_in(&args.edges)?,
        common.n,
        (!kinds.is_empty()).then_some(kinds.as_slice()),
    )?;
    write_degree_csv(&degrees(&g), open_out(common.out.as_deref())?)
}

fn hill_cmd(common: &Common, args: &HillArgs) -> Result<()> {
    let d = read_degree_csv(open_in(&args.input)?)?;
    let p: Norm = args.p.parse()?;
    let r = degree_norms(&d, p)?;
    let stats = OrderStatistics::new(&r.values)?;
    let ks: Vec<usize> = match args.k_max {
        Some(m) => (1..=m).collect(),
        None => args.k.clone(),
    };
    let mut rows = Vec::with_capacity(ks.len());
    for k in ks {
        match stats.hill(k) {
            Ok(e) => rows.push(e),
            Err(e @ MirgError::DegenerateTail { .. }) => log::warn!("k = {k}: {e}"),
            Err(e) => return Err(e),
        }
    }
    write_hill_csv(&rows, open_out(common.out.as_deref())?)
}

fn hillish_cmd(common: &Common, args: &HillishArgs) -> Result<()> {
    let d = read_degree_csv(open_in(&args.input)?)?;
    let pairs = xi_eta(&d, args.slope)?;
    info!("{} rows with zero degree in both layers excluded", pairs.excluded);
    let ks: Vec<usize> = (1..=args.k_max).collect();
    let (pos, neg) = hillish_pair(&pairs.xi, &pairs.eta, &ks)?;
    write_hillish_csv(&pos, &neg, open_out(common.out.as_deref())?)
}

fn experiment_cmd(common: &Common, kind: ExperimentKind) -> Result<()> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path, Some(kind), common.paper_scale)?,
        None => ExperimentConfig::defaults(
            kind,
            if common.paper_scale { Scale::Paper } else { Scale::Desk },
        ),
    };
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.n {
        cfg.n = v;
    }
    if let Some(v) = common.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = common.workers {
        cfg.workers = v;
    }
    if let Some(v) = &common.out {
        cfg.output_dir = v.clone();
    }
    cfg.validate()?;
    info!(
        "{}: n = {}, {} replicates, {} workers, seed {}",
        kind.name(),
        cfg.n,
        cfg.replicates,
        cfg.workers,
        cfg.seed
    );
    let outcome = experiments::run(&cfg)?;
    let files = emit_outputs(&outcome, &cfg.output_dir)?;
    let mut stdout = io::stdout().lock();
    let w = |e| MirgError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match &outcome {
        Outcome::Table1(t) | Outcome::Hrv(t) if t.dropped_replicates > 0 => {
            writeln!(stdout, "{} replicates dropped", t.dropped_replicates).map_err(w)?;
        }
        Outcome::Lemma(r) => {
            writeln!(
                stdout,
                "max |diff| {:.6}, max SE {:.6}: {}",
                r.max_abs_diff,
                r.max_std_error,
                if r.pass() { "within 3 SE" } else { "outside 3 SE" }
            )
            .map_err(w)?;
        }
        Outcome::Example31(r) => {
            for h in &r.hill {
                writeln!(stdout, "k = {}: Hill {:.4} (target {})", h.k, h.alpha_hat, h.target).map_err(w)?;
            }
        }
        _ => {}
    }
    for f in files {
        writeln!(stdout, "{}", f.display()).map_err(w)?;
    }
    Ok(())
}

/// Returns whether every check held.
fn verify_cmd(common: &Common, check: Check, samples: usize) -> Result<bool> {
    let seed = common.seed.unwrap_or(1);
    let mut out = open_out(common.out.as_deref())?;
    let w = |e| MirgError::Io {
        path: common.out.clone().unwrap_or_else(|| "<stdout>".into()),
        source: e,
    };
    match check {
        Check::Coupling => {
            writeln!(out, "p,tv,disagreement,z,tv_le_p2").map_err(w)?;
            let mut ok = true;
            for (i, p) in [0.01, 0.05, 0.1, 0.3, 0.5, 0.9].into_iter().enumerate() {
                let mut rng = RngStream::new(seed, stream_key(&[0x636f, i as u64]));
                let mut diff = 0usize;
                for _ in 0..samples {
                    let c = maximal_coupling(p, &mut rng)?;
                    diff += usize::from(c.bernoulli as u64 != c.poisson);
                }
                let tv = bernoulli_poisson_tv(p);
                let freq = diff as f64 / samples as f64;
                let z = (freq - tv) / (tv * (1.0 - tv) / samples as f64).sqrt();
                ok &= z.abs() <= 3.0 && tv <= p * p;
                writeln!(out, "{p},{tv},{freq},{z},{}", tv <= p * p).map_err(w)?;
            }
            Ok(ok)
        }
        Check::Moments => {
            let grid = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0];
            let mut rng = RngStream::new(seed, stream_key(&[0x6d6f]));
            let mut ok = true;
            for m in [2, 4] {
                let report = check_poisson_moment_bound(&grid, m, samples, &mut rng)?;
                eprint!("{report}");
                ok &= report.all_hold();
                report.write_csv(&mut out)?;
            }
            Ok(ok)
        }
        Check::Pb3 => {
            let mut rng = RngStream::new(seed, stream_key(&[0x7062]));
            let reports = (0..1000)
                .map(|_| {
                    let len = 1 + (rng.unit() * 60.0) as usize;
                    let probs: Vec<f64> = (0..len).map(|_| rng.unit()).collect();
                    check_pb3_bound(&probs, 16)
                })
                .collect::<Result<Vec<_>>>()?;
            Pb3Report::write_csv(&reports, &mut out)?;
            Ok(reports.iter().all(|r| r.holds))
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let c = &cli.common;
    match &cli.command {
        Command::Generate(a) => generate(c, a).map(|_| true),
        Command::Degrees(a) => degree_cmd(c, a).map(|_| true),
        Command::Hill(a) => hill_cmd(c, a).map(|_| true),
        Command::Hillish(a) => hillish_cmd(c, a).map(|_| true),
        Command::Experiment { kind } => experiment_cmd(c, *kind).map(|_| true),
        Command::Verify { check, samples } => verify_cmd(c, *check, *samples),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            let cat = e.category();
            eprintln!("error ({}): {e}", cat.label());
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
