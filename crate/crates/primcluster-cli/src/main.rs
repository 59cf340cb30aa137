//! Command-line front end: dataset generation, calibration, clustering,
//! single-patch implicitization, SVG plotting, benchmarks and experiments.
//!
//! Exit codes: 0 success, 1 internal or numerical failure, 2 usage error.

mod bench;
mod experiments;
mod svg;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use primcluster::calibrate::{calibrate_profile, CalibrationOptions, DEFAULT_LAMBDA};
use primcluster::cluster::LinkageAlgorithm;
use primcluster::geometry::{
    add_noise, default_samples_per_dim, generate_conic_family, generate_gear,
    generate_quadric_surfaces, rescale_to_unit_box, ConicFamilyParams, GearMode, QuadricKind,
};
use primcluster::implicitize::approximate_implicitize;
use primcluster::io;
use primcluster::pipeline::{
    cluster_sampled, run_pipeline, ClusteringMode, ClusterPartition, PipelineOptions,
};
use primcluster::LabeledDataset64;

#[derive(Parser)]
#[command(
    name = "primcluster",
    version,
    about = "Recovers the primitive algebraic curves and surfaces underlying parametric CAD patches"
)]
struct Cli {
    /// RNG seed for generation, calibration, noise and experiments.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for dissimilarity assembly (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Emit machine-readable JSON instead of the text report.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes a synthetic dataset file.
    #[command(subcommand)]
    Generate(GenerateCmd),
    /// Trains degree thresholds and the stopping threshold, writing a profile file.
    Calibrate(CalibrateArgs),
    /// Clusters a dataset into primitive groups using a calibration profile.
    Cluster(ClusterArgs),
    /// Implicitizes a single patch and prints the result as JSON.
    Implicitize(ImplicitizeArgs),
    /// Times assembly and clustering over a ladder of gear sizes.
    Benchmark(BenchmarkArgs),
    /// Runs a named reproduction experiment and prints a summary report.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Renders a dataset colored by cluster to an SVG file.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GearModeArg {
    /// Exact rational circle arcs.
    Exact,
    /// Polynomial cubic Bezier arc approximants.
    Cubic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Absolute,
    Relative,
}

impl From<ModeArg> for ClusteringMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Absolute => ClusteringMode::Absolute,
            ModeArg::Relative => ClusteringMode::Relative,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QuadricKindArg {
    Plane,
    Sphere,
    Cylinder,
    Cone,
}

impl From<QuadricKindArg> for QuadricKind {
    fn from(k: QuadricKindArg) -> Self {
        match k {
            QuadricKindArg::Plane => QuadricKind::Plane,
            QuadricKindArg::Sphere => QuadricKind::Sphere,
            QuadricKindArg::Cylinder => QuadricKind::Cylinder,
            QuadricKindArg::Cone => QuadricKind::Cone,
        }
    }
}

#[derive(Subcommand)]
enum GenerateCmd {
    /// Gear of alternating circle arcs and radial segments plus a hub circle.
    Gear(GearArgs),
    /// Random family of exact line and conic subsegments.
    Conics(ConicsArgs),
    /// Random quadric surface patches in 3D.
    Quadrics(QuadricsArgs),
}

#[derive(Args)]
struct GearArgs {
    /// Number of teeth; the dataset has 4*teeth + 1 patches.
    #[arg(long)]
    teeth: usize,
    /// Arc representation.
    #[arg(long, value_enum, default_value_t = GearModeArg::Exact)]
    mode: GearModeArg,
    #[arg(long, default_value = "dataset.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ConicsArgs {
    /// Number of source curves in the family.
    #[arg(long)]
    curves: usize,
    /// Fewest subsegments per curve.
    #[arg(long, default_value_t = 2)]
    min_segments: usize,
    /// Most subsegments per curve.
    #[arg(long, default_value_t = 4)]
    max_segments: usize,
    #[arg(long, default_value = "dataset.json")]
    out: PathBuf,
}

#[derive(Args)]
struct QuadricsArgs {
    /// Number of primitives; each contributes four sub-patches.
    #[arg(long)]
    count: usize,
    /// Primitive kinds to draw from.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [QuadricKindArg::Plane, QuadricKindArg::Sphere, QuadricKindArg::Cylinder, QuadricKindArg::Cone])]
    kinds: Vec<QuadricKindArg>,
    #[arg(long, default_value = "dataset.json")]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Ambient dimension the profile is trained for (2 or 3).
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Highest implicit degree to calibrate (default: 4 for curves, 2 for surfaces).
    #[arg(long = "m-cap")]
    m_cap: Option<usize>,
    /// Training patches per lower threshold group.
    #[arg(long, default_value_t = 200)]
    q1: usize,
    /// Training patches per upper threshold group.
    #[arg(long, default_value_t = 200)]
    q2: usize,
    /// Training datasets for the stopping threshold.
    #[arg(long, default_value_t = 50)]
    p3: usize,
    /// Center-distance weight stored in the profile (default 1e-10).
    #[arg(long)]
    lambda: Option<f64>,
    /// Gaussian noise level the thresholds are matched to.
    #[arg(long = "train-noise", default_value_t = 0.0)]
    train_noise: f64,
    #[arg(long, default_value = "profile.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Stopping criterion (default relative).
    #[arg(long, value_enum, default_value_t = ModeArg::Relative)]
    mode: ModeArg,
    /// Overrides the profile's center-distance weight (default 1e-10).
    #[arg(long)]
    lambda: Option<f64>,
    /// Overrides the profile's absolute-mode stopping threshold.
    #[arg(long)]
    eta: Option<f64>,
    /// Forced cluster count per degree, as degree=count pairs (e.g. 1=8,2=3);
    /// listed classes bypass the stopping criterion.
    #[arg(long = "clusters-per-degree", value_delimiter = ',')]
    clusters_per_degree: Vec<String>,
    /// Samples per parameter axis (default: chosen per patch for the degree cap).
    #[arg(long)]
    samples: Option<usize>,
    /// Gaussian noise added to the sampled clouds before clustering.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Use the O(P^2) nearest-neighbor-chain merge search.
    #[arg(long = "nn-chain")]
    nn_chain: bool,
    #[arg(long, default_value = "result.json")]
    out: PathBuf,
    /// Also render the clustered dataset to this SVG path.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ImplicitizeArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Patch index within the dataset.
    #[arg(long)]
    patch: usize,
    /// Implicit degree of the fitted polynomial.
    #[arg(long)]
    degree: usize,
    /// Samples per parameter axis (default: chosen for the degree).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Gear sizes, ascending powers of two (e.g. 4,8,16,32).
    #[arg(long, value_delimiter = ',', required = true)]
    teeth: Vec<usize>,
    /// Timing repetitions; the best time per phase is kept.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Use the O(P^2) nearest-neighbor-chain merge search.
    #[arg(long = "nn-chain")]
    nn_chain: bool,
    /// Also write the JSON rows to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Mean misclassification rate over repeated random-conics runs.
    ConicsRate(ConicsRateArgs),
    /// Clustering correctness per noise level, with and without a forced count.
    NoiseSweep(NoiseSweepArgs),
}

#[derive(Args)]
struct ConicsRateArgs {
    #[arg(long, default_value_t = 200)]
    runs: usize,
}

#[derive(Args)]
struct NoiseSweepArgs {
    /// Seeds tried per noise level (seed, seed+1, ...).
    #[arg(long, default_value_t = 3)]
    runs: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Clustering result file; omit to draw every patch unclustered.
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long, default_value = "plot.svg")]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Internal(primcluster::Error),
}

impl From<primcluster::Error> for CliError {
    fn from(e: primcluster::Error) -> Self {
        CliError::Internal(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(msg.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // Ignore the error if a pool already exists (e.g. repeated init in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(cmd) => cmd_generate(cmd, cli.seed, cli.json),
        Command::Calibrate(args) => cmd_calibrate(args, cli.seed, cli.json),
        Command::Cluster(args) => cmd_cluster(args, cli.seed, cli.json),
        Command::Implicitize(args) => cmd_implicitize(args),
        Command::Benchmark(args) => cmd_benchmark(args, cli.json),
        Command::Experiment(cmd) => cmd_experiment(cmd, cli.seed, cli.json),
        Command::Plot(args) => cmd_plot(args),
    }
}

/// Reads an input file whose absence is a usage error, not an internal one.
fn read_input<T>(
    path: &Path,
    what: &str,
    reader: impl FnOnce(&Path) -> primcluster::Result<T>,
) -> CliResult<T> {
    if !path.exists() {
        return Err(usage(format!("{what} file {} does not exist", path.display())));
    }
    Ok(reader(path)?)
}

fn cmd_generate(cmd: GenerateCmd, seed: u64, json: bool) -> CliResult<()> {
    let (dataset, out) = match cmd {
        GenerateCmd::Gear(args) => {
            if args.teeth == 0 {
                return Err(usage("--teeth must be at least 1"));
            }
            let mode = match args.mode {
                GearModeArg::Exact => GearMode::Exact,
                GearModeArg::Cubic => GearMode::CubicBezier,
            };
            (generate_gear::<f64>(args.teeth, mode)?, args.out)
        }
        GenerateCmd::Conics(args) => {
            if args.curves == 0 {
                return Err(usage("--curves must be at least 1"));
            }
            if args.min_segments == 0 || args.min_segments > args.max_segments {
                return Err(usage("segment range must satisfy 1 <= min <= max"));
            }
            let params = ConicFamilyParams {
                num_curves: args.curves,
                segments_per_curve: (args.min_segments, args.max_segments),
                seed,
                forced_kind: None,
            };
            (generate_conic_family::<f64>(&params)?, args.out)
        }
        GenerateCmd::Quadrics(args) => {
            if args.count == 0 {
                return Err(usage("--count must be at least 1"));
            }
            if args.kinds.is_empty() {
                return Err(usage("--kinds must list at least one primitive kind"));
            }
            let kinds: Vec<QuadricKind> = args.kinds.iter().map(|&k| k.into()).collect();
            (generate_quadric_surfaces::<f64>(&kinds, args.count, seed)?, args.out)
        }
    };
    io::write_dataset(&out, &dataset)?;
    let labels = dataset
        .truth_labels
        .as_ref()
        .map(|l| l.iter().collect::<std::collections::BTreeSet<_>>().len())
        .unwrap_or(0);
    if json {
        println!(
            "{{\"patches\": {}, \"primitives\": {}, \"ambient_dim\": {}, \"out\": {:?}}}",
            dataset.len(),
            labels,
            dataset.ambient_dim,
            out.display().to_string()
        );
    } else {
        println!(
            "wrote {} patches ({} primitives, dimension {}) to {}",
            dataset.len(),
            labels,
            dataset.ambient_dim,
            out.display()
        );
    }
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs, seed: u64, json: bool) -> CliResult<()> {
    if args.dim != 2 && args.dim != 3 {
        return Err(usage("--dim must be 2 or 3"));
    }
    if args.q1 < 10 || args.q2 < 10 || args.p3 < 10 {
        return Err(usage("--q1, --q2 and --p3 must each be at least 10"));
    }
    if !(args.train_noise >= 0.0) {
        return Err(usage("--train-noise must be nonnegative"));
    }
    let mut opts = CalibrationOptions::<f64>::new(args.dim);
    if let Some(m_cap) = args.m_cap {
        if m_cap == 0 {
            return Err(usage("--m-cap must be at least 1"));
        }
        opts.m_cap = m_cap;
    }
    opts.q1 = args.q1;
    opts.q2 = args.q2;
    opts.p3 = args.p3;
    opts.seed = seed;
    opts.lambda = args.lambda.unwrap_or(DEFAULT_LAMBDA);
    opts.train_noise = args.train_noise;
    let profile = calibrate_profile(&opts)?;
    io::write_profile(&args.out, &profile)?;
    if json {
        print!("{}", io::profile_to_json(&profile));
    } else {
        println!(
            "calibrated profile (dimension {}, degree cap {}) written to {}",
            profile.ambient_dim,
            profile.m_cap,
            args.out.display()
        );
        for (degree, xi) in &profile.xi {
            println!("  xi({degree}) = {xi:.6e}");
        }
        println!("  eta    = {:.6e}", profile.eta);
    }
    Ok(())
}

/// Parses `--clusters-per-degree` entries of the form `degree=count`.
fn parse_forced_counts(entries: &[String]) -> CliResult<BTreeMap<usize, usize>> {
    let mut out = BTreeMap::new();
    for entry in entries {
        let (degree, count) = entry
            .split_once('=')
            .ok_or_else(|| usage(format!("--clusters-per-degree entry {entry:?} is not degree=count")))?;
        let degree: usize = degree
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad degree in --clusters-per-degree entry {entry:?}")))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad count in --clusters-per-degree entry {entry:?}")))?;
        if degree == 0 || count == 0 {
            return Err(usage("--clusters-per-degree degrees and counts must be positive"));
        }
        if out.insert(degree, count).is_some() {
            return Err(usage(format!("--clusters-per-degree lists degree {degree} twice")));
        }
    }
    Ok(out)
}

fn partition_summary(partition: &ClusterPartition<f64>) -> String {
    let mut s = format!(
        "{} patches -> {} clusters ({} mode)\n",
        partition.size,
        partition.num_clusters,
        partition.mode.as_str()
    );
    for class in &partition.classes {
        let sizes: Vec<usize> = class.clusters.iter().map(Vec::len).collect();
        s.push_str(&format!(
            "  degree {}: {} patches in {} clusters (sizes {:?})\n",
            class.degree,
            class.members.len(),
            class.clusters.len(),
            sizes
        ));
    }
    if !partition.rejected.is_empty() {
        s.push_str(&format!(
            "  rejected (degree estimation overflow): {:?}\n",
            partition.rejected
        ));
    }
    if let Some(rate) = partition.misclassification {
        s.push_str(&format!("  misclassification vs truth labels: {rate:.6}\n"));
    }
    s
}

fn cmd_cluster(args: ClusterArgs, seed: u64, json: bool) -> CliResult<()> {
    if !(args.noise >= 0.0) {
        return Err(usage("--noise must be nonnegative"));
    }
    if let Some(samples) = args.samples {
        if samples < 2 {
            return Err(usage("--samples must be at least 2"));
        }
    }
    let dataset = read_input(&args.dataset, "dataset", |p| io::read_dataset(p))?;
    let profile = read_input(&args.profile, "profile", |p| io::read_profile(p))?;
    let options = PipelineOptions {
        mode: args.mode.into(),
        samples_per_dim: args.samples,
        lambda: args.lambda,
        eta: args.eta,
        clusters_per_degree: parse_forced_counts(&args.clusters_per_degree)?,
        algorithm: if args.nn_chain { LinkageAlgorithm::NnChain } else { LinkageAlgorithm::Naive },
    };
    let partition = if args.noise > 0.0 {
        let (rescaled, _) = rescale_to_unit_box(&dataset)?;
        let sampled = rescaled.sample(options.samples_per_dim, profile.m_cap)?;
        let noisy = add_noise(&sampled, args.noise, seed)?;
        cluster_sampled(&noisy, &profile, &options)?
    } else {
        run_pipeline(&dataset, &profile, &options)?
    };
    io::write_result(&args.out, &partition)?;
    if let Some(svg_path) = &args.svg {
        let mut clusters = partition.clusters();
        clusters.retain(|c| !c.is_empty());
        std::fs::write(svg_path, svg::render_svg(&dataset, &clusters)?)
            .map_err(primcluster::Error::from)?;
    }
    if json {
        print!("{}", io::result_to_json(&partition));
    } else {
        print!("{}", partition_summary(&partition));
        println!("result written to {}", args.out.display());
    }
    Ok(())
}

fn cmd_implicitize(args: ImplicitizeArgs) -> CliResult<()> {
    if args.degree == 0 {
        return Err(usage("--degree must be at least 1"));
    }
    let dataset = read_input(&args.dataset, "dataset", |p| io::read_dataset(p))?;
    let patch = dataset
        .patches
        .get(args.patch)
        .ok_or_else(|| usage(format!(
            "--patch {} out of range; the dataset has {} patches",
            args.patch,
            dataset.len()
        )))?;
    let samples = args
        .samples
        .unwrap_or_else(|| default_samples_per_dim(patch.param_dim(), args.degree));
    let cloud = patch.sample_grid(samples)?;
    let fit = approximate_implicitize(&cloud, args.degree)?;
    print!("{}", io::implicit_result_to_json(&fit));
    Ok(())
}

fn cmd_benchmark(args: BenchmarkArgs, json: bool) -> CliResult<()> {
    if args.teeth.is_empty() {
        return Err(usage("--teeth must list at least one gear size"));
    }
    for window in args.teeth.windows(2) {
        if window[1] <= window[0] {
            return Err(usage("--teeth must be strictly ascending"));
        }
    }
    if let Some(&bad) = args.teeth.iter().find(|&&t| !t.is_power_of_two()) {
        return Err(usage(format!("--teeth entries must be powers of two, got {bad}")));
    }
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let algorithm = if args.nn_chain { LinkageAlgorithm::NnChain } else { LinkageAlgorithm::Naive };
    let rows = bench::run_benchmark(&args.teeth, args.repeats, algorithm)?;
    let json_rows = bench::rows_to_json(&rows);
    if let Some(out) = &args.out {
        std::fs::write(out, &json_rows).map_err(primcluster::Error::from)?;
    }
    if json {
        print!("{json_rows}");
    } else {
        print!("{}", bench::format_table(&rows));
    }
    Ok(())
}

fn cmd_experiment(cmd: ExperimentCmd, seed: u64, json: bool) -> CliResult<()> {
    match cmd {
        ExperimentCmd::ConicsRate(args) => {
            if args.runs == 0 {
                return Err(usage("--runs must be at least 1"));
            }
            let report = experiments::conics_rate(args.runs, seed)?;
            if json {
                print!("{}", experiments::conics_report_json(&report));
            } else {
                print!("{}", experiments::conics_report_text(&report));
            }
        }
        ExperimentCmd::NoiseSweep(args) => {
            if args.runs == 0 {
                return Err(usage("--runs must be at least 1"));
            }
            let report = experiments::noise_sweep(args.runs, seed)?;
            if json {
                print!("{}", experiments::noise_report_json(&report));
            } else {
                print!("{}", experiments::noise_report_text(&report));
            }
        }
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> CliResult<()> {
    let dataset: LabeledDataset64 = read_input(&args.dataset, "dataset", |p| io::read_dataset(p))?;
    let clusters = match &args.result {
        Some(path) => {
            let result = read_input(path, "result", |p| io::read_result(p))?;
            for cluster in &result.clusters {
                if let Some(&bad) = cluster.iter().find(|&&i| i >= dataset.len()) {
                    return Err(usage(format!(
                        "result references patch {bad} but the dataset has {} patches",
                        dataset.len()
                    )));
                }
            }
            result.clusters
        }
        None => Vec::new(),
    };
    std::fs::write(&args.out, svg::render_svg(&dataset, &clusters)?)
        .map_err(primcluster::Error::from)?;
    println!("wrote {}", args.out.display());
    Ok(())
}
