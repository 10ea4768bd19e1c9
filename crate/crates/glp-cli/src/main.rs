//! Command-line front end for the graph filtering crate: inspect spectra,
//! filter features, run single classifications, and benchmark over many
//! random splits.
//!
//! Every subcommand resolves its settings from three layers: built-in
//! defaults, then a flat `key = value` configuration file passed with
//! `--config`, then command-line flags, the later layers winning. The fully
//! resolved configuration is printed before any results so a run can be
//! reproduced from its own output. Unknown configuration keys are rejected.
//!
//! Exit codes: 0 on success, 1 on user error, 2 when an operation refuses to
//! run because it exceeds a documented capability limit (the dense spectral
//! size cap).

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use glp::dataio::{
    export_dataset, export_matrix_csv, export_spectrum_csv, generate_sbm, load_citation_content,
    load_edge_list, row_normalize, Dataset, LoadStats, SbmParams,
};
use glp::filter::{apply_filter, FilterSpec};
use glp::pipeline::{
    benchmark, complete_labels, default_filter_strength, make_split, run_task, BenchConfig,
    LabelBudget, RunResult, SplitSpec, TaskModel,
};
use glp::rng::derive_seed;
use glp::sparse::build_laplacian;
use glp::spectral::{eigendecompose, eigenvalue_bound_check};
use glp::{LaplacianKind, neural::MlpConfig};

#[derive(Parser)]
#[command(
    name = "glp",
    version,
    about = "Low-pass graph filtering for semi-supervised vertex classification",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigendecompose a graph Laplacian and report the renormalization
    /// shrinkage bound
    Spectra(SpectraArgs),
    /// Filter vertex features once and write them as CSV
    Filter(FilterArgs),
    /// Train and score one model on one random split
    Train(TrainArgs),
    /// Run many random splits and aggregate accuracy
    Bench(BenchArgs),
    /// Generate a stochastic block model dataset on disk
    GenSbm(GenSbmArgs),
    /// Draw a stratified labeled/test split and write it out
    Split(SplitArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` configuration file; flags override its entries
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(flatten)]
    dataset: DatasetArgs,
}

#[derive(Args)]
struct DatasetArgs {
    /// Citation content file: one `id f1..fm class` line per document,
    /// tab-separated
    #[arg(long, value_name = "PATH")]
    cora_content: Option<PathBuf>,

    /// Citation cites file: one `cited_id citing_id` line per link
    #[arg(long, value_name = "PATH")]
    cora_cites: Option<PathBuf>,

    /// Edge list file: `src dst [weight]` per line, `#` comments allowed
    #[arg(long, value_name = "PATH", conflicts_with_all = ["cora_content", "cora_cites"])]
    edges: Option<PathBuf>,

    /// Features CSV with one row per vertex
    #[arg(long, value_name = "PATH", conflicts_with_all = ["cora_content", "cora_cites"])]
    features: Option<PathBuf>,

    /// Labels file: `vertex class` per line, `#` comments allowed
    #[arg(long, value_name = "PATH", conflicts_with_all = ["cora_content", "cora_cites"])]
    labels: Option<PathBuf>,

    /// Scale every feature row to unit sum after loading
    #[arg(long)]
    row_normalize: bool,
}

#[derive(Args)]
struct SpectraArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Laplacian for the exported spectrum: unnormalized, random-walk,
    /// symmetric, or renormalized [default: symmetric]
    #[arg(long, value_name = "KIND")]
    kind: Option<String>,

    /// Frequency response to tabulate: rnm, ar, or none [default: none]
    #[arg(long, value_name = "NAME")]
    filter: Option<String>,

    /// Renormalization filter order [default: 5]
    #[arg(long, value_name = "K")]
    k: Option<usize>,

    /// Auto-regressive smoothing strength [default: 10]
    #[arg(long, value_name = "ALPHA")]
    alpha: Option<f64>,

    /// Where to write the `lambda,response` CSV; omit to skip the file
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Filter to apply: rnm, ar, or none [default: rnm]
    #[arg(long, value_name = "NAME")]
    filter: Option<String>,

    /// Renormalization filter order [default: 5]
    #[arg(long, value_name = "K")]
    k: Option<usize>,

    /// Auto-regressive smoothing strength [default: 10]
    #[arg(long, value_name = "ALPHA")]
    alpha: Option<f64>,

    /// Series length for the auto-regressive filter [default: ceil(4*alpha)]
    #[arg(long, value_name = "N")]
    iterations: Option<usize>,

    /// Where to write the filtered features CSV
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Model family: lp, mlp, glp, or igcn [default: glp]
    #[arg(long, value_name = "NAME")]
    model: Option<String>,

    /// Feature filter for glp: rnm, ar, or none [default: rnm]
    #[arg(long, value_name = "NAME")]
    filter: Option<String>,

    /// Filter order for rnm, or total hop count for igcn
    /// [default: by label budget]
    #[arg(long, value_name = "K")]
    k: Option<usize>,

    /// Smoothing strength for ar and lp
    /// [default: by label budget; 100 for lp]
    #[arg(long, value_name = "ALPHA")]
    alpha: Option<f64>,

    /// Series length for the auto-regressive filter [default: ceil(4*alpha)]
    #[arg(long, value_name = "N")]
    iterations: Option<usize>,

    /// Labeled vertices drawn from every class [default: 20]
    #[arg(long, value_name = "COUNT")]
    labels_per_class: Option<usize>,

    /// Labeled fraction of every class, instead of a per-class count
    #[arg(long, value_name = "FRACTION", conflicts_with = "labels_per_class")]
    label_fraction: Option<f64>,

    /// Base seed for splits and training [default: 1]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Hidden layer width [default: 16]
    #[arg(long, value_name = "UNITS")]
    hidden: Option<usize>,

    /// Adam step size [default: 0.01]
    #[arg(long, value_name = "RATE")]
    lr: Option<f64>,

    /// Dropout rate in [0, 1) [default: 0.5]
    #[arg(long, value_name = "RATE")]
    dropout: Option<f64>,

    /// L2 penalty on the first weight matrix [default: 0.0005]
    #[arg(long, value_name = "WEIGHT")]
    l2: Option<f64>,

    /// Adam updates to run [default: 200]
    #[arg(long, value_name = "STEPS")]
    steps: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    train: TrainArgs,

    /// Number of random splits [default: 50]
    #[arg(long, value_name = "N")]
    runs: Option<usize>,

    /// Worker threads for independent runs [default: 1]
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,

    /// Where to write the per-run CSV; omit to print it
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Write 0 in the seconds column so repeated runs are byte-identical
    #[arg(long)]
    stable_output: bool,
}

#[derive(Args)]
struct GenSbmArgs {
    /// Flat `key = value` configuration file; flags override its entries
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Comma-separated block sizes [default: 150,150]
    #[arg(long, value_name = "SIZES")]
    block_sizes: Option<String>,

    /// Edge probability inside a block [default: 0.1]
    #[arg(long, value_name = "P")]
    p_in: Option<f64>,

    /// Edge probability across blocks [default: 0.005]
    #[arg(long, value_name = "P")]
    p_out: Option<f64>,

    /// Feature vector length [default: 16]
    #[arg(long, value_name = "D")]
    feature_dim: Option<usize>,

    /// Block mean on the block's feature coordinates [default: 1]
    #[arg(long, value_name = "SHIFT")]
    feature_shift: Option<f64>,

    /// Gaussian feature noise [default: 1]
    #[arg(long, value_name = "SIGMA")]
    noise_sigma: Option<f64>,

    /// Generator seed [default: 1]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Directory for edges.txt, features.csv and labels.txt
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Labeled vertices drawn from every class [default: 20]
    #[arg(long, value_name = "COUNT")]
    labels_per_class: Option<usize>,

    /// Labeled fraction of every class, instead of a per-class count
    #[arg(long, value_name = "FRACTION", conflicts_with = "labels_per_class")]
    label_fraction: Option<f64>,

    /// Split seed [default: 1]
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Where to write the `vertex,role` CSV; omit to print it
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let explicit_help =
                matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = err.print();
            return if explicit_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let capability = err
                .chain()
                .filter_map(|cause| cause.downcast_ref::<glp::Error>())
                .any(glp::Error::is_capability_limit);
            ExitCode::from(if capability { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Spectra(args) => cmd_spectra(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Train(args) => cmd_train(args),
        Command::Bench(args) => cmd_bench(args),
        Command::GenSbm(args) => cmd_gen_sbm(args),
        Command::Split(args) => cmd_split(args),
    }
}

/// The configuration file: flat `key = value` lines, `#` comments, blank
/// lines ignored. Keys are consumed as the subcommand resolves its settings;
/// whatever remains at the end is unknown and rejected.
struct ConfigFile {
    map: BTreeMap<String, String>,
    path: Option<PathBuf>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> anyhow::Result<ConfigFile> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or_else(|| {
                    anyhow!("{}:{}: expected `key = value`, got `{raw}`", path.display(), i + 1)
                })?;
                let key = key.trim().to_string();
                if map.insert(key.clone(), value.trim().to_string()).is_some() {
                    bail!("{}:{}: duplicate key `{key}`", path.display(), i + 1);
                }
            }
        }
        Ok(ConfigFile {
            map,
            path: path.map(Path::to_path_buf),
        })
    }

    /// Flag value if given, else the config-file value under `key`, else
    /// `None`. The key is consumed either way.
    fn take<T>(&mut self, key: &str, flag: Option<T>) -> anyhow::Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let from_file = self.map.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        match from_file {
            Some(raw) => {
                let value = raw.parse().map_err(|e| {
                    anyhow!("config key `{key}`: cannot parse `{raw}`: {e}")
                })?;
                Ok(Some(value))
            }
            None => Ok(None),
        }
    }

    /// Boolean switch: true when the flag was passed or the config file says
    /// `true`.
    fn take_switch(&mut self, key: &str, flag: bool) -> anyhow::Result<bool> {
        Ok(self.take(key, if flag { Some(true) } else { None })?.unwrap_or(false))
    }

    fn finish(self) -> anyhow::Result<()> {
        if self.map.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.map.keys().map(String::as_str).collect();
        let path = self
            .path
            .as_deref()
            .map_or_else(|| "config".to_string(), |p| p.display().to_string());
        bail!("{path}: unknown configuration keys: {}", keys.join(", "));
    }
}

/// Where the dataset comes from after merging flags and config file.
enum DatasetSource {
    Citation { content: PathBuf, cites: PathBuf },
    Generic {
        edges: PathBuf,
        features: PathBuf,
        labels: Option<PathBuf>,
    },
}

struct ResolvedDataset {
    source: DatasetSource,
    row_normalize: bool,
}

impl ResolvedDataset {
    fn resolve(args: &DatasetArgs, cfg: &mut ConfigFile) -> anyhow::Result<ResolvedDataset> {
        let content = cfg.take("cora-content", args.cora_content.clone())?;
        let cites = cfg.take("cora-cites", args.cora_cites.clone())?;
        let edges = cfg.take("edges", args.edges.clone())?;
        let features = cfg.take("features", args.features.clone())?;
        let labels = cfg.take("labels", args.labels.clone())?;
        let row_normalize = cfg.take_switch("row-normalize", args.row_normalize)?;
        let source = match (content, cites, edges, features) {
            (Some(content), Some(cites), None, None) => {
                DatasetSource::Citation { content, cites }
            }
            (None, None, Some(edges), Some(features)) => DatasetSource::Generic {
                edges,
                features,
                labels,
            },
            (Some(_), None, ..) | (None, Some(_), ..) => {
                bail!("the citation format needs both --cora-content and --cora-cites")
            }
            (None, None, Some(_), None) | (None, None, None, Some(_)) => {
                bail!("the generic format needs both --edges and --features")
            }
            (None, None, None, None) => {
                bail!("no dataset: pass --cora-content/--cora-cites or --edges/--features")
            }
            _ => bail!("pass either the citation files or the generic files, not both"),
        };
        Ok(ResolvedDataset {
            source,
            row_normalize,
        })
    }

    fn describe(&self, lines: &mut Vec<String>) {
        match &self.source {
            DatasetSource::Citation { content, cites } => {
                lines.push(format!("cora-content = {}", content.display()));
                lines.push(format!("cora-cites = {}", cites.display()));
            }
            DatasetSource::Generic {
                edges,
                features,
                labels,
            } => {
                lines.push(format!("edges = {}", edges.display()));
                lines.push(format!("features = {}", features.display()));
                if let Some(labels) = labels {
                    lines.push(format!("labels = {}", labels.display()));
                }
            }
        }
        lines.push(format!("row-normalize = {}", self.row_normalize));
    }

    fn load(&self) -> anyhow::Result<(Dataset, LoadStats)> {
        let (mut dataset, stats) = match &self.source {
            DatasetSource::Citation { content, cites } => {
                load_citation_content(content, cites)?
            }
            DatasetSource::Generic {
                edges,
                features,
                labels,
            } => load_edge_list(edges, features, labels.as_deref())?,
        };
        if stats.skipped_edges > 0 {
            eprintln!(
                "warning: skipped {} citation lines with unknown or self-referential ids",
                stats.skipped_edges
            );
        }
        if self.row_normalize {
            row_normalize(&mut dataset.features);
        }
        Ok((dataset, stats))
    }
}

fn print_config(lines: &[String]) {
    println!("# resolved configuration");
    for line in lines {
        println!("{line}");
    }
}

fn parse_kind(name: &str) -> anyhow::Result<LaplacianKind> {
    match name {
        "unnormalized" => Ok(LaplacianKind::Unnormalized),
        "random-walk" => Ok(LaplacianKind::RandomWalk),
        "symmetric" => Ok(LaplacianKind::Symmetric),
        "renormalized" => Ok(LaplacianKind::RenormalizedSymmetric),
        other => bail!(
            "unknown Laplacian kind `{other}`; expected unnormalized, random-walk, symmetric or renormalized"
        ),
    }
}

/// Smoothing strength defaults for a labeling budget, mirroring
/// [`default_filter_strength`] for fractional budgets.
fn strength_for(budget: LabelBudget, n: usize, n_classes: usize) -> (usize, f64) {
    match budget {
        LabelBudget::PerClass(count) => default_filter_strength(count, n, n_classes),
        LabelBudget::Fraction(f) => {
            if f >= 0.10 {
                (5, 10.0)
            } else {
                (10, 20.0)
            }
        }
    }
}

fn resolve_budget(
    cfg: &mut ConfigFile,
    labels_per_class: Option<usize>,
    label_fraction: Option<f64>,
) -> anyhow::Result<LabelBudget> {
    let per_class = cfg.take("labels-per-class", labels_per_class)?;
    let fraction = cfg.take("label-fraction", label_fraction)?;
    match (per_class, fraction) {
        (Some(_), Some(_)) => bail!("pass --labels-per-class or --label-fraction, not both"),
        (None, Some(f)) => Ok(LabelBudget::Fraction(f)),
        (Some(c), None) => Ok(LabelBudget::PerClass(c)),
        (None, None) => Ok(LabelBudget::PerClass(20)),
    }
}

fn describe_budget(budget: LabelBudget, lines: &mut Vec<String>) {
    match budget {
        LabelBudget::PerClass(count) => lines.push(format!("labels-per-class = {count}")),
        LabelBudget::Fraction(f) => lines.push(format!("label-fraction = {f}")),
    }
}

/// Everything `train` and `bench` share: the model, the budget, the seed
/// and the training knobs, resolved against the dataset's shape.
struct TaskSetup {
    task: TaskModel,
    budget: LabelBudget,
    seed: u64,
    mlp: MlpConfig,
    lines: Vec<String>,
}

fn resolve_task(
    args: &TrainArgs,
    cfg: &mut ConfigFile,
    budget: LabelBudget,
    n: usize,
    n_classes: usize,
) -> anyhow::Result<TaskSetup> {
    let model = cfg
        .take("model", args.model.clone())?
        .unwrap_or_else(|| "glp".to_string());
    let filter_name = cfg.take("filter", args.filter.clone())?;
    let k = cfg.take("k", args.k)?;
    let alpha = cfg.take("alpha", args.alpha)?;
    let iterations = cfg.take("iterations", args.iterations)?;
    let seed = cfg.take("seed", args.seed)?.unwrap_or(1);

    let mut mlp = MlpConfig::default();
    mlp.hidden = cfg.take("hidden", args.hidden)?.unwrap_or(mlp.hidden);
    mlp.learning_rate = cfg.take("lr", args.lr)?.unwrap_or(mlp.learning_rate);
    mlp.dropout = cfg.take("dropout", args.dropout)?.unwrap_or(mlp.dropout);
    mlp.l2 = cfg.take("l2", args.l2)?.unwrap_or(mlp.l2);
    mlp.steps = cfg.take("steps", args.steps)?.unwrap_or(mlp.steps);

    let (default_k, default_alpha) = strength_for(budget, n, n_classes);
    let reject = |what: &str| -> anyhow::Result<()> {
        bail!("--{what} does not apply to --model {model}")
    };

    let mut lines = Vec::new();
    lines.push(format!("model = {model}"));
    let task = match model.as_str() {
        "lp" => {
            if let Some(name) = &filter_name {
                if name != "ar" {
                    bail!("label propagation is the ar filter; --filter {name} does not apply");
                }
            }
            if k.is_some() {
                reject("k")?;
            }
            if iterations.is_some() {
                reject("iterations")?;
            }
            let alpha = alpha.unwrap_or(100.0);
            lines.push(format!("alpha = {alpha}"));
            TaskModel::LabelProp { alpha }
        }
        "mlp" => {
            if let Some(name) = &filter_name {
                if name != "none" {
                    bail!("the plain perceptron takes no filter; use --model glp --filter {name}");
                }
            }
            if k.is_some() {
                reject("k")?;
            }
            if alpha.is_some() {
                reject("alpha")?;
            }
            if iterations.is_some() {
                reject("iterations")?;
            }
            TaskModel::Mlp
        }
        "glp" => {
            let name = filter_name.unwrap_or_else(|| "rnm".to_string());
            let filter = match name.as_str() {
                "rnm" => {
                    if alpha.is_some() {
                        bail!("--alpha applies to the ar filter, not rnm");
                    }
                    if iterations.is_some() {
                        bail!("--iterations applies to the ar filter, not rnm");
                    }
                    let k = k.unwrap_or(default_k);
                    lines.push("filter = rnm".to_string());
                    lines.push(format!("k = {k}"));
                    FilterSpec::Renormalization { k }
                }
                "ar" => {
                    if k.is_some() {
                        bail!("--k applies to the rnm filter; ar takes --alpha and --iterations");
                    }
                    let alpha = alpha.unwrap_or(default_alpha);
                    lines.push("filter = ar".to_string());
                    lines.push(format!("alpha = {alpha}"));
                    if let Some(iterations) = iterations {
                        lines.push(format!("iterations = {iterations}"));
                    }
                    FilterSpec::AutoRegressive { alpha, iterations }
                }
                "none" => {
                    if k.is_some() || alpha.is_some() || iterations.is_some() {
                        bail!("the identity filter takes no --k, --alpha or --iterations");
                    }
                    lines.push("filter = none".to_string());
                    FilterSpec::Identity
                }
                other => bail!("unknown filter `{other}`; expected rnm, ar or none"),
            };
            TaskModel::Glp { filter }
        }
        "igcn" => {
            if let Some(name) = &filter_name {
                if name != "rnm" {
                    bail!("the graph convolution propagates with the rnm operator; --filter {name} does not apply");
                }
            }
            if alpha.is_some() {
                reject("alpha")?;
            }
            if iterations.is_some() {
                reject("iterations")?;
            }
            let k_total = k.unwrap_or(default_k);
            lines.push("filter = rnm".to_string());
            lines.push(format!("k = {k_total}"));
            lines.push(format!("k-per-layer = {}", (k_total / 2).max(1)));
            TaskModel::Igcn { k_total }
        }
        other => bail!("unknown model `{other}`; expected lp, mlp, glp or igcn"),
    };

    describe_budget(budget, &mut lines);
    lines.push(format!("seed = {seed}"));
    if !matches!(task, TaskModel::LabelProp { .. }) {
        lines.push(format!("hidden = {}", mlp.hidden));
        lines.push(format!("lr = {}", mlp.learning_rate));
        lines.push(format!("dropout = {}", mlp.dropout));
        lines.push(format!("l2 = {}", mlp.l2));
        lines.push(format!("steps = {}", mlp.steps));
    }

    Ok(TaskSetup {
        task,
        budget,
        seed,
        mlp,
        lines,
    })
}

fn cmd_spectra(args: SpectraArgs) -> anyhow::Result<()> {
    let mut cfg = ConfigFile::load(args.common.config.as_deref())?;
    let dataset_source = ResolvedDataset::resolve(&args.common.dataset, &mut cfg)?;
    let kind_name = cfg
        .take("kind", args.kind.clone())?
        .unwrap_or_else(|| "symmetric".to_string());
    let filter_name = cfg
        .take("filter", args.filter.clone())?
        .unwrap_or_else(|| "none".to_string());
    let k = cfg.take("k", args.k)?.unwrap_or(5);
    let alpha = cfg.take("alpha", args.alpha)?.unwrap_or(10.0);
    let out = cfg.take("out", args.out.clone())?;
    cfg.finish()?;

    let kind = parse_kind(&kind_name)?;
    let response = match filter_name.as_str() {
        "rnm" => FilterSpec::Renormalization { k },
        "ar" => FilterSpec::AutoRegressive {
            alpha,
            iterations: None,
        },
        "none" => FilterSpec::Identity,
        other => bail!("unknown filter `{other}`; expected rnm, ar or none"),
    }
    .frequency_response();

    let mut lines = vec!["command = spectra".to_string()];
    dataset_source.describe(&mut lines);
    lines.push(format!("kind = {}", kind.name()));
    lines.push(format!("filter = {filter_name}"));
    match filter_name.as_str() {
        "rnm" => lines.push(format!("k = {k}")),
        "ar" => lines.push(format!("alpha = {alpha}")),
        _ => {}
    }
    if let Some(out) = &out {
        lines.push(format!("out = {}", out.display()));
    }
    print_config(&lines);

    let (dataset, _) = dataset_source.load()?;
    let check = eigenvalue_bound_check(&dataset.graph)?;
    println!("vertices = {}", dataset.n());
    println!("lambda_max(symmetric) = {}", check.lambda_max_symmetric);
    println!(
        "lambda_max(renormalized) = {}",
        check.lambda_max_renormalized
    );
    println!("shrinkage bound (global) = {}", check.global_bound);
    println!("shrinkage bound (component) = {}", check.component_bound);
    println!("bound holds = {}", check.holds);

    if let Some(out) = out {
        let laplacian = build_laplacian(&dataset.graph, kind)?;
        let spectrum = eigendecompose(&laplacian)?;
        export_spectrum_csv(&spectrum, response, &out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_filter(args: FilterArgs) -> anyhow::Result<()> {
    let mut cfg = ConfigFile::load(args.common.config.as_deref())?;
    let dataset_source = ResolvedDataset::resolve(&args.common.dataset, &mut cfg)?;
    let filter_name = cfg
        .take("filter", args.filter.clone())?
        .unwrap_or_else(|| "rnm".to_string());
    let k = cfg.take("k", args.k)?.unwrap_or(5);
    let alpha = cfg.take("alpha", args.alpha)?.unwrap_or(10.0);
    let iterations = cfg.take("iterations", args.iterations)?;
    let out = cfg
        .take("out", args.out.clone())?
        .ok_or_else(|| anyhow!("--out is required: where should the filtered features go?"))?;
    cfg.finish()?;

    let spec = match filter_name.as_str() {
        "rnm" => FilterSpec::Renormalization { k },
        "ar" => FilterSpec::AutoRegressive { alpha, iterations },
        "none" => FilterSpec::Identity,
        other => bail!("unknown filter `{other}`; expected rnm, ar or none"),
    };

    let mut lines = vec!["command = filter".to_string()];
    dataset_source.describe(&mut lines);
    lines.push(format!("filter = {filter_name}"));
    match spec {
        FilterSpec::Renormalization { k } => lines.push(format!("k = {k}")),
        FilterSpec::AutoRegressive { alpha, iterations } => {
            lines.push(format!("alpha = {alpha}"));
            if let Some(iterations) = iterations {
                lines.push(format!("iterations = {iterations}"));
            }
        }
        FilterSpec::Identity => {}
    }
    lines.push(format!("out = {}", out.display()));
    print_config(&lines);

    let (dataset, _) = dataset_source.load()?;
    let start = Instant::now();
    let (filtered, report) = apply_filter(&dataset.graph, &dataset.features, spec)?;
    let seconds = start.elapsed().as_secs_f64();
    export_matrix_csv(&filtered, &out)?;
    println!("iterations = {}", report.iterations);
    match report.truncation_bound {
        Some(bound) => println!("truncation bound = {bound}"),
        None => println!("truncation bound = exact"),
    }
    println!("seconds = {seconds}");
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let mut cfg = ConfigFile::load(args.common.config.as_deref())?;
    let dataset_source = ResolvedDataset::resolve(&args.common.dataset, &mut cfg)?;
    let budget = resolve_budget(&mut cfg, args.labels_per_class, args.label_fraction)?;
    let (dataset, _) = dataset_source.load()?;
    let truth = complete_labels(&dataset.labels)?;
    let setup = resolve_task(&args, &mut cfg, budget, dataset.n(), dataset.n_classes())?;
    cfg.finish()?;

    let mut lines = vec!["command = train".to_string()];
    dataset_source.describe(&mut lines);
    lines.extend(setup.lines.iter().cloned());
    print_config(&lines);

    let split = make_split(&truth, setup.budget, setup.seed)?;
    let mut mlp = setup.mlp.clone();
    mlp.seed = derive_seed(setup.seed, "train", 0);
    let run = run_task(
        &dataset.graph,
        &dataset.features,
        &truth,
        &split,
        setup.task,
        &mlp,
    )?;
    println!("labeled = {}", split.labeled.len());
    println!("test = {}", split.test.len());
    println!("accuracy = {}", run.accuracy);
    println!("seconds = {}", run.wall_time.as_secs_f64());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<()> {
    let mut cfg = ConfigFile::load(args.train.common.config.as_deref())?;
    let dataset_source = ResolvedDataset::resolve(&args.train.common.dataset, &mut cfg)?;
    let budget = resolve_budget(&mut cfg, args.train.labels_per_class, args.train.label_fraction)?;
    let runs = cfg.take("runs", args.runs)?.unwrap_or(50);
    let jobs = cfg.take("jobs", args.jobs)?.unwrap_or(1);
    let out = cfg.take("out", args.out.clone())?;
    let stable = cfg.take_switch("stable-output", args.stable_output)?;
    let (dataset, _) = dataset_source.load()?;
    let truth = complete_labels(&dataset.labels)?;
    let setup = resolve_task(&args.train, &mut cfg, budget, dataset.n(), dataset.n_classes())?;
    cfg.finish()?;

    let mut lines = vec!["command = bench".to_string()];
    dataset_source.describe(&mut lines);
    lines.extend(setup.lines.iter().cloned());
    lines.push(format!("runs = {runs}"));
    lines.push(format!("jobs = {jobs}"));
    lines.push(format!("stable-output = {stable}"));
    if let Some(out) = &out {
        lines.push(format!("out = {}", out.display()));
    }
    print_config(&lines);

    let bench_cfg = BenchConfig {
        task: setup.task,
        budget: setup.budget,
        base_seed: setup.seed,
        n_runs: runs,
        mlp: setup.mlp.clone(),
        jobs,
    };
    let (results, summary) = benchmark(&dataset.graph, &dataset.features, &truth, &bench_cfg)?;
    let csv = bench_csv(&results, stable);
    match &out {
        Some(path) => {
            std::fs::write(path, csv)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    println!("runs = {}", summary.n_runs);
    println!("mean accuracy = {}", summary.mean_accuracy);
    println!("std accuracy = {}", summary.std_accuracy);
    let mean_seconds = if stable {
        0.0
    } else {
        summary.mean_time.as_secs_f64()
    };
    println!("mean seconds = {mean_seconds}");
    Ok(())
}

fn cmd_gen_sbm(args: GenSbmArgs) -> anyhow::Result<()> {
    let mut cfg = ConfigFile::load(args.config.as_deref())?;
    let block_sizes_raw = cfg
        .take("block-sizes", args.block_sizes.clone())?
        .unwrap_or_else(|| "150,150".to_string());
    let params = SbmParams {
        block_sizes: parse_block_sizes(&block_sizes_raw)?,
        p_in: cfg.take("p-in", args.p_in)?.unwrap_or(0.1),
        p_out: cfg.take("p-out", args.p_out)?.unwrap_or(0.005),
        feature_dim: cfg.take("feature-dim", args.feature_dim)?.unwrap_or(16),
        feature_shift: cfg.take("feature-shift", args.feature_shift)?.unwrap_or(1.0),
        noise_sigma: cfg.take("noise-sigma", args.noise_sigma)?.unwrap_or(1.0),
        seed: cfg.take("seed", args.seed)?.unwrap_or(1),
    };
    let out_dir = cfg
        .take("out-dir", args.out_dir.clone())?
        .ok_or_else(|| anyhow!("--out-dir is required: where should the dataset files go?"))?;
    cfg.finish()?;

    let lines = vec![
        "command = gen-sbm".to_string(),
        format!("block-sizes = {block_sizes_raw}"),
        format!("p-in = {}", params.p_in),
        format!("p-out = {}", params.p_out),
        format!("feature-dim = {}", params.feature_dim),
        format!("feature-shift = {}", params.feature_shift),
        format!("noise-sigma = {}", params.noise_sigma),
        format!("seed = {}", params.seed),
        format!("out-dir = {}", out_dir.display()),
    ];
    print_config(&lines);

    let dataset = generate_sbm(&params)?;
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let edges = out_dir.join("edges.txt");
    let features = out_dir.join("features.csv");
    let labels = out_dir.join("labels.txt");
    export_dataset(&dataset, &edges, &features, &labels)?;
    println!("vertices = {}", dataset.n());
    println!("undirected edges = {}", dataset.graph.edge_count());
    println!("wrote {}", edges.display());
    println!("wrote {}", features.display());
    println!("wrote {}", labels.display());
    Ok(())
}

fn cmd_split(args: SplitArgs) -> anyhow::Result<()> {
    let mut cfg = ConfigFile::load(args.common.config.as_deref())?;
    let dataset_source = ResolvedDataset::resolve(&args.common.dataset, &mut cfg)?;
    let budget = resolve_budget(&mut cfg, args.labels_per_class, args.label_fraction)?;
    let seed = cfg.take("seed", args.seed)?.unwrap_or(1);
    let out = cfg.take("out", args.out.clone())?;
    cfg.finish()?;

    let mut lines = vec!["command = split".to_string()];
    dataset_source.describe(&mut lines);
    describe_budget(budget, &mut lines);
    lines.push(format!("seed = {seed}"));
    if let Some(out) = &out {
        lines.push(format!("out = {}", out.display()));
    }
    print_config(&lines);

    let (dataset, _) = dataset_source.load()?;
    let truth = complete_labels(&dataset.labels)?;
    let split = make_split(&truth, budget, seed)?;
    println!("labeled = {}", split.labeled.len());
    println!("test = {}", split.test.len());
    let csv = split_csv(&split);
    match &out {
        Some(path) => {
            std::fs::write(path, csv)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn parse_block_sizes(raw: &str) -> anyhow::Result<Vec<usize>> {
    raw.split(',')
        .map(|token| {
            token
                .trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("bad block size `{token}` in `{raw}`"))
        })
        .collect()
}

/// Per-run CSV: `model,filter,k,alpha,split_seed,accuracy,seconds`. The k
/// column carries the rnm order (or the convolution's total hop count), the
/// alpha column the ar strength; cells that do not apply stay empty. With
/// `stable` the seconds column is written as 0 so repeated invocations are
/// byte-identical.
fn bench_csv(runs: &[RunResult], stable: bool) -> String {
    let mut out = String::from("model,filter,k,alpha,split_seed,accuracy,seconds\n");
    for run in runs {
        let (k, alpha) = match run.filter {
            FilterSpec::Renormalization { k } => (k.to_string(), String::new()),
            FilterSpec::AutoRegressive { alpha, .. } => (String::new(), alpha.to_string()),
            FilterSpec::Identity => (String::new(), String::new()),
        };
        let seconds = if stable {
            "0".to_string()
        } else {
            run.wall_time.as_secs_f64().to_string()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            run.model,
            run.filter.name(),
            k,
            alpha,
            run.split_seed,
            run.accuracy,
            seconds
        );
    }
    out
}

fn split_csv(split: &SplitSpec) -> String {
    let mut out = String::from("vertex,role\n");
    let mut labeled = split.labeled.iter().peekable();
    let total = split.labeled.len() + split.test.len();
    for vertex in 0..total {
        let role = if labeled.peek() == Some(&&vertex) {
            labeled.next();
            "labeled"
        } else {
            "test"
        };
        let _ = writeln!(out, "{vertex},{role}");
    }
    out
}
