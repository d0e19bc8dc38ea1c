//! Command-line front end. Every command writes its output file plus a
//! `<out>.manifest` sidecar recording parameters and input digests.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use crate::clustering::{spherical_kmeans, KMeansConfig};
use crate::error::{Error, Result};
use crate::feature_store::{
    compute_centroids, load_features, save_centroids, CentroidSet, FeatureFormat, LabelMap,
};
use crate::ot_core::{CostMetric, UotParams};
use crate::selection::{
    parse_selection_csv, recall_line, recall_of_ranking, select_by_label, select_greedy_ot,
    select_random, select_uot, RecallSpec, SelectionResult,
};
use crate::theory_sim::{run_sweep, sweep_csv, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ot-select",
    version,
    about = "Select pre-training classes by unbalanced optimal transport"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-class mean features with unit masses.
    Centroids(CentroidsArgs),
    /// Spherical k-means over unlabeled features; writes a label CSV.
    Cluster(ClusterArgs),
    /// Rank pre-training classes and keep the top k.
    Select(SelectArgs),
    /// Fraction of relevant classes found in the top of a selection.
    Recall(RecallArgs),
    /// SGD excess-risk sweep against the closed-form bounds.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Bin,
    Csv,
}

impl From<FormatArg> for FeatureFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Bin => FeatureFormat::Binary,
            FormatArg::Csv => FeatureFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Uot,
    GreedyOt,
    Random,
    Label,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Cosine,
    L2,
}

impl From<MetricArg> for CostMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cosine => CostMetric::Cosine,
            MetricArg::L2 => CostMetric::L2,
        }
    }
}

#[derive(Debug, Args)]
pub struct CentroidsArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Defaults to csv for `.csv` files, binary otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, default_value_t = 2000)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub n_init: usize,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1)]
    pub min_cluster_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Pre-training centroid file.
    #[arg(long)]
    pub pre: Option<PathBuf>,
    /// Target centroid file.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Number of pre-training units when no centroid file is given (random, label).
    #[arg(long)]
    pub num_classes: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tau1: f64,
    #[arg(long, default_value_t = 100.0)]
    pub tau2: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon_c: f64,
    /// Defaults to cosine for uot and l2 for greedy-ot.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    /// Kernel bandwidth for greedy-ot; defaults to the mean distance.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated class list for label selection.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RecallArgs {
    #[arg(long)]
    pub selection: PathBuf,
    /// Relevant class indices separated by commas, spaces or newlines.
    #[arg(long)]
    pub relevant: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub top_k: usize,
    /// Also write the recall line here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Provenance written next to every output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    /// Input role → `sha256:<hex>` of the file contents.
    pub inputs: BTreeMap<String, String>,
    pub results: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub tool_version: String,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Self::default()
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    fn result(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.results.insert(key.to_string(), value.to_string());
        self
    }

    fn input(&mut self, role: &str, bytes: &[u8]) -> &mut Self {
        self.inputs.insert(
            role.to_string(),
            format!("sha256:{}", hex::encode(Sha256::digest(bytes))),
        );
        self
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "command = {}\ntool_version = {}\n",
            self.command, self.tool_version
        );
        if let Some(seed) = self.seed {
            out.push_str(&format!("seed = {seed}\n"));
        }
        for (prefix, map) in [
            ("param", &self.parameters),
            ("input", &self.inputs),
            ("result", &self.results),
        ] {
            for (k, v) in map {
                out.push_str(&format!("{prefix}.{k} = {v}\n"));
            }
        }
        out
    }

    pub fn sidecar_path(out: &Path) -> PathBuf {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest");
        PathBuf::from(name)
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_outputs(out: &Path, contents: &[u8], manifest: &RunManifest) -> Result<()> {
    fs::write(out, contents).map_err(|e| Error::io(out, e))?;
    let side = RunManifest::sidecar_path(out);
    fs::write(&side, manifest.render()).map_err(|e| Error::io(&side, e))
}

fn feature_format(arg: Option<FormatArg>, path: &Path) -> FeatureFormat {
    arg.map_or_else(|| FeatureFormat::from_path(path), Into::into)
}

/// Runs a parsed command. Returns text for stdout and any warnings for stderr.
pub fn run(cli: &Cli) -> Result<(String, Vec<String>)> {
    match &cli.command {
        Command::Centroids(a) => cmd_centroids(a).map(|s| (s, vec![])),
        Command::Cluster(a) => cmd_cluster(a).map(|s| (s, vec![])),
        Command::Select(a) => cmd_select(a),
        Command::Recall(a) => cmd_recall(a).map(|s| (s, vec![])),
        Command::Simulate(a) => cmd_simulate(a).map(|s| (s, vec![])),
    }
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

pub fn cmd_centroids(a: &CentroidsArgs) -> Result<String> {
    let format = feature_format(a.format, &a.features);
    let features = load_features(&a.features, format)?;
    let label_bytes = read_bytes(&a.labels)?;
    let text = String::from_utf8(label_bytes.clone())
        .map_err(|_| Error::invalid(format!("{} is not UTF-8", a.labels.display())))?;
    let labels = LabelMap::parse_csv(&text)?;
    let cs = compute_centroids(&features, &labels)?;
    save_centroids(&cs, &a.out)?;
    let mut m = RunManifest::new("centroids");
    m.input("features", &read_bytes(&a.features)?)
        .input("labels", &label_bytes)
        .result("k", cs.k())
        .result("dims", cs.dims());
    let side = RunManifest::sidecar_path(&a.out);
    fs::write(&side, m.render()).map_err(|e| Error::io(&side, e))?;
    Ok(format!(
        "wrote {} centroids of dimension {}\n",
        cs.k(),
        cs.dims()
    ))
}

pub fn cmd_cluster(a: &ClusterArgs) -> Result<String> {
    let format = feature_format(a.format, &a.features);
    let features = load_features(&a.features, format)?;
    let cfg = KMeansConfig {
        k: a.k,
        max_iters: a.max_iters,
        seed: a.seed,
        n_init: a.n_init,
        min_cluster_size: a.min_cluster_size,
    };
    let outcome = spherical_kmeans(&features, &cfg)?;
    let mut m = RunManifest::new("cluster");
    m.seed = Some(a.seed);
    m.param("k", a.k)
        .param("n_init", a.n_init)
        .param("max_iters", a.max_iters)
        .param("min_cluster_size", a.min_cluster_size)
        .input("features", &read_bytes(&a.features)?)
        .result("inertia", outcome.inertia)
        .result("iterations", outcome.iterations)
        .result("converged", outcome.converged)
        .result("restart", outcome.restart);
    write_outputs(&a.out, outcome.labels.to_csv().as_bytes(), &m)?;
    Ok(outcome.report())
}

fn universe_of(pre: &Option<CentroidSet<f64>>, num_classes: Option<usize>) -> Result<usize> {
    match (pre, num_classes) {
        (Some(cs), Some(n)) if cs.k() != n => Err(Error::invalid(format!(
            "--num-classes {n} disagrees with the {} pre-training centroids",
            cs.k()
        ))),
        (Some(cs), _) => Ok(cs.k()),
        (None, Some(n)) => Ok(n),
        (None, None) => Err(Error::invalid("need --pre or --num-classes")),
    }
}

pub fn cmd_select(a: &SelectArgs) -> Result<(String, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut m = RunManifest::new("select");
    let load = |p: &Option<PathBuf>,
                role: &str,
                m: &mut RunManifest|
     -> Result<Option<CentroidSet<f64>>> {
        match p {
            Some(path) => {
                let bytes = read_bytes(path)?;
                m.input(role, &bytes);
                Ok(Some(crate::feature_store::decode_centroids(&bytes)?))
            }
            None => Ok(None),
        }
    };
    let pre = load(&a.pre, "pre", &mut m)?;
    let target = load(&a.target, "target", &mut m)?;
    let need_both = || -> Result<(&CentroidSet<f64>, &CentroidSet<f64>)> {
        match (&pre, &target) {
            (Some(p), Some(t)) => Ok((p, t)),
            _ => Err(Error::invalid(
                "this method needs --pre and --target centroid files",
            )),
        }
    };
    let mut header = vec![];
    let result: SelectionResult<f64> = match a.method {
        MethodArg::Uot => {
            let (p, t) = need_both()?;
            let metric: CostMetric = a.metric.unwrap_or(MetricArg::Cosine).into();
            let params = UotParams {
                epsilon: a.epsilon,
                tau1: a.tau1,
                tau2: a.tau2,
                max_iters: a.max_iters,
                tol: a.tol,
            };
            let (res, plan) = select_uot(p, t, &params, metric, a.epsilon_c, a.k)?;
            if !plan.converged {
                warnings.push(format!(
                    "warning: unbalanced Sinkhorn did not converge in {} iterations; ranking may be inaccurate",
                    plan.iterations_used
                ));
            }
            for (k, v) in [
                ("metric", metric.to_string()),
                ("epsilon", a.epsilon.to_string()),
                ("tau1", a.tau1.to_string()),
                ("tau2", a.tau2.to_string()),
                ("epsilon_c", a.epsilon_c.to_string()),
                ("max_iters", a.max_iters.to_string()),
                ("tol", a.tol.to_string()),
            ] {
                m.param(k, &v);
                header.push(format!("{k}={v}"));
            }
            m.result("converged", plan.converged)
                .result("iterations", plan.iterations_used)
                .result("objective", plan.objective);
            header.push(format!("converged={}", plan.converged));
            res
        }
        MethodArg::GreedyOt => {
            let (p, t) = need_both()?;
            let metric: CostMetric = a.metric.unwrap_or(MetricArg::L2).into();
            m.param("metric", metric);
            header.push(format!("metric={metric}"));
            if let Some(g) = a.gamma {
                m.param("gamma", g);
                header.push(format!("gamma={g}"));
            }
            select_greedy_ot(p, t, metric, a.gamma, a.k)?
        }
        MethodArg::Random => {
            let universe = universe_of(&pre, a.num_classes)?;
            m.seed = Some(a.seed);
            header.push(format!("seed={}", a.seed));
            select_random(universe, a.k, a.seed)?
        }
        MethodArg::Label => {
            let universe = universe_of(&pre, a.num_classes)?;
            let list: Vec<String> = a.classes.iter().map(usize::to_string).collect();
            m.param("classes", list.join(","));
            select_by_label(&a.classes, universe)?
        }
    };
    let method = result.method.to_string();
    m.param("method", &method).param("k", result.k_requested);
    let mut comment = vec![
        format!("method={method}"),
        format!("k={}", result.k_requested),
        format!("universe={}", result.universe),
    ];
    comment.extend(header);
    write_outputs(&a.out, result.to_csv(&comment.join(" ")).as_bytes(), &m)?;
    Ok((
        format!(
            "selected {} of {} units with {method}\n",
            result.selected.len(),
            result.universe
        ),
        warnings,
    ))
}

/// Class indices separated by commas or whitespace; `#` starts a comment.
pub fn parse_index_list(text: &str) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for (row, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default();
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            out.insert(tok.parse().map_err(|_| Error::Parse {
                row,
                msg: format!("bad class index `{tok}`"),
            })?);
        }
    }
    Ok(out)
}

pub fn cmd_recall(a: &RecallArgs) -> Result<String> {
    let sel_bytes = read_bytes(&a.selection)?;
    let rel_bytes = read_bytes(&a.relevant)?;
    let (ranking, header) = parse_selection_csv(&String::from_utf8_lossy(&sel_bytes))?;
    let universe = header
        .split_whitespace()
        .find_map(|kv| kv.strip_prefix("universe="))
        .and_then(|v| v.parse::<usize>().ok());
    let spec = RecallSpec {
        relevant: parse_index_list(&String::from_utf8_lossy(&rel_bytes))?,
        top_k: a.top_k,
    };
    let recall = recall_of_ranking(&ranking, universe == Some(ranking.len()), &spec)?;
    let line = format!("{}\n", recall_line(recall, &spec));
    if let Some(out) = &a.out {
        let mut m = RunManifest::new("recall");
        m.param("top_k", a.top_k)
            .input("selection", &sel_bytes)
            .input("relevant", &rel_bytes)
            .result("recall", recall);
        write_outputs(out, line.as_bytes(), &m)?;
    }
    Ok(line)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String> {
    let bytes = read_bytes(&a.config)?;
    let cfg = SweepConfig::parse(&String::from_utf8_lossy(&bytes))?;
    let points = run_sweep(&cfg)?;
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|s| cfg.seed_base + s).collect();
    let mut applicable = 0;
    let mut within = 0;
    let mut worst_ratio: f64 = 0.0;
    for p in &points {
        if let Some(b) = p.bound() {
            applicable += 1;
            if p.result.mean_final <= b {
                within += 1;
            }
            worst_ratio = worst_ratio.max(p.result.mean_final / b);
        }
    }
    let summary = format!(
        "points={} applicable={applicable} within_bound={within} max_mean_to_bound={worst_ratio:.6}",
        points.len()
    );
    let mut m = RunManifest::new("simulate");
    m.seed = Some(cfg.seed_base);
    m.input("config", &bytes)
        .result("points", points.len())
        .result("applicable", applicable)
        .result("within_bound", within);
    write_outputs(&a.out, sweep_csv(&points, &seeds).as_bytes(), &m)?;
    Ok(format!("{summary}\n"))
}
