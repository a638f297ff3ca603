use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use signet::embedding::{embed_for_k, EigCount, EmbeddingError, Method, MethodSpec};
use signet::graph::{read_edge_list, SignedGraph};
use signet::kmeans::{kmeanspp, KmeansConfig};
use signet::metrics::adjusted_rand_index;
use signet::report::{cluster_summary, write_labels, write_matrix_csv};
use signet::ssbm::{generate, ClusterSizes, SsbmParams};
use signet::sweep::{run_sweep, write_aggregates_csv, write_trials_csv, Axis, ExperimentGrid, SweepError};
use signet::theory::{self, TauMode, TheoryError};
use signet::timeseries::{correlation_network, excess_returns, log_returns, PricePanel};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
enum CliError {
    /// Bad input or configuration (exit 2).
    Validation(String),
    /// A numerical stage failed (exit 3).
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn validation(e: impl ToString) -> CliError {
    CliError::Validation(e.to_string())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        validation(e)
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::SingularPencil | EmbeddingError::Eigen(_) => CliError::Numerical(e.to_string()),
            _ => validation(e),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        validation(e)
    }
}

#[derive(Parser)]
#[command(name = "signet", version, about = "Signed graph spectral clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a signed stochastic block model graph.
    Gen(GenArgs),
    /// Write spectral coordinates of a graph.
    Embed(EmbedArgs),
    /// Cluster a graph and summarize the result.
    Cluster(ClusterArgs),
    /// Run a synthetic recovery sweep.
    Sweep(SweepArgs),
    /// Evaluate closed-form spectral quantities.
    Theory(TheoryArgs),
    /// Build a correlation network from a price panel.
    Corrnet(CorrnetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SizesArg {
    Equal,
    Uneven,
}

impl From<SizesArg> for ClusterSizes {
    fn from(s: SizesArg) -> Self {
        match s {
            SizesArg::Equal => ClusterSizes::Equal,
            SizesArg::Uneven => ClusterSizes::Uneven,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SizesArg::Equal)]
    sizes: SizesArg,
    /// Directory receiving `graph.tsv` and `labels.txt`.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, default_value = "sponge-sym")]
    method: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    tau_plus: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_minus: f64,
    /// `k`, `k-1` or an explicit count.
    #[arg(long, default_value = "k-1")]
    dims: String,
}

impl MethodArgs {
    fn spec(&self) -> Result<MethodSpec> {
        let method: Method = self.method.parse().map_err(validation)?;
        let dims: EigCount = self.dims.parse().map_err(validation)?;
        Ok(MethodSpec::new(method).taus(self.tau_plus, self.tau_minus).dims(dims))
    }
}

#[derive(Args)]
struct EmbedArgs {
    /// Edge list, `i<TAB>j<TAB>w` per line.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// Coordinates CSV, one row per vertex.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Ground-truth labels, one per line, to report ARI against.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Directory receiving labels, summary, permutation and block densities.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Eta,
    P,
    Tau,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    BottomTwo,
    BottomOne,
}

impl From<ModeArg> for TauMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::BottomTwo => TauMode::BottomTwo,
            ModeArg::BottomOne => TauMode::BottomOne,
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with the grid; flags are ignored when given.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    tau_plus_values: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    tau_minus_values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "sponge-sym")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "k-1")]
    dims: String,
    #[arg(long, value_enum)]
    tau_mode: Option<ModeArg>,
    #[arg(long, value_enum, default_value_t = SizesArg::Equal)]
    sizes: SizesArg,
    #[arg(long)]
    sin_theta: bool,
    /// Add a wall-time column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl SweepArgs {
    fn grid(&self) -> Result<ExperimentGrid> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            return toml::from_str(&text).map_err(validation);
        }
        let missing = |f: &str| validation(format!("--{f} is required without --config"));
        let axis = match self.axis.ok_or_else(|| missing("axis"))? {
            AxisArg::Eta => Axis::Eta,
            AxisArg::P => Axis::P,
            AxisArg::Tau => Axis::Tau,
        };
        let methods = self
            .methods
            .iter()
            .map(|m| m.parse::<Method>().map_err(validation))
            .collect::<Result<Vec<_>>>()?;
        let mut g = ExperimentGrid::new(
            axis,
            self.n.ok_or_else(|| missing("n"))?,
            self.k.ok_or_else(|| missing("k"))?,
            methods,
        );
        g.p = self.p;
        g.eta = self.eta;
        g.sizes = self.sizes.into();
        g.values = self.values.clone();
        g.tau_plus_values = self.tau_plus_values.clone();
        g.tau_minus_values = self.tau_minus_values.clone();
        g.trials = self.trials;
        g.base_seed = self.seed;
        g.dims = self.dims.parse().map_err(validation)?;
        g.tau_mode = self.tau_mode.map(Into::into);
        g.sin_theta = self.sin_theta;
        g.timing = self.timing;
        Ok(g)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Spectra,
    Tbar,
    Tau,
    Gap,
    Pert,
    Lbar,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, value_enum)]
    check: Check,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_plus: f64,
    #[arg(long, default_value_t = 1.0)]
    tau_minus: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_tau: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_conc: f64,
    #[arg(long, default_value_t = 0.5)]
    eps_acc: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::BottomTwo)]
    mode: ModeArg,
}

#[derive(Args)]
struct CorrnetArgs {
    /// Price CSV: header of instrument ids, one row per day.
    #[arg(long)]
    input: PathBuf,
    /// Instrument subtracted from every other series, then dropped.
    #[arg(long)]
    benchmark: Option<String>,
    /// Drop edges with absolute correlation below this.
    #[arg(long)]
    threshold: Option<f64>,
    /// Edge-list output.
    #[arg(long)]
    output: PathBuf,
    /// Instrument ids in vertex order.
    #[arg(long)]
    ids_output: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn load_graph(path: &Path) -> Result<SignedGraph> {
    let file = File::open(path).map_err(|e| validation(format!("{}: {e}", path.display())))?;
    read_edge_list(BufReader::new(file))
        .and_then(|l| l.into_graph())
        .map_err(validation)
}

fn load_labels(path: &Path) -> Result<Vec<usize>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| validation(format!("{} line {}: bad label '{l}'", path.display(), i + 1)))
        })
        .collect()
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, v).map_err(validation)?;
    writeln!(out)?;
    Ok(())
}

fn gen(a: &GenArgs) -> Result<()> {
    let params = SsbmParams::new(a.n, a.k, a.p, a.eta, a.seed).with_sizes(a.sizes.into());
    let inst = generate(&params).map_err(validation)?;
    fs::create_dir_all(&a.out_dir)?;
    let mut g = create(&a.out_dir.join("graph.tsv"))?;
    inst.graph.write_edge_list(&mut g)?;
    g.flush()?;
    let mut l = create(&a.out_dir.join("labels.txt"))?;
    write_labels(&mut l, &inst.labels)?;
    l.flush()?;
    Ok(())
}

fn embed(a: &EmbedArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let spec = a.method.spec()?;
    let emb = embed_for_k(&g, &spec, a.method.k)?;
    let mut out = create(&a.output)?;
    write_matrix_csv(&mut out, &emb.coords)?;
    out.flush()?;
    if !emb.converged {
        eprintln!("warning: eigensolver stopped before reaching tolerance");
    }
    Ok(())
}

fn cluster(a: &ClusterArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let spec = a.method.spec()?;
    let k = a.method.k;
    let emb = embed_for_k(&g, &spec, k)?;
    let cfg = KmeansConfig {
        restarts: a.restarts,
        ..KmeansConfig::new(k, a.seed)
    };
    let km = kmeanspp(&emb.coords, &cfg).map_err(validation)?;
    let summary = cluster_summary(&g, &km.labels, k);
    let ari = match &a.truth {
        Some(path) => Some(adjusted_rand_index(&km.labels, &load_labels(path)?).map_err(validation)?),
        None => None,
    };

    fs::create_dir_all(&a.out_dir)?;
    let mut l = create(&a.out_dir.join("labels.txt"))?;
    write_labels(&mut l, &km.labels)?;
    l.flush()?;
    let mut p = create(&a.out_dir.join("permutation.txt"))?;
    write_labels(&mut p, &summary.permutation)?;
    p.flush()?;
    let mut b = create(&a.out_dir.join("block_density.csv"))?;
    write_matrix_csv(&mut b, &summary.block_density)?;
    b.flush()?;
    write_json(
        &a.out_dir.join("summary.json"),
        &json!({
            "version": VERSION,
            "method": spec,
            "k": k,
            "inertia": km.inertia,
            "eigenvalues": emb.eigenvalues,
            "converged": emb.converged,
            "tie_at_cutoff": emb.tie_at_cutoff,
            "excluded_vertices": emb.excluded,
            "clusters": summary.clusters,
            "graph_positive_ratio": summary.graph_positive_ratio,
            "ari": ari,
        }),
    )
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let grid = a.grid()?;
    let out = run_sweep(&grid)?;
    fs::create_dir_all(&a.out_dir)?;
    write_trials_csv(create(&a.out_dir.join("trials.csv"))?, &out.trials, grid.timing)?;
    write_aggregates_csv(create(&a.out_dir.join("aggregates.csv"))?, &out.aggregates)?;
    write_json(
        &a.out_dir.join("sweep.json"),
        &json!({ "version": VERSION, "config": grid }),
    )
}

fn theory_error(e: TheoryError) -> Value {
    match e {
        TheoryError::HypothesisViolated { which, lhs, rhs } => json!({
            "status": "HypothesisViolated", "which": which, "lhs": lhs, "rhs": rhs,
        }),
        TheoryError::ConditionViolated { condition, lhs, rhs } => json!({
            "status": "ConditionViolated", "condition": condition, "lhs": lhs, "rhs": rhs,
        }),
        other => json!({ "status": "Error", "message": other.to_string() }),
    }
}

fn theory_report(a: &TheoryArgs) -> Result<Value> {
    let inputs = json!({
        "n": a.n, "p": a.p, "eta": a.eta, "tau_plus": a.tau_plus, "tau_minus": a.tau_minus,
        "eps_tau": a.eps_tau, "eps_conc": a.eps_conc, "eps_acc": a.eps_acc,
    });
    let mode: TauMode = a.mode.into();
    let hard = |e: TheoryError| match e {
        TheoryError::OddN(_) | TheoryError::InvalidParams(_) => Err(validation(e)),
        other => Ok(theory_error(other)),
    };
    let body = match a.check {
        Check::Spectra => match theory::expected_spectra(a.n, a.p, a.eta) {
            Ok(s) => json!({ "status": "ok", "spectra": s }),
            Err(e) => hard(e)?,
        },
        Check::Tbar => match theory::tbar_spectrum(a.n, a.eta, a.tau_plus, a.tau_minus) {
            Ok(t) => json!({ "status": "ok", "tbar": t }),
            Err(e) => hard(e)?,
        },
        Check::Tau => json!({
            "status": "ok",
            "window": theory::tau_window(a.n, a.eta, a.tau_plus),
            "bottom_two": theory::tau_admissible(a.n, a.eta, a.tau_plus, a.tau_minus, TauMode::BottomTwo),
            "bottom_one": theory::tau_admissible(a.n, a.eta, a.tau_plus, a.tau_minus, TauMode::BottomOne),
        }),
        Check::Gap => {
            let exact = theory::tbar_spectrum(a.n, a.eta, a.tau_plus, a.tau_minus).map(|t| t.gap(mode));
            let exact = match exact {
                Ok(g) => g,
                Err(e) => return hard(e).map(|v| json!({ "check": "gap", "inputs": inputs, "result": v })),
            };
            match theory::spectral_gap_lower_bound(a.n, a.eta, a.tau_plus, a.tau_minus, a.eps_tau, mode) {
                Ok(bound) => json!({
                    "status": "ok", "lower_bound": bound, "exact_gap": exact, "bound_holds": bound <= exact,
                    "p_threshold": theory::sponge_p_threshold(
                        a.n, a.eta, a.tau_plus, a.tau_minus, a.eps_conc, a.eps_acc, a.eps_tau, mode,
                    ).ok(),
                }),
                Err(e) => {
                    let mut v = hard(e)?;
                    v["exact_gap"] = json!(exact);
                    v
                }
            }
        }
        Check::Pert => {
            let b = match theory::concentration_budget(a.n, a.p, a.eta, a.eps_conc, a.tau_plus, a.tau_minus) {
                Ok(b) => b,
                Err(e) => return hard(e).map(|v| json!({ "check": "pert", "inputs": inputs, "result": v })),
            };
            let hypotheses = theory::perturbation_hypotheses(&b);
            let mut v = match theory::perturbation_bound(&b) {
                Ok(bound) => json!({ "status": "ok", "bound": bound }),
                Err(e) => hard(e)?,
            };
            v["budget"] = json!(b);
            v["hypotheses"] = json!(hypotheses);
            v
        }
        Check::Lbar => match theory::signed_laplacian_expected_spectrum(a.n, a.p, a.eta) {
            Ok(s) => json!({
                "status": "ok",
                "lambda_min": s.lambda_min,
                "lambda_bulk": s.lambda_bulk,
                "bulk_multiplicity": s.bulk_multiplicity,
                "p_threshold": theory::lbar_p_threshold(a.n, a.eta, a.eps_conc, a.eps_acc).ok(),
            }),
            Err(e) => hard(e)?,
        },
    };
    let name = match a.check {
        Check::Spectra => "spectra",
        Check::Tbar => "tbar",
        Check::Tau => "tau",
        Check::Gap => "gap",
        Check::Pert => "pert",
        Check::Lbar => "lbar",
    };
    Ok(json!({ "check": name, "inputs": inputs, "result": body }))
}

fn theory_cmd(a: &TheoryArgs) -> Result<()> {
    let report = theory_report(a)?;
    let text = serde_json::to_string_pretty(&report).map_err(validation)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn corrnet(a: &CorrnetArgs) -> Result<()> {
    let file = File::open(&a.input).map_err(|e| validation(format!("{}: {e}", a.input.display())))?;
    let panel = PricePanel::from_csv(BufReader::new(file)).map_err(validation)?;
    let mut returns = log_returns(&panel).map_err(validation)?;
    if let Some(b) = &a.benchmark {
        returns = excess_returns(&returns, b).map_err(validation)?;
    }
    let g = correlation_network(&returns, a.threshold).map_err(validation)?;
    let mut out = create(&a.output)?;
    g.write_edge_list(&mut out)?;
    out.flush()?;
    if let Some(path) = &a.ids_output {
        let mut ids = create(path)?;
        for id in &returns.ids {
            writeln!(ids, "{id}")?;
        }
        ids.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Embed(a) => embed(a),
        Command::Cluster(a) => cluster(a),
        Command::Sweep(a) => sweep(a),
        Command::Theory(a) => theory_cmd(a),
        Command::Corrnet(a) => corrnet(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Validation(m) => eprintln!("error: {m}"),
                CliError::Numerical(m) => eprintln!("numerical failure: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
