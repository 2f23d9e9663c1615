//! `bayeseval` command-line tool.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bayeseval::bootstrap::{self, Cohort, ResamplePlan, Scheme};
use bayeseval::io::{self, emit_report, LabelMap, Report, ReportFormat};
use bayeseval::method::parse_methods;
use bayeseval::ranking::{rank_with_ci, rank_without_ci};
use bayeseval::rubric::{build_matrix, Schema};
use bayeseval::simulate::{self, CohortSpec, CoinModel};
use bayeseval::{evaluate_performance, validate_matrix, Error, Method, PriorData, ResultsMatrix, WeightVector};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bayeseval", version, about = "Bayesian evaluation of repeated-trial benchmarks")]
struct Cli {
    /// Worker threads for bootstrap and simulation (results do not depend on it).
    #[arg(long, global = true, env = "BAYESEVAL_THREADS")]
    threads: Option<usize>,

    /// Output format for the report on stdout.
    #[arg(long, global = true, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one results matrix.
    Eval(EvalArgs),
    /// Rank the models in a directory of results matrices.
    Rank(RankArgs),
    /// Bootstrap τ curves and convergence@n distributions.
    Converge(ConvergeArgs),
    /// Synthetic cohorts and the two-model separation experiment.
    Simulate(SimulateArgs),
    /// Map per-attempt signals to a categorical matrix.
    Rubric(RubricArgs),
}

#[derive(Args)]
struct MatrixArgs {
    /// Largest category C (default: inferred from the data or the label map).
    #[arg(long)]
    categories: Option<u32>,
    /// JSON map of category names to indices.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Comma-separated weights w_0..w_C (default: 0,1 for binary, else 0..C).
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    results: PathBuf,
    /// Earlier results on the same questions, used as the Dirichlet prior.
    #[arg(long)]
    prior: Option<PathBuf>,
    #[arg(long, default_value = "bayes", value_parser = parse_method)]
    method: Method,
    #[command(flatten)]
    matrix: MatrixArgs,
}

#[derive(Args)]
struct RankArgs {
    /// Directory with one `<model>.csv` per model.
    #[arg(long)]
    results_dir: PathBuf,
    #[arg(long, default_value = "bayes", value_parser = parse_method)]
    method: Method,
    /// z threshold for credible-interval ties, or `off`.
    #[arg(long, value_parser = parse_ci)]
    ci: Option<Ci>,
    #[command(flatten)]
    matrix: MatrixArgs,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    results_dir: PathBuf,
    /// Comma-separated method specs.
    #[arg(long, default_value = "bayes")]
    methods: String,
    #[arg(long, default_value = "row", value_parser = parse_scheme)]
    scheme: Scheme,
    #[arg(long, default_value_t = ResamplePlan::PMF_REPLICATES)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trial budget (default: every trial in the matrices).
    #[arg(long)]
    nmax: Option<usize>,
    /// Rank with credible-interval ties at this z (`off` for strict ranking).
    #[arg(long, value_parser = parse_ci)]
    ci: Option<Ci>,
    /// Also write `tau_<method>.tsv` and `convergence_<method>.tsv` here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    matrix: MatrixArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in cohort (`reference-cohort`).
    #[arg(long, global = true, conflicts_with = "spec")]
    preset: Option<String>,
    /// Cohort spec JSON.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Sample this many trials per model.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write each sampled matrix to `<dir>/<model>.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    experiment: Option<Experiment>,
}

#[derive(Subcommand)]
enum Experiment {
    /// How often Bayes@N orders model A above model B, and the mean |z|.
    Separation {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Comma-separated, strictly increasing trial counts.
        #[arg(long)]
        ngrid: String,
        #[arg(long, default_value_t = 10_000)]
        replicates: usize,
    },
}

#[derive(Args)]
struct RubricArgs {
    #[arg(long)]
    signals: PathBuf,
    /// Built-in schema name.
    #[arg(long, conflicts_with = "schema_file", required_unless_present = "schema_file")]
    schema: Option<String>,
    /// Custom schema JSON.
    #[arg(long)]
    schema_file: Option<PathBuf>,
    /// Where to write the categorical CSV matrix.
    #[arg(long)]
    emit_matrix: Option<PathBuf>,
}

#[derive(Clone, Copy)]
enum Ci {
    Off,
    Z(f64),
}

impl Ci {
    fn z(self) -> Option<f64> {
        match self {
            Ci::Off => None,
            Ci::Z(z) => Some(z),
        }
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_ci(s: &str) -> Result<Ci, String> {
    if s == "off" {
        return Ok(Ci::Off);
    }
    match s.parse::<f64>() {
        Ok(z) if z >= 0.0 && z.is_finite() => Ok(Ci::Z(z)),
        _ => Err(format!("expected a non-negative z or `off`, got {s:?}")),
    }
}

enum Failure {
    Input(Error),
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(Error::MethodUndefinedAtN { .. } | Error::KExceedsN { .. }) => 3,
            Failure::Input(_) | Failure::Usage(_) => 2,
            Failure::Internal(_) => 4,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message) = match self {
            Failure::Input(e) => (e.kind(), e.to_string()),
            Failure::Usage(m) => ("Usage", m.clone()),
            Failure::Internal(m) => ("InternalInvariant", m.clone()),
        };
        let mut v = json!({ "error": kind, "message": message });
        if let Failure::Input(Error::UnknownSchema { .. }) = self {
            v["known"] = json!(bayeseval::rubric::builtin_names());
        }
        v
    }
}

type Outcome = Result<Vec<u8>, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", json!({ "error": "Usage", "message": e.to_string() }));
            return ExitCode::from(2);
        }
    }
    let format = cli.format;
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a, format),
        Command::Rank(a) => cmd_rank(a, format),
        Command::Converge(a) => cmd_converge(a, format),
        Command::Simulate(a) => cmd_simulate(a, format),
        Command::Rubric(a) => cmd_rubric(a, format),
    };
    match result {
        Ok(bytes) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(&bytes).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit_code())
        }
    }
}

fn parse_weights(list: &str) -> Result<WeightVector, Failure> {
    let values = list
        .split(',')
        .map(|w| w.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad weight {w:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(WeightVector::new(values)?)
}

fn weights_for(args: &MatrixArgs, max_category: u32) -> Result<WeightVector, Failure> {
    match &args.weights {
        Some(list) => parse_weights(list),
        None if max_category == 1 => Ok(WeightVector::binary()),
        None => Ok(WeightVector::linear(max_category)),
    }
}

fn load_labels(args: &MatrixArgs) -> Result<Option<LabelMap>, Failure> {
    Ok(args.labels.as_deref().map(LabelMap::load).transpose()?)
}

fn with_max_category(m: ResultsMatrix, max: u32) -> Result<ResultsMatrix, Failure> {
    if m.max_category() == max {
        return Ok(m);
    }
    let ids = m.question_ids().map(<[String]>::to_vec);
    let out = validate_matrix(&m.to_rows(), max)?;
    Ok(match ids {
        Some(ids) => out.with_question_ids(ids)?,
        None => out,
    })
}

/// Results for every `*.csv` in `dir`, model ids from file stems, sorted by name,
/// with one shared C.
fn load_dir(dir: &Path, args: &MatrixArgs) -> Result<Cohort, Failure> {
    let labels = load_labels(args)?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Usage(format!("no .csv files in {}", dir.display())));
    }
    let mut ids = Vec::new();
    let mut matrices = Vec::new();
    for p in &paths {
        ids.push(p.file_stem().unwrap_or_default().to_string_lossy().into_owned());
        matrices.push(io::load_results_csv(p, args.categories, labels.as_ref())?);
    }
    let max = matrices.iter().map(ResultsMatrix::max_category).max().unwrap_or(1);
    let matrices = matrices
        .into_iter()
        .map(|m| with_max_category(m, max))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = weights_for(args, max)?;
    Ok(Cohort::new(ids, matrices)?.with_weights(weights)?)
}

fn cmd_eval(args: EvalArgs, format: ReportFormat) -> Outcome {
    let labels = load_labels(&args.matrix)?;
    let matrix = io::load_results_csv(&args.results, args.matrix.categories, labels.as_ref())?;
    let weights = weights_for(&args.matrix, matrix.max_category())?;
    let prior = match &args.prior {
        Some(p) => {
            let prior = io::load_results_csv(p, Some(matrix.max_category()), labels.as_ref())?;
            PriorData::Matrix(prior)
        }
        None => PriorData::Uniform,
    };

    let report = match args.method {
        Method::Bayes => {
            let s = evaluate_performance(&matrix, &prior, &weights)?;
            json!({
                "method": "bayes",
                "mu": s.mu,
                "sigma": s.sigma,
                "M": s.questions,
                "N": s.trials,
                "C": s.max_category,
                "D": s.prior_depth,
                "ci_half_width": { "1.645": 1.645 * s.sigma, "1.96": 1.96 * s.sigma },
            })
        }
        m => {
            if args.prior.is_some() {
                return Err(Failure::Usage(format!("--prior only applies to bayes, not {m}")));
            }
            let s = m.score(&matrix, &weights)?;
            let mut v = json!({
                "method": m.to_string(),
                "value": s.value,
                "M": matrix.questions(),
                "N": matrix.trials(),
                "C": matrix.max_category(),
            });
            if m == Method::Avg {
                v["sigma"] = json!(s.sigma);
            }
            v
        }
    };
    Ok(emit_report(&report, format))
}

fn cmd_rank(args: RankArgs, format: ReportFormat) -> Outcome {
    let cohort = load_dir(&args.results_dir, &args.matrix)?;
    let scored = cohort.score(args.method)?;
    let plain = rank_without_ci(&scored);
    match args.ci.and_then(Ci::z) {
        None => Ok(emit_report(&plain, format)),
        Some(z) => {
            let with_ci = rank_with_ci(&scored, z);
            match format {
                ReportFormat::Json => {
                    let v = json!({
                        "method": args.method.to_string(),
                        "z": z,
                        "with_ci": with_ci.to_json(),
                        "without_ci": plain.to_json(),
                    });
                    Ok(emit_report(&v, format))
                }
                ReportFormat::Tsv => {
                    let mut out = String::from("rank_ci\trank\tmodel_id\tmu\tsigma\n");
                    for e in &plain.entries {
                        let ci_rank = with_ci.rank_of(&e.model_id).unwrap_or(0);
                        let row = plain_row(e);
                        out.push_str(&format!("{ci_rank}\t{row}\n"));
                    }
                    Ok(out.into_bytes())
                }
            }
        }
    }
}

fn plain_row(e: &bayeseval::ranking::RankEntry) -> String {
    format!(
        "{}\t{}\t{}\t{}",
        e.rank,
        e.model_id,
        io::round_sig(e.mu),
        io::round_sig(e.sigma)
    )
}

fn method_file_name(m: &str) -> String {
    m.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn cmd_converge(args: ConvergeArgs, format: ReportFormat) -> Outcome {
    let cohort = load_dir(&args.results_dir, &args.matrix)?;
    let methods = parse_methods(&args.methods)?;
    let n_max = args.nmax.unwrap_or(cohort.trials());
    let plan = ResamplePlan::new(args.scheme, args.replicates, args.seed, n_max)?;
    let ci = args.ci.and_then(Ci::z);
    let (taus, dists) = match ci {
        None => bootstrap::tau_and_convergence(&cohort, &methods, &plan)?,
        Some(z) => (
            bootstrap::tau_curves(&cohort, &methods, &plan)?,
            bootstrap::convergence_distributions(&cohort, &methods, &plan, Some(z))?,
        ),
    };
    if let Some(d) = dists.iter().find(|d| !d.is_conserved()) {
        return Err(Failure::Internal(format!("convergence mass not conserved for {}", d.method)));
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir)?;
        for (t, d) in taus.iter().zip(&dists) {
            let stem = method_file_name(&t.method);
            std::fs::write(dir.join(format!("tau_{stem}.tsv")), t.to_tsv())?;
            std::fs::write(dir.join(format!("convergence_{stem}.tsv")), d.to_tsv())?;
        }
    }
    match format {
        ReportFormat::Tsv => Ok(emit_report(taus.as_slice(), format)),
        ReportFormat::Json => {
            let gold = cohort.gold_ranking(n_max, ci)?;
            let v = json!({
                "scheme": plan.scheme.to_string(),
                "replicates": plan.replicates,
                "seed": plan.seed,
                "n_max": n_max,
                "gold": gold.to_json(),
                "tau": taus.as_slice().to_json(),
                "convergence": dists.iter().map(Report::to_json).collect::<Vec<_>>(),
            });
            Ok(emit_report(&v, format))
        }
    }
}

fn load_cohort(args: &SimulateArgs) -> Result<Vec<CoinModel>, Failure> {
    match (&args.preset, &args.spec) {
        (Some(p), _) if p == "reference-cohort" => Ok(simulate::reference_cohort()),
        (Some(p), _) => Err(Failure::Usage(format!("unknown preset {p:?} (known: reference-cohort)"))),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            let spec: CohortSpec = serde_json::from_str(&text).map_err(Error::from)?;
            Ok(simulate::generate_cohort(&spec)?)
        }
        (None, None) => Err(Failure::Usage("one of --preset or --spec is required".into())),
    }
}

fn parse_grid(list: &str) -> Result<Vec<usize>, Failure> {
    list.split(',')
        .map(|s| s.trim().parse().map_err(|_| Failure::Usage(format!("bad N {s:?} in --ngrid"))))
        .collect()
}

fn cmd_simulate(args: SimulateArgs, format: ReportFormat) -> Outcome {
    let cohort = load_cohort(&args)?;
    if let Some(Experiment::Separation { a, b, ngrid, replicates }) = &args.experiment {
        let find = |id: &str| {
            cohort
                .iter()
                .find(|m| m.model_id() == id)
                .ok_or_else(|| Failure::Usage(format!("no model {id:?} in the cohort")))
        };
        let grid = parse_grid(ngrid)?;
        let curve = simulate::separation_experiment(find(a)?, find(b)?, &grid, *replicates, args.seed)?;
        return Ok(emit_report(&curve, format));
    }

    let gold = simulate::gold_ranking(&cohort);
    let mut report = json!({
        "models": cohort
            .iter()
            .map(|m| json!({ "model_id": m.model_id(), "true_mean": m.true_mean() }))
            .collect::<Vec<_>>(),
        "gold": gold.to_json(),
    });
    if let Some(n) = args.trials {
        let matrices = simulate::sample_cohort(&cohort, n, args.seed)?;
        report["trials"] = json!(n);
        report["seed"] = json!(args.seed);
        match &args.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let mut files = Vec::new();
                for (m, matrix) in cohort.iter().zip(&matrices) {
                    let path = dir.join(format!("{}.csv", m.model_id()));
                    io::write_results_csv(matrix, std::fs::File::create(&path)?)?;
                    files.push(path.display().to_string());
                }
                report["files"] = json!(files);
            }
            None => {
                report["matrices"] = cohort
                    .iter()
                    .zip(&matrices)
                    .map(|(m, x)| (m.model_id().to_string(), json!(x.to_rows())))
                    .collect::<serde_json::Map<_, _>>()
                    .into();
            }
        }
    } else if args.out_dir.is_some() {
        return Err(Failure::Usage("--out-dir needs --trials".into()));
    }
    match format {
        ReportFormat::Json => Ok(emit_report(&report, format)),
        ReportFormat::Tsv => {
            let mut out = String::from("model_id\ttrue_mean\tgold_rank\n");
            for m in &cohort {
                let rank = gold.rank_of(m.model_id()).unwrap_or(0);
                let mean = bayeseval::io::round_sig(m.true_mean());
                out.push_str(&format!("{}\t{mean}\t{rank}\n", m.model_id()));
            }
            Ok(out.into_bytes())
        }
    }
}

fn cmd_rubric(args: RubricArgs, format: ReportFormat) -> Outcome {
    let schema = match (&args.schema, &args.schema_file) {
        (Some(name), _) => Schema::builtin(name)?,
        (None, Some(path)) => Schema::from_json(&std::fs::read_to_string(path)?)?,
        (None, None) => return Err(Failure::Usage("--schema or --schema-file is required".into())),
    };
    if let Err(hole) = schema.check_total() {
        return Err(Failure::Input(Error::InvalidSchema(format!(
            "{} does not cover {hole:?}",
            schema.name()
        ))));
    }
    let records = io::load_signals_jsonl(&args.signals)?;
    let defaulted = records.iter().filter(|r| r.verifier_defaulted).count();
    if defaulted > 0 {
        eprintln!("warning: {defaulted} records have no verifier fields; A, B, C default to 0");
    }
    let (matrix, thresholds) = build_matrix(&records, &schema).map_err(|e| match e {
        Error::NoWrongItems | Error::NoCorrectItems => Failure::Usage(format!(
            "{e}; the rubric thresholds need both correct and wrong attempts"
        )),
        other => Failure::Input(other),
    })?;
    if let Some(path) = &args.emit_matrix {
        io::write_results_csv(&matrix, std::fs::File::create(path)?)?;
    }
    if format == ReportFormat::Tsv {
        return Ok(emit_report(&thresholds, format));
    }
    let report = json!({
        "schema": schema.name(),
        "C": schema.max_category(),
        "weights": schema.weights().as_slice(),
        "M": matrix.questions(),
        "N": matrix.trials(),
        "verifier_defaulted": defaulted,
        "thresholds": thresholds.to_json(),
        "matrix": args.emit_matrix.as_ref().map(|p| p.display().to_string()),
        "category_counts": matrix.category_counts(),
    });
    Ok(emit_report(&report, format))
}
