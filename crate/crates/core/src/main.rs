use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use metaclust::bsf::pairs::group_labels;
use metaclust::bsf::{
    build_meta_splits, majority_baseline, pair_accuracy, sample_pairs, train_bsf, BsfConfig, BsfModel,
};
use metaclust::clustering::{euclidean_to_graph, AlgorithmSpec, Family};
use metaclust::harness::experiment::bsf_eligible;
use metaclust::harness::report::render_report;
use metaclust::harness::io::{load_labeled_csv, load_labels, read_clustering, read_text, write_clustering, write_text};
use metaclust::harness::{
    generate_synthetic, load_csv, load_repository, run_experiment, write_repository,
    ExperimentConfig, ExperimentKind, ReportFormat, RepositoryFilters, SyntheticSpec,
};
use metaclust::meta::algo_select::RegressorKind;
use metaclust::meta::axioms::run_axiom_trials;
use metaclust::meta::{
    algo_select_predict, algo_select_train, fit_outlier_fraction, fit_single_linkage_threshold, meta_k_predict,
    meta_k_train, AlgoSelectModel, MetaKConfig, MetaKModel, OutlierConfig, OutlierMode,
};
use metaclust::metrics::{adjusted_rand_index, clustering_loss, rand_index};
use metaclust::model_io::{from_model_json, to_model_json};
use metaclust::rng::stream_rng;
use metaclust::{labels_to_clustering, Clustering, Dataset, Error, MetaRepository, ProblemData, Result, WeightedGraph};

#[derive(Parser)]
#[command(name = "metaclust", version, about = "Learn clustering decisions from a repository of labeled problems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Where to write the primary output (stdout when absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Output format; csv and svg apply to experiment reports only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
            Format::Svg => ReportFormat::Svg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Kmeans,
    Spectral,
    Single,
    Complete,
    Ward,
}

impl From<Algo> for Family {
    fn from(a: Algo) -> Self {
        match a {
            Algo::Kmeans => Family::Kmeans,
            Algo::Spectral => Family::Spectral,
            Algo::Single => Family::SingleLinkage,
            Algo::Complete => Family::CompleteLinkage,
            Algo::Ward => Family::Ward,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Erm,
    Regression,
}

#[derive(Args)]
struct CsvInput {
    /// CSV of points, one row per point.
    #[arg(long)]
    input: PathBuf,
    /// Zero-based column holding labels, skipped as a feature.
    #[arg(long, conflicts_with = "label_last")]
    label_column: Option<usize>,
    /// The last column holds labels, as in repository files.
    #[arg(long)]
    label_last: bool,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
}

impl CsvInput {
    fn load(&self) -> Result<Dataset> {
        if self.label_last {
            return Ok(load_labeled_csv(&self.input, self.header)?.0);
        }
        Ok(load_csv(&self.input, self.label_column, self.header)?.0)
    }
}

#[derive(Args)]
struct Compare {
    #[arg(long)]
    repo: PathBuf,
    #[arg(long, default_value_t = 20)]
    splits: usize,
    /// Experiment configuration JSON; defaults for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic repository as CSV files plus a manifest.
    Synth {
        /// Synthetic spec JSON; defaults for missing fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster one CSV dataset.
    Cluster {
        #[arg(long, value_enum)]
        algo: Algo,
        /// Standardize features first.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        input: CsvInput,
    },
    /// Compare a clustering with ground-truth labels.
    Eval {
        /// Clusters JSON.
        #[arg(long)]
        pred: PathBuf,
        /// CSV whose last column holds the labels, one row per point.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        header: bool,
    },
    /// Fit the single-linkage threshold on a repository.
    FitThreshold {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Choose the number of clusters.
    #[command(subcommand)]
    MetaK(MetaKCommand),
    /// Choose a clustering algorithm per problem.
    #[command(subcommand)]
    SelectAlgo(SelectCommand),
    /// Learn the fraction of outliers to set aside.
    #[command(subcommand)]
    Outliers(OutliersCommand),
    /// Same-cluster pair classifier.
    #[command(subcommand)]
    Bsf(BsfCommand),
    /// Run any experiment kind over seeded train/test splits.
    Experiment {
        #[arg(long)]
        kind: ExperimentKind,
        #[command(flatten)]
        compare: Compare,
    },
    /// Randomized checks of the clustering axioms.
    Axioms {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Subcommand)]
enum MetaKCommand {
    Train {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Largest k tried (the smallest is 2).
        #[arg(long, default_value_t = 10)]
        k_max: usize,
    },
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: CsvInput,
    },
    Compare(Compare),
}

#[derive(Subcommand)]
enum SelectCommand {
    Train {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Number of clusters every algorithm is run with.
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        input: CsvInput,
    },
    Compare(Compare),
}

#[derive(Subcommand)]
enum OutliersCommand {
    Fit {
        #[arg(long)]
        repo: PathBuf,
        /// Comma-separated θ values.
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.03,0.04,0.05")]
        grid: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Erm)]
        mode: Mode,
        /// Base algorithm, run with each problem's true cluster count.
        #[arg(long, value_enum, default_value_t = Algo::Kmeans)]
        algo: Algo,
        /// Also write the model here.
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BsfCommand {
    Train {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 250)]
        batch: usize,
        /// Pairs sampled per problem.
        #[arg(long, default_value_t = 2500)]
        pair_cap: usize,
    },
    Eval {
        #[arg(long)]
        repo: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 2500)]
        pair_cap: usize,
    },
}

fn emit(global: &Global, text: &str) -> Result<()> {
    match &global.output {
        Some(path) => write_text(path, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn emit_json<T: Serialize>(global: &Global, value: &T) -> Result<()> {
    if global.format != Format::Json {
        return Err(Error::invalid("this command only writes json"));
    }
    emit(global, &serde_json::to_string_pretty(value)?)
}

fn load_repo(path: &Path) -> Result<MetaRepository> {
    let loaded = load_repository(path, &RepositoryFilters::default())?;
    for ex in &loaded.exclusions {
        log::info!("excluded '{}': {}", ex.name, ex.reason);
    }
    Ok(loaded.repo)
}

fn read_model<T: serde::de::DeserializeOwned>(kind: &str, path: &Path) -> Result<T> {
    from_model_json(kind, &read_text(path)?)
}

fn write_model<T: Serialize>(kind: &str, path: &Path, body: &T) -> Result<()> {
    write_text(path, &to_model_json(kind, body)?)
}

fn experiment_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => Ok(serde_json::from_str(&read_text(p)?)?),
        None => Ok(ExperimentConfig::default()),
    }
}

fn compare(global: &Global, kind: ExperimentKind, args: &Compare) -> Result<()> {
    let config = experiment_config(args.config.as_deref())?;
    let repo = load_repo(&args.repo)?;
    let report = run_experiment(kind, &config, &repo, args.splits, global.seed)?;
    emit(global, &render_report(&report, global.format.into())?)
}

fn graph_problems(repo: &MetaRepository) -> Result<Vec<(WeightedGraph, Clustering)>> {
    repo.problems
        .iter()
        .map(|p| {
            let g = match &p.data {
                ProblemData::Graph(g) => g.clone(),
                ProblemData::Euclidean(x) => euclidean_to_graph(x)?,
            };
            Ok((g, p.truth.clone()))
        })
        .collect()
}

fn bsf_repo(path: &Path) -> Result<MetaRepository> {
    let repo = load_repo(path)?;
    let keep: Vec<usize> = (0..repo.len()).filter(|&i| bsf_eligible(&repo.problems[i])).collect();
    Ok(repo.subset(&keep))
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Synth { spec, out } => {
            let spec: SyntheticSpec = match spec {
                Some(p) => serde_json::from_str(&read_text(&p)?)?,
                None => SyntheticSpec::default(),
            };
            let repo = generate_synthetic(&spec)?;
            let manifest = write_repository(&out, &repo)?;
            emit_json(g, &json!({ "manifest": manifest, "problems": repo.len() }))
        }
        Command::Cluster {
            algo,
            normalize,
            k,
            input,
        } => {
            let x = input.load()?;
            let c = AlgorithmSpec::new(algo.into(), normalize, k).run(&x, g.seed)?;
            match &g.output {
                Some(path) => write_clustering(path, &c),
                None => emit_json(g, &c),
            }
        }
        Command::Eval { pred, truth, header } => {
            let pred = read_clustering(&pred)?;
            let truth = labels_to_clustering(&load_labels(&truth, header)?)?;
            if !truth.same_point_set(&pred) {
                return Err(Error::MismatchedPointSets);
            }
            emit_json(
                g,
                &json!({
                    "ri": rand_index(&truth, &pred)?,
                    "ari": adjusted_rand_index(&truth, &pred)?,
                    "loss": clustering_loss(&truth, &pred),
                }),
            )
        }
        Command::FitThreshold { repo, model } => {
            let problems = graph_problems(&load_repo(&repo)?)?;
            let fitted = fit_single_linkage_threshold(&problems)?;
            write_model("threshold", &model, &fitted)?;
            emit_json(g, &fitted)
        }
        Command::MetaK(cmd) => match cmd {
            MetaKCommand::Train { repo, model, k_max } => {
                let config = MetaKConfig {
                    k_range: (2..=k_max).collect(),
                    ..MetaKConfig::default()
                };
                let fitted = meta_k_train(&load_repo(&repo)?, &config, g.seed)?;
                write_model("meta_k", &model, &fitted)?;
                emit_json(g, &json!({ "k_range": fitted.config.k_range, "models": fitted.models }))
            }
            MetaKCommand::Predict { model, input } => {
                let model: MetaKModel = read_model("meta_k", &model)?;
                let p = meta_k_predict(&model, &input.load()?, g.seed)?;
                emit_json(g, &json!({ "k_hat": p.k_hat, "table": p.table, "clustering": p.clustering }))
            }
            MetaKCommand::Compare(args) => compare(g, ExperimentKind::MetaK, &args),
        },
        Command::SelectAlgo(cmd) => match cmd {
            SelectCommand::Train { repo, model, k } => {
                let algorithms = AlgorithmSpec::default_family(k);
                let fitted = algo_select_train(&load_repo(&repo)?, &algorithms, RegressorKind::default(), g.seed)?;
                write_model("algo_select", &model, &fitted)?;
                let labels: Vec<String> = fitted.algorithms.iter().map(AlgorithmSpec::label).collect();
                emit_json(g, &json!({ "algorithms": labels, "regressors": fitted.regressors }))
            }
            SelectCommand::Predict { model, input } => {
                let model: AlgoSelectModel = read_model("algo_select", &model)?;
                let s = algo_select_predict(&model, &input.load()?, g.seed)?;
                emit_json(
                    g,
                    &json!({
                        "algorithm": model.algorithms[s.index].label(),
                        "predicted_ari": s.predicted,
                        "clustering": s.clustering,
                    }),
                )
            }
            SelectCommand::Compare(args) => compare(g, ExperimentKind::AlgoSelect, &args),
        },
        Command::Outliers(OutliersCommand::Fit {
            repo,
            grid,
            mode,
            algo,
            model,
        }) => {
            let config = OutlierConfig {
                theta_grid: grid,
                base: AlgorithmSpec::new(algo.into(), false, 2),
                k_from_truth: true,
            };
            let mode = match mode {
                Mode::Erm => OutlierMode::Erm,
                Mode::Regression => OutlierMode::Regression,
            };
            let fitted = fit_outlier_fraction(&load_repo(&repo)?, &config, mode, g.seed)?;
            if let Some(path) = model {
                write_model("outliers", &path, &fitted)?;
            }
            emit_json(g, &fitted)
        }
        Command::Bsf(BsfCommand::Train {
            repo,
            model,
            epochs,
            batch,
            pair_cap,
        }) => {
            let repo = bsf_repo(&repo)?;
            let splits = build_meta_splits(&repo, &mut stream_rng(g.seed, 0), pair_cap)?;
            let config = BsfConfig {
                epochs,
                batch_size: batch,
                seed: g.seed,
            };
            let fitted = train_bsf(&splits, &config)?;
            write_model("bsf", &model, &fitted)?;
            emit_json(
                g,
                &json!({
                    "meta_train_pairs": splits.meta_train.len(),
                    "trace": fitted.trace,
                    "meta_it_accuracy": pair_accuracy(&fitted.net, &splits.meta_it)?,
                    "meta_et_accuracy": pair_accuracy(&fitted.net, &splits.meta_et)?,
                    "meta_et_majority": majority_baseline(&group_labels(&splits.meta_et))?.mean,
                }),
            )
        }
        Command::Bsf(BsfCommand::Eval { repo, model, pair_cap }) => {
            let model: BsfModel = read_model("bsf", &model)?;
            let repo = bsf_repo(&repo)?;
            let mut pairs = Vec::new();
            for (i, p) in repo.problems.iter().enumerate() {
                pairs.extend(sample_pairs(p, i, pair_cap, &mut stream_rng(g.seed, i as u64))?);
            }
            emit_json(
                g,
                &json!({
                    "pairs": pairs.len(),
                    "accuracy": pair_accuracy(&model.net, &pairs)?,
                    "majority": majority_baseline(&group_labels(&pairs))?.mean,
                }),
            )
        }
        Command::Experiment { kind, compare: args } => compare(g, kind, &args),
        Command::Axioms { trials } => {
            let r = run_axiom_trials(trials, g.seed)?;
            let verdict = |passed: usize| json!({ "passed": passed, "trials": trials, "ok": passed == trials });
            emit_json(
                g,
                &json!({
                    "meta_scale_invariance": verdict(r.scale_invariance_passed),
                    "consistency": verdict(r.consistency_passed),
                    "richness": verdict(r.richness_passed),
                    "all_passed": r.all_passed(),
                }),
            )?;
            if !r.all_passed() {
                return Err(Error::invalid("an axiom property failed"));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
