mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use log::info;

use varsel::datapipe::{
    describe, load_csv, pearson_matrix, run_selection_report, select_all, write_matrix, write_report,
    write_summary, PipelineSpec,
};
use varsel::eval::{
    padded_validation, run_confusion_study, run_power_study, run_timing_bench, write_confusion_matrix,
    write_confusion_table, write_power_table, write_timing_table, Pooling, StudyGrid,
};
use varsel::nn::{load_weights, save_weights, train, Optimizer, TrainConfig};
use varsel::selector::{default_architecture, BaselineConfigs, Method, SelectorModel};
use varsel::synthgen::{build_corpus, read_corpus, write_corpus, CorpusRole, GenConfig};

const VERBS: [&str; 8] = [
    "gen-corpus",
    "train",
    "validate",
    "select",
    "simulate",
    "power",
    "bench",
    "pipeline",
];

/// Variable selection with a trained t-value classifier and classical baselines.
#[derive(Parser, Debug)]
#[command(name = "varsel", version, args_override_self = true)]
struct Cli {
    /// Flat key=value file of options; flags on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Generate a training or validation corpus.
    GenCorpus(GenCorpusArgs),
    /// Train a selector network on a corpus.
    Train(TrainArgs),
    /// Confusion matrix of a model on a validation corpus.
    Validate(ValidateArgs),
    /// Run every selector on a CSV file.
    Select(SelectArgs),
    /// Confusion-rate study over sample sizes and noise levels.
    Simulate(StudyArgs),
    /// Selection-frequency study over a ladder of coefficients.
    Power(StudyArgs),
    /// Mean wall-clock time per selector call.
    Bench(StudyArgs),
    /// Log transform, correlation pruning and selection on a CSV file.
    Pipeline(PipelineArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Role {
    Training,
    Validation,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PoolingArg {
    Micro,
    Macro,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Args, Debug)]
struct GenCorpusArgs {
    #[arg(long)]
    pmax: usize,
    #[arg(long)]
    count: usize,
    /// Use exactly this many predictors in every record.
    #[arg(long)]
    fixed_p: Option<usize>,
    #[arg(long, value_enum, default_value = "training")]
    role: Role,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Layer widths, e.g. 10,32,10. Defaults from the corpus width.
    #[arg(long, value_delimiter = ',')]
    arch: Option<Vec<usize>>,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = 3e-3)]
    lr: f64,
    /// Defaults to 128, or the corpus size when smaller.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum, default_value = "adam")]
    optimizer: OptimizerArg,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha_enter: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha_remove: f64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 100)]
    lambdas: usize,
}

impl BaselineArgs {
    fn configs(&self, lasso_seed: u64) -> BaselineConfigs {
        let mut c = BaselineConfigs::default();
        c.stepwise.alpha_enter = self.alpha_enter;
        c.stepwise.alpha_remove = self.alpha_remove;
        c.lasso.folds = self.folds;
        c.lasso.seed = lasso_seed;
        if let varsel::baselines::LambdaGrid::Auto { count, .. } = &mut c.lasso.lambda_grid {
            *count = self.lambdas;
        }
        c
    }
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: String,
    /// Predictor columns; all other columns when omitted.
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<String>>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Seed of the cross-validation fold assignment.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    baselines: BaselineArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, value_delimiter = ',')]
    predictors: Option<Vec<String>>,
    /// Columns replaced by ln(1 + x) before pruning.
    #[arg(long, value_delimiter = ',')]
    log_columns: Option<Vec<String>>,
    #[arg(long, default_value_t = varsel::datapipe::DEFAULT_RHO_MAX)]
    rho_max: f64,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    baselines: BaselineArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct StudyArgs {
    /// Model file; without one the ann method is left out.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "50,250,1000")]
    n_levels: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,0.5")]
    sigma2_levels: Vec<f64>,
    /// Replicates per cell; bench defaults to 20.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "micro")]
    pooling: PoolingArg,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    baselines: BaselineArgs,
    #[arg(long)]
    out: PathBuf,
}

/// Files and directories created by this run, removed unless committed.
struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            dirs: Vec::new(),
            committed: false,
        }
    }

    fn create(&mut self, path: &Path) -> Result<BufWriter<File>, String> {
        let f = File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
        self.files.push(path.to_path_buf());
        Ok(BufWriter::new(f))
    }

    fn dir(&mut self, path: &Path) -> Result<(), String> {
        if !path.is_dir() {
            fs::create_dir_all(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?;
            self.dirs.push(path.to_path_buf());
        }
        Ok(())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in &self.dirs {
            let _ = fs::remove_dir_all(d);
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn open(path: &Path) -> Result<BufReader<File>, String> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("cannot open {}: {e}", path.display()))
}

fn load_model(path: &Path, threshold: f64) -> Result<SelectorModel, String> {
    let params = load_weights(open(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    SelectorModel::with_threshold(params, threshold).map_err(err)
}

fn finish<W: Write>(mut w: W) -> Result<(), String> {
    w.flush().map_err(err)
}

/// Resolved options of the verb as `long-name=value` lines.
fn resolved_options(matches: &ArgMatches) -> (String, Vec<(String, String)>) {
    let (verb, sub) = matches.subcommand().expect("verb present");
    let cmd = Cli::command();
    let sub_cmd = cmd.find_subcommand(verb).expect("known verb");
    let mut out = Vec::new();
    for arg in sub_cmd.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if long == "config" || long == "help" || long == "version" {
            continue;
        }
        if let Ok(Some(vals)) = sub.try_get_raw(arg.get_id().as_str()) {
            let joined: Vec<String> = vals.map(|v| v.to_string_lossy().into_owned()).collect();
            out.push((long.to_string(), joined.join(",")));
        }
    }
    (verb.to_string(), out)
}

fn manifest_text(verb: &str, options: &[(String, String)]) -> String {
    let mut s = String::new();
    s.push_str("# varsel run manifest\n");
    s.push_str(&format!("# verb: {verb}\n"));
    s.push_str(&format!("# varsel {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("# replay: varsel {verb} --config <this file>\n"));
    for (k, v) in options {
        s.push_str(&format!("{k}={v}\n"));
    }
    s
}

fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("manifest.txt")
    } else {
        let mut name = out.as_os_str().to_os_string();
        name.push(".manifest");
        PathBuf::from(name)
    }
}

fn study_grid(a: &StudyArgs, default_reps: usize) -> Result<(StudyGrid, Option<SelectorModel>), String> {
    let model = a.model.as_deref().map(|p| load_model(p, 0.5)).transpose()?;
    let methods: Vec<Method> = match &a.methods {
        Some(list) => list.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>().map_err(err)?,
        None => Method::ALL
            .into_iter()
            .filter(|m| *m != Method::Ann || model.is_some())
            .collect(),
    };
    let grid = StudyGrid {
        n_levels: a.n_levels.clone(),
        sigma2_levels: a.sigma2_levels.clone(),
        reps: a.reps.unwrap_or(default_reps),
        methods,
        seed: a.seed,
        pooling: match a.pooling {
            PoolingArg::Micro => Pooling::Micro,
            PoolingArg::Macro => Pooling::Macro,
        },
        baselines: a.baselines.configs(0),
    };
    Ok((grid, model))
}

fn run(verb: &Verb, outputs: &mut Outputs) -> Result<(), String> {
    match verb {
        Verb::GenCorpus(a) => {
            let role = match a.role {
                Role::Training => CorpusRole::Training,
                Role::Validation => CorpusRole::Validation,
            };
            let corpus = build_corpus(&GenConfig::new(a.pmax, a.count, a.seed), a.fixed_p, role).map_err(err)?;
            info!("{} records, {} redraws", corpus.records.len(), corpus.redraws);
            let mut w = outputs.create(&a.out)?;
            write_corpus(&corpus, &mut w).map_err(err)?;
            finish(w)
        }
        Verb::Train(a) => {
            let corpus = read_corpus(open(&a.corpus)?, CorpusRole::Training)
                .map_err(|e| format!("{}: {e}", a.corpus.display()))?;
            let arch = a.arch.clone().unwrap_or_else(|| default_architecture(corpus.p_max()));
            let cfg = TrainConfig {
                learning_rate: a.lr,
                epochs: a.epochs,
                batch_size: a.batch_size.unwrap_or(corpus.records.len().clamp(1, 128)),
                seed: a.seed,
                optimizer: match a.optimizer {
                    OptimizerArg::Adam => Optimizer::adam(),
                    OptimizerArg::Sgd => Optimizer::GradientDescent,
                },
                ..TrainConfig::default()
            };
            let (params, report) = train(&corpus, &arch, &cfg).map_err(err)?;
            info!(
                "final loss {:.6} after {} epochs ({:.1} s)",
                report.final_loss, report.epochs_run, report.wall_clock_seconds
            );
            let mut w = outputs.create(&a.out)?;
            save_weights(&params, &mut w).map_err(err)?;
            finish(w)
        }
        Verb::Validate(a) => {
            let model = load_model(&a.model, a.threshold)?;
            let corpus = read_corpus(open(&a.corpus)?, CorpusRole::Validation)
                .map_err(|e| format!("{}: {e}", a.corpus.display()))?;
            let rates = padded_validation(&corpus, &model).map_err(err)?;
            let mut w = outputs.create(&a.out)?;
            write_confusion_matrix(&rates, &mut w).map_err(err)?;
            finish(w)
        }
        Verb::Select(a) => {
            let model = load_model(&a.model, a.threshold)?;
            let columns = a.predictors.as_ref().map(|p| {
                let mut c = p.clone();
                c.push(a.target.clone());
                c
            });
            let loaded = load_csv(open(&a.data)?, Some(&a.target), columns.as_deref())
                .map_err(|e| format!("{}: {e}", a.data.display()))?;
            if loaded.dropped_target_rows > 0 {
                info!("dropped {} rows with a missing target", loaded.dropped_target_rows);
            }
            let (frame, dropped) = loaded.frame.drop_missing_rows();
            if dropped > 0 {
                info!("dropped {dropped} rows with missing predictors");
            }
            let (vars, results) =
                select_all(&frame, &a.target, &model, &a.baselines.configs(a.seed)).map_err(err)?;
            let mut w = outputs.create(&a.out)?;
            write_report(&vars, &results, &mut w).map_err(err)?;
            finish(w)
        }
        Verb::Pipeline(a) => {
            let model = load_model(&a.model, a.threshold)?;
            let loaded = load_csv(open(&a.data)?, Some(&a.target), None)
                .map_err(|e| format!("{}: {e}", a.data.display()))?;
            let mut spec = PipelineSpec::new(a.target.clone());
            spec.predictors = a.predictors.clone();
            spec.log_columns = a.log_columns.clone().unwrap_or_default();
            spec.rho_max = a.rho_max;
            let report = run_selection_report(&loaded.frame, &spec, &model, &a.baselines.configs(a.seed))
                .map_err(err)?;
            outputs.dir(&a.out)?;

            let mut w = outputs.create(&a.out.join("summary.csv"))?;
            write_summary(&describe(&loaded.frame), &mut w).map_err(err)?;
            finish(w)?;

            let mut kept = report.variables.clone();
            kept.push(a.target.clone());
            let frame = loaded.frame.select(&kept).map_err(err)?.drop_missing_rows().0;
            let frame = varsel::datapipe::log_shift(&frame, &spec.log_columns).map_err(err)?;
            let corr = pearson_matrix(&frame).map_err(err)?;
            let mut w = outputs.create(&a.out.join("correlations.csv"))?;
            write_matrix(frame.names(), &corr, &mut w).map_err(err)?;
            finish(w)?;

            let mut w = outputs.create(&a.out.join("pruned.csv"))?;
            writeln!(w, "kept,dropped,r").map_err(err)?;
            for d in &report.pruned {
                writeln!(w, "{},{},{:.6}", d.kept, d.dropped, d.pair_r).map_err(err)?;
            }
            finish(w)?;

            let mut w = outputs.create(&a.out.join("report.csv"))?;
            write_report(&report.variables, &report.results, &mut w).map_err(err)?;
            finish(w)
        }
        Verb::Simulate(a) => {
            let (grid, model) = study_grid(a, 200)?;
            let rows = run_confusion_study(&grid, model.as_ref()).map_err(err)?;
            let mut w = outputs.create(&a.out)?;
            write_confusion_table(&rows, &mut w).map_err(err)?;
            finish(w)
        }
        Verb::Power(a) => {
            let (grid, model) = study_grid(a, 200)?;
            let curves = run_power_study(&grid, model.as_ref()).map_err(err)?;
            let mut w = outputs.create(&a.out)?;
            write_power_table(&curves, &mut w).map_err(err)?;
            finish(w)
        }
        Verb::Bench(a) => {
            let (grid, model) = study_grid(a, 20)?;
            let table = run_timing_bench(&grid, model.as_ref()).map_err(err)?;
            let mut w = outputs.create(&a.out)?;
            write_timing_table(&table, &mut w).map_err(err)?;
            finish(w)
        }
    }
}

fn out_of(verb: &Verb) -> (&Path, bool) {
    match verb {
        Verb::GenCorpus(a) => (&a.out, false),
        Verb::Train(a) => (&a.out, false),
        Verb::Validate(a) => (&a.out, false),
        Verb::Select(a) => (&a.out, false),
        Verb::Pipeline(a) => (&a.out, true),
        Verb::Simulate(a) | Verb::Power(a) | Verb::Bench(a) => (&a.out, false),
    }
}

fn parse(args: Vec<OsString>) -> Result<(Cli, ArgMatches), clap::Error> {
    let args = match config::config_path(&args) {
        Some(path) => match config::read_config(Path::new(&path)) {
            Ok(entries) => config::splice(&args, &VERBS, &entries),
            Err(msg) => return Err(Cli::command().error(clap::error::ErrorKind::Io, msg)),
        },
        None => args,
    };
    let matches = Cli::command().try_get_matches_from(args)?;
    let cli = Cli::from_arg_matches(&matches)?;
    Ok((cli, matches))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (cli, matches) = match parse(std::env::args_os().collect()) {
        Ok(v) => v,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }

    let mut outputs = Outputs::new();
    let result = run(&cli.verb, &mut outputs).and_then(|()| {
        let (out, is_dir) = out_of(&cli.verb);
        let (verb, options) = resolved_options(&matches);
        let path = manifest_path(out, is_dir);
        let mut w = outputs.create(&path)?;
        w.write_all(manifest_text(&verb, &options).as_bytes()).map_err(err)?;
        finish(w)
    });
    match result {
        Ok(()) => {
            outputs.committed = true;
            ExitCode::SUCCESS
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
