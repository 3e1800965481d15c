//! Command-line front end: `train`, `predict`, `rate` and `pareto`.
//!
//! Settings precedence is command-line flag, then `--config` file, then the
//! built-in defaults. Exit statuses: 0 ok, 2 usage, 3 data, 4 config, 5 I/O.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classify::classify_rows;
use crate::dataio::{self, ColumnSelection, ConfigError, DataError, ModelError, Settings};
use crate::evolution::{pareto_front, EvolutionError, RunResult};
use crate::regression::{predict, Dataset, FittedModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "mggp", version, about = "Multigene GP symbolic regression and failure-rate reporting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a model; write the model file, convergence log and Pareto CSV.
    Train(TrainArgs),
    /// Apply a saved model to a dataset.
    Predict(PredictArgs),
    /// Classify model predictions and report the failure rate.
    Rate(RateArgs),
    /// Evolve and export only the fitness/complexity Pareto data.
    Pareto(ParetoArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[arg(long)]
    pub model: PathBuf,
    /// Convergence CSV.
    #[arg(long)]
    pub log: PathBuf,
    /// Pareto CSV; defaults to `<log stem>_pareto.csv` next to the log.
    #[arg(long)]
    pub pareto: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Classification report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `failure_threshold`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// Config file plus one flag per configuration key. Values go through the
/// same parser as the file.
#[derive(Debug, Args, Default)]
pub struct SettingsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub population_size: Option<String>,
    #[arg(long)]
    pub max_generations: Option<String>,
    #[arg(long)]
    pub tournament_size: Option<String>,
    #[arg(long)]
    pub target_fitness: Option<String>,
    #[arg(long)]
    pub max_tree_depth: Option<String>,
    #[arg(long)]
    pub max_genes: Option<String>,
    #[arg(long)]
    pub p_crossover: Option<String>,
    #[arg(long)]
    pub p_mutation: Option<String>,
    #[arg(long)]
    pub p_reproduction: Option<String>,
    #[arg(long)]
    pub p_gene_crossover: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub elitism_count: Option<String>,
    #[arg(long)]
    pub failure_threshold: Option<String>,
    #[arg(long)]
    pub response_column: Option<String>,
    #[arg(long)]
    pub exclude_columns: Option<String>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

impl SettingsArgs {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        [
            ("population_size", &self.population_size),
            ("max_generations", &self.max_generations),
            ("tournament_size", &self.tournament_size),
            ("target_fitness", &self.target_fitness),
            ("max_tree_depth", &self.max_tree_depth),
            ("max_genes", &self.max_genes),
            ("p_crossover", &self.p_crossover),
            ("p_mutation", &self.p_mutation),
            ("p_reproduction", &self.p_reproduction),
            ("p_gene_crossover", &self.p_gene_crossover),
            ("seed", &self.seed),
            ("elitism_count", &self.elitism_count),
            ("failure_threshold", &self.failure_threshold),
            ("response_column", &self.response_column),
            ("exclude_columns", &self.exclude_columns),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
        .collect()
    }

    pub fn resolve(&self) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        for (key, value) in self.overrides() {
            s.apply(key, value)
                .map_err(|e| CliError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
        }
        s.run.threads = self.threads;
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug)]
pub enum CliError {
    Data(String),
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Config(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Data(format!("model: {e}"))
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::Config(_) | EvolutionError::ThreadPool(_) => CliError::Config(e.to_string()),
            EvolutionError::Data(_) | EvolutionError::NoValidModel => CliError::Data(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn write_line(out: &mut dyn Write, line: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Rate(a) => cmd_rate(a, out),
        Command::Pareto(a) => cmd_pareto(a, out),
    }
}

fn load_training(path: &Path, settings: &Settings) -> Result<Dataset, CliError> {
    let selection = ColumnSelection {
        response: Some(settings.response_column.clone()),
        predictors: None,
        exclude: settings.exclude_columns.clone(),
    };
    Ok(dataio::load_dataset(path, &selection)?)
}

fn evolve(data: &Dataset, settings: &Settings) -> Result<RunResult, CliError> {
    let mut result = crate::evolution::run(settings.run.clone(), data)?;
    result.log.header = settings.echo();
    Ok(result)
}

fn default_pareto_path(log: &Path) -> PathBuf {
    let stem = log.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    log.with_file_name(format!("{stem}_pareto.csv"))
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = args.settings.resolve()?;
    let data = load_training(&args.data, &settings)?;
    dataio::model_file::check_names(data.var_names())?;
    write_line(out, format!("seed={}", settings.run.seed))?;

    let result = evolve(&data, &settings)?;
    let front = pareto_front(&result.population);
    let pareto_path = args.pareto.clone().unwrap_or_else(|| default_pareto_path(&args.log));

    dataio::save_model(&result.best, &args.model).map_err(|e| match e {
        ModelError::Io { .. } => CliError::Io(e.to_string()),
        other => other.into(),
    })?;
    dataio::export_convergence(&result.log, &args.log).map_err(io_err(&args.log))?;
    dataio::export_pareto(&front, &pareto_path).map_err(io_err(&pareto_path))?;

    write_line(
        out,
        format!(
            "generations={} ({})",
            result.log.terminated_at, result.log.termination_reason
        ),
    )?;
    write_line(out, format!("model: {}", result.best.simplified().expression(&settings.response_column)))?;
    write_line(out, format!("train_rmse={}", result.best.train_rmse))?;
    Ok(())
}

fn load_for_model(model_path: &Path, data_path: &Path) -> Result<(FittedModel, Dataset), CliError> {
    let model = dataio::load_model(model_path)?;
    let used = model.used_variables();
    let data = dataio::load_dataset(data_path, &ColumnSelection::only(&used))?;
    Ok((model, data))
}

pub fn cmd_predict(args: &PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (model, data) = load_for_model(&args.model, &args.data)?;
    let predictions = predict(&model, &data).map_err(|e| CliError::Data(e.to_string()))?;
    dataio::export_predictions(&predictions, &args.out).map_err(io_err(&args.out))?;
    write_line(out, format!("rows={}", predictions.len()))
}

pub fn cmd_rate(args: &RateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut settings = Settings::default();
    if let Some(path) = &args.config {
        settings.apply_file(path)?;
    }
    if let Some(t) = args.threshold {
        settings.failure_threshold = t;
    }
    let bands = settings.bands()?;
    let (model, data) = load_for_model(&args.model, &args.data)?;
    let report = classify_rows(&model, &data, &bands).map_err(|e| CliError::Data(e.to_string()))?;
    dataio::export_report(&report, &args.out).map_err(io_err(&args.out))?;
    write_line(out, format!("failure_rate_percent={:.4}", report.failure_rate_percent))?;
    write_line(out, format!("model: {}", model.simplified().expression(&settings.response_column)))
}

pub fn cmd_pareto(args: &ParetoArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = args.settings.resolve()?;
    let data = load_training(&args.data, &settings)?;
    write_line(out, format!("seed={}", settings.run.seed))?;
    let result = evolve(&data, &settings)?;
    let front = pareto_front(&result.population);
    dataio::export_pareto(&front, &args.out).map_err(io_err(&args.out))?;
    write_line(out, "individual,complexity,fitness")?;
    for p in front.iter().filter(|p| !p.dominated) {
        write_line(out, format!("{},{},{}", p.individual_id, p.complexity, p.fitness))?;
    }
    Ok(())
}
