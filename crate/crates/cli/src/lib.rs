//! Command-line workflows for sparse NARMAX identification: benchmark data
//! generation, regularization-path fitting, validation-based selection,
//! free-run simulation and a timing benchmark.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::s;

use narmax_lasso::datagen::Benchmark;
use narmax_lasso::{
    extended_least_squares, fit_path, generate_polynomial_dictionary, io, mean_absolute_error, select_lambda,
    Dictionary, ElsConfig, EstimatedModel, NarmaxError, PathConfig,
};

pub mod bench;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: NarmaxError,
    },
    #[error(transparent)]
    Narmax(#[from] NarmaxError),
}

impl CliError {
    /// 1 for usage errors, 2 for data or format problems, 3 for numerical
    /// failures.
    pub fn exit_code(&self) -> i32 {
        let source = match self {
            CliError::Usage(_) => return 1,
            CliError::File { source, .. } => source,
            CliError::Narmax(e) => e,
        };
        match source {
            e if e.is_numerical() => 3,
            NarmaxError::InvalidBounds(_) | NarmaxError::InvalidConfig(_) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "narmax-lasso", version, about = "Sparse NARMAX identification along L1 regularization paths")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate training and validation records for a benchmark system.
    Generate(GenerateArgs),
    /// Fit a regularization path (or an ELS model) to a data file.
    Fit(FitArgs),
    /// Pick the path entry with the smallest free-run validation error.
    Select(SelectArgs),
    /// Free-run simulate a model on a data file.
    Simulate(SimulateArgs),
    /// Time path fits over a grid of dictionaries, penalty grids and lengths.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchmarkName {
    Example1,
    Example2,
}

impl From<BenchmarkName> for Benchmark {
    fn from(name: BenchmarkName) -> Self {
        match name {
            BenchmarkName::Example1 => Benchmark::Example1,
            BenchmarkName::Example2 => Benchmark::Example2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Method {
    #[default]
    LassoPath,
    Els,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "example1")]
    pub benchmark: BenchmarkName,
    /// Training length (benchmark default when omitted).
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Validation length (benchmark default when omitted).
    #[arg(long)]
    pub n_val: Option<usize>,
    /// Noise standard deviation (benchmark default when omitted).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Samples each input value is held for.
    #[arg(long, default_value_t = Benchmark::DEFAULT_HOLD)]
    pub hold: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the noise sequence as column `v`.
    #[arg(long)]
    pub with_noise: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Dictionary bounds. Unset values come from the preset.
#[derive(Args, Debug, Clone)]
pub struct DictionaryArgs {
    /// Take unset bounds from a benchmark's reference setting
    /// (example1: 10,10,10 degree 1; example2: 3,3,2 degree 2).
    #[arg(long, value_enum, default_value = "example2")]
    pub preset: BenchmarkName,
    /// Maximum output lag.
    #[arg(long)]
    pub ny: Option<usize>,
    /// Maximum lag per input channel, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub nu: Option<Vec<usize>>,
    /// Maximum error lag.
    #[arg(long)]
    pub ne: Option<usize>,
    /// Maximum monomial degree.
    #[arg(long)]
    pub degree: Option<u32>,
}

impl DictionaryArgs {
    pub fn bounds(&self) -> (usize, Vec<usize>, usize, u32) {
        let (ny, nu, ne, degree) = match self.preset {
            BenchmarkName::Example1 => (10, vec![10], 10, 1),
            BenchmarkName::Example2 => (3, vec![3], 2, 2),
        };
        (
            self.ny.unwrap_or(ny),
            self.nu.clone().unwrap_or(nu),
            self.ne.unwrap_or(ne),
            self.degree.unwrap_or(degree),
        )
    }

    pub fn dictionary(&self) -> CliResult<Dictionary> {
        let (ny, nu, ne, degree) = self.bounds();
        Ok(generate_polynomial_dictionary(ny, &nu, ne, degree)?)
    }
}

#[derive(Args, Debug, Clone)]
pub struct PathArgs {
    /// Number of penalty values on the grid.
    #[arg(long, default_value_t = 100)]
    pub k_points: usize,
    /// Smallest penalty as a fraction of lambda_max.
    #[arg(long, default_value_t = 1e-3)]
    pub lambda_min_ratio: f64,
    /// Convergence tolerance.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Maximum sweeps per grid point.
    #[arg(long, default_value_t = 10_000)]
    pub max_cycles: usize,
    /// Sweep every coordinate on every pass.
    #[arg(long)]
    pub no_active_set: bool,
}

impl PathArgs {
    pub fn config(&self) -> PathConfig {
        PathConfig {
            k_points: self.k_points,
            lambda_min_ratio: self.lambda_min_ratio,
            tolerance: self.tol,
            max_cycles: self.max_cycles,
            use_active_set: !self.no_active_set,
        }
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Training data CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub dictionary: DictionaryArgs,
    #[command(flatten)]
    pub path: PathArgs,
    #[arg(long, value_enum, default_value = "lasso-path")]
    pub method: Method,
    /// Maximum ELS iterations.
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// Path CSV written by `fit`.
    #[arg(long)]
    pub path: PathBuf,
    /// Validation data CSV.
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Model CSV written by `select` or `fit --method els`.
    #[arg(long)]
    pub model: PathBuf,
    /// Data CSV providing inputs, the seed outputs and the comparison target.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Parses `args` (program name first) and runs the command, writing the
/// human-readable summary to `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return report(stdout, format_args!("{}", e.render().to_string().trim_end()));
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string())),
    };
    execute(cli.command, stdout)
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> CliResult<()> {
    match command {
        Command::Generate(a) => generate(&a, stdout),
        Command::Fit(a) => fit(&a, stdout),
        Command::Select(a) => select(&a, stdout),
        Command::Simulate(a) => simulate(&a, stdout),
        Command::Bench(a) => bench::run(&a, stdout),
    }
}

fn report(stdout: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CliResult<()> {
    writeln!(stdout, "{line}").map_err(|e| CliError::Narmax(e.into()))
}

fn file_error(path: &Path) -> impl FnOnce(NarmaxError) -> CliError + '_ {
    move |source| CliError::File {
        path: path.to_path_buf(),
        source,
    }
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| file_error(path)(e.into()))
}

fn create(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    fs::create_dir_all(dir).map_err(|e| file_error(dir)(e.into()))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| file_error(&path)(e.into()))?;
    Ok((path, BufWriter::new(file)))
}

fn write_file(
    dir: &Path,
    name: &str,
    write: impl FnOnce(&mut BufWriter<File>) -> narmax_lasso::Result<()>,
) -> CliResult<PathBuf> {
    let (path, mut w) = create(dir, name)?;
    write(&mut w)
        .and_then(|_| w.flush().map_err(NarmaxError::from))
        .map_err(file_error(&path))?;
    Ok(path)
}

fn read_data_file(path: &Path) -> CliResult<narmax_lasso::TimeSeriesData> {
    let (data, _) = io::read_data(open(path)?).map_err(file_error(path))?;
    Ok(data)
}

fn generate(args: &GenerateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let bench = Benchmark::from(args.benchmark);
    let (n_train, n_val) = bench.default_lengths();
    let n_train = args.n_train.unwrap_or(n_train);
    let n_val = args.n_val.unwrap_or(n_val);
    let sigma = args.sigma.unwrap_or(bench.default_noise_sigma());
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CliError::Usage(format!("error: --sigma must be non-negative, got {sigma}\n")));
    }
    for (name, len, realization) in [("train.csv", n_train, 0), ("validation.csv", n_val, 1)] {
        let record = bench.realization(len, sigma, args.hold, args.seed, realization)?;
        let noise = args.with_noise.then_some(&record.noise);
        let path = write_file(&args.out, name, |w| io::write_data(w, &record.data, noise))?;
        report(stdout, format_args!("wrote {} ({len} samples)", path.display()))?;
    }
    Ok(())
}

fn fit(args: &FitArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let data = read_data_file(&args.data)?;
    let dictionary = args.dictionary.dictionary()?;
    dictionary.check_data(&data)?;
    report(
        stdout,
        format_args!(
            "dictionary: p = {}, error terms = {} (p_e/p = {:.4})",
            dictionary.len(),
            dictionary.error_term_count(),
            narmax_lasso::error_term_fraction(&dictionary)
        ),
    )?;
    write_file(&args.out, "dictionary.txt", |w| Ok(w.write_all(dictionary.to_text().as_bytes())?))?;

    match args.method {
        Method::LassoPath => {
            let config = args.path.config();
            let path = fit_path(&data, &dictionary, &config)?;
            let unconverged = path.entries.iter().filter(|e| !e.converged).count();
            report(
                stdout,
                format_args!(
                    "lambda_max = {:.6e}, {} grid points, {unconverged} not converged",
                    path.lambda_max,
                    path.len()
                ),
            )?;
            let p = write_file(&args.out, "path.csv", |w| io::write_path(w, &path))?;
            let d = write_file(&args.out, "diagnostics.csv", |w| io::write_diagnostics(w, &path))?;
            report(stdout, format_args!("wrote {} and {}", p.display(), d.display()))?;
        }
        Method::Els => {
            let config = ElsConfig {
                tolerance: args.path.tol,
                max_iterations: args.max_iterations,
                ..ElsConfig::default()
            };
            let fit = extended_least_squares(&data, &dictionary, &config)?;
            report(
                stdout,
                format_args!("ELS: {} iterations, converged = {}", fit.iterations, fit.converged),
            )?;
            let model = EstimatedModel::new(dictionary, fit.theta, None)?;
            let m = write_file(&args.out, "model.csv", |w| io::write_model(w, &model))?;
            report(stdout, format_args!("wrote {}", m.display()))?;
        }
    }
    Ok(())
}

fn select(args: &SelectArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let path = io::read_path(open(&args.path)?).map_err(file_error(&args.path))?;
    let validation = read_data_file(&args.validation)?;
    path.dictionary.check_data(&validation)?;
    let selection = select_lambda(&path, &validation)?;
    let model = path.model(selection.best_index)?;

    write_file(&args.out, "selection.csv", |w| io::write_selection(w, &path, &selection))?;
    let m = write_file(&args.out, "model.csv", |w| io::write_model(w, &model))?;

    let entry = &path.entries[selection.best_index];
    report(
        stdout,
        format_args!(
            "selected entry {} of {} (lambda = {:.6e}), validation MAE = {:.4}, {} active terms",
            selection.best_index,
            path.len(),
            entry.lambda,
            selection.best_mae(),
            entry.active_count
        ),
    )?;
    for (term, coef) in model.nonzero_terms() {
        report(stdout, format_args!("  {coef:+.4} {term}"))?;
    }
    report(stdout, format_args!("wrote {}", m.display()))
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = io::read_model(open(&args.model)?).map_err(file_error(&args.model))?;
    let data = read_data_file(&args.data)?;
    model.dictionary().check_data(&data)?;
    let observed = data.output().to_owned();
    let start = model.dictionary().max_lag();
    let simulated = model.free_run_simulate(data.inputs(), &observed.to_vec())?;
    let mae = mean_absolute_error(simulated.slice(s![start..]), observed.slice(s![start..]))?;
    let out = write_file(&args.out, "simulation.csv", |w| io::write_simulation(w, &simulated, &observed))?;
    report(stdout, format_args!("free-run MAE = {mae:.4} over samples {}..{}", start + 1, data.len()))?;
    report(stdout, format_args!("wrote {}", out.display()))
}
