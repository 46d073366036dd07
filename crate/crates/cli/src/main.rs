use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rmh::bench::{fit_method, run_real, run_synthetic, ExperimentConfig, Method, OutputFormat, PipelineSettings};
use rmh::depmeasure::relevance_curve_with;
use rmh::fdata::Grid;
use rmh::selectors::{maxima_hunting_select_with, rmh_select_with};
use rmh::synth::{generate_problem, SyntheticProblem, TrendSpec};
use rmh::{load_dataset, save_dataset, CsvSchema, Dataset, DcovMethod};

#[derive(Parser)]
#[command(name = "rmh", version, about = "Variable selection for functional classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Simulate(SimulateArgs),
    /// Relevance curve: squared distance correlation of each grid point with the label.
    Dcor(DcorArgs),
    /// Select grid points with maxima hunting or its recursive variant.
    Select {
        #[command(subcommand)]
        method: SelectCommand,
    },
    /// Fit one method on a training file and report its test error.
    Classify(ClassifyArgs),
    /// Run a benchmark experiment.
    Bench {
        #[command(subcommand)]
        kind: BenchCommand,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Named problem: peak, peak2, square, sin or zero.
    #[arg(long, default_value = "peak")]
    problem: String,
    /// Number of trajectories (even).
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Grid points i/p for i = 1..p.
    #[arg(long, default_value_t = 200)]
    grid_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset CSV with a label column and one `t_<time>` column per grid point.
    #[arg(long)]
    data: PathBuf,
    /// Drop identically zero trajectories on load.
    #[arg(long)]
    drop_zero_rows: bool,
    /// Map header times onto [0, 1].
    #[arg(long)]
    rescale_times: bool,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_path(&self.data, self.drop_zero_rows, self.rescale_times)
    }
}

#[derive(Args)]
struct DcorArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Use the O(n^2) estimator instead of the O(n log n) one.
    #[arg(long)]
    naive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum SelectCommand {
    /// Local maxima of the relevance curve, ranked by relevance.
    Mh {
        #[command(flatten)]
        data: DataArgs,
        /// Number of points to keep.
        #[arg(long, default_value_t = 30)]
        d: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recursive maxima hunting.
    Rmh {
        #[command(flatten)]
        data: DataArgs,
        /// Redundancy threshold.
        #[arg(long, default_value_t = 0.8)]
        r: f64,
        /// Relevance threshold.
        #[arg(long, default_value_t = 0.05)]
        s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Tuning {
    /// JSON experiment config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Redundancy threshold for rmh.
    #[arg(long)]
    r: Option<f64>,
    /// Fixed relevance threshold for rmh (replaces the CV grid).
    #[arg(long)]
    s: Option<f64>,
    /// Fixed number of neighbours (default: chosen by CV).
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated subset of base,mh,rmh,pca,pls.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
}

impl Tuning {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_json_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.r {
            c.r = v;
        }
        if let Some(v) = self.s {
            c.s_grid = vec![v];
        }
        if self.k.is_some() {
            c.k = self.k;
        }
        if let Some(v) = &self.methods {
            c.methods = v.clone();
        }
        Ok(c)
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "rmh")]
    method: Method,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchOutput {
    /// Results file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; defaults to the extension of --out, else csv.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Omit wall times so that output is reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Synthetic protocol: fresh train and test samples per repetition.
    Synthetic {
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        problem: Option<String>,
        /// Comma-separated training sizes.
        #[arg(long, value_delimiter = ',')]
        n_train: Option<Vec<usize>>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[command(flatten)]
        output: BenchOutput,
    },
    /// Real-data protocol: repeated stratified splits of one file.
    Real {
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[command(flatten)]
        output: BenchOutput,
    },
}

fn load_path(path: &Path, drop_zero_rows: bool, rescale_times: bool) -> Result<Dataset> {
    let schema = CsvSchema {
        drop_zero_rows,
        rescale_times,
        ..CsvSchema::default()
    };
    Ok(load_dataset(path, &schema)?)
}

/// Opens `path` or stdout; the file is only created once output is ready.
fn emit(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?);
            body(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    emit(out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let problem = SyntheticProblem::<f64>::new(TrendSpec::from_name(&a.problem)?, Grid::right_endpoints(a.grid_size)?)?;
    let data = generate_problem(&problem, a.n, a.seed)?;
    save_dataset(&data, &a.out)?;
    Ok(())
}

fn dcor(a: DcorArgs) -> Result<()> {
    let data = a.data.load()?;
    let method = if a.naive { DcovMethod::Naive } else { DcovMethod::Fast };
    let curve = relevance_curve_with(&data, method)?;
    let times = curve.grid.points();
    emit(a.out.as_deref(), |w| {
        match a.format {
            OutputFormat::Csv => {
                writeln!(w, "time,relevance")?;
                for (t, v) in times.iter().zip(&curve.values) {
                    writeln!(w, "{t},{v}")?;
                }
            }
            OutputFormat::Json => {
                serde_json::to_writer_pretty(
                    &mut *w,
                    &serde_json::json!({ "times": times, "relevances": curve.values }),
                )?;
                writeln!(w)?;
            }
        }
        Ok(())
    })
}

fn select(cmd: SelectCommand) -> Result<()> {
    let (sel, out) = match cmd {
        SelectCommand::Mh { data, d, out } => (maxima_hunting_select_with(&data.load()?, d, DcovMethod::Fast)?, out),
        SelectCommand::Rmh { data, r, s, out } => (rmh_select_with(&data.load()?, r, s, DcovMethod::Fast)?, out),
    };
    emit_json(out.as_deref(), &serde_json::to_value(sel.to_record())?)
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let config = a.tuning.config()?;
    config.validate()?;
    let train = load_path(&a.train, false, config.rescale_times)?;
    let test = load_path(&a.test, false, config.rescale_times)?;
    let settings = PipelineSettings::from(&config);
    let fitted = fit_method(a.method, &train, &settings, config.seed)?;
    let error = fitted.test_error(&test)?;
    let report = serde_json::json!({
        "method": a.method,
        "error": error,
        "k": fitted.k,
        "hyperparameter": fitted.hyperparameter,
        "cv_error": fitted.cv_error,
        "n_vars": fitted.n_vars,
        "selected_times": fitted.selected_times,
    });
    emit_json(a.out.as_deref(), &report)
}

fn bench(cmd: BenchCommand) -> Result<()> {
    let (result, output) = match cmd {
        BenchCommand::Synthetic {
            tuning,
            problem,
            n_train,
            n_test,
            repetitions,
            output,
        } => {
            let mut c = tuning.config()?;
            if problem.is_some() {
                c.problem = problem;
            }
            if let Some(v) = n_train {
                c.n_train = v;
            }
            if let Some(v) = n_test {
                c.n_test = v;
            }
            if let Some(v) = repetitions {
                c.repetitions = v;
            }
            if c.problem.is_none() {
                bail!("bench synthetic needs --problem or a config with \"problem\"");
            }
            c.record_timing &= !output.no_timing;
            (run_synthetic(&c)?, output)
        }
        BenchCommand::Real {
            tuning,
            data,
            repetitions,
            output,
        } => {
            let mut c = tuning.config()?;
            if data.is_some() {
                c.dataset = data;
            }
            if let Some(v) = repetitions {
                c.repetitions = v;
            }
            if c.dataset.is_none() {
                bail!("bench real needs --data or a config with \"dataset\"");
            }
            c.record_timing &= !output.no_timing;
            (run_real(&c)?, output)
        }
    };
    let format = output.format.unwrap_or_else(|| {
        match output.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    });
    emit(output.out.as_deref(), |w| Ok(result.write(w, format)?))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Dcor(a) => dcor(a),
        Command::Select { method } => select(method),
        Command::Classify(a) => classify(a),
        Command::Bench { kind } => bench(kind),
    }
}
