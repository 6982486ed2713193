use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drlssv::ingestion::{Cadence, Diagnostics};
use drlssv::pipeline::{self, PipelineConfig, SynthSpec};
use drlssv::{Error, Pollutant};

/// Air-quality band forecasting: Hartley denoising, logistic feature
/// selection and least-squares SVM regression.
#[derive(Parser, Debug)]
#[command(name = "drlssv", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for every random choice; overrides `eval.seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Print ingestion diagnostics and stage details to standard error.
    #[arg(long, short, global = true)]
    verbose: bool,

    /// Override a config value, e.g. `--set hartley.keep_fraction=0.9`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse station CSV files and write normalized copies.
    Ingest,
    /// Generate planted synthetic station data.
    Synth(SynthArgs),
    /// Impute missing readings and denoise every pollutant grid.
    Preprocess,
    /// Rank pollutants and write selection.csv.
    Select,
    /// Train the regressor and write the model file.
    Train,
    /// Predict AQI and band for every row of a station CSV.
    Predict(PredictArgs),
    /// Score the model and baselines and write report.csv.
    Evaluate,
    /// Sweep test sample counts and write plot data.
    Report,
    /// Run every stage from ingestion to report.
    Run,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Directory for hourly.csv, daily.csv and clean.csv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    stations: usize,
    #[arg(long, default_value_t = 120)]
    days: usize,
    /// Multiplicative noise level as a fraction of the signal.
    #[arg(long, default_value_t = 0.05)]
    noise_sd: f64,
    /// Per-reading spike probability.
    #[arg(long, default_value_t = 0.01)]
    spike_rate: f64,
    /// Comma-separated pollutants that drive the AQI.
    #[arg(long, default_value = "PM10,CO,O3", value_delimiter = ',')]
    planted: Vec<Pollutant>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Station CSV; defaults to the preprocessed file in the output directory.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Read the input as daily rather than hourly data.
    #[arg(long)]
    daily: bool,
}

fn load_config(cli: &Cli) -> drlssv::Result<PipelineConfig> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("eval.seed={seed}"));
    }
    PipelineConfig::load(cli.config.as_deref(), &overrides)
}

fn report_diagnostics(verbose: bool, diag: &Diagnostics) {
    if !verbose {
        return;
    }
    for (line, reason) in &diag.skipped {
        eprintln!("skipped line {line}: {reason}");
    }
    eprintln!(
        "{} gap rows inserted, {} readings outside complete days, {} AQI disagreements",
        diag.gap_rows, diag.dropped_readings, diag.aqi_disagreements
    );
}

fn execute(cli: &Cli) -> drlssv::Result<()> {
    if let Command::Synth(args) = &cli.command {
        let spec = SynthSpec {
            n_stations: args.stations,
            days: args.days,
            seed: cli.seed.unwrap_or(SynthSpec::default().seed),
            planted: args.planted.clone(),
            noise_sd: args.noise_sd,
            spike_rate: args.spike_rate,
        };
        spec.validate()?;
        let cfg = load_config(cli)?;
        let data = spec.generate(&pipeline::load_breakpoints(&cfg)?)?;
        data.write_to_dir(&args.out)?;
        println!("wrote {} stations x {} days to {}", spec.n_stations, spec.days, args.out.display());
        return Ok(());
    }

    let cfg = load_config(cli)?;
    if cli.verbose {
        eprintln!("{}", cfg.to_toml());
    }
    let stdout = std::io::stdout();
    pipeline::with_output_dir(&cfg, || {
        let mut out = stdout.lock();
        let mut diag = Diagnostics::default();
        match &cli.command {
            Command::Synth(_) => unreachable!(),
            Command::Ingest => {
                let s = pipeline::ingest(&cfg, &mut diag).map_err(|e| e.in_stage("ingest"))?;
                report_diagnostics(cli.verbose, &diag);
                let _ = writeln!(out, "ingested {} rows from {} stations", s.rows, s.stations);
            }
            Command::Preprocess => {
                let s = pipeline::preprocess(&cfg, &mut diag).map_err(|e| e.in_stage("preprocess"))?;
                report_diagnostics(cli.verbose, &diag);
                let _ = writeln!(out, "preprocessed {} rows", s.rows);
            }
            Command::Select => {
                let (sel, _) = pipeline::select(&cfg).map_err(|e| e.in_stage("select"))?;
                let _ = write!(out, "{}", sel.to_csv());
            }
            Command::Train => {
                let (_, s) = pipeline::train(&cfg).map_err(|e| e.in_stage("train"))?;
                let _ = writeln!(
                    out,
                    "trained on {} of {} rows, kernel {}, gamma {}",
                    s.n_train, s.n_available, s.kernel, s.gamma
                );
            }
            Command::Predict(args) => {
                let model = pipeline::load_model(&cfg.model_path()).map_err(|e| e.in_stage("predict"))?;
                let input = args
                    .input
                    .clone()
                    .unwrap_or_else(|| cfg.paths.output.join(pipeline::PREPROCESSED_FILE));
                let bytes = std::fs::read(&input).map_err(|e| {
                    Error::InvalidArgument(format!("cannot read {}: {e}", input.display())).in_stage("predict")
                })?;
                let cadence = if args.daily { Cadence::Daily } else { Cadence::Hourly };
                let bp = pipeline::load_breakpoints(&cfg)?;
                let text = pipeline::predict_csv(&model, &bytes, cadence, &bp).map_err(|e| e.in_stage("predict"))?;
                let _ = write!(out, "{text}");
            }
            Command::Evaluate => {
                let reports = pipeline::evaluate_stage(&cfg).map_err(|e| e.in_stage("evaluate"))?;
                for r in reports {
                    let _ = writeln!(
                        out,
                        "{}: n {} accuracy {:.4} fpr {:.4} time {:.2} ms tau {:.4} ({})",
                        r.method_name,
                        r.n_samples,
                        r.accuracy,
                        r.fpr,
                        r.forecast_time_ms,
                        r.tau_verdict.tau,
                        r.tau_verdict.band.name()
                    );
                }
            }
            Command::Report => {
                let rows = pipeline::report(&cfg).map_err(|e| e.in_stage("report"))?;
                let _ = writeln!(out, "wrote {} sweep rows", rows.len());
            }
            Command::Run => {
                let summary = pipeline::run(&cfg)?;
                report_diagnostics(cli.verbose, &summary.diagnostics);
                let _ = write!(out, "{}", summary.render());
            }
        }
        Ok(())
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
