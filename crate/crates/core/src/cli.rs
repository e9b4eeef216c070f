//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O, 3 validation, 4 fit did not converge.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{generate_synthetic, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{
    accuracy, compare, extendability_table, render_accuracy, render_comparison, render_extendability,
};
use crate::fitting::{fit_baseline, fit_factorized, FitConfig, FitReport, ResidualMode};
use crate::model::{FactorizedModel, PairGaussianModel, Predictor};
use crate::plot::write_curves;
use crate::units::Duration;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

/// Event-counts/adverbial-counts rows printed by `extendability` when no counts are given.
const DEFAULT_EXTENDABILITY: [(usize, usize); 7] = [(2, 2), (2, 4), (2, 8), (2, 16), (4, 16), (8, 16), (16, 16)];

#[derive(Debug, Parser)]
#[command(name = "vague-adverbials", version, about = "Fit and evaluate a factorized model of vague temporal adverbials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the factorized model to a judgment CSV.
    Fit(FitArgs),
    /// Fit one Gaussian per (event, adverbial) pair.
    FitBaseline(FitArgs),
    /// Print every adverbial's probability for an event and the best one.
    Predict {
        /// Factorized model file.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        event: String,
        /// Elapsed time as "<value> <unit>", e.g. "1 day".
        #[arg(long, allow_hyphen_values = true)]
        elapsed: String,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Mean absolute error of a model (factorized or baseline file) on a dataset.
    Evaluate {
        /// Factorized or baseline model file.
        #[arg(long)]
        model: PathBuf,
        /// Judgment CSV.
        #[arg(long)]
        data: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Side-by-side accuracy and size of a factorized model and a baseline.
    Compare {
        #[arg(long)]
        model: PathBuf,
        /// Baseline model file.
        #[arg(long)]
        baseline: PathBuf,
        /// Judgment CSV.
        #[arg(long)]
        data: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Number of functions each model needs for given event/adverbial counts.
    Extendability {
        /// Comma-separated event counts, paired with `--adverbials`.
        #[arg(long, value_delimiter = ',')]
        events: Vec<usize>,
        /// Comma-separated adverbial counts.
        #[arg(long, value_delimiter = ',')]
        adverbials: Vec<usize>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Write a synthetic survey drawn from a model.
    Synthesize {
        /// Factorized model the ratings are drawn from.
        #[arg(long)]
        truth: PathBuf,
        /// Log-spaced elapsed times per event, over [sigma_e/100, 100 sigma_e].
        #[arg(long, default_value_t = 7)]
        times: usize,
        /// Votes per (event, adverbial, time) cell.
        #[arg(long, default_value_t = 100)]
        votes: usize,
        /// Standard deviation of the Gaussian rating noise, applied before clamping to [0, 1].
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV file to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Write per-pair probability curves as TSV files.
    PlotData {
        /// Factorized model file.
        #[arg(long)]
        model: PathBuf,
        /// Directory for one `<event>__<adverbial>.tsv` file per pair.
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Judgment CSV.
    #[arg(long)]
    data: PathBuf,
    /// Model parameter file to write.
    #[arg(long)]
    output: PathBuf,
    /// Optional report file (model plus fit statistics).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Levenberg-Marquardt iteration cap per start [default: 500].
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Relative cost decrease below which a start stops [default: 1e-10].
    #[arg(long)]
    cost_tolerance: Option<f64>,
    /// Relative step size below which a start stops [default: 1e-8].
    #[arg(long)]
    param_tolerance: Option<f64>,
    /// Number of starts [default: 8].
    #[arg(long)]
    multistart: Option<usize>,
    /// Seed for the perturbed starts [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Fit against per-cell mean ratings instead of individual votes.
    #[arg(long)]
    cell_means: bool,
}

impl FitArgs {
    fn config(&self) -> FitConfig {
        let d = FitConfig::default();
        FitConfig {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            cost_tolerance: self.cost_tolerance.unwrap_or(d.cost_tolerance),
            param_tolerance: self.param_tolerance.unwrap_or(d.param_tolerance),
            multistart_count: self.multistart.unwrap_or(d.multistart_count),
            seed: self.seed.unwrap_or(d.seed),
            residual_mode: if self.cell_means { ResidualMode::PerCellMean } else { ResidualMode::PerVote },
        }
    }
}

/// Either kind of model file; a file with a top-level `pairs` array is a baseline.
enum AnyModel {
    Factorized(FactorizedModel),
    Baseline(PairGaussianModel),
}

impl AnyModel {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if value.get("pairs").is_some() {
            Ok(AnyModel::Baseline(PairGaussianModel::load(path)?))
        } else {
            Ok(AnyModel::Factorized(FactorizedModel::load(path)?))
        }
    }

    fn predictor(&self) -> &dyn Predictor {
        match self {
            AnyModel::Factorized(m) => m,
            AnyModel::Baseline(m) => m,
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn finish_fit(report: FitReport, args: &FitArgs, out: &mut dyn Write) -> Result<i32> {
    let model_json = report.model.to_json() + "\n";
    fs::write(&args.output, model_json).map_err(|e| Error::io(&args.output, e))?;
    if let Some(path) = &args.report {
        fs::write(path, report.to_json() + "\n").map_err(|e| Error::io(path, e))?;
    }
    write_out(
        out,
        &format!(
            "final_cost {}\nrmse {}\niterations {}\nconverged {}\nresiduals {}\nparameters {}\nfunctions {}\n",
            report.final_cost,
            report.rmse(),
            report.iterations,
            report.converged,
            report.residual_count,
            report.parameter_count,
            report.function_count
        ),
    )?;
    for (e, a) in &report.non_identifiable {
        write_out(out, &format!("non-identifiable sigma: {e} / {a}\n"))?;
    }
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Fit(args) => {
            let config = args.config();
            config.validate()?;
            let data = Dataset::load_csv(&args.data)?;
            let report = fit_factorized(&data, &config)?;
            finish_fit(report, &args, out)
        }
        Command::FitBaseline(args) => {
            let config = args.config();
            config.validate()?;
            let data = Dataset::load_csv(&args.data)?;
            let report = fit_baseline(&data, &config)?;
            finish_fit(report, &args, out)
        }
        Command::Predict { model, event, elapsed, json } => {
            let elapsed: Duration = elapsed.parse()?;
            let model = FactorizedModel::load(&model)?;
            let probs = model.probabilities(elapsed, &event)?;
            let (best, best_p) = model.best_adverbial(elapsed, &event)?;
            if json {
                let doc = serde_json::json!({
                    "event": event,
                    "elapsed_minutes": elapsed.to_minutes(),
                    "probabilities": probs.iter().map(|(a, p)| serde_json::json!({"adverbial": a, "probability": p})).collect::<Vec<_>>(),
                    "best": { "adverbial": best, "probability": best_p },
                });
                write_out(out, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
            } else {
                let width = probs.iter().map(|(a, _)| a.chars().count()).max().unwrap_or(0);
                for (a, p) in &probs {
                    write_out(out, &format!("{a:<width$}  {p:.6}\n"))?;
                }
                write_out(out, &format!("best: {best} ({best_p:.6})\n"))?;
            }
            Ok(EXIT_OK)
        }
        Command::Evaluate { model, data, json } => {
            let model = AnyModel::load(&model)?;
            let data = Dataset::load_csv(&data)?;
            let report = accuracy(model.predictor(), &data)?;
            if json {
                write_out(out, &(serde_json::to_string_pretty(&report).expect("json") + "\n"))?;
            } else {
                write_out(out, &render_accuracy(&report))?;
                write_out(out, &format!("rmse {}\nrecords {}\n", report.rmse, report.record_count))?;
            }
            Ok(EXIT_OK)
        }
        Command::Compare { model, baseline, data, json } => {
            let factorized = FactorizedModel::load(&model)?;
            let baseline = PairGaussianModel::load(&baseline)?;
            let data = Dataset::load_csv(&data)?;
            let c = compare(&factorized, &baseline, &data)?;
            if json {
                write_out(out, &(serde_json::to_string_pretty(&c).expect("json") + "\n"))?;
            } else {
                write_out(out, &render_comparison(&c))?;
            }
            Ok(EXIT_OK)
        }
        Command::Extendability { events, adverbials, json } => {
            let (events, adverbials): (Vec<usize>, Vec<usize>) = if events.is_empty() && adverbials.is_empty() {
                DEFAULT_EXTENDABILITY.into_iter().unzip()
            } else {
                (events, adverbials)
            };
            let rows = extendability_table(&events, &adverbials)?;
            if json {
                write_out(out, &(serde_json::to_string_pretty(&rows).expect("json") + "\n"))?;
            } else {
                write_out(out, &render_extendability(&rows))?;
            }
            Ok(EXIT_OK)
        }
        Command::Synthesize { truth, times, votes, noise, seed, output } => {
            let truth = FactorizedModel::load(&truth)?;
            let data = generate_synthetic(&truth, times, votes, noise, seed)?;
            data.save_csv(&output)?;
            write_out(out, &format!("wrote {} records to {}\n", data.len(), output.display()))?;
            Ok(EXIT_OK)
        }
        Command::PlotData { model, output_dir } => {
            let model = FactorizedModel::load(&model)?;
            let paths = write_curves(&model, &output_dir)?;
            write_out(out, &format!("wrote {} curves to {}\n", paths.len(), output_dir.display()))?;
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("vague-adverbials").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_one() {
        let (code, _, err) = run_capture(&["frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"));
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("extendability"));
    }

    #[test]
    fn extendability_defaults_to_full_table() {
        let (code, out, _) = run_capture(&["extendability"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 8);
    }

    #[test]
    fn missing_file_exits_two_with_path() {
        let (code, _, err) =
            run_capture(&["predict", "--model", "/nonexistent/model.json", "--event", "Birthday", "--elapsed", "1 day"]);
        assert_eq!(code, EXIT_IO);
        assert!(err.contains("/nonexistent/model.json"));
    }

    #[test]
    fn bad_elapsed_exits_three() {
        let (code, _, _) = run_capture(&["predict", "--model", "x.json", "--event", "Birthday", "--elapsed", "soon"]);
        assert_eq!(code, EXIT_VALIDATION);
    }
}
