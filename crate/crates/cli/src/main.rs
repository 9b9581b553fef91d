//! `mctree` command line: synthetic sweeps, real-CSV evaluations, the
//! split-search oracle suite, and prediction with saved tree models.
//!
//! Exit codes: 0 success, 1 usage or bad arguments, 2 I/O or file
//! format problems, 3 internal invariant failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mctree::{
    build_tree, load_csv, load_features_csv, DecisionTree, Error, LabelColumn, Result,
};
use mctree_cli::oracle::oracle_check;
use mctree_cli::report::{emit_report, ExperimentReport};
use mctree_cli::runner::run_experiment;
use mctree_cli::spec::{
    AlgorithmId, CsvSource, DataSource, EvalMode, ExperimentSpec, ReportFormat, ScalingMode,
    SyntheticSource, SPEC_SCHEMA,
};

#[derive(Parser)]
#[command(
    name = "mctree",
    version,
    about = "Decision-tree comparison harness: Gini and max-cut splits with \
             optional global or node-local PCA feature construction"
)]
struct Cli {
    /// Worker threads for replicate/fold cells (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScalingArg {
    On,
    Off,
    Best,
}

impl From<ScalingArg> for ScalingMode {
    fn from(s: ScalingArg) -> ScalingMode {
        match s {
            ScalingArg::On => ScalingMode::On,
            ScalingArg::Off => ScalingMode::Off,
            ScalingArg::Best => ScalingMode::Best,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Report file; without it the JSON report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Subcommand)]
enum Command {
    /// Compare algorithms on seeded synthetic cluster datasets.
    Synth {
        #[arg(long, default_value_t = 2)]
        classes: usize,
        /// Informative dimensions.
        #[arg(long, default_value_t = 4)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        noise_dims: usize,
        /// Comma-separated list; one experiment group per size.
        #[arg(long, value_delimiter = ',', default_value = "1000")]
        train_sizes: Vec<usize>,
        #[arg(long, default_value_t = 10000)]
        test_size: usize,
        #[arg(long, default_value_t = 30)]
        replicates: usize,
        /// Label noise fraction.
        #[arg(long, default_value_t = 0.01)]
        flip: f64,
        #[arg(long, default_value_t = 1.0)]
        class_sep: f64,
        /// Algorithm keys, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        algos: Vec<String>,
        #[arg(long, value_enum, default_value_t = ScalingArg::On)]
        scaling: ScalingArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Also write every generated dataset to this directory.
        #[arg(long)]
        dump_csv: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare algorithms on a CSV dataset with cross-validation or a
    /// holdout split.
    Real {
        #[arg(long)]
        csv: PathBuf,
        /// Label column: header name, or 0-based index.
        #[arg(long)]
        label: String,
        /// The CSV has no header row.
        #[arg(long, default_value_t = false)]
        no_header: bool,
        /// Repeated cross-validation as RxF, e.g. 10x10 (the default).
        #[arg(long, conflicts_with = "holdout")]
        cv: Option<String>,
        /// Holdout training fraction, e.g. 0.8.
        #[arg(long)]
        holdout: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "all")]
        algos: Vec<String>,
        #[arg(long, value_enum, default_value_t = ScalingArg::Best)]
        scaling: ScalingArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Train the (single) requested algorithm on all rows and save
        /// the tree as a JSON model.
        #[arg(long)]
        save_model: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the fast split searches against brute force on random
    /// instances.
    OracleCheck {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Classify CSV rows with a saved tree model.
    Predict {
        /// Tree model JSON produced by `real --save-model`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        /// Label column of the CSV, to also report accuracy.
        #[arg(long)]
        label: Option<String>,
        #[arg(long, default_value_t = false)]
        no_header: bool,
        /// Write predictions to a CSV file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment described by a JSON spec file.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: could not configure {jobs} worker threads: {err}");
            return ExitCode::from(3);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Contract(_) => 1,
        Error::Io(_) | Error::Parse { .. } | Error::Format(_) | Error::Json(_) => 2,
        Error::Internal(_) => 3,
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Synth {
            classes,
            dims,
            noise_dims,
            train_sizes,
            test_size,
            replicates,
            flip,
            class_sep,
            algos,
            scaling,
            seed,
            dump_csv,
            output,
        } => {
            let spec = ExperimentSpec {
                schema: SPEC_SCHEMA.to_string(),
                source: DataSource::Synthetic(SyntheticSource {
                    classes,
                    dims,
                    noise_dims,
                    train_sizes,
                    test_size,
                    replicates,
                    flip_fraction: flip,
                    class_sep,
                    dump_csv: dump_csv.map(|p| p.display().to_string()),
                }),
                algorithms: AlgorithmId::parse_list(&algos)?,
                scaling: scaling.into(),
                seed,
                output: None,
            };
            run_and_emit(&spec, &output)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Real {
            csv,
            label,
            no_header,
            cv,
            holdout,
            algos,
            scaling,
            seed,
            save_model,
            output,
        } => {
            let eval = match (&cv, holdout) {
                (Some(cv), None) => parse_cv(cv)?,
                (None, Some(fraction)) => EvalMode::Holdout { fraction },
                (None, None) => EvalMode::Cv { reps: 10, folds: 10 },
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            let spec = ExperimentSpec {
                schema: SPEC_SCHEMA.to_string(),
                source: DataSource::Csv(CsvSource {
                    path: csv.display().to_string(),
                    label: parse_label(&label),
                    has_header: !no_header,
                    eval,
                }),
                algorithms: AlgorithmId::parse_list(&algos)?,
                scaling: scaling.into(),
                seed,
                output: None,
            };
            if save_model.is_some() && spec.algorithms.len() != 1 {
                return Err(Error::contract(
                    "--save-model requires exactly one algorithm",
                ));
            }
            let report = run_and_emit(&spec, &output)?;
            if let Some(model_path) = &save_model {
                save_model_file(&spec, &report, model_path)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck { trials, seed } => {
            let summary = oracle_check(seed, trials)?;
            if summary.passed() {
                println!(
                    "oracle-check: {} trials, all fast/brute-force searches agree",
                    summary.trials
                );
                Ok(ExitCode::SUCCESS)
            } else {
                for failure in &summary.failures {
                    eprintln!("MISMATCH {failure}");
                }
                eprintln!(
                    "oracle-check: {} mismatches in {} trials",
                    summary.failures.len(),
                    summary.trials
                );
                Ok(ExitCode::from(3))
            }
        }
        Command::Predict {
            model,
            csv,
            label,
            no_header,
            out,
        } => predict(model, csv, label, no_header, out),
        Command::Run { spec, output } => {
            let spec = ExperimentSpec::from_file(&spec)?;
            run_and_emit(&spec, &output)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn parse_cv(text: &str) -> Result<EvalMode> {
    let parts: Vec<&str> = text.split(['x', 'X']).collect();
    if parts.len() == 2 {
        if let (Ok(reps), Ok(folds)) = (parts[0].parse(), parts[1].parse()) {
            return Ok(EvalMode::Cv { reps, folds });
        }
    }
    Err(Error::contract(format!(
        "bad --cv value {text:?}; expected RxF such as 10x10"
    )))
}

fn parse_label(text: &str) -> LabelColumn {
    match text.parse::<usize>() {
        Ok(index) => LabelColumn::Index(index),
        Err(_) => LabelColumn::Name(text.to_string()),
    }
}

fn run_and_emit(spec: &ExperimentSpec, cli_output: &OutputArgs) -> Result<ExperimentReport> {
    let report = run_experiment(spec)?;
    print_summary(&report);

    // the command line overrides any output block in a spec file
    let resolved: Option<(PathBuf, ReportFormat)> = match (&cli_output.out, &spec.output) {
        (Some(path), _) => Some((path.clone(), cli_output.format.into())),
        (None, Some(out)) => Some((PathBuf::from(&out.path), out.format)),
        (None, None) => None,
    };
    match resolved {
        Some((path, format)) => {
            emit_report(&report, format, &path)?;
            eprintln!("report written to {}", path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(report)
}

fn print_summary(report: &ExperimentReport) {
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    for group in &report.groups {
        eprintln!("[{}]", group.id);
        eprintln!(
            "  {:<26} {:>6} {:>9} {:>10} {:>8}  {}",
            "algorithm", "scaled", "accuracy", "build(s)", "leaves", "mark"
        );
        for row in &group.aggregates {
            eprintln!(
                "  {:<26} {:>6} {:>9.4} {:>10.4} {:>8.1}  {}",
                row.algorithm.display_name(),
                row.scaled,
                row.mean_accuracy,
                row.mean_build_seconds,
                row.mean_leaves,
                row.marking.symbol()
            );
        }
    }
}

fn save_model_file(
    spec: &ExperimentSpec,
    report: &ExperimentReport,
    path: &Path,
) -> Result<()> {
    let DataSource::Csv(source) = &spec.source else {
        return Err(Error::contract("--save-model requires a CSV source"));
    };
    let algorithm = spec.algorithms[0];
    // standardization choice follows the evaluated report
    let scaled = report
        .groups
        .iter()
        .flat_map(|g| g.aggregates.iter())
        .find(|row| row.algorithm == algorithm)
        .map(|row| row.scaled)
        .unwrap_or(false);
    let data = load_csv(Path::new(&source.path), &source.label, source.has_header)?;
    let tree = build_tree(&data, algorithm.tree_config(scaled))?;
    let json = tree.to_json(Some(data.label_names()))?;
    std::fs::write(path, json + "\n")?;
    eprintln!(
        "model ({}, scaled={scaled}, fit on all {} rows) written to {}",
        algorithm.display_name(),
        data.n_samples(),
        path.display()
    );
    Ok(())
}

fn predict(
    model: PathBuf,
    csv: PathBuf,
    label: Option<String>,
    no_header: bool,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&model)?;
    let (tree, label_names) = DecisionTree::from_json(&text)?;

    let (features, actual) = match &label {
        Some(label) => {
            let data = load_csv(&csv, &parse_label(label), !no_header)?;
            // align the CSV's first-appearance label ids with the ids
            // the model was trained on
            let actual: Vec<usize> = match &label_names {
                Some(names) => data
                    .labels()
                    .iter()
                    .map(|&y| {
                        let name = &data.label_names()[y];
                        names.iter().position(|n| n == name).ok_or_else(|| {
                            Error::contract(format!(
                                "label {name:?} was not present when the model was trained"
                            ))
                        })
                    })
                    .collect::<Result<_>>()?,
                None => data.labels().to_vec(),
            };
            (data.features().clone(), Some(actual))
        }
        None => (load_features_csv(&csv, !no_header)?, None),
    };
    let predicted = tree.predict_rows(&features)?;

    let render = |class: usize| -> String {
        match &label_names {
            Some(names) if class < names.len() => names[class].clone(),
            _ => class.to_string(),
        }
    };
    match out {
        Some(path) => {
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["prediction"])?;
            for &p in &predicted {
                w.write_record([render(p)])?;
            }
            w.flush()?;
            eprintln!(
                "{} predictions written to {}",
                predicted.len(),
                path.display()
            );
        }
        None => {
            for &p in &predicted {
                println!("{}", render(p));
            }
        }
    }
    if let Some(actual) = actual {
        let accuracy = mctree::accuracy(&predicted, &actual)?;
        eprintln!("accuracy: {accuracy:.4} on {} rows", actual.len());
    }
    Ok(ExitCode::SUCCESS)
}
