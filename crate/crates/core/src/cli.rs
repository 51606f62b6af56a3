//! Command-line front end.
//!
//! Usage errors exit with status 2, failures inside a pipeline with status 1.
//! Every JSON report carries a `provenance` block that pins down the run.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::calibration::{calibrate_dataset, Calibration, CalibrationConfig};
use crate::data::{
    emit_csv, ingest_csv, ingest_csv_with_classes, ingest_features_csv, DatasetSchema, LabelColumn,
    LabeledDataset,
};
use crate::error::{MssaError, Result};
use crate::estimator::ScaleGrid;
use crate::evaluation::{holdout_error, knn_sweep, loo_error, EvalReport};
use crate::kernels::Kernel;
use crate::mssa::{AggregationTrace, MssaClassifier};
use crate::synthetic::{builtin_experiment, sample_mixture};

#[derive(Debug, Parser)]
#[command(
    name = "mssa",
    version,
    about = "Multiclass spatial stagewise aggregation classifier"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a built-in Gaussian-mixture benchmark to CSV.
    Generate(GenerateArgs),
    /// Calibrate critical values on a labeled dataset.
    Calibrate(PipelineArgs),
    /// Calibrate, then report leave-one-out (or test-set) error.
    Evaluate(PipelineArgs),
    /// Evaluate and also write the fixed-k leave-one-out curve.
    Sweep(PipelineArgs),
    /// Calibrate on labeled data and label an unlabeled CSV.
    Predict(PipelineArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=3))]
    pub experiment: u32,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Labeled training data.
    #[arg(long)]
    pub data: PathBuf,
    /// Labeled test set for `evaluate`, unlabeled points for `predict`.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// Label column: header name or 0-based index; the last column by default.
    #[arg(long)]
    pub label_col: Option<String>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub has_header: bool,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, default_value = "rect")]
    pub kernel: Kernel,
    #[arg(long, default_value_t = 3.0, value_parser = parse_grid_base)]
    pub grid_base: f64,
    #[arg(long, default_value_t = 1.25, value_parser = parse_grid_growth)]
    pub grid_growth: f64,
    /// Largest neighbor count; half the sample size by default.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid_max: Option<u64>,
    #[arg(long, default_value_t = 0.1, value_parser = parse_delta)]
    pub delta: f64,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(100..))]
    pub n_mc: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,1,2,4", value_parser = parse_positive)]
    pub c_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-point aggregation traces next to the report.
    #[arg(long)]
    pub emit_traces: bool,
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{s:?} is not finite"));
    }
    Ok(v)
}

fn parse_positive(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v <= 0.0 {
        return Err(format!("{v} is not positive"));
    }
    Ok(v)
}

fn parse_delta(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if !(v > 0.0 && v < 1.0) {
        return Err(format!("{v} is not in (0, 1)"));
    }
    Ok(v)
}

fn parse_grid_base(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v < 1.0 {
        return Err(format!("{v} is below 1"));
    }
    Ok(v)
}

fn parse_grid_growth(s: &str) -> std::result::Result<f64, String> {
    let v = parse_f64(s)?;
    if v <= 1.0 {
        return Err(format!("{v} is not above 1"));
    }
    Ok(v)
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let mut written = Vec::new();
    match run(cli.command, &mut written) {
        Ok(()) => 0,
        Err(e) => {
            for path in &written {
                let _ = fs::remove_file(path);
            }
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command, written: &mut Vec<PathBuf>) -> Result<()> {
    let threads = match &command {
        Command::Generate(a) => a.threads,
        Command::Calibrate(a) | Command::Evaluate(a) | Command::Sweep(a) | Command::Predict(a) => {
            a.threads
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t as usize);
    }
    let pool = builder
        .build()
        .map_err(|e| MssaError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match command {
        Command::Generate(a) => generate(&a, written),
        Command::Calibrate(a) => pipeline(&a, Mode::Calibrate, written),
        Command::Evaluate(a) => pipeline(&a, Mode::Evaluate, written),
        Command::Sweep(a) => pipeline(&a, Mode::Sweep, written),
        Command::Predict(a) => pipeline(&a, Mode::Predict, written),
    })
}

fn generate(a: &GenerateArgs, written: &mut Vec<PathBuf>) -> Result<()> {
    let experiment = builtin_experiment(a.experiment)?;
    let ds = sample_mixture(&experiment.model, a.n as usize, a.seed)?;
    written.push(a.out.clone());
    emit_csv(&ds, &a.out, &DatasetSchema::default())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Calibrate,
    Evaluate,
    Sweep,
    Predict,
}

#[derive(Serialize)]
struct Provenance {
    version: &'static str,
    command: &'static str,
    data: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_data: Option<String>,
    seed: u64,
    kernel: Kernel,
    grid: Vec<usize>,
    delta: f64,
    n_mc: usize,
    c_grid: Vec<f64>,
    c: f64,
    calibration_point: Vec<f64>,
}

#[derive(Serialize)]
struct CandidateError {
    c: f64,
    loo_error: f64,
}

#[derive(Serialize)]
struct CalibrationBlock<'a> {
    z_tilde: &'a [f64],
    c: f64,
    z: &'a [f64],
    candidates: Vec<CandidateError>,
    loo_error_at_c: f64,
}

#[derive(Serialize)]
struct SweepRow {
    k: usize,
    error: f64,
    std_error: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    provenance: Provenance,
    calibration: CalibrationBlock<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    protocol: Option<&'static str>,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    result: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<Vec<SweepRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predictions: Option<usize>,
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<usize>,
    label: usize,
    #[serde(flatten)]
    trace: &'a AggregationTrace,
}

fn pipeline(a: &PipelineArgs, mode: Mode, written: &mut Vec<PathBuf>) -> Result<()> {
    let label_column = a
        .label_col
        .as_deref()
        .map(|s| s.parse::<LabelColumn>().unwrap_or_else(|e| match e {}))
        .unwrap_or(LabelColumn::Last);
    let schema = DatasetSchema::new(label_column, a.has_header, a.delimiter)?;
    let train = ingest_csv(&a.data, &schema)?;

    let grid_max = a.grid_max.map(|m| m as usize).unwrap_or(train.len() / 2);
    let grid = ScaleGrid::geometric(a.grid_base, a.grid_growth, grid_max)?;
    let config = CalibrationConfig {
        delta: a.delta,
        n_mc: a.n_mc as usize,
        c_grid: a.c_grid.clone(),
        seed: a.seed,
        ..CalibrationConfig::default()
    };
    if mode == Mode::Predict && a.test_data.is_none() {
        return Err(MssaError::Config(
            "predict needs --test-data with the points to label".into(),
        ));
    }
    let cal = calibrate_dataset(&train, &grid, a.kernel, &config, None)?;

    let mut result = None;
    let mut protocol = None;
    let mut sweep = None;
    let mut predictions = None;
    let mut traces: Option<Vec<(Option<usize>, usize, AggregationTrace)>> = None;
    match mode {
        Mode::Calibrate => {}
        Mode::Evaluate | Mode::Sweep => {
            let test = match &a.test_data {
                Some(path) => Some(load_test_set(path, &schema, &train)?),
                None => None,
            };
            let report = match &test {
                Some(test) => {
                    protocol = Some("holdout");
                    holdout_error(&train, test, &grid, a.kernel, &cal.z)?
                }
                None => {
                    protocol = Some("leave-one-out");
                    loo_error(&train, &grid, a.kernel, &cal.z)?
                }
            };
            result = Some(EvalReport {
                per_point: None,
                ..report
            });
            if mode == Mode::Sweep {
                sweep = Some(
                    knn_sweep(&train, &grid, a.kernel)?
                        .into_iter()
                        .map(|e| SweepRow {
                            k: e.k,
                            error: e.report.error_rate,
                            std_error: e.report.std_error,
                        })
                        .collect::<Vec<_>>(),
                );
            }
            if a.emit_traces {
                let classifier =
                    MssaClassifier::new(&train, grid.clone(), a.kernel, cal.z.clone())?;
                let (points, truth, loo) = match &test {
                    Some(t) => (t.features(), t.labels(), false),
                    None => (train.features(), train.labels(), true),
                };
                traces = Some(
                    classifier
                        .predict_batch(points, loo, true)?
                        .into_iter()
                        .zip(truth)
                        .map(|(p, &y)| (Some(y), p.label, p.trace.expect("trace requested")))
                        .collect(),
                );
            }
        }
        Mode::Predict => {
            let path = a.test_data.as_ref().expect("checked above");
            let (points, d) = ingest_features_csv(path, a.has_header, a.delimiter)?;
            if d != train.dim() {
                return Err(MssaError::domain(format!(
                    "{} has {d} columns but the training features have {}",
                    path.display(),
                    train.dim()
                )));
            }
            let classifier = MssaClassifier::new(&train, grid.clone(), a.kernel, cal.z.clone())?;
            let preds = classifier.predict_batch(&points, false, a.emit_traces)?;
            let labels_path = a.out.with_extension("labels.csv");
            written.push(labels_path.clone());
            write_labels(&labels_path, &train, preds.iter().map(|p| p.label))?;
            predictions = Some(preds.len());
            if a.emit_traces {
                traces = Some(
                    preds
                        .into_iter()
                        .map(|p| (None, p.label, p.trace.expect("trace requested")))
                        .collect(),
                );
            }
        }
    }

    if let Some(rows) = &sweep {
        let path = a.out.with_extension("sweep.csv");
        written.push(path.clone());
        write_sweep_csv(&path, rows)?;
    }
    if let Some(traces) = &traces {
        let records: Vec<TraceRecord> = traces
            .iter()
            .enumerate()
            .map(|(index, (truth, label, trace))| TraceRecord {
                index,
                truth: *truth,
                label: *label,
                trace,
            })
            .collect();
        let path = a.out.with_extension("traces.json");
        written.push(path.clone());
        write_json(&path, &records)?;
    }

    let report = Report {
        provenance: provenance(a, mode, &grid, &config, &cal),
        calibration: CalibrationBlock {
            z_tilde: cal.z_tilde.as_slice(),
            c: cal.c,
            z: cal.z.as_slice(),
            candidates: cal
                .candidates
                .iter()
                .map(|&(c, loo_error)| CandidateError { c, loo_error })
                .collect(),
            loo_error_at_c: cal.loo_error_at_c.error_rate,
        },
        protocol,
        result,
        sweep,
        predictions,
    };
    written.push(a.out.clone());
    write_json(&a.out, &report)
}

fn load_test_set(
    path: &Path,
    schema: &DatasetSchema,
    train: &LabeledDataset,
) -> Result<LabeledDataset> {
    match train.class_names() {
        Some(names) => ingest_csv_with_classes(path, schema, names),
        None => ingest_csv(path, schema),
    }
}

fn provenance(
    a: &PipelineArgs,
    mode: Mode,
    grid: &ScaleGrid,
    config: &CalibrationConfig,
    cal: &Calibration,
) -> Provenance {
    Provenance {
        version: env!("CARGO_PKG_VERSION"),
        command: match mode {
            Mode::Calibrate => "calibrate",
            Mode::Evaluate => "evaluate",
            Mode::Sweep => "sweep",
            Mode::Predict => "predict",
        },
        data: a.data.display().to_string(),
        test_data: a.test_data.as_ref().map(|p| p.display().to_string()),
        seed: config.seed,
        kernel: a.kernel,
        grid: grid.counts().to_vec(),
        delta: config.delta,
        n_mc: config.n_mc,
        c_grid: config.c_grid.clone(),
        c: cal.c,
        calibration_point: cal.calibration_point.clone(),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> MssaError {
    MssaError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| MssaError::Config(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|source| MssaError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    for row in rows {
        w.serialize(row).map_err(|source| MssaError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn write_labels(
    path: &Path,
    train: &LabeledDataset,
    labels: impl Iterator<Item = usize>,
) -> Result<()> {
    let mut out = String::from("label\n");
    for y in labels {
        out.push_str(&train.class_name(y));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| io_error(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("mssa").chain(args.iter().copied()))
    }

    #[test]
    fn evaluate_defaults() {
        let cli = parse(&[
            "evaluate",
            "--data",
            "iris.csv",
            "--label-col",
            "species",
            "--seed",
            "7",
            "--out",
            "r.json",
        ])
        .unwrap();
        let Command::Evaluate(a) = cli.command else {
            panic!("wrong command")
        };
        assert_eq!(a.seed, 7);
        assert_eq!(a.label_col.as_deref(), Some("species"));
        assert_eq!(a.kernel, Kernel::Rectangular);
        assert_eq!(a.delta, 0.1);
        assert_eq!(a.n_mc, 1000);
        assert_eq!(a.c_grid, vec![0.25, 0.5, 1.0, 2.0, 4.0]);
        assert!(a.has_header);
        assert_eq!(a.grid_max, None);
    }

    #[test]
    fn generate_experiment_one() {
        let cli = parse(&[
            "generate",
            "--experiment",
            "1",
            "--n",
            "500",
            "--out",
            "x.csv",
        ])
        .unwrap();
        let Command::Generate(a) = cli.command else {
            panic!("wrong command")
        };
        assert_eq!((a.experiment, a.n, a.seed), (1, 500, 0));
    }

    #[test]
    fn bad_values_name_the_flag() {
        let cases: &[(&[&str], &str)] = &[
            (
                &["evaluate", "--data", "a", "--out", "b", "--kernel", "bogus"],
                "--kernel",
            ),
            (
                &["evaluate", "--data", "a", "--out", "b", "--delta", "1.5"],
                "--delta",
            ),
            (
                &["evaluate", "--data", "a", "--out", "b", "--n-mc", "10"],
                "--n-mc",
            ),
            (
                &["evaluate", "--data", "a", "--out", "b", "--c-grid", "1,-2"],
                "--c-grid",
            ),
            (
                &[
                    "evaluate",
                    "--data",
                    "a",
                    "--out",
                    "b",
                    "--grid-growth",
                    "1",
                ],
                "--grid-growth",
            ),
            (
                &["generate", "--experiment", "4", "--out", "x"],
                "--experiment",
            ),
            (
                &["generate", "--experiment", "1", "--n", "0", "--out", "x"],
                "--n",
            ),
        ];
        for (args, flag) in cases {
            let err = parse(args).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(flag), "{err}");
        }
        assert_eq!(parse(&["evaluate", "--bogus"]).unwrap_err().exit_code(), 2);
        assert_eq!(main_with_args(["mssa", "--kernel", "bogus"]), 2);
    }
}
