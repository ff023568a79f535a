//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or I/O error. Reports go to
//! stdout, diagnostics to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline::{
    boxplot_detect, chauvenet_detect, mad_detect, mean_sigma_detect, MAD_CONSISTENCY,
};
use crate::datasets::{self, TABLE_SETS};
use crate::error::Error;
use crate::iir::{detect_two_sided, Detection, Method, Sample, Sensitivity, DEFAULT_THRESHOLD};
use crate::io::{self, InputFormat};
use crate::monte_carlo::{self, CurvePoint, Normal, SimScenario, PURE_NORMAL_SIZES};
use crate::oscillator::{cluster_points, ClusterPartition, Metric, PointSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gapsense", version, about = "Gap-inconsistency outlier detection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Flag outliers in one univariate sample.
    Detect(DetectArgs),
    /// Run every detector over several datasets.
    Compare(CompareArgs),
    /// Contamination and sample-size simulations.
    Simulate(SimulateArgs),
    /// Resonance clustering of 2-D points.
    Cluster(ClusterArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Embedded dataset name.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Input file.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SensitivityArgs {
    /// IIR threshold c in [0, 2] (default 1.81).
    #[arg(long = "c", conflicts_with = "weber_k")]
    pub threshold_c: Option<f64>,
    /// Weber constant K in [0, 1]; sets c = 2(1-K)/(1+K).
    #[arg(long = "K")]
    pub weber_k: Option<f64>,
}

impl SensitivityArgs {
    fn resolve(&self) -> Result<Sensitivity, Failure> {
        let sens = match (self.threshold_c, self.weber_k) {
            (_, Some(k)) => Sensitivity::from_weber(k),
            (Some(c), None) => Sensitivity::from_threshold(c),
            (None, None) => Sensitivity::from_threshold(DEFAULT_THRESHOLD),
        };
        sens.map_err(|e| Failure::Usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectMethod {
    /// Two-sided expanding detector.
    Iir,
    /// One-sided (high values) expanding detector.
    IirHigh,
    MeanSigma,
    Boxplot,
    Mad,
    Chauvenet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value = "auto")]
    pub input_format: InputFormatArg,
    #[arg(long, value_enum, default_value = "iir")]
    pub method: DetectMethod,
    #[command(flatten)]
    pub sens: SensitivityArgs,
    /// Multiplier for mean-sigma and mad.
    #[arg(long, default_value_t = 3.0)]
    pub k: f64,
    /// Boxplot fence multiplier.
    #[arg(long, default_value_t = 1.5)]
    pub whisker: f64,
    /// MAD consistency constant.
    #[arg(long, default_value_t = MAD_CONSISTENCY)]
    pub b: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// Include every evaluated gap.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormatArg {
    Auto,
    Csv,
    Whitespace,
}

impl From<InputFormatArg> for InputFormat {
    fn from(f: InputFormatArg) -> Self {
        match f {
            InputFormatArg::Auto => InputFormat::Auto,
            InputFormatArg::Csv => InputFormat::Csv,
            InputFormatArg::Whitespace => InputFormat::Whitespace,
        }
    }
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated dataset names.
    #[arg(long, value_delimiter = ',', default_values_t = TABLE_SETS.map(String::from))]
    pub datasets: Vec<String>,
    #[command(flatten)]
    pub sens: SensitivityArgs,
    #[arg(long, default_value_t = 3.0)]
    pub k: f64,
    #[arg(long, default_value_t = 1.5)]
    pub whisker: f64,
    #[arg(long, default_value_t = MAD_CONSISTENCY)]
    pub b: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    /// Contaminant N(10, 1), n = 500, 0..49%.
    Fig1a,
    /// Contaminant N(5, 1), n = 500, 0..49%.
    Fig1b,
    /// Uncontaminated N(0, 1) across sample sizes.
    Fig1c,
    /// Contamination sweep from the flags below.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMethod {
    Iir,
    Boxplot,
    Mad,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Master seed; falls back to GAPSENSE_SEED, then 0.
    #[arg(long, env = "GAPSENSE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [SimMethod::Iir, SimMethod::Boxplot, SimMethod::Mad])]
    pub methods: Vec<SimMethod>,
    #[command(flatten)]
    pub sens: SensitivityArgs,
    /// MAD multiplier.
    #[arg(long, default_value_t = 3.0)]
    pub k: f64,
    #[arg(long, default_value_t = 1.5)]
    pub whisker: f64,
    /// Sample size (custom).
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub target_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub target_sd: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    pub contaminant_mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub contaminant_sd: f64,
    /// Contamination fractions; defaults to 0.00..=0.49 by 0.01.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    /// Sample sizes for fig1c.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Manhattan,
    Chebyshev,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub sens: SensitivityArgs,
    #[arg(long, default_value_t = crate::oscillator::DEFAULT_MIN_PARTNERS)]
    pub min_partners: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.into())
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Detect(a) => run_detect(a, out),
        Command::Compare(a) => run_compare(a, out),
        Command::Simulate(a) => run_simulate(a, out),
        Command::Cluster(a) => run_cluster(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        // downstream reader closed early, e.g. `| head`
        Err(Failure::Data(Error::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} must be positive, got {v}")))
    }
}

fn load_sample(source: &Source, format: InputFormat) -> Result<Sample, Failure> {
    match (&source.dataset, &source.input) {
        (Some(name), _) => Ok(datasets::builtin_sample(name)?),
        (None, Some(path)) => Ok(io::load_univariate(path, format)?),
        (None, None) => Err(Failure::Usage("one of --dataset or --input is required".into())),
    }
}

fn load_points(source: &Source) -> Result<PointSet, Failure> {
    match (&source.dataset, &source.input) {
        (Some(name), _) => Ok(datasets::builtin_points(name)?),
        (None, Some(path)) => Ok(io::load_points2d(path)?),
        (None, None) => Err(Failure::Usage("one of --dataset or --input is required".into())),
    }
}

fn fmt_values(values: &[f64]) -> String {
    if values.is_empty() {
        "none".to_string()
    } else {
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn fmt_method(m: &Method) -> String {
    match m {
        Method::IirTwoSided { threshold_c, weber_k } | Method::IirHighSide { threshold_c, weber_k } => {
            format!("{} (c = {threshold_c:.4}, K = {weber_k:.4})", m.name())
        }
        Method::MeanSigma { k } => format!("mean_sigma (k = {k})"),
        Method::Boxplot { whisker } => format!("boxplot (whisker = {whisker})"),
        Method::Mad { k, b } => format!("mad (k = {k}, b = {b})"),
        Method::Chauvenet {} => "chauvenet".to_string(),
    }
}

fn run_detect(a: &DetectArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let sens = a.sens.resolve()?;
    positive("k", a.k)?;
    positive("whisker", a.whisker)?;
    positive("b", a.b)?;
    let sample = load_sample(&a.source, a.input_format.into())?;
    let method = match a.method {
        DetectMethod::Iir => Method::two_sided(sens),
        DetectMethod::IirHigh => Method::high_side(sens),
        DetectMethod::MeanSigma => Method::MeanSigma { k: a.k },
        DetectMethod::Boxplot => Method::Boxplot { whisker: a.whisker },
        DetectMethod::Mad => Method::Mad { k: a.k, b: a.b },
        DetectMethod::Chauvenet => Method::Chauvenet {},
    };
    let mut det = method.detect(&sample)?;
    if !a.trace {
        det.trace.clear();
    }
    match a.format {
        OutputFormat::Json => writeln!(out, "{}", io::to_json(&det)?)?,
        OutputFormat::Csv if a.trace => io::write_trace_csv(&det.trace, &mut *out)?,
        OutputFormat::Csv => io::write_detection_csv(&det, &mut *out)?,
        OutputFormat::Text => out.write_all(detect_text(&sample, &det).as_bytes())?,
    }
    Ok(())
}

fn detect_text(sample: &Sample, det: &Detection) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "sample: {} (n = {})", sample.label(), sample.len());
    let _ = writeln!(s, "method: {}", fmt_method(&det.method));
    let _ = writeln!(s, "outliers: {}", fmt_values(&det.outlier_values));
    let _ = writeln!(
        s,
        "normal interval: [{}, {}]",
        det.normal_low(),
        det.normal_high()
    );
    if det.degenerate {
        let _ = writeln!(s, "note: degenerate sample, no inconsistency is defined");
    }
    if let Some(b) = &det.border {
        let _ = writeln!(
            s,
            "border: gap {} ({}) at {} with IIR {:.4}",
            b.index, b.side, b.candidate, b.iir
        );
    }
    if !det.trace.is_empty() {
        let _ = writeln!(
            s,
            "{:>5} {:>5} {:>12} {:>12} {:>12} {:>10} {:>10} {:>10} accepted",
            "gap", "side", "candidate", "width", "max_prev", "er", "ihr", "iir"
        );
        for r in &det.trace {
            let ihr = r.ihr.map_or("-".to_string(), |v| format!("{v:.4}"));
            let side = match r.side {
                crate::iir::Side::Low => "low",
                crate::iir::Side::High => "high",
            };
            let _ = writeln!(
                s,
                "{:>5} {:>5} {:>12} {:>12.6} {:>12.6} {:>10.4} {:>10} {:>10.4} {}",
                r.index, side, r.candidate, r.gap, r.max_prev, r.er, ihr, r.iir, r.accepted
            );
        }
    }
    s
}

/// Flagged values per detector for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub dataset: String,
    pub mean_sigma: Vec<f64>,
    pub boxplot: Vec<f64>,
    pub mad: Vec<f64>,
    /// Not part of the classical comparison table; included as an extension.
    pub chauvenet: Vec<f64>,
    pub iir: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<CompareRow>,
}

pub const COMPARE_COLUMNS: [&str; 5] = ["mean_sigma", "boxplot", "mad", "chauvenet", "iir"];

/// Runs the four baselines and the two-sided detector on each named dataset.
pub fn compare_matrix(
    names: &[String],
    sens: Sensitivity,
    k: f64,
    whisker: f64,
    b: f64,
) -> crate::Result<CompareMatrix> {
    let rows = names
        .iter()
        .map(|name| {
            let s = datasets::builtin_sample(name)?;
            Ok(CompareRow {
                dataset: s.label().to_string(),
                mean_sigma: mean_sigma_detect(&s, k)?.outlier_values,
                boxplot: boxplot_detect(&s, whisker)?.outlier_values,
                mad: mad_detect(&s, k, b)?.outlier_values,
                chauvenet: chauvenet_detect(&s)?.outlier_values,
                iir: detect_two_sided(&s, sens).outlier_values,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(CompareMatrix {
        columns: COMPARE_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}

impl CompareRow {
    pub fn cells(&self) -> [&[f64]; 5] {
        [&self.mean_sigma, &self.boxplot, &self.mad, &self.chauvenet, &self.iir]
    }
}

fn run_compare(a: &CompareArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let sens = a.sens.resolve()?;
    positive("k", a.k)?;
    positive("whisker", a.whisker)?;
    positive("b", a.b)?;
    let matrix = compare_matrix(&a.datasets, sens, a.k, a.whisker, a.b)?;
    match a.format {
        OutputFormat::Json => writeln!(out, "{}", io::to_json(&matrix)?)?,
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut *out);
            w.write_record(["dataset", "method", "outliers"]).map_err(Error::from)?;
            for row in &matrix.rows {
                for (col, cell) in COMPARE_COLUMNS.iter().zip(row.cells()) {
                    w.write_record([row.dataset.as_str(), col, &fmt_values(cell).replace(',', ";")])
                        .map_err(Error::from)?;
                }
            }
            w.flush()?;
        }
        OutputFormat::Text => {
            let mut s = format!("{:<10}", "dataset");
            for c in COMPARE_COLUMNS {
                let label = if c == "chauvenet" { "chauvenet*" } else { c };
                let _ = write!(s, " {label:<14}");
            }
            s = s.trim_end().to_string();
            s.push('\n');
            for row in &matrix.rows {
                let mut line = format!("{:<10}", row.dataset);
                for cell in row.cells() {
                    let _ = write!(line, " {:<14}", fmt_values(cell));
                }
                s.push_str(line.trim_end());
                s.push('\n');
            }
            s.push_str("* chauvenet is an extension column\n");
            out.write_all(s.as_bytes())?;
        }
    }
    Ok(())
}

fn run_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let sens = a.sens.resolve()?;
    positive("k", a.k)?;
    positive("whisker", a.whisker)?;
    let methods: Vec<Method> = a
        .methods
        .iter()
        .map(|m| match m {
            SimMethod::Iir => Method::two_sided(sens),
            SimMethod::Boxplot => Method::Boxplot { whisker: a.whisker },
            SimMethod::Mad => Method::Mad {
                k: a.k,
                b: MAD_CONSISTENCY,
            },
        })
        .collect();
    let reps = a.reps as usize;
    let usage = |e: Error| match e {
        Error::Domain { .. } | Error::TooFew { .. } => Failure::Usage(e.to_string()),
        other => Failure::Data(other),
    };

    let curve: Vec<CurvePoint> = match a.scenario {
        Scenario::Fig1a | Scenario::Fig1b => {
            let mean = if a.scenario == Scenario::Fig1a { 10.0 } else { 5.0 };
            let (base, mut fractions) = monte_carlo::contamination_sweep(mean, reps, a.seed);
            if !a.fractions.is_empty() {
                fractions = a.fractions.clone();
            }
            monte_carlo::breakdown_curve(&base, &fractions, &methods).map_err(usage)?
        }
        Scenario::Fig1c => {
            let sizes = if a.sizes.is_empty() {
                PURE_NORMAL_SIZES.to_vec()
            } else {
                a.sizes.clone()
            };
            monte_carlo::pure_normal_curve(&sizes, &methods, reps, a.seed).map_err(usage)?
        }
        Scenario::Custom => {
            let base = SimScenario {
                n: a.n,
                contamination: 0.0,
                target: Normal::new(a.target_mean, a.target_sd),
                contaminant: Normal::new(a.contaminant_mean, a.contaminant_sd),
                reps,
                master_seed: a.seed,
            };
            let fractions = if a.fractions.is_empty() {
                monte_carlo::contamination_sweep(0.0, reps, a.seed).1
            } else {
                a.fractions.clone()
            };
            monte_carlo::breakdown_curve(&base, &fractions, &methods).map_err(usage)?
        }
    };

    match a.format {
        OutputFormat::Json => writeln!(out, "{}", io::to_json(&curve)?)?,
        OutputFormat::Csv => io::write_curve_csv(&curve, &mut *out)?,
        OutputFormat::Text => {
            let mut s = format!("{:>8} {:<8} {:>12} {:>8}\n", "x", "method", "detected_pct", "stderr");
            for p in &curve {
                let _ = writeln!(s, "{:>8} {:<8} {:>12.3} {:>8.3}", p.x, p.method, p.detected_pct, p.stderr);
            }
            out.write_all(s.as_bytes())?;
        }
    }
    Ok(())
}

/// `[1,2,3,5,7,8]` → `"1-3,5,7-8"`.
pub fn id_ranges(ids: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < ids.len() {
        let start = ids[i];
        let mut end = start;
        while i + 1 < ids.len() && ids[i + 1] == end + 1 {
            i += 1;
            end = ids[i];
        }
        parts.push(if start == end {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    if parts.is_empty() {
        "-".to_string()
    } else {
        parts.join(",")
    }
}

fn cluster_text(part: &ClusterPartition) -> String {
    let mut s = format!(
        "{:<8} {:<24} {:>6} {:<16} {:>11}\n",
        "cluster", "members", "right", "silent", "probability"
    );
    for c in &part.clusters {
        let _ = writeln!(
            s,
            "{:<8} {:<24} {:>6} {:<16} {:>10.0}%",
            c.cluster,
            id_ranges(&c.members),
            c.right_clustering,
            id_ranges(&c.silent),
            100.0 * c.probability
        );
    }
    let unassigned: Vec<usize> = part
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.is_none().then_some(i + 1))
        .collect();
    let _ = writeln!(s, "silent seeds: {}", id_ranges(&part.silent_ids));
    let _ = writeln!(s, "unassigned: {}", id_ranges(&unassigned));
    s
}

fn run_cluster(a: &ClusterArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let sens = a.sens.resolve()?;
    if a.min_partners == 0 {
        return Err(Failure::Usage("--min-partners must be at least 1".into()));
    }
    let points = load_points(&a.source)?;
    let metric = match a.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Manhattan => Metric::Manhattan,
        MetricArg::Chebyshev => Metric::Chebyshev,
    };
    let part = cluster_points(&points, metric, sens, a.min_partners)?;
    match a.format {
        OutputFormat::Json => writeln!(out, "{}", io::to_json(&part)?)?,
        OutputFormat::Csv => io::write_partition_csv(&part, &mut *out)?,
        OutputFormat::Text => out.write_all(cluster_text(&part).as_bytes())?,
    }
    Ok(())
}
