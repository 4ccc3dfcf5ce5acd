//! The `seamdetect` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 computation error.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::cloud::{
    load_cloud, mean_nn_spacing, save_labeled_cloud, voxel_downsample, CloudFormat, Point3, PointClass, PointCloud,
    SpatialIndex, VoxelSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    match_and_score, read_labels, save_labels, sweep, synth_shape, Detector, GroundTruth, ShapeKind, ShapeSpec,
    SweepSpec, TruthSource, TAU_SPACING_FACTOR,
};
use crate::pipeline::{run_pipeline, Depth, Stage};
use config::{parse_config_file, Config, Derived, Overrides};
use report::{corners_from_report, InputInfo, Report, SeamEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "seamdetect", version, about = "Edge, corner and weld-seam detection in point clouds")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Label edge points and write a colored PLY.
    Edges(RunArgs),
    /// Edge then corner detection.
    Corners(RunArgs),
    /// Full pipeline; writes only the JSON report.
    Seams(SeamArgs),
    /// Edges, corners and seams with a colored PLY.
    Pipeline(RunArgs),
    /// Score detections against a label file.
    Eval(EvalArgs),
    /// Precision/recall over a range of one parameter.
    Sweep(SweepArgs),
    /// Write a synthetic cloud and its label file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Input cloud (.ply or whitespace-separated x y z).
    input: PathBuf,
    /// Output PLY colored by class.
    output: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct SeamArgs {
    input: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum What {
    Edges,
    Corners,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Which detections to score.
    #[arg(long, value_enum)]
    what: What,
    /// Detections: a colored PLY for edges, a JSON report for corners.
    detections: PathBuf,
    /// Label file with `x y z class` rows.
    labels: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Detector to run: ms-edge, ev-edge or corner.
    #[arg(long)]
    detector: String,
    /// Parameter to vary.
    #[arg(long)]
    param: String,
    /// Comma-separated values (angles in degrees).
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Neighborhood size of the surface-variation baseline.
    #[arg(long, default_value_t = 20)]
    ev_k: usize,
    /// Surface-variation threshold of the baseline.
    #[arg(long, default_value_t = 0.05)]
    ev_sigma: f64,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Labeled cloud to sweep over.
    labels: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_shape)]
    kind: ShapeKind,
    #[arg(long, default_value_t = 0.1)]
    size: f64,
    #[arg(long, default_value_t = 0.002)]
    spacing: f64,
    /// Standard deviation of Gaussian noise added to each coordinate.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output PLY colored by class.
    output: PathBuf,
    /// Label file; defaults to the output path with a `.labels.xyz` suffix.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_shape(s: &str) -> std::result::Result<ShapeKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Parameter file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Edge neighborhood size.
    #[arg(long)]
    k: Option<usize>,
    /// Edge threshold as a multiple of the point's resolution.
    #[arg(long)]
    lambda: Option<f64>,
    /// Edge neighbors clustered per edge point.
    #[arg(long = "corner-k")]
    corner_k: Option<usize>,
    /// Covariance radius (default: 3x edge spacing).
    #[arg(long)]
    radius: Option<f64>,
    /// Axis extent threshold of the cluster count.
    #[arg(long)]
    rho: Option<f64>,
    /// Allowed cluster size difference.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Lower bound on the angle between cluster means, degrees.
    #[arg(long)]
    theta1: Option<f64>,
    /// Upper bound on the angle between cluster means, degrees.
    #[arg(long)]
    theta2: Option<f64>,
    /// Corner merge distance (default: 2x edge spacing).
    #[arg(long = "merge-radius")]
    merge_radius: Option<f64>,
    /// Seam support distance (default: 2x edge spacing).
    #[arg(long)]
    delta: Option<f64>,
    /// Seam bins.
    #[arg(long)]
    bins: Option<usize>,
    /// Minimum fraction of covered seam bins.
    #[arg(long)]
    gamma: Option<f64>,
    /// Matching distance for scoring (default: 1.5x truth spacing).
    #[arg(long)]
    tau: Option<f64>,
    /// Voxel leaf size; downsampling is off unless set.
    #[arg(long)]
    leaf: Option<f64>,
}

impl ParamArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            edge_k: self.k,
            edge_lambda: self.lambda,
            corner_k: self.corner_k,
            corner_radius: self.radius,
            rho: self.rho,
            epsilon: self.epsilon,
            theta1_deg: self.theta1,
            theta2_deg: self.theta2,
            merge_radius: self.merge_radius,
            seam_delta: self.delta,
            seam_bins: self.bins,
            seam_gamma: self.gamma,
            tau: self.tau,
            voxel_leaf: self.leaf,
        }
    }

    /// Flags over file over defaults.
    fn resolve(&self) -> Result<Config> {
        let file = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => Overrides::default(),
        };
        Config::resolve(self.overrides().or(file))
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::TooFewPoints { .. } | Error::Degenerate(_) => EXIT_COMPUTE,
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();

    let outcome = match cli.command {
        Command::Edges(a) => run_detection("edges", &a.input, Some(&a.output), &a.params, Depth::Edges),
        Command::Corners(a) => run_detection("corners", &a.input, Some(&a.output), &a.params, Depth::Corners),
        Command::Pipeline(a) => run_detection("pipeline", &a.input, Some(&a.output), &a.params, Depth::Seams),
        Command::Seams(a) => run_detection("seams", &a.input, None, &a.params, Depth::Seams),
        Command::Eval(a) => run_eval(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Synth(a) => run_synth(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn point_array(p: Point3) -> [f64; 3] {
    p.to_array()
}

/// Loads the input cloud, downsampling when a leaf size is configured.
fn ingest(input: &Path, config: &Config, stages: &mut Vec<Stage>) -> Result<(PointCloud, InputInfo)> {
    let start = Instant::now();
    let bytes = read_bytes(input)?;
    let cloud = load_cloud(input, CloudFormat::from_path(input))?;
    let info = InputInfo::new(input, &bytes, cloud.len());
    stages.push(Stage::timed("load", cloud.len(), cloud.len(), start));
    match config.voxel_leaf {
        Some(leaf) => {
            let start = Instant::now();
            let down = voxel_downsample(&cloud, VoxelSpec::new(leaf)?);
            stages.push(Stage::timed("voxel", cloud.len(), down.len(), start));
            info!("voxel downsampling: {} -> {} points", cloud.len(), down.len());
            Ok((down, info))
        }
        None => Ok((cloud, info)),
    }
}

fn run_detection(command: &str, input: &Path, output: Option<&Path>, args: &ParamArgs, depth: Depth) -> Result<()> {
    let config = args.resolve()?;
    let mut stages = Vec::new();
    let (cloud, info) = ingest(input, &config, &mut stages)?;
    info!("{command}: {} points from {}", cloud.len(), input.display());
    let out = run_pipeline(&cloud, &config.pipeline, depth)?;
    stages.extend(out.stages.iter().cloned());

    if let Some(path) = output {
        save_labeled_cloud(&cloud, &out.labels(), path)?;
    }

    let derived = Derived {
        corner_radius: out.corners.as_ref().map(|c| c.radius),
        merge_radius: out.corners.as_ref().map(|c| c.merge_radius),
        seam_delta: out.seam_delta,
        tau: None,
    };
    let mut report = Report::new(command, config.to_map(&derived));
    report.input = Some(info);
    report.stages = stages;
    report.results.edges = Some(out.edges.edge_count());
    if let Some(c) = &out.corners {
        report.results.corners = Some(c.corner_points().into_iter().map(point_array).collect());
    }
    if let Some(seams) = &out.seams {
        report.results.seams = Some(
            seams
                .iter()
                .map(|s| SeamEntry {
                    a: s.a,
                    b: s.b,
                    coverage: s.coverage,
                })
                .collect(),
        );
    }
    report.emit(args.report.as_deref())
}

/// Matching distance: configured, or a multiple of the truth cloud's spacing.
fn resolve_tau(config: &Config, truth_cloud: &PointCloud) -> Result<f64> {
    if let Some(tau) = config.tau {
        return Ok(tau);
    }
    let index = SpatialIndex::build(truth_cloud)?;
    let tau = TAU_SPACING_FACTOR * mean_nn_spacing(truth_cloud, &index);
    if tau > 0.0 {
        Ok(tau)
    } else {
        Err(Error::Degenerate("cannot derive a matching distance from the label cloud".into()))
    }
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let config = args.params.resolve()?;
    let start = Instant::now();
    let (truth_cloud, labels) = read_labels(&args.labels)?;
    let truth = GroundTruth::from_labels(truth_cloud.points(), &labels, TruthSource::File)?;
    let tau = resolve_tau(&config, &truth_cloud)?;

    let (detected, truth_points): (Vec<Point3>, &[Point3]) = match args.what {
        What::Corners => {
            let corners = corners_from_report(&args.detections)?;
            (corners.into_iter().map(Point3::from).collect(), &truth.corner_points)
        }
        What::Edges => {
            let cloud = load_cloud(&args.detections, CloudFormat::from_path(&args.detections))?;
            let colors = cloud.colors().ok_or_else(|| {
                Error::invalid(format!("{} has no vertex colors to read labels from", args.detections.display()))
            })?;
            let points = cloud
                .points()
                .iter()
                .zip(colors)
                .filter(|(_, &c)| matches!(PointClass::from_color(c), Some(PointClass::Edge | PointClass::Corner)))
                .map(|(&p, _)| p)
                .collect();
            (points, &truth.edge_points)
        }
    };
    let mut pr = match_and_score(&detected, truth_points, tau)?;
    pr.millis = start.elapsed().as_secs_f64() * 1e3;

    let derived = Derived {
        tau: Some(tau),
        ..Derived::default()
    };
    let mut report = Report::new("eval", config.to_map(&derived));
    report.input = Some(InputInfo::new(&args.detections, &read_bytes(&args.detections)?, detected.len()));
    report.stages = vec![Stage::timed("match", detected.len(), pr.tp, start)];
    report.results.pr = Some(pr);
    report.emit(args.params.report.as_deref())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let config = args.params.resolve()?;
    let detector: Detector = args.detector.parse()?;
    let start = Instant::now();
    let (cloud, labels) = read_labels(&args.labels)?;
    let truth = GroundTruth::from_labels(cloud.points(), &labels, TruthSource::File)?;
    let tau = resolve_tau(&config, &cloud)?;
    let spec = SweepSpec {
        detector,
        param: args.param.clone(),
        values: args.values.clone(),
        edge: config.pipeline.edge,
        corner: config.pipeline.corner,
        ev_k: args.ev_k,
        ev_sigma: args.ev_sigma,
        tau,
    };
    let reports = sweep(&cloud, &truth, &spec)?;

    let mut csv = String::from("param,value,tp,fp,fn,precision,recall,millis\n");
    for (value, r) in args.values.iter().zip(&reports) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{:.3}",
            args.param, value, r.tp, r.fp, r.fn_, r.precision, r.recall, r.millis
        );
    }
    match &args.csv {
        Some(path) => fs::write(path, &csv).map_err(|e| Error::io(path, e))?,
        None => print!("{csv}"),
    }

    let derived = Derived {
        tau: Some(tau),
        ..Derived::default()
    };
    let mut report = Report::new("sweep", config.to_map(&derived));
    report.input = Some(InputInfo::new(&args.labels, &read_bytes(&args.labels)?, cloud.len()));
    report.stages = vec![Stage::timed("sweep", cloud.len(), reports.len(), start)];
    report.results.sweep = Some(reports);
    // CSV owns stdout when no CSV path was given.
    match (&args.params.report, &args.csv) {
        (Some(path), _) => report.emit(Some(path)),
        (None, Some(_)) => report.emit(None),
        (None, None) => Ok(()),
    }
}

/// `cube.ply` -> `cube.labels.xyz`.
fn default_label_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    let mut name = stem;
    name.push(".labels.xyz");
    output.with_file_name(name)
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let spec = ShapeSpec {
        kind: args.kind,
        size: args.size,
        spacing: args.spacing,
        noise: args.noise,
        seed: args.seed,
    };
    let start = Instant::now();
    let shape = synth_shape(&spec)?;
    let label_path = args.labels.clone().unwrap_or_else(|| default_label_path(&args.output));
    save_labeled_cloud(&shape.cloud, &shape.labels, &args.output)?;
    save_labels(&shape.cloud, &shape.labels, &label_path)?;

    let params = [
        ("synth.size", serde_json::Value::from(spec.size)),
        ("synth.spacing", serde_json::Value::from(shape.spacing)),
        ("synth.noise", serde_json::Value::from(spec.noise)),
        ("synth.seed", serde_json::Value::from(spec.seed)),
        ("synth.kind", serde_json::to_value(spec.kind).expect("shape kind serializes")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let mut report = Report::new("synth", params);
    report.stages = vec![Stage::timed("synth", 0, shape.cloud.len(), start)];
    report.results.edges = Some(shape.truth.edge_points.len());
    report.results.corners = Some(shape.truth.corner_points.iter().copied().map(point_array).collect());
    report.emit(args.report.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_path_next_to_output() {
        assert_eq!(default_label_path(Path::new("/tmp/cube.ply")), PathBuf::from("/tmp/cube.labels.xyz"));
        assert_eq!(default_label_path(Path::new("cube")), PathBuf::from("cube.labels.xyz"));
    }

    #[test]
    fn exit_code_taxonomy() {
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_USAGE);
        assert_eq!(exit_code(&Error::parse("f", 1, "x")), EXIT_IO);
        assert_eq!(exit_code(&Error::Degenerate("x".into())), EXIT_COMPUTE);
        assert_eq!(exit_code(&Error::TooFewPoints { needed: 2, available: 1 }), EXIT_COMPUTE);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run(["seamdetect"]), EXIT_USAGE);
        assert_eq!(run(["seamdetect", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["seamdetect", "edges", "in.ply"]), EXIT_USAGE);
        assert_eq!(run(["seamdetect", "--help"]), EXIT_OK);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
