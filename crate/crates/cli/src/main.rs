//! Batch command-line front end: corpus generation and conversion, experiment
//! execution, and plot-data emission.

mod config;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use handid::dataset::{
    generate_synthetic, load_corpus, read_recording_csv, save_corpus, Corpus, DeviceProfile, Pace,
    Recording, SyntheticSpec,
};
use handid::eval::{
    render_summary_table, run_experiment, ClassifierKind, ConfusionMatrix, ExperimentReport,
    GridSpec, LeakageMode, PipelineSpec, ScenarioSpec,
};
use handid::io_util::write_atomic;
use handid::preprocess::{feature_matrix, preprocess_corpus};

use config::{parse_config_text, RunConfig};

#[derive(Parser)]
#[command(
    name = "handid",
    version,
    about = "Identifies who performed a hand gesture from motion-capture recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus directory
    Generate(GenerateArgs),
    /// Convert a raw recording tree into the corpus directory format
    Convert(ConvertArgs),
    /// Run classification experiments and write report files
    Run(RunArgs),
    /// Emit a 2-D discriminant projection of the corpus as plot-ready CSV
    Project(ProjectArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output corpus directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    performers: usize,
    #[arg(long, default_value_t = 22)]
    gestures: usize,
    #[arg(long, default_value_t = 10)]
    sensors: usize,
    /// Repetitions at natural pace
    #[arg(long, default_value_t = 6)]
    natural: usize,
    /// Repetitions at rapid pace
    #[arg(long, default_value_t = 2)]
    rapid: usize,
    /// Repetitions at slow pace
    #[arg(long, default_value_t = 2)]
    slow: usize,
    /// Distance between per-performer style offsets
    #[arg(long, default_value_t = 2.0)]
    separation: f64,
    /// Additive sample noise (standard deviation)
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ConvertArgs {
    /// Raw download directory: <performer>/<gesture>/<recording>.csv
    #[arg(long)]
    input: PathBuf,
    /// Device profile of the recordings: dg5vhand or cyberglove
    #[arg(long)]
    device: String,
    /// Output corpus directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Key-value config file; explicit flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus directory
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Scenario list: a | a:<gesture> | b | c | c:<train>/<test>, ';'-separated
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated classifiers: lda,knn,svm
    #[arg(long)]
    classifier: Option<String>,
    /// paper-faithful or fold-safe
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Outer cross-validation folds
    #[arg(long)]
    outer: Option<usize>,
    /// Inner cross-validation folds
    #[arg(long)]
    inner: Option<usize>,
    /// Number of principal components
    #[arg(long)]
    pca: Option<usize>,
    /// Resampled recording length
    #[arg(long)]
    resample: Option<usize>,
    /// LDA grid: comma-separated projection dimensions
    #[arg(long)]
    lda_dims: Option<String>,
    /// k-NN grid: comma-separated neighbour counts
    #[arg(long)]
    knn_k: Option<String>,
    /// SVM grid: comma-separated penalty values
    #[arg(long)]
    svm_c: Option<String>,
    /// SVM grid: comma-separated RBF gamma values
    #[arg(long)]
    svm_gamma: Option<String>,
    /// Output directory for summary, confusion matrices and manifest
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectArgs {
    /// Corpus directory
    #[arg(long)]
    corpus: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    resample: usize,
    #[arg(long, default_value_t = 100)]
    pca: usize,
}

/// CLI failure classes; each maps to a distinct exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values (exit 2).
    Usage(String),
    /// Unreadable or malformed data (exit 3).
    Data(String),
    /// A numerical routine failed (exit 4).
    Numerical(String),
}

impl CliError {
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<handid::Error> for CliError {
    fn from(e: handid::Error) -> Self {
        match e {
            handid::Error::Numerical(_) => CliError::Numerical(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Run(args) => cmd_run(args),
        Command::Project(args) => cmd_project(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        performer_count: args.performers,
        gesture_count: args.gestures,
        repetitions_per_pace: [
            (Pace::Natural, args.natural),
            (Pace::Rapid, args.rapid),
            (Pace::Slow, args.slow),
        ]
        .into_iter()
        .collect(),
        sensor_count: args.sensors,
        style_separation: args.separation,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    // Bad generator parameters are usage errors, not data errors.
    let corpus = generate_synthetic(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    save_corpus(&corpus, &args.out)?;
    println!(
        "wrote {} recordings ({} performers x {} gestures x {} repetitions) to {}",
        corpus.recordings.len(),
        args.performers,
        args.gestures,
        args.natural + args.rapid + args.slow,
        args.out.display()
    );
    Ok(())
}

/// Best-effort converter for a raw download laid out as
/// `<performer>/<gesture>/<recording>.csv`. The layout of the public archive
/// has not been confirmed against a live copy; on mismatch this fails with a
/// description of what it expected.
fn cmd_convert(args: ConvertArgs) -> Result<(), CliError> {
    let device = match args.device.as_str() {
        "dg5vhand" => DeviceProfile::dg5vhand(),
        "cyberglove" => DeviceProfile::cyberglove(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown device {other:?} (expected dg5vhand or cyberglove)"
            )))
        }
    };

    let mut recordings: Vec<Recording> = Vec::new();
    for performer_dir in sorted_dir(&args.input)? {
        if !performer_dir.is_dir() {
            continue;
        }
        let performer = parse_trailing_number(&performer_dir).ok_or_else(|| {
            CliError::Data(format!(
                "{}: expected performer directories named by number (e.g. 1 or p1); \
                 the converter assumes <performer>/<gesture>/<recording>.csv",
                performer_dir.display()
            ))
        })?;
        for gesture_dir in sorted_dir(&performer_dir)? {
            if !gesture_dir.is_dir() {
                continue;
            }
            let gesture = parse_trailing_number(&gesture_dir).ok_or_else(|| {
                CliError::Data(format!(
                    "{}: expected gesture directories named by number (e.g. 7 or g7)",
                    gesture_dir.display()
                ))
            })?;
            for file in sorted_dir(&gesture_dir)? {
                if file.extension().and_then(|e| e.to_str()) != Some("csv") {
                    continue;
                }
                let (samples, timestamps) = read_recording_csv(&file, &device)?;
                let name = file.file_name().and_then(|n| n.to_str()).unwrap_or("");
                let pace = if name.contains("rapid") {
                    Pace::Rapid
                } else if name.contains("slow") {
                    Pace::Slow
                } else {
                    Pace::Natural
                };
                recordings.push(
                    Recording::new(samples, timestamps, performer, gesture, pace)
                        .map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?,
                );
            }
        }
    }
    if recordings.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no recordings found; the converter expects \
             <performer>/<gesture>/<recording>.csv with numeric directory names",
            args.input.display()
        )));
    }
    let count = recordings.len();
    let corpus = Corpus::new(device, recordings, Default::default())?;
    save_corpus(&corpus, &args.out)?;
    println!("converted {} recordings to {}", count, args.out.display());
    Ok(())
}

/// One scenario argument: either a single spec or "every gesture separately".
enum ScenarioArg {
    AllGestures,
    Single(ScenarioSpec),
}

impl ScenarioArg {
    fn canonical(&self) -> String {
        match self {
            ScenarioArg::AllGestures => "a".to_string(),
            ScenarioArg::Single(ScenarioSpec::A { gesture_id }) => format!("a:{gesture_id}"),
            ScenarioArg::Single(ScenarioSpec::B) => "b".to_string(),
            ScenarioArg::Single(ScenarioSpec::C {
                train_gestures,
                test_gestures,
            }) => format!(
                "c:{}/{}",
                join_ids(train_gestures),
                join_ids(test_gestures)
            ),
        }
    }
}

fn join_ids(ids: &BTreeSet<u32>) -> String {
    ids.iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_scenarios(text: &str) -> Result<Vec<ScenarioArg>, CliError> {
    let mut out = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        out.push(match part {
            "a" => ScenarioArg::AllGestures,
            "b" => ScenarioArg::Single(ScenarioSpec::B),
            "c" => ScenarioArg::Single(ScenarioSpec::c_default()),
            _ => {
                if let Some(id) = part.strip_prefix("a:") {
                    let gesture_id: u32 = id.parse().map_err(|_| {
                        CliError::Usage(format!("scenario {part:?}: bad gesture id {id:?}"))
                    })?;
                    let spec = ScenarioSpec::A { gesture_id };
                    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                    ScenarioArg::Single(spec)
                } else if let Some(sets) = part.strip_prefix("c:") {
                    let Some((train, test)) = sets.split_once('/') else {
                        return Err(CliError::Usage(format!(
                            "scenario {part:?}: expected c:<train-ids>/<test-ids>"
                        )));
                    };
                    let spec = ScenarioSpec::C {
                        train_gestures: parse_id_list(train, part)?,
                        test_gestures: parse_id_list(test, part)?,
                    };
                    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
                    ScenarioArg::Single(spec)
                } else {
                    return Err(CliError::Usage(format!(
                        "unknown scenario {part:?} (expected a, a:<gesture>, b, c or c:<train>/<test>)"
                    )));
                }
            }
        });
    }
    Ok(out)
}

fn parse_id_list(text: &str, context: &str) -> Result<BTreeSet<u32>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| CliError::Usage(format!("scenario {context:?}: bad gesture id {s:?}")))
        })
        .collect()
}

fn parse_classifiers(text: &str) -> Result<Vec<ClassifierKind>, CliError> {
    let mut kinds = Vec::new();
    for part in text.split(',') {
        let kind: ClassifierKind = part
            .trim()
            .parse()
            .map_err(|e: handid::Error| CliError::Usage(e.to_string()))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(CliError::Usage("no classifiers requested".to_string()));
    }
    Ok(kinds)
}

fn effective_run_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let file_values = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            parse_config_text(&text, path)?
        }
        None => Default::default(),
    };
    let get = |key: &str| file_values.get(key).cloned();

    let corpus = args
        .corpus
        .clone()
        .or_else(|| get("corpus").map(PathBuf::from))
        .ok_or_else(|| CliError::Usage("missing --corpus (or corpus in --config)".to_string()))?;
    let out = args
        .out
        .clone()
        .or_else(|| get("out").map(PathBuf::from))
        .ok_or_else(|| CliError::Usage("missing --out (or out in --config)".to_string()))?;
    let scenario = args
        .scenario
        .clone()
        .or_else(|| get("scenario"))
        .unwrap_or_else(|| "b".to_string());
    let classifiers = args
        .classifier
        .clone()
        .or_else(|| get("classifiers"))
        .unwrap_or_else(|| "lda,knn,svm".to_string());
    let mode: LeakageMode = args
        .mode
        .clone()
        .or_else(|| get("mode"))
        .unwrap_or_else(|| "paper-faithful".to_string())
        .parse()
        .map_err(|e: handid::Error| CliError::Usage(e.to_string()))?;
    let default_lda = match GridSpec::default_lda() {
        GridSpec::Lda { dims } => dims,
        _ => unreachable!(),
    };
    let default_knn = match GridSpec::default_knn() {
        GridSpec::Knn { neighbours } => neighbours,
        _ => unreachable!(),
    };
    let (default_c, default_gamma) = match GridSpec::default_svm() {
        GridSpec::Svm { costs, gammas } => (costs, gammas),
        _ => unreachable!(),
    };
    Ok(RunConfig {
        corpus,
        scenario,
        classifiers,
        mode,
        seed: numeric(args.seed, get("seed"), "seed", 0)?,
        outer_folds: numeric(args.outer, get("outer_folds"), "outer_folds", 4)?,
        inner_folds: numeric(args.inner, get("inner_folds"), "inner_folds", 4)?,
        pca: numeric(args.pca, get("pca"), "pca", 100)?,
        resample: numeric(args.resample, get("resample"), "resample", 100)?,
        lda_dims: numeric_list(&args.lda_dims, get("lda_dims"), "lda_dims", default_lda)?,
        knn_k: numeric_list(&args.knn_k, get("knn_k"), "knn_k", default_knn)?,
        svm_c: numeric_list(&args.svm_c, get("svm_c"), "svm_c", default_c)?,
        svm_gamma: numeric_list(&args.svm_gamma, get("svm_gamma"), "svm_gamma", default_gamma)?,
        out,
    })
}

/// Comma-separated flag value, else config value, else default list.
fn numeric_list<T: std::str::FromStr>(
    flag: &Option<String>,
    file_value: Option<String>,
    key: &str,
    default: Vec<T>,
) -> Result<Vec<T>, CliError> {
    let text = match (flag, file_value) {
        (Some(v), _) => v.clone(),
        (None, Some(v)) => v,
        (None, None) => return Ok(default),
    };
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{key}: bad value {s:?}")))
        })
        .collect()
}

/// Flag value, else config value, else default.
fn numeric<T: std::str::FromStr>(
    flag: Option<T>,
    file_value: Option<String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    match (flag, file_value) {
        (Some(v), _) => Ok(v),
        (None, Some(text)) => text
            .parse()
            .map_err(|_| CliError::Usage(format!("config key {key}: bad value {text:?}"))),
        (None, None) => Ok(default),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = effective_run_config(&args)?;
    let scenarios = parse_scenarios(&cfg.scenario)?;
    let kinds = parse_classifiers(&cfg.classifiers)?;
    // Canonicalize the scenario/classifier strings for the manifest.
    cfg.scenario = scenarios
        .iter()
        .map(ScenarioArg::canonical)
        .collect::<Vec<_>>()
        .join(";");
    cfg.classifiers = kinds
        .iter()
        .map(ClassifierKind::to_string)
        .collect::<Vec<_>>()
        .join(",");

    let corpus = load_corpus(&cfg.corpus)?;
    let grids: Vec<GridSpec> = kinds
        .iter()
        .map(|&k| match k {
            ClassifierKind::Lda => GridSpec::Lda {
                dims: cfg.lda_dims.clone(),
            },
            ClassifierKind::Knn => GridSpec::Knn {
                neighbours: cfg.knn_k.clone(),
            },
            ClassifierKind::Svm => GridSpec::Svm {
                costs: cfg.svm_c.clone(),
                gammas: cfg.svm_gamma.clone(),
            },
        })
        .collect();
    for grid in &grids {
        grid.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let pipeline = PipelineSpec {
        target_len: cfg.resample,
        pca_components: cfg.pca,
    };
    let cv = cfg.cv();

    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Data(format!("{}: {e}", cfg.out.display())))?;

    let mut all_reports = Vec::new();
    let mut mean_rows = String::new();
    for scenario in &scenarios {
        match scenario {
            ScenarioArg::Single(spec) => {
                let report = run_experiment(&corpus, spec, &grids, &cv, &pipeline)?;
                write_confusions(&cfg.out, &report.scenario.code(), &report)?;
                all_reports.push(report);
            }
            ScenarioArg::AllGestures => {
                let mut reports = Vec::new();
                for gesture_id in corpus.gestures() {
                    let spec = ScenarioSpec::A { gesture_id };
                    reports.push(run_experiment(&corpus, &spec, &grids, &cv, &pipeline)?);
                }
                mean_rows.push_str(&render_scenario_a_mean(&kinds, &reports));
                write_aggregated_confusions(&cfg.out, "a", &kinds, &reports)?;
                all_reports.extend(reports);
            }
        }
    }

    let mut summary = render_summary_table(&all_reports);
    summary.push_str(&mean_rows);
    write_atomic(&cfg.out.join("summary.txt"), &summary)?;
    write_atomic(&cfg.out.join("manifest.txt"), &cfg.to_manifest())?;
    print!("{summary}");
    println!("report files written to {}", cfg.out.display());
    Ok(())
}

fn write_confusions(out: &Path, code: &str, report: &ExperimentReport) -> Result<(), CliError> {
    for classifier in &report.classifiers {
        let name = format!("confusion_{code}_{}.csv", classifier.classifier);
        write_atomic(&out.join(name), &classifier.confusion.to_csv())?;
    }
    Ok(())
}

/// Mean accuracy across the per-gesture reports, one summary row.
fn render_scenario_a_mean(kinds: &[ClassifierKind], reports: &[ExperimentReport]) -> String {
    let mut row = String::from("a(mean)");
    for &kind in kinds {
        let mut sum = 0.0;
        let mut count = 0usize;
        for report in reports {
            if let Some(c) = report.classifier(kind) {
                sum += c.accuracy;
                count += 1;
            }
        }
        if count == 0 {
            row.push_str("\t-");
        } else {
            row.push_str(&format!("\t{:.1}", 100.0 * sum / count as f64));
        }
    }
    row.push('\n');
    row
}

/// Sums the per-gesture confusion matrices into one CSV per classifier.
fn write_aggregated_confusions(
    out: &Path,
    code: &str,
    kinds: &[ClassifierKind],
    reports: &[ExperimentReport],
) -> Result<(), CliError> {
    for &kind in kinds {
        let mut labels: BTreeSet<u32> = BTreeSet::new();
        for report in reports {
            if let Some(c) = report.classifier(kind) {
                labels.extend(c.confusion.labels.iter().copied());
            }
        }
        let mut total = ConfusionMatrix::new(labels.into_iter().collect());
        for report in reports {
            if let Some(c) = report.classifier(kind) {
                total.merge(&c.confusion).map_err(CliError::from)?;
            }
        }
        let name = format!("confusion_{code}_{kind}.csv");
        write_atomic(&out.join(name), &total.to_csv())?;
    }
    Ok(())
}

fn cmd_project(args: ProjectArgs) -> Result<(), CliError> {
    let corpus = load_corpus(&args.corpus)?;
    let (vectors, _state) = preprocess_corpus(&corpus, args.resample)?;

    let n = vectors.len();
    let matrix = feature_matrix(&vectors)?;
    let p = matrix.ncols();
    let labels: Vec<u32> = vectors.iter().map(|v| v.performer_id).collect();

    let pca_dim = args.pca.min(n.saturating_sub(1)).min(p).max(1);
    let pca = handid::classifiers::pca_fit(matrix.view(), pca_dim)?;
    let reduced = handid::classifiers::pca_transform_batch(&pca, matrix.view())?;
    let lda = handid::classifiers::lda_fit(reduced.view(), &labels, 2)?;
    let projected = handid::classifiers::lda_project(&lda, reduced.view())?;

    let mut csv = String::from("x,y,performer,gesture\n");
    for (row, v) in projected.rows().into_iter().zip(&vectors) {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            handid::io_util::format_f64(row[0]),
            handid::io_util::format_f64(row[1]),
            v.performer_id,
            v.gesture_id
        ));
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
        }
    }
    write_atomic(&args.out, &csv)?;
    println!("wrote {} projected points to {}", n, args.out.display());
    Ok(())
}

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .into_iter()
        .map(|entry| entry.path())
        .collect();
    paths.sort();
    Ok(paths)
}

/// "p3" -> 3, "gesture_07" -> 7, "12" -> 12.
fn parse_trailing_number(path: &Path) -> Option<u32> {
    let name = path.file_name()?.to_str()?;
    let digits: String = name
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}
