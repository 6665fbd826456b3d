//! `rf-sentinel`: generate synthetic captures, train the pipeline, classify
//! captures and run the evaluation protocols.
//!
//! ```bash
//! rf-sentinel gen --out data --kind mixed --count 100 --snr 25
//! rf-sentinel train --dataset data --out models.json
//! rf-sentinel classify --models models.json data/capture_00000.f32
//! rf-sentinel eval --out report --runs 10 --features top3 --clf knn
//! rf-sentinel eval --out sweep --delta-grid 0.1,1,2,3.5 --snr-grid -10,0,10
//! ```
//!
//! Exit status: 0 success, 2 usage, 3 data or file format, 4 numeric or model.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rf_sentinel::classifiers::ClassifierKind;
use rf_sentinel::dataset::{self, GenerationSpec};
use rf_sentinel::eval::{
    self, Components, EvalConfig, FeatureSet, MultistageOutcome, SnrTraining, SweepSpec,
    TrainParams,
};
use rf_sentinel::{Error, Result, SignalClass};

const THREADS_ENV: &str = "RF_SENTINEL_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "rf-sentinel",
    version,
    about = "Passive RF detection and controller fingerprinting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
enum Command {
    /// Synthesise a capture dataset
    Gen(GenArgs),
    /// Fit detector, NCA and classifier models on a dataset
    Train(TrainArgs),
    /// Run the multistage pipeline on raw capture files
    Classify(ClassifyArgs),
    /// Run an evaluation protocol and write its reports
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum DatasetKind {
    /// Catalogued controllers only
    Controllers,
    /// Noise, Wi-Fi and Bluetooth captures plus every controller
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Features {
    All,
    Top3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Clf {
    Knn,
    Da,
    Randf,
}

impl From<Clf> for ClassifierKind {
    fn from(c: Clf) -> Self {
        match c {
            Clf::Knn => ClassifierKind::Knn,
            Clf::Da => ClassifierKind::Da,
            Clf::Randf => ClassifierKind::RandF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Component {
    Detector,
    Nca,
    Classifier,
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = DatasetKind::Controllers)]
    kind: DatasetKind,
    /// Captures per class
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 25.0, allow_hyphen_values = true)]
    snr: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Add the two duplicated-spec controllers (17 classes)
    #[arg(long)]
    duplicates: bool,
}

#[derive(Args, Debug, Serialize)]
struct ModelArgs {
    /// Number of NCA-ranked features kept
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    /// NCA regularisation
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// kNN neighbour count
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Random forest size
    #[arg(long, default_value_t = 100)]
    trees: usize,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Component::Detector, Component::Nca, Component::Classifier])]
    components: Vec<Component>,
    /// Detector threshold as a multiple of the noise detail-trace deviation
    #[arg(long, default_value_t = 3.5)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = Clf::Knn)]
    clf: Clf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    models: PathBuf,
    /// Raw little-endian binary32 capture files
    files: Vec<PathBuf>,
    #[arg(long, default_value_t = 100e6)]
    sample_rate: f64,
    /// Write verdicts here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    /// Output directory for reports
    #[arg(long)]
    out: PathBuf,
    /// Evaluate an existing controller dataset instead of generating one
    #[arg(long, conflicts_with_all = ["snr_grid", "delta_grid", "snr", "count", "duplicates"])]
    dataset: Option<PathBuf>,
    #[arg(long, default_value_t = 10, conflicts_with = "delta_grid")]
    runs: usize,
    /// Accuracy-versus-SNR table, or the SNRs of a detector sweep
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_grid: Option<Vec<f64>>,
    /// Detector threshold sweep over these multiples of the noise deviation
    #[arg(long, value_delimiter = ',')]
    delta_grid: Option<Vec<f64>>,
    #[arg(long, value_enum, conflicts_with = "delta_grid")]
    features: Option<Features>,
    /// Classifiers to evaluate; all three by default
    #[arg(long, value_enum, value_delimiter = ',', conflicts_with = "delta_grid")]
    clf: Vec<Clf>,
    /// Train once at this SNR and test across the grid
    #[arg(
        long,
        requires = "snr_grid",
        conflicts_with = "delta_grid",
        allow_hyphen_values = true
    )]
    train_snr: Option<f64>,
    /// Captures per class (per emission class for a sweep)
    #[arg(long)]
    count: Option<usize>,
    /// SNR of the generated dataset
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long)]
    duplicates: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::InvalidArgument(_) => 2,
        Error::Format(_) | Error::Io { .. } | Error::Json(_) => 3,
        _ => 4,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got '{v}'"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("{THREADS_ENV}: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn eval_config(seed: u64, runs: usize, m: &ModelArgs) -> EvalConfig {
    let mut cfg = EvalConfig {
        runs,
        seed,
        top_k: m.top_k,
        ..EvalConfig::default()
    };
    cfg.nca.lambda = m.lambda;
    cfg.classifier.knn_k = m.k;
    cfg.classifier.forest.n_trees = m.trees;
    cfg.classifier.forest.seed = seed;
    cfg
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let mut spec = GenerationSpec::controllers(a.count, a.snr, a.seed, a.duplicates);
    if a.kind == DatasetKind::Mixed {
        let mut classes = vec![
            SignalClass::Noise,
            SignalClass::WiFi,
            SignalClass::Bluetooth { device_id: 1 },
        ];
        classes.extend(spec.classes);
        spec.classes = classes;
    }
    let captures = dataset::generate(&spec)?;
    let m = dataset::write_dataset(&a.out, &captures)?;
    eprintln!("wrote {} captures to {}", m.entries.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    if a.components.is_empty() {
        return Err(Error::Usage("no components to train".into()));
    }
    let (_, captures) = dataset::load_dataset(&a.dataset)?;
    let mut eval = eval_config(a.seed, 1, &a.model);
    eval.classifier.kind = a.clf.into();
    let params = TrainParams {
        delta_multiple: a.delta,
        eval,
        ..TrainParams::default()
    };
    let components = Components {
        detector: a.components.contains(&Component::Detector),
        nca: a.components.contains(&Component::Nca),
        classifier: a.components.contains(&Component::Classifier),
    };
    let models = eval::train_models(&captures, components, &params)?;
    write_json(&a.out, &models)
}

#[derive(Serialize)]
struct ClassifyRecord<'a> {
    file: &'a Path,
    #[serde(flatten)]
    outcome: MultistageOutcome,
}

fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    if a.files.is_empty() {
        return Err(Error::Usage("no capture files given".into()));
    }
    let text = fs::read_to_string(&a.models).map_err(|e| Error::Io {
        path: a.models.clone(),
        source: e,
    })?;
    let models: eval::TrainedModels = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", a.models.display())))?;
    if models.format_version != eval::MODELS_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: format_version {} is not supported",
            a.models.display(),
            models.format_version
        )));
    }
    let mut records = Vec::with_capacity(a.files.len());
    for f in &a.files {
        let capture = dataset::load_raw_capture(f, a.sample_rate)?;
        records.push(ClassifyRecord {
            file: f,
            outcome: eval::run_multistage(&capture, &models)?,
        });
    }
    let text = serde_json::to_string_pretty(&records)? + "\n";
    match &a.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    run_config: &'a Command,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct Timing {
    elapsed_seconds: f64,
}

fn stats_csv(reports: &[eval::EvaluationReport]) -> String {
    let mut s = String::from("classifier,feature_set,mean,median,q1,q3,min,max\n");
    for r in reports {
        let b = &r.stats;
        s += &format!(
            "{},{},{},{},{},{},{},{}\n",
            r.classifier.name(),
            r.feature_set.name(),
            b.mean,
            b.median,
            b.q1,
            b.q3,
            b.min,
            b.max
        );
    }
    s
}

fn cmd_eval(a: &EvalArgs, cmd: &Command) -> Result<()> {
    create_dir(&a.out)?;
    let kinds: Vec<ClassifierKind> = if a.clf.is_empty() {
        ClassifierKind::ALL.to_vec()
    } else {
        a.clf.iter().map(|&c| c.into()).collect()
    };
    let fs_kind = match a.features.unwrap_or(Features::Top3) {
        Features::All => FeatureSet::All,
        Features::Top3 => FeatureSet::NcaTop,
    };
    let cfg = eval_config(a.seed, a.runs, &a.model);

    if let Some(deltas) = &a.delta_grid {
        let mut spec = SweepSpec {
            delta_grid: deltas.clone(),
            seed: a.seed,
            ..SweepSpec::default()
        };
        if let Some(g) = &a.snr_grid {
            spec.snr_grid = g.clone();
        }
        if let Some(n) = a.count {
            spec.n_test = n;
            spec.n_train = n.min(spec.n_train);
        }
        let rows = eval::detector_sweep(&spec)?;
        write_json(
            &a.out.join("sweep.json"),
            &Report {
                run_config: cmd,
                body: serde_json::json!({ "sweep": spec, "rows": rows }),
            },
        )?;
        return write_file(&a.out.join("sweep.csv"), &eval::sweep_csv(&rows));
    }

    let gen = GenerationSpec::controllers(
        a.count.unwrap_or(100),
        a.snr.unwrap_or(25.0),
        a.seed,
        a.duplicates,
    );
    if let Some(grid) = &a.snr_grid {
        let training = match a.train_snr {
            Some(snr_db) => SnrTraining::Fixed { snr_db },
            None => SnrTraining::PerSnr,
        };
        let rows = eval::accuracy_vs_snr(grid, &kinds, fs_kind, &gen, &cfg, training)?;
        write_json(
            &a.out.join("snr.json"),
            &Report {
                run_config: cmd,
                body: serde_json::json!({ "config": cfg, "rows": rows }),
            },
        )?;
        return write_file(&a.out.join("snr.csv"), &eval::snr_table_csv(&rows));
    }

    let captures = match &a.dataset {
        Some(dir) => {
            let (_, caps) = dataset::load_dataset(dir)?;
            caps.into_iter()
                .filter(|c| c.label.controller_id().is_some())
                .collect()
        }
        None => dataset::generate(&gen)?,
    };
    if captures.is_empty() {
        return Err(Error::Format("dataset holds no controller captures".into()));
    }
    let (ds, failures) = eval::fingerprint_dataset(&captures, &cfg.transient)?;
    let reports = eval::monte_carlo_multi(&ds, &kinds, fs_kind, &cfg)?;
    write_json(
        &a.out.join("report.json"),
        &Report {
            run_config: cmd,
            body: serde_json::json!({ "extraction_failures": failures, "reports": reports }),
        },
    )?;
    write_file(&a.out.join("report.csv"), &stats_csv(&reports))?;
    for r in &reports {
        let name = r.classifier.name();
        write_file(&a.out.join(format!("runs_{name}.csv")), &r.to_csv())?;
        write_file(
            &a.out.join(format!("confusion_{name}.csv")),
            &r.confusion.to_csv(),
        )?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let start = Instant::now();
    match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Eval(a) => {
            cmd_eval(a, &cli.command)?;
            let t = Timing {
                elapsed_seconds: start.elapsed().as_secs_f64(),
            };
            write_json(&a.out.join("timing.json"), &t)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
