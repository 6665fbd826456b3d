//! End-to-end pipeline and the evaluation protocol around it.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{self, ClassifierConfig, ClassifierKind, TrainedClassifier};
use crate::dataset::{self, capture_seed, GenerationSpec};
use crate::detector::{self, Decision, DetectorModel, SnrCell, SweepRow};
use crate::dsp;
use crate::dwt;
use crate::error::{Error, Result};
use crate::interference::{self, InterferenceConfig, ModulationFeatures, VerdictKind};
use crate::nca::{self, FeatureDataset, NcaConfig};
use crate::signal::{SampledSignal, SignalClass};
use crate::synth::{self, CaptureConfig, Catalogue};
use crate::transient::{self, TransientConfig, FEATURE_NAMES};

fn derive_seed(base: u64, stream: u64) -> u64 {
    capture_seed(base, 0x7e57, stream as usize)
}

/// The 15 fingerprints of one capture: Haar detail trace, then the
/// transient statistics at the detail-trace rate.
pub fn fingerprint(capture: &SampledSignal, cfg: &TransientConfig) -> Result<[f64; 15]> {
    let w = dwt::preprocess(capture)?;
    let rate = capture.sample_rate_hz() / w.decimation_factor as f64;
    Ok(transient::analyze(&w.y_t, rate, cfg)?
        .fingerprint
        .to_array())
}

/// Fingerprint table of controller captures. Captures whose transient
/// cannot be measured are skipped and counted.
pub fn fingerprint_dataset(
    captures: &[SampledSignal],
    cfg: &TransientConfig,
) -> Result<(FeatureDataset, usize)> {
    let rows: Vec<Option<(u32, [f64; 15])>> = captures
        .par_iter()
        .map(|c| {
            let id = c.label.controller_id().ok_or_else(|| {
                Error::invalid(format!(
                    "capture seed {} is not a controller capture",
                    c.seed
                ))
            })?;
            Ok(fingerprint(c, cfg).ok().map(|f| (id, f)))
        })
        .collect::<Result<_>>()?;
    let failures = rows.iter().filter(|r| r.is_none()).count();
    let (labels, feats): (Vec<u32>, Vec<Vec<f64>>) = rows
        .into_iter()
        .flatten()
        .map(|(l, f)| (l, f.to_vec()))
        .unzip();
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    Ok((FeatureDataset::new(feats, labels, names)?, failures))
}

/// Stratified split: `test_fraction` of every class goes to the test side.
/// Returns row indices `(train, test)`, each sorted.
pub fn split(
    ds: &FeatureDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} must lie in (0, 1)"
        )));
    }
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for c in ds.classes() {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i] == c).collect();
        if idx.len() < 5 {
            return Err(Error::invalid(format!(
                "class {c} has {} rows, need 5 to split",
                idx.len()
            )));
        }
        idx.shuffle(&mut r);
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 2);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<u32>,
    /// `counts[i][j]`: truth `classes[i]` predicted as `classes[j]`.
    pub counts: Vec<Vec<u64>>,
    /// Row-normalised counts.
    pub rho: Vec<Vec<f64>>,
}

pub fn confusion_matrix(
    predictions: &[u32],
    truths: &[u32],
    catalogue: &[u32],
) -> Result<ConfusionMatrix> {
    if predictions.len() != truths.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let pos = |c: u32| {
        catalogue
            .iter()
            .position(|&k| k == c)
            .ok_or_else(|| Error::invalid(format!("label {c} is not in the catalogue")))
    };
    let k = catalogue.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &t) in predictions.iter().zip(truths) {
        counts[pos(t)?][pos(p)?] += 1;
    }
    let rho = counts
        .iter()
        .map(|row| {
            let n: u64 = row.iter().sum();
            row.iter()
                .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                .collect()
        })
        .collect();
    Ok(ConfusionMatrix {
        classes: catalogue.to_vec(),
        counts,
        rho,
    })
}

impl ConfusionMatrix {
    /// CSV with a header row of class names and one row per true class.
    pub fn to_csv(&self) -> String {
        let names: Vec<String> = self.classes.iter().map(|c| format!("c{c}")).collect();
        let mut s = format!("truth,{}\n", names.join(","));
        for (name, row) in names.iter().zip(&self.counts) {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(s, "{name},{}", cells.join(","));
        }
        s
    }
}

/// Box-plot summary of per-run accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("no values to summarise"));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: dsp::percentile_sorted(&v, 0.5),
            q1: dsp::percentile_sorted(&v, 0.25),
            q3: dsp::percentile_sorted(&v, 0.75),
            min: v[0],
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Every non-constant fingerprint.
    All,
    /// The `top_k` fingerprints ranked by NCA on the training rows.
    NcaTop,
}

impl FeatureSet {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureSet::All => "all",
            FeatureSet::NcaTop => "nca_top",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub transient: TransientConfig,
    pub nca: NcaConfig,
    pub top_k: usize,
    pub classifier: ClassifierConfig,
    pub test_fraction: f64,
    pub runs: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            transient: TransientConfig::default(),
            nca: NcaConfig::default(),
            top_k: 3,
            classifier: ClassifierConfig::default(),
            test_fraction: 0.2,
            runs: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classifier: ClassifierKind,
    pub feature_set: FeatureSet,
    pub classes: Vec<u32>,
    pub n_rows: usize,
    pub accuracies: Vec<f64>,
    pub stats: BoxStats,
    /// Summed over all runs.
    pub confusion: ConfusionMatrix,
    pub selected_features: Vec<Vec<String>>,
    /// Columns constant in some run's training rows, dropped in that run.
    pub dropped_features: Vec<String>,
    pub config: EvalConfig,
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("run,accuracy\n");
        for (i, a) in self.accuracies.iter().enumerate() {
            let _ = writeln!(s, "{i},{a}");
        }
        s
    }
}

struct RunResult {
    predictions: Vec<u32>,
    truths: Vec<u32>,
    selected: Vec<usize>,
    dropped: Vec<usize>,
}

/// NCA ranking on the standardised `cols` of `train`. Returns indices into
/// the original columns, best first.
fn nca_select(
    train: &FeatureDataset,
    cols: &[usize],
    cfg: &EvalConfig,
) -> Result<(Vec<usize>, nca::FeatureWeights)> {
    let sub = train.select_columns(cols)?;
    let params = classifiers::standardize_fit(sub.rows())?;
    let z = sub
        .with_rows(classifiers::standardize_apply(&params, sub.rows())?)?
        .mark_standardized();
    let fw = nca::fit_weights(&z, &cfg.nca)?;
    let k = cfg.top_k.min(cols.len());
    Ok((
        nca::select_top_k(&fw, k)?
            .into_iter()
            .map(|i| cols[i])
            .collect(),
        fw,
    ))
}

fn one_run(
    ds: &FeatureDataset,
    kinds: &[ClassifierKind],
    fs: FeatureSet,
    cfg: &EvalConfig,
    run: usize,
) -> Result<Vec<RunResult>> {
    let run_seed = derive_seed(cfg.seed, run as u64);
    let (train_idx, test_idx) = split(ds, cfg.test_fraction, run_seed)?;
    let train = ds.subset(&train_idx);
    let dropped = classifiers::constant_columns(train.rows());
    let kept: Vec<usize> = (0..ds.n_features())
        .filter(|c| !dropped.contains(c))
        .collect();
    if kept.is_empty() {
        return Err(Error::Numeric("every feature column is constant".into()));
    }
    let selected = match fs {
        FeatureSet::All => kept,
        FeatureSet::NcaTop => nca_select(&train, &kept, cfg)?.0,
    };
    kinds
        .iter()
        .map(|&kind| {
            let mut ccfg = cfg.classifier;
            ccfg.kind = kind;
            ccfg.forest.seed = derive_seed(run_seed, 1);
            let model = TrainedClassifier::fit(&train, &selected, &ccfg)?;
            let predictions = test_idx
                .iter()
                .map(|&i| model.predict(&ds.rows()[i]))
                .collect::<Result<Vec<_>>>()?;
            Ok(RunResult {
                predictions,
                truths: test_idx.iter().map(|&i| ds.labels()[i]).collect(),
                selected: selected.clone(),
                dropped: dropped.clone(),
            })
        })
        .collect()
}

/// Monte-Carlo evaluation of several classifiers sharing each run's split
/// and feature selection. Reports come back in `kinds` order.
pub fn monte_carlo_multi(
    ds: &FeatureDataset,
    kinds: &[ClassifierKind],
    fs: FeatureSet,
    cfg: &EvalConfig,
) -> Result<Vec<EvaluationReport>> {
    if cfg.runs == 0 || kinds.is_empty() {
        return Err(Error::invalid("need at least one run and one classifier"));
    }
    let runs: Vec<Vec<RunResult>> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| one_run(ds, kinds, fs, cfg, r))
        .collect::<Result<_>>()?;
    let classes = ds.classes();
    kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let per: Vec<&RunResult> = runs.iter().map(|r| &r[k]).collect();
            let accuracies: Vec<f64> = per
                .iter()
                .map(|r| {
                    let hit = r
                        .predictions
                        .iter()
                        .zip(&r.truths)
                        .filter(|(p, t)| p == t)
                        .count();
                    hit as f64 / r.truths.len() as f64
                })
                .collect();
            let preds: Vec<u32> = per
                .iter()
                .flat_map(|r| r.predictions.iter().copied())
                .collect();
            let truths: Vec<u32> = per.iter().flat_map(|r| r.truths.iter().copied()).collect();
            let names = |idx: &[usize]| {
                idx.iter()
                    .map(|&i| ds.feature_names()[i].clone())
                    .collect::<Vec<_>>()
            };
            let mut dropped: Vec<usize> =
                per.iter().flat_map(|r| r.dropped.iter().copied()).collect();
            dropped.sort_unstable();
            dropped.dedup();
            let mut config = *cfg;
            config.classifier.kind = kind;
            Ok(EvaluationReport {
                classifier: kind,
                feature_set: fs,
                classes: classes.clone(),
                n_rows: ds.len(),
                stats: BoxStats::of(&accuracies)?,
                accuracies,
                confusion: confusion_matrix(&preds, &truths, &classes)?,
                selected_features: per.iter().map(|r| names(&r.selected)).collect(),
                dropped_features: names(&dropped),
                config,
            })
        })
        .collect()
}

pub fn monte_carlo(
    ds: &FeatureDataset,
    kind: ClassifierKind,
    fs: FeatureSet,
    cfg: &EvalConfig,
) -> Result<EvaluationReport> {
    Ok(monte_carlo_multi(ds, &[kind], fs, cfg)?.remove(0))
}

/// How the accuracy-versus-SNR table trains its models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SnrTraining {
    /// Train and test at every grid point.
    PerSnr,
    /// Train once at `snr_db`, test at every grid point.
    Fixed { snr_db: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrAccuracyRow {
    pub snr_db: f64,
    pub classifier: ClassifierKind,
    pub feature_set: FeatureSet,
    pub stats: BoxStats,
    pub extraction_failures: usize,
}

pub fn snr_table_csv(rows: &[SnrAccuracyRow]) -> String {
    let mut s = String::from("snr_db,classifier,feature_set,mean,median,q1,q3,min,max\n");
    for r in rows {
        let b = &r.stats;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.snr_db,
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

fn mismatched_runs(
    train_ds: &FeatureDataset,
    test_ds: &FeatureDataset,
    kinds: &[ClassifierKind],
    fs: FeatureSet,
    cfg: &EvalConfig,
) -> Result<Vec<Vec<f64>>> {
    (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = derive_seed(cfg.seed, run as u64);
            let (train_idx, _) = split(train_ds, cfg.test_fraction, run_seed)?;
            let (_, test_idx) = split(test_ds, cfg.test_fraction, run_seed)?;
            let train = train_ds.subset(&train_idx);
            let dropped = classifiers::constant_columns(train.rows());
            let kept: Vec<usize> = (0..train.n_features())
                .filter(|c| !dropped.contains(c))
                .collect();
            let selected = match fs {
                FeatureSet::All => kept,
                FeatureSet::NcaTop => nca_select(&train, &kept, cfg)?.0,
            };
            kinds
                .iter()
                .map(|&kind| {
                    let mut ccfg = cfg.classifier;
                    ccfg.kind = kind;
                    ccfg.forest.seed = derive_seed(run_seed, 1);
                    let model = TrainedClassifier::fit(&train, &selected, &ccfg)?;
                    let mut hit = 0;
                    for &i in &test_idx {
                        if model.predict(&test_ds.rows()[i])? == test_ds.labels()[i] {
                            hit += 1;
                        }
                    }
                    Ok(hit as f64 / test_idx.len() as f64)
                })
                .collect()
        })
        .collect()
}

/// Regenerates the controller dataset at every grid SNR and tabulates
/// Monte-Carlo accuracy per classifier.
pub fn accuracy_vs_snr(
    snr_grid: &[f64],
    kinds: &[ClassifierKind],
    fs: FeatureSet,
    gen: &GenerationSpec,
    cfg: &EvalConfig,
    training: SnrTraining,
) -> Result<Vec<SnrAccuracyRow>> {
    if snr_grid.is_empty() {
        return Err(Error::invalid("SNR grid is empty"));
    }
    let build = |snr: f64| -> Result<(FeatureDataset, usize)> {
        let spec = GenerationSpec {
            snr_db: snr,
            ..gen.clone()
        };
        fingerprint_dataset(&dataset::generate(&spec)?, &cfg.transient)
    };
    let fixed = match training {
        SnrTraining::Fixed { snr_db } => Some(build(snr_db)?.0),
        SnrTraining::PerSnr => None,
    };
    let mut out = Vec::new();
    for &snr in snr_grid {
        let (ds, failures) = build(snr)?;
        let per_kind: Vec<BoxStats> = match &fixed {
            None => monte_carlo_multi(&ds, kinds, fs, cfg)?
                .into_iter()
                .map(|r| r.stats)
                .collect(),
            Some(train_ds) => {
                let runs = mismatched_runs(train_ds, &ds, kinds, fs, cfg)?;
                (0..kinds.len())
                    .map(|k| BoxStats::of(&runs.iter().map(|r| r[k]).collect::<Vec<_>>()))
                    .collect::<Result<_>>()?
            }
        };
        for (&kind, stats) in kinds.iter().zip(per_kind) {
            out.push(SnrAccuracyRow {
                snr_db: snr,
                classifier: kind,
                feature_set: fs,
                stats,
                extraction_failures: failures,
            });
        }
    }
    Ok(out)
}

/// Detector threshold sweep settings. Emissions cycle through controller,
/// Bluetooth and Wi-Fi captures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub snr_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub capture: CaptureConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            snr_grid: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            delta_grid: vec![0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            n_train: 400,
            n_test: 1000,
            seed: 1,
            capture: CaptureConfig::default(),
        }
    }
}

fn sweep_emission(i: usize, catalogue: &Catalogue) -> SignalClass {
    let ids = catalogue.ids();
    match i % 3 {
        0 => SignalClass::UavController {
            controller_id: ids[i / 3 % ids.len()],
        },
        1 => SignalClass::Bluetooth { device_id: 1 },
        _ => SignalClass::WiFi,
    }
}

fn detail_traces(
    n: usize,
    slot: usize,
    snr: f64,
    emission: bool,
    spec: &SweepSpec,
    cat: &Catalogue,
) -> Result<Vec<Vec<f64>>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let class = if emission {
                sweep_emission(i, cat)
            } else {
                SignalClass::Noise
            };
            let s = synth::synthesize(
                class,
                snr,
                capture_seed(spec.seed, slot, i),
                &spec.capture,
                cat,
            )?;
            Ok(dwt::preprocess(&s)?.y_t)
        })
        .collect()
}

pub fn detector_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.n_train == 0 || spec.n_test == 0 {
        return Err(Error::invalid("sweep needs training and test captures"));
    }
    let cat = Catalogue::standard(false);
    let train_noise = detail_traces(spec.n_train, 0, 0.0, false, spec, &cat)?;
    let test_noise = detail_traces(spec.n_test, 1, 0.0, false, spec, &cat)?;
    let cells = spec
        .snr_grid
        .iter()
        .enumerate()
        .map(|(k, &snr)| {
            Ok(SnrCell {
                snr_db: snr,
                train_signal: detail_traces(spec.n_train, 2 + 2 * k, snr, true, spec, &cat)?,
                test_signal: detail_traces(spec.n_test, 3 + 2 * k, snr, true, spec, &cat)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    detector::sweep_threshold(&cells, &train_noise, &test_noise, &spec.delta_grid)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("snr_db,delta,acc,far\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.snr_db, r.delta_multiple, r.detection_accuracy, r.false_alarm_rate
        );
    }
    s
}

pub const MODELS_FORMAT_VERSION: u32 = 1;

/// NCA outcome as persisted with the models. `weights` has one entry per
/// fingerprint; columns left out of the fit carry weight 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcaSummary {
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub kernel_width: f64,
    pub iterations: usize,
    pub converged: bool,
    pub selected_indices: Vec<usize>,
}

/// Everything the multistage pipeline needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModels {
    pub format_version: u32,
    pub detector: Option<DetectorModel>,
    pub nca: Option<NcaSummary>,
    pub classifier: Option<TrainedClassifier>,
    pub interference: InterferenceConfig,
    pub transient: TransientConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    pub detector: bool,
    pub nca: bool,
    pub classifier: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub delta_multiple: f64,
    pub eval: EvalConfig,
    pub interference: InterferenceConfig,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            delta_multiple: 3.5,
            eval: EvalConfig::default(),
            interference: InterferenceConfig::default(),
        }
    }
}

/// Fits the requested components on a capture set. The detector uses every
/// capture (noise versus the rest); NCA and the classifier use the
/// controller captures.
pub fn train_models(
    captures: &[SampledSignal],
    components: Components,
    params: &TrainParams,
) -> Result<TrainedModels> {
    let mut models = TrainedModels {
        format_version: MODELS_FORMAT_VERSION,
        detector: None,
        nca: None,
        classifier: None,
        interference: params.interference,
        transient: params.eval.transient,
    };
    if components.detector {
        let (noise, emissions): (Vec<SampledSignal>, Vec<SampledSignal>) = captures
            .iter()
            .cloned()
            .partition(|c| c.label == SignalClass::Noise);
        models.detector = Some(detector::fit_detector(
            &emissions,
            &noise,
            params.delta_multiple,
        )?);
    }
    if !(components.nca || components.classifier) {
        return Ok(models);
    }
    let controllers: Vec<SampledSignal> = captures
        .iter()
        .filter(|c| c.label.controller_id().is_some())
        .cloned()
        .collect();
    let (ds, _) = fingerprint_dataset(&controllers, &params.eval.transient)?;
    let dropped = classifiers::constant_columns(ds.rows());
    let kept: Vec<usize> = (0..ds.n_features())
        .filter(|c| !dropped.contains(c))
        .collect();
    let mut selected = kept.clone();
    if components.nca {
        let (top, fw) = nca_select(&ds, &kept, &params.eval)?;
        let mut weights = vec![0.0; ds.n_features()];
        for (&c, &w) in kept.iter().zip(&fw.w) {
            weights[c] = w;
        }
        models.nca = Some(NcaSummary {
            weights,
            lambda: params.eval.nca.lambda,
            kernel_width: params.eval.nca.kernel_width,
            iterations: fw.iterations,
            converged: fw.converged,
            selected_indices: top.clone(),
        });
        selected = top;
    }
    if components.classifier {
        models.classifier = Some(TrainedClassifier::fit(
            &ds,
            &selected,
            &params.eval.classifier,
        )?);
    }
    Ok(models)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Detect,
    Triage,
    Fingerprint,
    Classify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Noise,
    #[serde(rename = "wifi")]
    WiFi,
    Bluetooth,
    UavController {
        controller_id: u32,
    },
    Diagnostic {
        stage: Stage,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistageOutcome {
    pub verdict: Verdict,
    /// Stages entered, in order.
    pub stages: Vec<Stage>,
    pub modulation: Option<ModulationFeatures>,
}

/// Detect, triage, fingerprint and classify one capture, stopping at the
/// first stage that settles it.
pub fn run_multistage(
    capture: &SampledSignal,
    models: &TrainedModels,
) -> Result<MultistageOutcome> {
    let (Some(det), Some(clf)) = (&models.detector, &models.classifier) else {
        return Err(Error::Usage(
            "the pipeline needs a detector and a classifier".into(),
        ));
    };
    let mut out = MultistageOutcome {
        verdict: Verdict::Noise,
        stages: vec![Stage::Detect],
        modulation: None,
    };
    let diag = |stage, e: Error| Verdict::Diagnostic {
        stage,
        message: e.to_string(),
    };
    let w = match dwt::preprocess(capture)
        .and_then(|w| detector::detect(&w.y_t, det).map(|d| (w, d)))
    {
        Ok((w, d)) if d.decision == Decision::Signal => w,
        Ok(_) => return Ok(out),
        Err(e) => {
            out.verdict = diag(Stage::Detect, e);
            return Ok(out);
        }
    };
    out.stages.push(Stage::Triage);
    match interference::triage(capture, &models.interference) {
        Ok(v) => {
            out.modulation = Some(v.features);
            match v.kind {
                VerdictKind::WiFi => {
                    out.verdict = Verdict::WiFi;
                    return Ok(out);
                }
                VerdictKind::Bluetooth => {
                    out.verdict = Verdict::Bluetooth;
                    return Ok(out);
                }
                VerdictKind::UavCandidate => {}
            }
        }
        Err(e) => {
            out.verdict = diag(Stage::Triage, e);
            return Ok(out);
        }
    }
    out.stages.push(Stage::Fingerprint);
    let rate = capture.sample_rate_hz() / w.decimation_factor as f64;
    let fp = match transient::analyze(&w.y_t, rate, &models.transient) {
        Ok(a) => a.fingerprint.to_array(),
        Err(e) => {
            out.verdict = diag(Stage::Fingerprint, e);
            return Ok(out);
        }
    };
    out.stages.push(Stage::Classify);
    out.verdict = match clf.predict(&fp) {
        Ok(controller_id) => Verdict::UavController { controller_id },
        Err(e) => diag(Stage::Classify, e),
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(per_class: usize) -> FeatureDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 1..=3u32 {
            for i in 0..per_class {
                rows.push(vec![c as f64 * 10.0 + (i % 5) as f64 * 0.1, (i % 7) as f64]);
                labels.push(c);
            }
        }
        FeatureDataset::new(rows, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let ds = toy(100);
        let (tr, te) = split(&ds, 0.2, 5).unwrap();
        assert_eq!(te.len(), 60);
        assert_eq!(tr.len(), 240);
        for c in 1..=3 {
            assert_eq!(te.iter().filter(|&&i| ds.labels()[i] == c).count(), 20);
        }
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert_eq!(split(&ds, 0.2, 5).unwrap(), (tr, te));
        assert!(split(&ds, 0.0, 5).is_err());
        assert!(split(&toy(4), 0.2, 5).is_err());
    }

    #[test]
    fn confusion_rules() {
        let m = confusion_matrix(&[1, 2, 2], &[1, 2, 1], &[1, 2]).unwrap();
        assert_eq!(m.counts, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(m.rho[0], vec![0.5, 0.5]);
        assert!(confusion_matrix(&[1], &[1, 2], &[1, 2]).is_err());
        assert!(confusion_matrix(&[3], &[1], &[1, 2]).is_err());
        assert_eq!(m.to_csv(), "truth,c1,c2\nc1,1,1\nc2,0,1\n");
    }

    #[test]
    fn single_run_quartiles_collapse() {
        let cfg = EvalConfig {
            runs: 1,
            ..EvalConfig::default()
        };
        let r = monte_carlo(&toy(20), ClassifierKind::Knn, FeatureSet::All, &cfg).unwrap();
        let b = r.stats;
        assert_eq!(r.accuracies.len(), 1);
        for v in [b.mean, b.median, b.q1, b.q3, b.min, b.max] {
            assert_eq!(v, r.accuracies[0]);
        }
    }

    #[test]
    fn box_stats_by_hand() {
        let b = BoxStats::of(&[0.5, 1.0, 0.75, 0.25, 0.0]).unwrap();
        assert_eq!(
            (b.min, b.q1, b.median, b.q3, b.max, b.mean),
            (0.0, 0.25, 0.5, 0.75, 1.0, 0.5)
        );
        assert!(BoxStats::of(&[]).is_err());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let gen = GenerationSpec::controllers(5, 25.0, 1, false);
        let r = accuracy_vs_snr(
            &[],
            &[ClassifierKind::Knn],
            FeatureSet::All,
            &gen,
            &EvalConfig::default(),
            SnrTraining::PerSnr,
        );
        assert!(r.is_err());
    }
}
