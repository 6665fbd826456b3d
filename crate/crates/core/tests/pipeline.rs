use std::sync::OnceLock;

use rf_sentinel::classifiers::ClassifierKind;
use rf_sentinel::dataset::{self, GenerationSpec};
use rf_sentinel::eval::{
    self, Components, EvalConfig, FeatureSet, Stage, TrainParams, TrainedModels, Verdict,
};
use rf_sentinel::synth::{self, CaptureConfig, Catalogue};
use rf_sentinel::SignalClass;

const SNR: f64 = 25.0;

fn models() -> &'static TrainedModels {
    static MODELS: OnceLock<TrainedModels> = OnceLock::new();
    MODELS.get_or_init(|| {
        let mut spec = GenerationSpec::controllers(40, SNR, 1, false);
        spec.classes.splice(
            0..0,
            [
                SignalClass::Noise,
                SignalClass::WiFi,
                SignalClass::Bluetooth { device_id: 1 },
            ],
        );
        let captures = dataset::generate(&spec).unwrap();
        let all = Components {
            detector: true,
            nca: true,
            classifier: true,
        };
        eval::train_models(&captures, all, &TrainParams::default()).unwrap()
    })
}

fn run(class: SignalClass, seed: u64) -> eval::MultistageOutcome {
    let cap = synth::synthesize(
        class,
        SNR,
        seed,
        &CaptureConfig::default(),
        &Catalogue::standard(false),
    )
    .unwrap();
    eval::run_multistage(&cap, models()).unwrap()
}

#[test]
fn noise_stops_at_detection() {
    let mut hits = 0;
    for k in 0..200 {
        let out = run(SignalClass::Noise, 9_000_000 + k);
        if out.verdict == Verdict::Noise {
            assert_eq!(out.stages, vec![Stage::Detect]);
            hits += 1;
        }
    }
    assert!(hits >= 190, "{hits}/200");
}

#[test]
fn wideband_bursts_stop_at_triage() {
    for k in 0..20 {
        let out = run(SignalClass::WiFi, 8_000_000 + k);
        assert_eq!(out.verdict, Verdict::WiFi);
        assert_eq!(out.stages, vec![Stage::Detect, Stage::Triage]);
        assert!(out.modulation.is_some());
    }
}

#[test]
fn bluetooth_stops_at_triage() {
    let mut hits = 0;
    for k in 0..40 {
        let out = run(SignalClass::Bluetooth { device_id: 1 }, 7_000_000 + k);
        if out.verdict == Verdict::Bluetooth {
            assert_eq!(out.stages, vec![Stage::Detect, Stage::Triage]);
            hits += 1;
        }
    }
    assert!(hits >= 38, "{hits}/40");
}

#[test]
fn controllers_reach_their_own_id() {
    let ids = Catalogue::standard(false).ids();
    let mut hits = 0;
    let mut total = 0;
    for &id in &ids {
        for k in 0..10 {
            let out = run(
                SignalClass::UavController { controller_id: id },
                6_000_000 + 100 * id as u64 + k,
            );
            total += 1;
            if out.verdict == (Verdict::UavController { controller_id: id }) {
                assert_eq!(
                    out.stages,
                    vec![
                        Stage::Detect,
                        Stage::Triage,
                        Stage::Fingerprint,
                        Stage::Classify
                    ]
                );
                hits += 1;
            }
        }
    }
    assert!(hits as f64 >= 0.9 * total as f64, "{hits}/{total}");
}

#[test]
fn pipeline_needs_detector_and_classifier() {
    let mut partial = models().clone();
    partial.classifier = None;
    let cap = synth::synthesize(
        SignalClass::Noise,
        SNR,
        1,
        &CaptureConfig::default(),
        &Catalogue::standard(false),
    )
    .unwrap();
    assert!(eval::run_multistage(&cap, &partial).is_err());
}

#[test]
fn reports_are_byte_identical() {
    let spec = GenerationSpec::controllers(12, SNR, 5, false);
    let (ds, _) =
        eval::fingerprint_dataset(&dataset::generate(&spec).unwrap(), &Default::default()).unwrap();
    let cfg = EvalConfig {
        runs: 3,
        ..EvalConfig::default()
    };
    let kinds = ClassifierKind::ALL;
    let a = eval::monte_carlo_multi(&ds, &kinds, FeatureSet::NcaTop, &cfg).unwrap();
    let b = eval::monte_carlo_multi(&ds, &kinds, FeatureSet::NcaTop, &cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
}

#[test]
fn duplicated_specs_lower_accuracy() {
    let cfg = EvalConfig {
        runs: 4,
        ..EvalConfig::default()
    };
    let kinds = [ClassifierKind::Knn, ClassifierKind::RandF];
    for family in 0..5u64 {
        let mean = |dup: bool| -> Vec<f64> {
            let spec = GenerationSpec::controllers(30, SNR, 40 + family, dup);
            let (ds, _) =
                eval::fingerprint_dataset(&dataset::generate(&spec).unwrap(), &cfg.transient)
                    .unwrap();
            eval::monte_carlo_multi(&ds, &kinds, FeatureSet::All, &cfg)
                .unwrap()
                .iter()
                .map(|r| r.stats.mean)
                .collect()
        };
        let (m15, m17) = (mean(false), mean(true));
        for k in 0..kinds.len() {
            assert!(
                m17[k] < m15[k],
                "family {family} {:?}: {m15:?} vs {m17:?}",
                kinds[k]
            );
        }
    }
}
