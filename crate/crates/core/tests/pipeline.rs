use std::path::Path;

use drlssv::ingestion::{AqiBreakpoints, Diagnostics};
use drlssv::pipeline::{self, PipelineConfig, SynthSpec};

fn synth(dir: &Path, spec: &SynthSpec) {
    spec.generate(&AqiBreakpoints::bundled()).unwrap().write_to_dir(dir).unwrap();
}

fn config(data: &Path, out: &Path, extra: &[&str]) -> PipelineConfig {
    let mut overrides = vec![
        format!("paths.input='{}'", data.join("hourly.csv").display()),
        format!("paths.daily='{}'", data.join("daily.csv").display()),
        format!("paths.output='{}'", out.display()),
    ];
    overrides.extend(extra.iter().map(|s| s.to_string()));
    PipelineConfig::from_toml_with("", &overrides).unwrap()
}

#[test]
fn run_matches_stages_run_one_by_one() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &SynthSpec { n_stations: 2, days: 30, ..SynthSpec::default() });

    let whole = config(&data, &tmp.path().join("whole"), &[]);
    pipeline::run(&whole).unwrap();

    let staged = config(&data, &tmp.path().join("staged"), &[]);
    let mut diag = Diagnostics::default();
    pipeline::ingest(&staged, &mut diag).unwrap();
    pipeline::preprocess(&staged, &mut diag).unwrap();
    pipeline::select(&staged).unwrap();
    pipeline::train(&staged).unwrap();
    pipeline::evaluate_stage(&staged).unwrap();
    pipeline::report(&staged).unwrap();

    for file in [
        pipeline::INGESTED_FILE,
        pipeline::INGESTED_DAILY_FILE,
        pipeline::PREPROCESSED_FILE,
        pipeline::PREPROCESSED_DAILY_FILE,
        pipeline::SELECTION_FILE,
        pipeline::MODEL_FILE,
        pipeline::CONFUSION_FILE,
    ] {
        let a = std::fs::read(whole.paths.output.join(file)).unwrap();
        let b = std::fs::read(staged.paths.output.join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
}

#[test]
fn noiseless_data_is_learned_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let spec = SynthSpec { n_stations: 2, days: 60, noise_sd: 0.0, spike_rate: 0.0, ..SynthSpec::default() };
    synth(&data, &spec);
    // Every test row repeats a training row; a narrow kernel reproduces them.
    let cfg = config(&data, &tmp.path().join("out"), &["lssv.sigma=0.2", "lssv.gamma=1e4"]);
    let summary = pipeline::run(&cfg).unwrap();
    let dr = summary.reports.iter().find(|r| r.method_name == "dr-lssv").unwrap();
    assert_eq!(dr.n_samples, 864);
    assert_eq!(dr.accuracy, 1.0);
    assert_eq!(dr.fpr, 0.0);
}

#[test]
fn planted_model_beats_majority_by_a_wide_margin() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &SynthSpec::default());
    let cfg = config(&data, &tmp.path().join("out"), &["eval.test_n=2000"]);
    let reports = pipeline::run(&cfg).unwrap().reports;
    let acc = |name: &str| reports.iter().find(|r| r.method_name == name).unwrap().accuracy;
    assert!(acc("dr-lssv") >= acc("majority") + 0.2, "{} vs {}", acc("dr-lssv"), acc("majority"));
}

#[test]
fn out_of_range_keep_fraction_is_a_usage_error() {
    let err = PipelineConfig::from_toml_with("[hartley]\nkeep_fraction = 1.5\n", &[]).unwrap_err();
    assert!(err.is_usage());
    assert!(err.to_string().contains("hartley.keep_fraction"));
}

#[test]
fn failed_run_leaves_no_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, &SynthSpec { n_stations: 2, days: 30, ..SynthSpec::default() });
    // Ingestion, preprocessing and selection succeed; the model path is a directory.
    let out = tmp.path().join("out");
    let cfg = config(&data, &out, &[&format!("paths.model='{}'", data.display())]);
    let err = pipeline::with_output_dir(&cfg, || pipeline::run(&cfg)).unwrap_err();
    assert!(err.to_string().starts_with("train: "), "{err}");
    let left: Vec<_> = std::fs::read_dir(&out).unwrap().flatten().map(|e| e.file_name()).collect();
    assert!(left.is_empty(), "left behind: {left:?}");
}

#[test]
fn stage_errors_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig::from_toml_with(
        "",
        &[
            format!("paths.input='{}'", tmp.path().join("absent.csv").display()),
            format!("paths.output='{}'", tmp.path().join("out").display()),
        ],
    )
    .unwrap();
    let err = pipeline::run(&cfg).unwrap_err();
    assert!(err.to_string().starts_with("ingest: "), "{err}");
    assert!(!err.is_usage());
}
