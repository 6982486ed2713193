//! File-based stages that chain ingestion, denoising, selection, training
//! and evaluation. Each stage reads the previous stage's artifacts from the
//! output directory, so [`run`] and the stages invoked one by one produce
//! the same bytes.

mod config;
mod synth;

pub use config::{
    EvalConfig, HartleyConfig, ImputationConfig, LssvConfig, MedianTag, PathsConfig,
    PipelineConfig, SelectionConfig, SigmaSetting, SplitKind,
};
pub use synth::{
    SynthData, SynthSpec, MIN_SYNTH_DAYS, SYNTH_CLEAN_FILE, SYNTH_DAILY_FILE, SYNTH_HOURLY_FILE,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use chrono::{NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate, sweep_report, write_plot_data, write_report_csv, EvalReport, EvalSet, Forecaster,
    KnnBaseline, MajorityBaseline, RidgeBaseline, SweepRow,
};
use crate::feature_selection::{fit_logistic, homogenize, select_features, FeatureSelection, LogisticConfig, LogisticModel};
use crate::hartley::denoise;
use crate::ingestion::{
    build_station_grid, impute_missing, parse_station_csv, write_station_csv, AqiBreakpoints,
    Cadence, Diagnostics, StationSeries,
};
use crate::lssv::{median_heuristic, predict, train_lssv, LssvModel};
use crate::matrix::Matrix;
use crate::pollutant::{Pollutant, N_POLLUTANTS};
use crate::scaling::Standardizer;

pub const INGESTED_FILE: &str = "ingested.csv";
pub const INGESTED_DAILY_FILE: &str = "ingested_daily.csv";
pub const PREPROCESSED_FILE: &str = "preprocessed.csv";
pub const PREPROCESSED_DAILY_FILE: &str = "preprocessed_daily.csv";
pub const SELECTION_FILE: &str = "selection.csv";
pub const MODEL_FILE: &str = "model.drlssv";
pub const REPORT_FILE: &str = "report.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const PLOTS_DIR: &str = "plots";
pub const LOCK_FILE: &str = ".lock";

/// Sweep step used when no sizes are configured.
pub const DEFAULT_SWEEP_STEP: usize = 2000;

/// Rows used for the bandwidth median heuristic.
const MEDIAN_ROWS: usize = 1000;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_series(path: &Path, series: &[StationSeries]) -> Result<()> {
    let mut buf = Vec::new();
    write_station_csv(series, &mut buf)?;
    write(path, buf)
}

fn read_series(path: &Path, cadence: Cadence, diag: &mut Diagnostics) -> Result<Vec<StationSeries>> {
    let series = parse_station_csv(&read(path)?, cadence, diag)?;
    if series.is_empty() {
        return Err(Error::invalid(format!("{} holds no station rows", path.display())));
    }
    Ok(series)
}

/// Bundled CPCB tables unless both table paths are configured.
pub fn load_breakpoints(cfg: &PipelineConfig) -> Result<AqiBreakpoints> {
    let (b, p) = (&cfg.paths.breakpoints, &cfg.paths.bands);
    match (b.as_os_str().is_empty(), p.as_os_str().is_empty()) {
        (true, true) => Ok(AqiBreakpoints::bundled()),
        (false, false) => AqiBreakpoints::from_files(b, p),
        _ => Err(Error::config("paths.breakpoints", "set both breakpoints and bands, or neither")),
    }
}

fn out(cfg: &PipelineConfig, name: &str) -> PathBuf {
    cfg.paths.output.join(name)
}

/// Counts reported by [`ingest`].
#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub stations: usize,
    pub rows: usize,
    pub missing_cells: usize,
    pub daily_rows: Option<usize>,
}

/// Parses the input files, fills absent AQI values, and writes normalized copies.
pub fn ingest(cfg: &PipelineConfig, diag: &mut Diagnostics) -> Result<IngestSummary> {
    let bp = load_breakpoints(cfg)?;
    let mut hourly = read_series(&cfg.paths.input, Cadence::Hourly, diag)?;
    for s in &mut hourly {
        s.fill_aqi(&bp, diag);
        s.validate()?;
    }
    write_series(&out(cfg, INGESTED_FILE), &hourly)?;
    let daily_rows = match cfg.daily_path() {
        Some(path) => {
            let mut daily = read_series(path, Cadence::Daily, diag)?;
            for s in &mut daily {
                s.fill_aqi(&bp, diag);
                s.validate()?;
            }
            write_series(&out(cfg, INGESTED_DAILY_FILE), &daily)?;
            Some(daily.iter().map(StationSeries::len).sum())
        }
        None => {
            remove_if_present(&out(cfg, INGESTED_DAILY_FILE))?;
            None
        }
    };
    Ok(IngestSummary {
        stations: hourly.len(),
        rows: hourly.iter().map(StationSeries::len).sum(),
        missing_cells: hourly.iter().map(StationSeries::missing_count).sum(),
        daily_rows,
    })
}

fn remove_if_present(path: &Path) -> Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(path, e)),
        _ => Ok(()),
    }
}

/// Imputes, denoises every pollutant grid, and keeps only rows inside
/// complete days. Denoised concentrations are clamped at zero.
pub fn preprocess_series(
    series: &StationSeries,
    cfg: &PipelineConfig,
    bp: &AqiBreakpoints,
    diag: &mut Diagnostics,
) -> Result<StationSeries> {
    let policy = cfg.impute_policy()?;
    let denoise_cfg = cfg.denoise()?;
    let mut filled = impute_missing(series, policy)?;
    filled.fill_aqi(bp, diag);

    let mut window = None;
    let mut out = filled.clone();
    let mut local = Diagnostics::default();
    for p in Pollutant::ALL {
        let grid = build_station_grid(&filled, p, &mut local)?;
        let clean = denoise(&grid, &denoise_cfg);
        let start = grid.first_row;
        let len = grid.days() * grid.per_day();
        window = Some((start, len));
        for (i, v) in clean.values.as_slice().iter().enumerate() {
            out.readings[start + i][p.index()] = Some(v.max(0.0));
        }
    }
    // Every column shares the same timestamps, so one pollutant's drop count is the truth.
    diag.dropped_readings += local.dropped_readings / N_POLLUTANTS;
    let (start, len) = window.unwrap_or((0, 0));
    out.timestamps = out.timestamps[start..start + len].to_vec();
    out.readings = out.readings[start..start + len].to_vec();
    out.aqi = out.aqi[start..start + len].to_vec();
    out.band = out.band[start..start + len].to_vec();
    Ok(out)
}

/// Counts reported by [`preprocess`].
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessSummary {
    pub rows: usize,
    pub daily_rows: Option<usize>,
}

pub fn preprocess(cfg: &PipelineConfig, diag: &mut Diagnostics) -> Result<PreprocessSummary> {
    let bp = load_breakpoints(cfg)?;
    let hourly = read_series(&out(cfg, INGESTED_FILE), Cadence::Hourly, diag)?;
    let pre = hourly
        .iter()
        .map(|s| preprocess_series(s, cfg, &bp, diag))
        .collect::<Result<Vec<_>>>()?;
    write_series(&out(cfg, PREPROCESSED_FILE), &pre)?;

    let daily_in = out(cfg, INGESTED_DAILY_FILE);
    let daily_rows = if cfg.daily_path().is_some() {
        let daily = read_series(&daily_in, Cadence::Daily, diag)?;
        let pre_daily = daily
            .iter()
            .map(|s| preprocess_series(s, cfg, &bp, diag))
            .collect::<Result<Vec<_>>>()?;
        write_series(&out(cfg, PREPROCESSED_DAILY_FILE), &pre_daily)?;
        Some(pre_daily.iter().map(StationSeries::len).sum())
    } else {
        remove_if_present(&out(cfg, PREPROCESSED_DAILY_FILE))?;
        None
    };
    Ok(PreprocessSummary {
        rows: pre.iter().map(StationSeries::len).sum(),
        daily_rows,
    })
}

fn complete_rows(series: &[StationSeries]) -> Vec<Vec<f64>> {
    series
        .iter()
        .flat_map(|s| s.readings.iter())
        .filter_map(|r| r.iter().copied().collect::<Option<Vec<f64>>>())
        .collect()
}

/// Per station and calendar day, the mean of each pollutant.
fn daily_means(series: &[StationSeries]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for s in series {
        let mut days: BTreeMap<NaiveDate, (Vec<f64>, usize)> = BTreeMap::new();
        for (t, r) in s.timestamps.iter().zip(&s.readings) {
            if let Some(v) = r.iter().copied().collect::<Option<Vec<f64>>>() {
                let e = days.entry(t.date()).or_insert_with(|| (vec![0.0; N_POLLUTANTS], 0));
                e.0.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
                e.1 += 1;
            }
        }
        out.extend(days.into_values().map(|(sum, n)| sum.into_iter().map(|x| x / n as f64).collect()));
    }
    out
}

/// Fits the pool-contrast model on the preprocessed data and writes `selection.csv`.
pub fn select(cfg: &PipelineConfig) -> Result<(FeatureSelection, LogisticModel)> {
    let mut diag = Diagnostics::default();
    let hourly = read_series(&out(cfg, PREPROCESSED_FILE), Cadence::Hourly, &mut diag)?;
    let hourly_pool = complete_rows(&hourly);
    let daily_pool = if cfg.daily_path().is_some() {
        complete_rows(&read_series(&out(cfg, PREPROCESSED_DAILY_FILE), Cadence::Daily, &mut diag)?)
    } else {
        daily_means(&hourly)
    };
    let set = homogenize(&hourly_pool, &daily_pool)?;
    let model = fit_logistic(
        &set,
        &LogisticConfig {
            ridge: cfg.selection.ridge,
            ..LogisticConfig::default()
        },
    )?;
    let selection = select_features(&model, cfg.selection.k)?;
    write(&out(cfg, SELECTION_FILE), selection.to_csv())?;
    Ok((selection, model))
}

pub fn load_selection(cfg: &PipelineConfig) -> Result<FeatureSelection> {
    let path = out(cfg, SELECTION_FILE);
    let text = String::from_utf8(read(&path)?)
        .map_err(|_| Error::format("selection csv", "not UTF-8"))?;
    FeatureSelection::from_csv(&text)
}

/// Labelled rows over the selected pollutants.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Pollutant>,
    pub x: Matrix,
    pub aqi: Vec<f64>,
    pub station: Vec<usize>,
    pub time: Vec<NaiveDateTime>,
}

impl Dataset {
    pub fn from_series(series: &[StationSeries], features: &[Pollutant]) -> Result<Dataset> {
        let mut data = Vec::new();
        let (mut aqi, mut station, mut time) = (Vec::new(), Vec::new(), Vec::new());
        for (g, s) in series.iter().enumerate() {
            for i in 0..s.len() {
                let (Some(a), Some(row)) = (
                    s.aqi[i],
                    features.iter().map(|p| s.readings[i][p.index()]).collect::<Option<Vec<f64>>>(),
                ) else {
                    continue;
                };
                data.extend(row);
                aqi.push(a);
                station.push(g);
                time.push(s.timestamps[i]);
            }
        }
        if aqi.is_empty() {
            return Err(Error::invalid("no rows with an AQI value and all selected readings"));
        }
        Ok(Dataset {
            features: features.to_vec(),
            x: Matrix::from_vec(aqi.len(), features.len(), data)?,
            aqi,
            station,
            time,
        })
    }

    pub fn len(&self) -> usize {
        self.aqi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aqi.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> EvalSet {
        EvalSet {
            x: self.x.select_rows(idx),
            aqi: idx.iter().map(|&i| self.aqi[i]).collect(),
            groups: idx.iter().map(|&i| self.station[i]).collect(),
        }
    }
}

/// Row indices of the training and test parts. Test rows are ordered by
/// time, then station.
/// Rows in the training side; the epsilon keeps 1440 * 0.7 at 1008.
fn train_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction + 1e-9).floor() as usize).min(n)
}

pub fn split_indices(data: &Dataset, cfg: &PipelineConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let tf = cfg.eval.train_fraction;
    let (mut train, mut test) = (Vec::new(), Vec::new());
    match cfg.split_kind()? {
        SplitKind::Chronological => {
            let mut by_station: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for i in 0..data.len() {
                by_station.entry(data.station[i]).or_default().push(i);
            }
            for mut rows in by_station.into_values() {
                rows.sort_by_key(|&i| data.time[i]);
                let cut = train_count(rows.len(), tf);
                train.extend_from_slice(&rows[..cut]);
                test.extend_from_slice(&rows[cut..]);
            }
        }
        SplitKind::Random => {
            let mut rows: Vec<usize> = (0..data.len()).collect();
            rows.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.eval.seed));
            let cut = train_count(rows.len(), tf);
            train = rows[..cut].to_vec();
            test = rows[cut..].to_vec();
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("train/test split left one side empty"));
    }
    train.sort_unstable();
    test.sort_by_key(|&i| (data.time[i], data.station[i]));
    Ok((train, test))
}

/// The trained regressor with its input scaling and feature list.
#[derive(Debug, Clone, PartialEq)]
pub struct DrLssv {
    pub features: Vec<Pollutant>,
    pub scaler: Standardizer,
    pub model: LssvModel,
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

impl DrLssv {
    pub fn to_text(&self) -> String {
        let names: Vec<&str> = self.features.iter().map(|p| p.header()).collect();
        self.model.to_text_with(&[
            ("features", names.join(" ")),
            ("center", join(&self.scaler.mean)),
            ("scale", join(&self.scaler.sd)),
        ])
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (model, extra) = LssvModel::from_text_with(text)?;
        let get = |k: &str| {
            extra
                .get(k)
                .ok_or_else(|| Error::format("model file", format!("missing `{k}` line")))
        };
        let features = get("features")?
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Pollutant>>>()?;
        let nums = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| Error::format("model file", format!("bad number `{s}`"))))
                .collect()
        };
        let scaler = Standardizer {
            mean: nums("center")?,
            sd: nums("scale")?,
        };
        if features.len() != model.input_dim() || scaler.dim() != model.input_dim() || scaler.sd.len() != scaler.dim() {
            return Err(Error::format("model file", "feature, scaling and input widths disagree"));
        }
        Ok(DrLssv {
            features,
            scaler,
            model,
        })
    }
}

impl Forecaster for DrLssv {
    fn name(&self) -> &str {
        "dr-lssv"
    }

    fn predict_aqi(&self, x: &[f64]) -> Result<f64> {
        predict(&self.model, &self.scaler.transform_row(x)?)
    }
}

/// Seeded uniform subsample of at most `cap` rows, returned in ascending order.
pub fn cap_rows(rows: &[usize], cap: usize, seed: u64) -> Vec<usize> {
    if rows.len() <= cap {
        return rows.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, rows.len(), cap)
        .into_iter()
        .map(|i| rows[i])
        .collect();
    picked.sort_unstable();
    picked
}

fn load_dataset(cfg: &PipelineConfig, selection: &FeatureSelection) -> Result<Dataset> {
    let mut diag = Diagnostics::default();
    let series = read_series(&out(cfg, PREPROCESSED_FILE), Cadence::Hourly, &mut diag)?;
    Dataset::from_series(&series, &selection.selected)
}

/// Facts about a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub features: Vec<Pollutant>,
    pub n_train: usize,
    pub n_available: usize,
    pub kernel: String,
    pub gamma: f64,
}

/// Trains the regressor on the training split and writes the model file.
pub fn train(cfg: &PipelineConfig) -> Result<(DrLssv, TrainSummary)> {
    let selection = load_selection(cfg)?;
    let data = load_dataset(cfg, &selection)?;
    let (train_rows, _) = split_indices(&data, cfg)?;
    let rows = cap_rows(&train_rows, cfg.lssv.cap_n, cfg.eval.seed);
    let x_raw = data.x.select_rows(&rows);
    let y: Vec<f64> = rows.iter().map(|&i| data.aqi[i]).collect();
    let scaler = Standardizer::fit(&x_raw);
    let x = scaler.transform(&x_raw);
    let kernel = cfg.kernel(|| median_heuristic(&x, MEDIAN_ROWS))?;
    let model = train_lssv(&x, &y, cfg.lssv.gamma, kernel)?;
    let fitted = DrLssv {
        features: selection.selected.clone(),
        scaler,
        model,
    };
    write(&cfg.model_path(), fitted.to_text())?;
    Ok((
        fitted,
        TrainSummary {
            features: selection.selected,
            n_train: rows.len(),
            n_available: train_rows.len(),
            kernel: kernel.to_string(),
            gamma: cfg.lssv.gamma,
        },
    ))
}

pub fn load_model(path: &Path) -> Result<DrLssv> {
    let text = String::from_utf8(read(path)?).map_err(|_| Error::format("model file", "not UTF-8"))?;
    DrLssv::from_text(&text)
}

/// The fitted forecasters and the test set they are scored on.
pub struct EvalSetup {
    pub model: DrLssv,
    pub ridge: RidgeBaseline,
    pub knn: KnnBaseline,
    pub majority: MajorityBaseline,
    pub test: EvalSet,
    pub train: EvalSet,
}

impl EvalSetup {
    /// The model and the two regression baselines, as swept by `report`.
    pub fn methods(&self) -> [&dyn Forecaster; 3] {
        [&self.model, &self.ridge, &self.knn]
    }

    /// [`EvalSetup::methods`] plus the constant majority-band floor.
    pub fn all_methods(&self) -> [&dyn Forecaster; 4] {
        [&self.model, &self.ridge, &self.knn, &self.majority]
    }
}

/// Loads the model, fits the baselines on the training split, and cuts the
/// test set to `eval.test_n` rows when set.
pub fn eval_setup(cfg: &PipelineConfig) -> Result<EvalSetup> {
    let model = load_model(&cfg.model_path())?;
    let selection = FeatureSelection {
        ranked: model.features.clone(),
        scores: vec![0.0; model.features.len()],
        selected: model.features.clone(),
    };
    let data = load_dataset(cfg, &selection)?;
    let (train_rows, test_rows) = split_indices(&data, cfg)?;
    let train = data.subset(&train_rows);
    let mut test = data.subset(&test_rows);
    if cfg.eval.test_n > 0 {
        if cfg.eval.test_n > test.len() {
            return Err(Error::invalid(format!(
                "eval.test_n = {} exceeds the {} test rows",
                cfg.eval.test_n,
                test.len()
            )));
        }
        test = test.head(cfg.eval.test_n);
    }
    Ok(EvalSetup {
        ridge: RidgeBaseline::fit(&train.x, &train.aqi, RidgeBaseline::DEFAULT_LAMBDA)?,
        knn: KnnBaseline::fit(&train.x, &train.aqi, KnnBaseline::DEFAULT_K)?,
        majority: MajorityBaseline::fit(&train.aqi, &load_breakpoints(cfg)?)?,
        model,
        test,
        train,
    })
}

/// Scores the model and baselines; writes `report.csv` and `confusion.csv`.
pub fn evaluate_stage(cfg: &PipelineConfig) -> Result<Vec<EvalReport>> {
    let bp = load_breakpoints(cfg)?;
    let positive = cfg.positive_set()?;
    let scope = cfg.tau_scope()?;
    let setup = eval_setup(cfg)?;
    let reports = setup
        .all_methods()
        .iter()
        .map(|m| evaluate(*m, &setup.test, &bp, &positive, scope))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<SweepRow> = reports.iter().map(SweepRow::from).collect();
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf)?;
    write(&out(cfg, REPORT_FILE), buf)?;
    write(&out(cfg, CONFUSION_FILE), reports[0].confusion.to_csv())?;
    Ok(reports)
}

/// Configured sweep sizes, or steps of 2000 up to the test size.
pub fn sweep_sizes(cfg: &PipelineConfig, available: usize) -> Vec<usize> {
    if !cfg.eval.sizes.is_empty() {
        return cfg.eval.sizes.clone();
    }
    let mut sizes: Vec<usize> = (1..)
        .map(|i| i * DEFAULT_SWEEP_STEP)
        .take_while(|n| *n <= available)
        .collect();
    if sizes.is_empty() {
        sizes.push(available);
    }
    sizes
}

/// Runs the sample-count sweep; writes `sweep.csv` and `plots/*.dat`.
pub fn report(cfg: &PipelineConfig) -> Result<Vec<SweepRow>> {
    let bp = load_breakpoints(cfg)?;
    let setup = eval_setup(cfg)?;
    let sizes = sweep_sizes(cfg, setup.test.len());
    let rows = sweep_report(
        &setup.test,
        &sizes,
        &setup.methods(),
        &bp,
        &cfg.positive_set()?,
        cfg.tau_scope()?,
    )?;
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf)?;
    write(&out(cfg, SWEEP_FILE), buf)?;
    write_plot_data(&rows, &out(cfg, PLOTS_DIR))?;
    Ok(rows)
}

/// Predicts AQI for every row of a station CSV that has all model features.
/// Output columns: `StationId,Datetime,predicted_aqi,band`.
pub fn predict_csv(model: &DrLssv, input: &[u8], cadence: Cadence, bp: &AqiBreakpoints) -> Result<String> {
    let mut diag = Diagnostics::default();
    let series = parse_station_csv(input, cadence, &mut diag)?;
    let mut s = String::from("StationId,Datetime,predicted_aqi,band\n");
    for st in &series {
        for i in 0..st.len() {
            let Some(x) = model
                .features
                .iter()
                .map(|p| st.readings[i][p.index()])
                .collect::<Option<Vec<f64>>>()
            else {
                continue;
            };
            let aqi = model.predict_aqi(&x)?.clamp(0.0, crate::ingestion::AQI_MAX);
            let _ = writeln!(
                s,
                "{},{},{},{}",
                st.station_id,
                st.timestamps[i].format("%Y-%m-%d %H:%M"),
                aqi,
                bp.band(aqi).name()
            );
        }
    }
    Ok(s)
}

/// Everything a full run reports.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub ingest: IngestSummary,
    pub preprocess: PreprocessSummary,
    pub selection: FeatureSelection,
    pub train: TrainSummary,
    pub reports: Vec<EvalReport>,
    pub sweep: Vec<SweepRow>,
    pub diagnostics: Diagnostics,
}

impl RunSummary {
    /// A few lines for the terminal.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let sel: Vec<String> = self.selection.selected.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(
            s,
            "ingested {} rows from {} stations ({} missing cells, {} skipped rows)",
            self.ingest.rows,
            self.ingest.stations,
            self.ingest.missing_cells,
            self.diagnostics.skipped.len()
        );
        let _ = writeln!(s, "preprocessed {} rows", self.preprocess.rows);
        let _ = writeln!(s, "selected {}", sel.join(", "));
        let _ = writeln!(
            s,
            "trained on {} of {} rows, kernel {}, gamma {}",
            self.train.n_train, self.train.n_available, self.train.kernel, self.train.gamma
        );
        let _ = writeln!(s, "{:<10} {:>6} {:>9} {:>7} {:>10} {:>7}  tau band", "method", "n", "accuracy", "fpr", "time_ms", "tau");
        for r in &self.reports {
            let _ = writeln!(
                s,
                "{:<10} {:>6} {:>9.4} {:>7.4} {:>10.2} {:>7.4}  {}",
                r.method_name,
                r.n_samples,
                r.accuracy,
                r.fpr,
                r.forecast_time_ms,
                r.tau_verdict.tau,
                r.tau_verdict.band.name()
            );
        }
        let _ = writeln!(s, "(ridge, knn and majority are simple in-repo baselines)");
        s
    }
}

/// All stages in order.
pub fn run(cfg: &PipelineConfig) -> Result<RunSummary> {
    let mut diagnostics = Diagnostics::default();
    let ingest = ingest(cfg, &mut diagnostics).map_err(|e| e.in_stage("ingest"))?;
    let preprocess = preprocess(cfg, &mut diagnostics).map_err(|e| e.in_stage("preprocess"))?;
    let (selection, _) = select(cfg).map_err(|e| e.in_stage("select"))?;
    let (_, train) = train(cfg).map_err(|e| e.in_stage("train"))?;
    let reports = evaluate_stage(cfg).map_err(|e| e.in_stage("evaluate"))?;
    let sweep = report(cfg).map_err(|e| e.in_stage("report"))?;
    Ok(RunSummary {
        ingest,
        preprocess,
        selection,
        train,
        reports,
        sweep,
        diagnostics,
    })
}

/// Holds the output directory's advisory lock; released on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    Error::invalid(format!(
                        "{} is locked by another run (remove {} if it is stale)",
                        dir.display(),
                        path.display()
                    ))
                } else {
                    Error::io(&path, e)
                }
            })?;
        Ok(OutputLock { path })
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Artifacts a stage may write, relative to the output directory.
const ARTIFACTS: [&str; 12] = [
    INGESTED_FILE,
    INGESTED_DAILY_FILE,
    PREPROCESSED_FILE,
    PREPROCESSED_DAILY_FILE,
    SELECTION_FILE,
    MODEL_FILE,
    REPORT_FILE,
    CONFUSION_FILE,
    SWEEP_FILE,
    "plots/accuracy.dat",
    "plots/fpr.dat",
    "plots/forecast_time_ms.dat",
];

/// Runs `f` under the output lock. On error, artifacts written since the
/// call began are deleted.
pub fn with_output_dir<T>(cfg: &PipelineConfig, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let dir = &cfg.paths.output;
    let lock = OutputLock::acquire(dir)?;
    let started = SystemTime::now();
    let result = f();
    if result.is_err() {
        let mut paths: Vec<PathBuf> = ARTIFACTS.iter().map(|a| dir.join(a)).collect();
        paths.push(cfg.model_path());
        for p in paths {
            let fresh = fs::metadata(&p)
                .and_then(|m| m.modified())
                .map(|t| t >= started)
                .unwrap_or(false);
            if fresh {
                let _ = fs::remove_file(&p);
            }
        }
    }
    drop(lock);
    result
}
