//! End-to-end orchestration: corpus ingestion, bulk featurization, training
//! with a stratified split, evaluation with per-file-type metrics, parameter
//! sweeps, and single-file classification.
//!
//! Everything here is deterministic under a fixed seed: ingestion orders
//! samples lexicographically, featurization preserves input order even when
//! parallel, and training/evaluation derive all randomness from seeded
//! ChaCha streams.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::binviz::{self, ByteImage, ColorClass};
use crate::error::{Error, Result};
use crate::features::{self, ExtractorVariant};
use crate::soinn::{SoinnNetwork, TrainParams, Verdict};

/// Class label; malicious is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malicious => "malicious",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benign" => Ok(Label::Benign),
            "malicious" => Ok(Label::Malicious),
            other => Err(Error::InvalidParam(format!("unknown label '{other}'"))),
        }
    }
}

/// One ingested file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub path: PathBuf,
    pub label: Label,
    pub file_ext: Option<String>,
    pub byte_len: u64,
}

/// A file that was skipped or failed, with the reason.
#[derive(Debug, Clone)]
pub struct SkipRecord {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub samples: Vec<Sample>,
    pub skipped: Vec<SkipRecord>,
}

/// A featurized sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub values: Vec<f64>,
    pub label: Label,
    pub file_ext: Option<String>,
}

/// Rendering and extraction settings for a session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub max_side: u32,
    pub variant: ExtractorVariant,
    /// Fan featurization out across worker threads. Output is identical
    /// either way; order is always the input order.
    pub parallel: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            max_side: binviz::DEFAULT_MAX_SIDE,
            variant: ExtractorVariant::default(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FeaturizeOutput {
    pub rows: Vec<DatasetRow>,
    pub failures: Vec<SkipRecord>,
    /// Mean pixel frequency of the five color classes per label
    /// (in [`ColorClass::ALL`] order), when requested.
    pub color_stats: Option<BTreeMap<String, [f64; 5]>>,
}

/// Walk the benign and malicious corpus roots. Files are ordered
/// lexicographically by path, benign directory first; entries that cannot be
/// statted are recorded as skipped rather than aborting the run.
pub fn ingest(benign_dir: &Path, malicious_dir: &Path) -> Result<IngestReport> {
    let mut report = IngestReport::default();
    for (dir, label) in [
        (benign_dir, Label::Benign),
        (malicious_dir, Label::Malicious),
    ] {
        let meta = fs::metadata(dir).map_err(|e| Error::io(dir, e))?;
        if !meta.is_dir() {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
            ));
        }
        let mut batch = Vec::new();
        for entry in walkdir::WalkDir::new(dir).follow_links(true) {
            match entry {
                Err(err) => {
                    let path = err.path().unwrap_or(dir).to_path_buf();
                    report.skipped.push(SkipRecord {
                        path,
                        reason: err.to_string(),
                    });
                }
                Ok(entry) if entry.file_type().is_file() => match entry.metadata() {
                    Ok(meta) => batch.push(Sample {
                        path: entry.path().to_path_buf(),
                        label,
                        file_ext: ext_of(entry.path()),
                        byte_len: meta.len(),
                    }),
                    Err(err) => report.skipped.push(SkipRecord {
                        path: entry.path().to_path_buf(),
                        reason: err.to_string(),
                    }),
                },
                Ok(_) => {}
            }
        }
        batch.sort_by(|a, b| a.path.cmp(&b.path));
        report.samples.extend(batch);
    }
    Ok(report)
}

/// Render and extract every sample. Per-sample failures (unreadable files,
/// images too small to stripe) are recorded, not fatal; row order matches
/// sample order.
pub fn featurize(
    samples: &[Sample],
    config: &SessionConfig,
    collect_color_stats: bool,
) -> FeaturizeOutput {
    let process = |sample: &Sample| -> std::result::Result<(DatasetRow, [f64; 5]), SkipRecord> {
        featurize_one(sample, config).map_err(|e| SkipRecord {
            path: sample.path.clone(),
            reason: e.to_string(),
        })
    };
    let results: Vec<_> = if config.parallel {
        samples.par_iter().map(process).collect()
    } else {
        samples.iter().map(process).collect()
    };

    let mut out = FeaturizeOutput::default();
    let mut sums: BTreeMap<String, ([f64; 5], u64)> = BTreeMap::new();
    for (sample, result) in samples.iter().zip(results) {
        match result {
            Ok((row, fractions)) => {
                if collect_color_stats {
                    let entry = sums.entry(sample.label.as_str().to_string()).or_default();
                    for (acc, f) in entry.0.iter_mut().zip(fractions) {
                        *acc += f;
                    }
                    entry.1 += 1;
                }
                out.rows.push(row);
            }
            Err(skip) => out.failures.push(skip),
        }
    }
    if collect_color_stats {
        let stats = sums
            .into_iter()
            .map(|(label, (sum, n))| (label, sum.map(|v| v / n as f64)))
            .collect();
        out.color_stats = Some(stats);
    }
    out
}

fn featurize_one(sample: &Sample, config: &SessionConfig) -> Result<(DatasetRow, [f64; 5])> {
    let bytes = fs::read(&sample.path).map_err(|e| Error::io(&sample.path, e))?;
    let img = binviz::render(&bytes, config.max_side, sample.file_ext.as_deref())?;
    let vector = features::extract_with(&img, config.variant)?;
    let fractions = class_fractions(&img);
    Ok((
        DatasetRow {
            values: vector.into_values(),
            label: sample.label,
            file_ext: sample.file_ext.clone(),
        },
        fractions,
    ))
}

fn class_fractions(img: &ByteImage) -> [f64; 5] {
    let mut counts = [0u64; 5];
    for &px in img.pixels() {
        // The image only ever contains palette colors, so this scan is a
        // direct class count.
        for class in ColorClass::ALL {
            if binviz::class_to_rgb(class) == px {
                counts[class.index()] += 1;
                break;
            }
        }
    }
    let total = img.pixels().len() as f64;
    counts.map(|c| c as f64 / total)
}

fn ext_of(path: &Path) -> Option<String> {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
}

/// Stratified train/held-out split.
#[derive(Debug, Clone, Copy)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// How the two seed vectors are picked from the training split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitSelection {
    /// Seeded-random choice (the default).
    #[default]
    SeededRandom,
    /// First two distinct vectors in training order, for hand-traceable runs.
    FirstTwoDistinct,
}

#[derive(Debug)]
pub struct TrainOutput {
    pub network: SoinnNetwork,
    pub held_out: Vec<DatasetRow>,
    pub warnings: Vec<String>,
}

/// Shuffle with the split seed, split stratified by label, run one
/// sequential pass of training steps over the training split, then a final
/// denoise pass. Seed nodes that never won a labeled input are dropped at
/// the end so the returned network is ready to classify.
pub fn train(
    rows: &[DatasetRow],
    params: &TrainParams,
    split: &SplitConfig,
    init: InitSelection,
) -> Result<TrainOutput> {
    if !(split.train_fraction > 0.0 && split.train_fraction <= 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "train fraction {} outside (0, 1]",
            split.train_fraction
        )));
    }
    let mut warnings = Vec::new();

    let mut indices: Vec<usize> = (0..rows.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(split.seed);
    indices.shuffle(&mut rng);

    let mut per_label: BTreeMap<Label, u64> = BTreeMap::new();
    for row in rows {
        *per_label.entry(row.label).or_insert(0) += 1;
    }
    let quota: BTreeMap<Label, u64> = per_label
        .iter()
        .map(|(&label, &n)| (label, (n as f64 * split.train_fraction).round() as u64))
        .collect();

    let mut taken: BTreeMap<Label, u64> = BTreeMap::new();
    let mut training: Vec<&DatasetRow> = Vec::new();
    let mut held_out: Vec<DatasetRow> = Vec::new();
    for idx in indices {
        let row = &rows[idx];
        let count = taken.entry(row.label).or_insert(0);
        if *count < quota[&row.label] {
            *count += 1;
            training.push(row);
        } else {
            held_out.push(row.clone());
        }
    }

    if training.len() < 2 {
        return Err(Error::DegenerateSplit(format!(
            "training split has {} vectors, need at least 2",
            training.len()
        )));
    }
    if per_label.len() < 2 {
        warnings.push("dataset contains a single label; training proceeds".to_string());
    } else if training
        .iter()
        .map(|r| r.label)
        .collect::<std::collections::BTreeSet<_>>()
        .len()
        < 2
    {
        warnings.push("training split contains a single label".to_string());
    }

    let (first, second) = pick_seeds(&training, params.rng_seed, init)?;
    let mut network = SoinnNetwork::init(
        &training[first].values,
        &training[second].values,
        params.clone(),
    )?;
    for row in &training {
        network.train_step(&row.values, row.label.as_str())?;
    }
    network.denoise();
    let dropped = network.drop_unlabeled_nodes();
    if !dropped.is_empty() {
        warnings.push(format!(
            "dropped {} seed node(s) that never won a labeled input",
            dropped.len()
        ));
    }

    Ok(TrainOutput {
        network,
        held_out,
        warnings,
    })
}

fn pick_seeds(training: &[&DatasetRow], seed: u64, init: InitSelection) -> Result<(usize, usize)> {
    let first = match init {
        InitSelection::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.random_range(0..training.len())
        }
        InitSelection::FirstTwoDistinct => 0,
    };
    let n = training.len();
    for step in 1..n {
        let candidate = (first + step) % n;
        if training[candidate].values != training[first].values {
            return Ok((first, candidate));
        }
    }
    Err(Error::DegenerateInit)
}

/// Confusion counts and rates for one evaluation group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub accuracy: f64,
    pub fp_rate: f64,
    pub fn_rate: f64,
}

impl GroupMetrics {
    /// Aggregate disjoint groups: counts summed, rates recomputed.
    pub fn combine(items: impl IntoIterator<Item = GroupMetrics>) -> GroupMetrics {
        let mut tally = Tally::default();
        for m in items {
            tally.tp += m.tp;
            tally.tn += m.tn;
            tally.fp += m.fp;
            tally.fn_ += m.fn_;
        }
        tally.finalize()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    tp: u64,
    tn: u64,
    fp: u64,
    fn_: u64,
}

impl Tally {
    fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Malicious, Label::Malicious) => self.tp += 1,
            (Label::Benign, Label::Benign) => self.tn += 1,
            (Label::Benign, Label::Malicious) => self.fp += 1,
            (Label::Malicious, Label::Benign) => self.fn_ += 1,
        }
    }

    fn finalize(self) -> GroupMetrics {
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        GroupMetrics {
            tp: self.tp,
            tn: self.tn,
            fp: self.fp,
            fn_: self.fn_,
            accuracy: ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_),
            fp_rate: ratio(self.fp, self.fp + self.tn),
            fn_rate: ratio(self.fn_, self.fn_ + self.tp),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub lambda: u64,
    pub age_max: u32,
    pub seed: u64,
    pub trials: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub overall: GroupMetrics,
    /// Per-extension metrics when grouping was requested; files without an
    /// extension group under `(none)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by_ext: Option<BTreeMap<String, GroupMetrics>>,
    pub meta: RunMeta,
}

/// Classify every row against the network and aggregate confusion metrics,
/// overall and optionally per file extension.
pub fn evaluate(
    net: &SoinnNetwork,
    rows: &[DatasetRow],
    group_by_ext: bool,
    seed: u64,
) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::InvalidParam("evaluation set is empty".into()));
    }
    let mut overall = Tally::default();
    let mut groups: BTreeMap<String, Tally> = BTreeMap::new();
    for row in rows {
        let verdict = net.classify(&row.values)?;
        let predicted = verdict.label.parse::<Label>().map_err(|_| {
            Error::ModelIntegrity(format!(
                "model answered unexpected label '{}'",
                verdict.label
            ))
        })?;
        overall.record(row.label, predicted);
        if group_by_ext {
            let key = row.file_ext.clone().unwrap_or_else(|| "(none)".to_string());
            groups.entry(key).or_default().record(row.label, predicted);
        }
    }
    Ok(EvalReport {
        overall: overall.finalize(),
        by_ext: group_by_ext.then(|| groups.into_iter().map(|(k, t)| (k, t.finalize())).collect()),
        meta: RunMeta {
            lambda: net.params().lambda,
            age_max: net.params().age_max,
            seed,
            trials: 1,
        },
    })
}

/// One cell of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub lambda: u64,
    pub age_max: u32,
    pub mean_accuracy: f64,
    pub trials: u32,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn accuracy_spread(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for cell in &self.cells {
            lo = lo.min(cell.mean_accuracy);
            hi = hi.max(cell.mean_accuracy);
        }
        if self.cells.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Grid and trial settings for [`sweep`].
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub lambdas: Vec<u64>,
    pub age_maxes: Vec<u32>,
    pub trials: u32,
    pub master_seed: u64,
    pub train_fraction: f64,
    pub base: TrainParams,
    pub init: InitSelection,
}

/// Monte Carlo sweep over a `(lambda, age_max)` grid. Each cell averages
/// `trials` runs with seeds `master_seed, master_seed + 1, ...`, each trial
/// taking a fresh split and init from its seed.
pub fn sweep(rows: &[DatasetRow], config: &SweepConfig) -> Result<SweepResult> {
    if config.trials < 1 {
        return Err(Error::InvalidParam("sweep needs at least one trial".into()));
    }
    let mut cells = Vec::with_capacity(config.lambdas.len() * config.age_maxes.len());
    for &lambda in &config.lambdas {
        for &age_max in &config.age_maxes {
            let start = Instant::now();
            let mut accuracy_sum = 0.0;
            for trial in 0..config.trials {
                let seed = config.master_seed.wrapping_add(u64::from(trial));
                let params = TrainParams {
                    lambda,
                    age_max,
                    rng_seed: seed,
                    ..config.base.clone()
                };
                let split = SplitConfig {
                    train_fraction: config.train_fraction,
                    seed,
                };
                let out = train(rows, &params, &split, config.init)?;
                let report = evaluate(&out.network, &out.held_out, false, seed)?;
                accuracy_sum += report.overall.accuracy;
            }
            cells.push(SweepCell {
                lambda,
                age_max,
                mean_accuracy: accuracy_sum / f64::from(config.trials),
                trials: config.trials,
                wall_secs: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(SweepResult { cells })
}

/// Render, extract, and classify a single file against a trained network.
pub fn classify_file(path: &Path, net: &SoinnNetwork, config: &SessionConfig) -> Result<Verdict> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = binviz::render(&bytes, config.max_side, ext_of(path).as_deref())?;
    let vector = features::extract_with(&img, config.variant)?;
    net.classify(vector.values())
}

/// Write rows as CSV: the feature values, then the label, then the file
/// extension (empty when absent).
pub fn write_dataset_csv(rows: &[DatasetRow], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut record: Vec<String> = Vec::new();
    for row in rows {
        record.clear();
        record.extend(row.values.iter().map(|v| v.to_string()));
        record.push(row.label.as_str().to_string());
        record.push(row.file_ext.clone().unwrap_or_default());
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Group rows by file extension for per-extension training; rows without an
/// extension group under `noext`.
pub fn partition_by_ext(rows: &[DatasetRow]) -> BTreeMap<String, Vec<DatasetRow>> {
    let mut groups: BTreeMap<String, Vec<DatasetRow>> = BTreeMap::new();
    for row in rows {
        let key = row.file_ext.clone().unwrap_or_else(|| "noext".to_string());
        groups.entry(key).or_default().push(row.clone());
    }
    groups
}
