//! `binsight` command line: render, featurize, train, classify, eval, sweep.
//!
//! Exit codes: 0 success (and benign verdicts), 1 error, 2 malicious verdict.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use binsight::model_store::{self, Provenance};
use binsight::pipeline::{
    self, classify_file, evaluate, featurize, ingest, partition_by_ext, sweep, train, EvalReport,
    GroupMetrics, InitSelection, SessionConfig, SplitConfig, TrainOutput,
};
use binsight::soinn::{train_layer2, SoinnNetwork, TrainParams};
use binsight::ExtractorVariant;

#[derive(Parser)]
#[command(
    name = "binsight",
    version,
    about = "Malware triage from binary visualization"
)]
struct Cli {
    /// Seed for every random choice (splits, network init, sweep trials).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a file's bytes to a PNG image.
    Render {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Cap on the image side (power of two).
        #[arg(long, default_value_t = 256)]
        max_side: u32,
    },
    /// Featurize labeled corpora into a CSV dataset
    /// (rows: 1024 values, label, extension).
    Featurize {
        #[arg(long)]
        benign: PathBuf,
        #[arg(long)]
        malicious: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 256)]
        max_side: u32,
        #[arg(long, default_value = "rgb332", value_parser = parse_variant)]
        variant: ExtractorVariant,
        /// Also report mean per-class color frequencies by label.
        #[arg(long)]
        color_stats: bool,
    },
    /// Train a model on labeled corpora.
    Train {
        #[arg(long)]
        benign: PathBuf,
        #[arg(long)]
        malicious: PathBuf,
        /// Denoise period.
        #[arg(long, default_value_t = 100)]
        lambda: u64,
        /// Edge age threshold.
        #[arg(long, default_value_t = 50)]
        age_max: u32,
        #[arg(short, long)]
        output: PathBuf,
        /// Training fraction of the stratified split.
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long, default_value_t = 256)]
        max_side: u32,
        #[arg(long, default_value = "rgb332", value_parser = parse_variant)]
        variant: ExtractorVariant,
        /// Train one model per file extension; OUTPUT becomes a directory.
        #[arg(long)]
        per_ext: bool,
        /// Also build the constant-threshold second layer and report its
        /// cluster count.
        #[arg(long)]
        layer2_threshold: Option<f64>,
        /// Seed-node selection: `seeded` or `first-two`.
        #[arg(long, default_value = "seeded", value_parser = parse_init)]
        init: InitSelection,
    },
    /// Classify one file against a trained model; prints a verdict as JSON.
    /// Exits 0 for benign, 2 for malicious.
    Classify {
        file: PathBuf,
        /// Model file, or a per-extension model directory.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 256)]
        max_side: u32,
    },
    /// Evaluate a model against labeled corpora.
    Eval {
        /// Model file, or a per-extension model directory.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        benign: PathBuf,
        #[arg(long)]
        malicious: PathBuf,
        /// Group metrics by file extension.
        #[arg(long)]
        by_ext: bool,
        #[arg(long, default_value_t = 256)]
        max_side: u32,
    },
    /// Monte Carlo sweep over a (lambda, age-max) grid.
    Sweep {
        #[arg(long)]
        benign: PathBuf,
        #[arg(long)]
        malicious: PathBuf,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<u64>,
        /// Comma-separated age-max values.
        #[arg(long, value_delimiter = ',', required = true)]
        age_max: Vec<u32>,
        #[arg(long, default_value_t = 3)]
        trials: u32,
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long, default_value_t = 256)]
        max_side: u32,
        #[arg(long, default_value = "rgb332", value_parser = parse_variant)]
        variant: ExtractorVariant,
    },
}

fn parse_variant(s: &str) -> Result<ExtractorVariant, String> {
    s.parse().map_err(|e: binsight::Error| e.to_string())
}

fn parse_init(s: &str) -> Result<InitSelection, String> {
    match s {
        "seeded" => Ok(InitSelection::SeededRandom),
        "first-two" => Ok(InitSelection::FirstTwoDistinct),
        other => Err(format!(
            "unknown init mode '{other}' (expected 'seeded' or 'first-two')"
        )),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Render {
            file,
            output,
            max_side,
        } => {
            let bytes = fs::read(&file).with_context(|| file.display().to_string())?;
            let ext = file
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase());
            let img = binsight::binviz::render(&bytes, max_side, ext.as_deref())?;
            binsight::binviz::write_png(&img, &output)?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "output": output,
                        "side": img.side(),
                        "source_len": img.source_len(),
                    })
                );
            } else {
                println!(
                    "wrote {} ({px}x{px}, {} source bytes)",
                    output.display(),
                    img.source_len(),
                    px = img.side()
                );
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Featurize {
            benign,
            malicious,
            output,
            max_side,
            variant,
            color_stats,
        } => {
            let config = SessionConfig {
                max_side,
                variant,
                ..SessionConfig::default()
            };
            let report = ingest(&benign, &malicious)?;
            warn_skips(&report.skipped);
            if report.samples.is_empty() {
                eprintln!("warning: corpora contain no files");
            }
            let out = featurize(&report.samples, &config, color_stats);
            warn_skips(&out.failures);
            pipeline::write_dataset_csv(&out.rows, &output)?;
            if cli.json {
                println!(
                    "{}",
                    serde_json::json!({
                        "output": output,
                        "rows": out.rows.len(),
                        "failures": out.failures.len(),
                        "color_stats": out.color_stats,
                    })
                );
            } else {
                println!(
                    "wrote {} rows to {} ({} failures)",
                    out.rows.len(),
                    output.display(),
                    out.failures.len()
                );
                if let Some(stats) = &out.color_stats {
                    println!("mean color frequency per label (printable, control, extended, null, non-breaking):");
                    for (label, freqs) in stats {
                        println!(
                            "  {label:<10} {:.4}  {:.4}  {:.4}  {:.4}  {:.4}",
                            freqs[0], freqs[1], freqs[2], freqs[3], freqs[4]
                        );
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Train {
            benign,
            malicious,
            lambda,
            age_max,
            output,
            split,
            max_side,
            variant,
            per_ext,
            layer2_threshold,
            init,
        } => {
            let config = SessionConfig {
                max_side,
                variant,
                ..SessionConfig::default()
            };
            let params = TrainParams {
                lambda,
                age_max,
                layer2_threshold,
                rng_seed: cli.seed,
                ..TrainParams::default()
            };
            let split = SplitConfig {
                train_fraction: split,
                seed: cli.seed,
            };
            let report = ingest(&benign, &malicious)?;
            warn_skips(&report.skipped);
            let featurized = featurize(&report.samples, &config, false);
            warn_skips(&featurized.failures);

            if per_ext {
                train_per_ext(
                    &featurized.rows,
                    &params,
                    &split,
                    init,
                    variant,
                    &output,
                    cli.json,
                )
            } else {
                let out = train(&featurized.rows, &params, &split, init)?;
                for w in &out.warnings {
                    eprintln!("warning: {w}");
                }
                model_store::save(&out.network, &Provenance::current(variant), &output)?;
                let layer2_clusters = match layer2_threshold {
                    Some(t) => {
                        let layer2 =
                            train_layer2(&out.network.labeled_prototypes(), t, params.clone())?;
                        Some(layer2.connected_components().len())
                    }
                    None => None,
                };
                summarize_training(&out, &output, layer2_clusters, cli.json);
                Ok(ExitCode::SUCCESS)
            }
        }

        Command::Classify {
            file,
            model,
            max_side,
        } => {
            let ext = file
                .extension()
                .map(|e| e.to_string_lossy().to_ascii_lowercase());
            let model_path = resolve_model_path(&model, ext.as_deref())?;
            // The extractor variant comes from the model itself; a mismatched
            // palette or variant is rejected by the store.
            let (net, provenance) = load_model(&model_path)?;
            let variant: ExtractorVariant = provenance.extractor.parse()?;
            let config = SessionConfig {
                max_side,
                variant,
                ..SessionConfig::default()
            };
            let verdict = classify_file(&file, &net, &config)?;

            #[derive(Serialize)]
            struct VerdictOut<'a> {
                label: &'a str,
                distance: f64,
                winner_id: u64,
                votes: &'a BTreeMap<String, u64>,
                model_provenance: &'a Provenance,
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&VerdictOut {
                    label: &verdict.label,
                    distance: verdict.distance,
                    winner_id: verdict.winner_id,
                    votes: &verdict.votes,
                    model_provenance: &provenance,
                })?
            );
            if verdict.label == "malicious" {
                Ok(ExitCode::from(2))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }

        Command::Eval {
            model,
            benign,
            malicious,
            by_ext,
            max_side,
        } => {
            let report = ingest(&benign, &malicious)?;
            warn_skips(&report.skipped);
            if model.is_dir() {
                eval_per_ext(&model, &report.samples, max_side, cli.seed, cli.json)
            } else {
                let (net, provenance) = load_model(&model)?;
                let variant: ExtractorVariant = provenance.extractor.parse()?;
                let config = SessionConfig {
                    max_side,
                    variant,
                    ..SessionConfig::default()
                };
                let featurized = featurize(&report.samples, &config, false);
                warn_skips(&featurized.failures);
                let eval_report = evaluate(&net, &featurized.rows, by_ext, cli.seed)?;
                print_eval(&eval_report, cli.json)?;
                Ok(ExitCode::SUCCESS)
            }
        }

        Command::Sweep {
            benign,
            malicious,
            lambda,
            age_max,
            trials,
            split,
            max_side,
            variant,
        } => {
            let config = SessionConfig {
                max_side,
                variant,
                ..SessionConfig::default()
            };
            let report = ingest(&benign, &malicious)?;
            warn_skips(&report.skipped);
            let featurized = featurize(&report.samples, &config, false);
            warn_skips(&featurized.failures);
            let result = sweep(
                &featurized.rows,
                &pipeline::SweepConfig {
                    lambdas: lambda,
                    age_maxes: age_max,
                    trials,
                    master_seed: cli.seed,
                    train_fraction: split,
                    base: TrainParams::default(),
                    init: InitSelection::SeededRandom,
                },
            )?;
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&result)?);
            } else {
                println!("lambda  age_max  mean_accuracy  trials  wall_secs");
                for cell in &result.cells {
                    println!(
                        "{:<7} {:<8} {:<14.4} {:<7} {:.3}",
                        cell.lambda, cell.age_max, cell.mean_accuracy, cell.trials, cell.wall_secs
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn warn_skips(skips: &[pipeline::SkipRecord]) {
    for skip in skips {
        eprintln!("warning: skipped {}: {}", skip.path.display(), skip.reason);
    }
}

fn load_model(path: &Path) -> Result<(SoinnNetwork, Provenance)> {
    // The session adopts the model's recorded extractor variant; the palette
    // must match this build.
    let (net, provenance, _) =
        model_store::load_current(path).with_context(|| path.display().to_string())?;
    Ok((net, provenance))
}

/// For a per-extension model directory, pick `<ext>.json`; plain files are
/// used as-is.
fn resolve_model_path(model: &Path, ext: Option<&str>) -> Result<PathBuf> {
    if model.is_dir() {
        let name = format!("{}.json", ext.unwrap_or("noext"));
        let candidate = model.join(&name);
        if !candidate.is_file() {
            bail!("no per-extension model {} under {}", name, model.display());
        }
        Ok(candidate)
    } else {
        Ok(model.to_path_buf())
    }
}

fn train_per_ext(
    rows: &[pipeline::DatasetRow],
    params: &TrainParams,
    split: &SplitConfig,
    init: InitSelection,
    variant: ExtractorVariant,
    output: &Path,
    json: bool,
) -> Result<ExitCode> {
    fs::create_dir_all(output).with_context(|| output.display().to_string())?;
    let mut summaries = Vec::new();
    for (ext, group) in partition_by_ext(rows) {
        match train(&group, params, split, init) {
            Ok(out) => {
                for w in &out.warnings {
                    eprintln!("warning: [{ext}] {w}");
                }
                let path = output.join(format!("{ext}.json"));
                model_store::save(&out.network, &Provenance::current(variant), &path)?;
                summaries.push(serde_json::json!({
                    "ext": ext,
                    "model": path,
                    "rows": group.len(),
                    "nodes": out.network.node_count(),
                    "edges": out.network.edge_count(),
                }));
            }
            Err(err) => {
                eprintln!("warning: skipping extension '{ext}': {err}");
            }
        }
    }
    if summaries.is_empty() {
        bail!("no extension group could be trained");
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&summaries)?);
    } else {
        for s in &summaries {
            println!(
                "[{}] {} rows -> {} nodes, {} edges, wrote {}",
                s["ext"].as_str().unwrap(),
                s["rows"],
                s["nodes"],
                s["edges"],
                s["model"].as_str().unwrap()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn eval_per_ext(
    model_dir: &Path,
    samples: &[pipeline::Sample],
    max_side: u32,
    seed: u64,
    json: bool,
) -> Result<ExitCode> {
    // Group samples by extension and evaluate each group against its model.
    let mut by_ext: BTreeMap<String, Vec<pipeline::Sample>> = BTreeMap::new();
    for sample in samples {
        let key = sample
            .file_ext
            .clone()
            .unwrap_or_else(|| "noext".to_string());
        by_ext.entry(key).or_default().push(sample.clone());
    }
    let mut groups: BTreeMap<String, GroupMetrics> = BTreeMap::new();
    for (ext, group) in by_ext {
        let model_path = model_dir.join(format!("{ext}.json"));
        if !model_path.is_file() {
            eprintln!(
                "warning: no model for extension '{ext}', skipping {} samples",
                group.len()
            );
            continue;
        }
        let (net, provenance) = load_model(&model_path)?;
        let variant: ExtractorVariant = provenance.extractor.parse()?;
        let config = SessionConfig {
            max_side,
            variant,
            ..SessionConfig::default()
        };
        let featurized = featurize(&group, &config, false);
        warn_skips(&featurized.failures);
        let report = evaluate(&net, &featurized.rows, false, seed)?;
        groups.insert(ext, report.overall);
    }
    if groups.is_empty() {
        bail!("no extension group could be evaluated");
    }
    let overall = GroupMetrics::combine(groups.values().copied());
    let report = EvalReport {
        overall,
        by_ext: Some(groups),
        meta: pipeline::RunMeta {
            lambda: 0,
            age_max: 0,
            seed,
            trials: 1,
        },
    };
    print_eval(&report, json)?;
    Ok(ExitCode::SUCCESS)
}

fn summarize_training(out: &TrainOutput, path: &Path, layer2_clusters: Option<usize>, json: bool) {
    if json {
        println!(
            "{}",
            serde_json::json!({
                "model": path,
                "nodes": out.network.node_count(),
                "edges": out.network.edge_count(),
                "steps": out.network.steps_seen(),
                "held_out": out.held_out.len(),
                "layer2_clusters": layer2_clusters,
                "warnings": out.warnings,
            })
        );
    } else {
        println!(
            "trained {} nodes, {} edges over {} steps; {} held-out samples",
            out.network.node_count(),
            out.network.edge_count(),
            out.network.steps_seen(),
            out.held_out.len()
        );
        if let Some(n) = layer2_clusters {
            println!("second layer estimates {n} clusters");
        }
        println!("wrote model to {}", path.display());
    }
}

fn print_eval(report: &EvalReport, json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(report)?);
        return Ok(());
    }
    println!("group      total  tp    tn    fp    fn    accuracy  fp_rate  fn_rate");
    let row = |name: &str, m: &GroupMetrics| {
        println!(
            "{:<10} {:<6} {:<5} {:<5} {:<5} {:<5} {:<9.4} {:<8.4} {:.4}",
            name,
            m.tp + m.tn + m.fp + m.fn_,
            m.tp,
            m.tn,
            m.fp,
            m.fn_,
            m.accuracy,
            m.fp_rate,
            m.fn_rate
        );
    };
    row("overall", &report.overall);
    if let Some(groups) = &report.by_ext {
        for (ext, metrics) in groups {
            row(ext, metrics);
        }
    }
    Ok(())
}
