use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use fairlens::dataset::{encode, load_csv, split, standardize, DatasetSchema};
use fairlens::detector::{assess, Verdict, DEFAULT_EPSILON};
use fairlens::harness::{check_rq_criteria, render, run_grid, Experiment, ExperimentConfig, Format};
use fairlens::inject::{inject_bias, InjectionSpec};
use fairlens::learner::{fit, predict, Hyperparams};
use fairlens::metrics::{fairness_report, FairnessReport};
use fairlens::reweigh::Reweigh;
use fairlens::{Error, Result};

/// Detect and synthesize unfairness in decision labels.
#[derive(Debug, Parser)]
#[command(name = "fairlens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train on the labels and report whether they treat attribute sides unequally.
    /// Exits with status 1 when any audited attribute is unfair.
    Audit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = Reweigh::FairBalanceClass)]
        reweigh: Reweigh,
        /// Seed of the train/test split.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
        /// Restrict the verdict to these attributes (repeatable).
        #[arg(long = "attribute")]
        attributes: Vec<String>,
        /// Write the metrics and verdict as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the fitted model as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Flip labels to favor one side of an attribute and write the corrupted CSV.
    Inject {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        attribute: String,
        /// Side name from the schema, or 0 / 1.
        #[arg(long)]
        favor: String,
        #[arg(long)]
        degree: f64,
        #[arg(long)]
        seed: u64,
        /// Corrupted CSV.
        #[arg(long)]
        out: PathBuf,
        /// Flip log JSON; defaults to the output path with a .flips.json suffix.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run an injection grid and write results.csv, results.md and rq_summary.json.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; all available cores by default.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Serialize)]
struct AuditOutput<'a> {
    report: &'a FairnessReport,
    verdict: &'a Verdict,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[allow(clippy::too_many_arguments)]
fn audit(
    data: &Path,
    schema: &Path,
    epsilon: f64,
    reweigh: Reweigh,
    seed: u64,
    train_fraction: f64,
    only: &[String],
    out: Option<&Path>,
    model_out: Option<&Path>,
) -> Result<bool> {
    let schema = DatasetSchema::from_json_file(schema)?;
    let table = encode(&load_csv(data, &schema)?, &schema)?;
    for name in only {
        if table.attribute_index(name).is_none() {
            return Err(Error::InvalidArgument(format!("unknown sensitive attribute `{name}`")));
        }
    }
    let (train, test) = split(&table, train_fraction, seed)?;
    let (train, test, _) = standardize(&train, &test);
    let hp = Hyperparams::default();
    let model = fit(&train, &reweigh.weights(&train), &hp)?;
    let y_pred = predict(&model, test.features().view(), hp.decision_threshold)?;
    let report = fairness_report(&test, &y_pred)?;
    let mut verdict = assess(&report, epsilon)?;
    if !only.is_empty() {
        verdict.attributes.retain(|a| only.contains(&a.attribute));
    }

    println!(
        "accuracy {:.4}  f1 {:.4}  ({} train / {} test rows, {reweigh})",
        report.accuracy,
        report.f1,
        train.row_count(),
        test.row_count()
    );
    for a in &verdict.attributes {
        println!("{a}");
    }
    if let Some(path) = out {
        let json = serde_json::to_string_pretty(&AuditOutput {
            report: &report,
            verdict: &verdict,
        })?;
        write_file(path, json)?;
    }
    if let Some(path) = model_out {
        write_file(path, model.to_json()?)?;
    }
    Ok(verdict.any_unfair())
}

#[derive(Serialize)]
struct FlipEntry {
    row: usize,
    line: u64,
}

#[derive(Serialize)]
struct FlipLogFile {
    attribute: String,
    favored: String,
    degree: f64,
    seed: u64,
    label_column: String,
    promoted: Vec<FlipEntry>,
    demoted: Vec<FlipEntry>,
}

#[allow(clippy::too_many_arguments)]
fn inject(
    data: &Path,
    schema: &Path,
    attribute: &str,
    favor: &str,
    degree: f64,
    seed: u64,
    out: &Path,
    log: Option<&Path>,
) -> Result<()> {
    let schema = DatasetSchema::from_json_file(schema)?;
    let mut raw = load_csv(data, &schema)?;
    let table = encode(&raw, &schema)?;
    let index = table
        .attribute_index(attribute)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown sensitive attribute `{attribute}`")))?;
    let sides = &table.attributes()[index].sides;
    let side = match favor {
        "0" => 0,
        "1" => 1,
        name => sides
            .iter()
            .position(|s| s.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidArgument(format!("`{name}` is not a side of `{attribute}`")))?
            as u8,
    };
    let spec = InjectionSpec {
        attribute: index,
        favored_side: side,
        degree,
        seed,
    };
    let (_, flips) = inject_bias(&table, &spec)?;

    let column = raw
        .column_index(&schema.label)
        .ok_or_else(|| Error::MissingColumn(schema.label.clone()))?;
    let negative = match &schema.negative_label {
        Some(v) => v.clone(),
        None => (0..raw.len())
            .map(|r| raw.record(r)[column].as_str())
            .filter(|v| *v != schema.positive_label)
            .min()
            .ok_or_else(|| Error::InvalidArgument("no negative label observed".into()))?
            .to_string(),
    };
    let ids = table.row_ids();
    let entries = |rows: &[usize]| -> Vec<FlipEntry> {
        rows.iter()
            .map(|&i| FlipEntry {
                row: ids[i],
                line: raw.line(ids[i]),
            })
            .collect()
    };
    let record = FlipLogFile {
        attribute: attribute.to_string(),
        favored: sides[usize::from(side)].clone(),
        degree,
        seed,
        label_column: schema.label.clone(),
        promoted: entries(&flips.promoted),
        demoted: entries(&flips.demoted),
    };
    for &i in &flips.promoted {
        raw.set(ids[i], column, schema.positive_label.clone());
    }
    for &i in &flips.demoted {
        raw.set(ids[i], column, negative.clone());
    }
    raw.write_csv(out)?;
    let log_path = log.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".flips.json");
        PathBuf::from(p)
    });
    write_file(&log_path, serde_json::to_string_pretty(&record)?)?;
    println!(
        "favoring {} of {attribute}: {} promoted, {} demoted; wrote {} and {}",
        record.favored,
        flips.promoted.len(),
        flips.demoted.len(),
        out.display(),
        log_path.display()
    );
    Ok(())
}

fn experiment(config: &Path, out: &Path, jobs: Option<usize>) -> Result<()> {
    let config = ExperimentConfig::from_json_file(config)?;
    let epsilon = config.epsilon;
    let experiment = Experiment::prepare(config)?;
    log::info!(
        "{}: {} rows x {} repeats on {} records",
        experiment.config.name,
        experiment.rows.len(),
        experiment.config.repeats,
        experiment.data.row_count()
    );
    let table = run_grid(&experiment, jobs)?;
    let summary = check_rq_criteria(&table, epsilon);
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    write_file(&out.join("results.csv"), render(&table, Format::Csv))?;
    let markdown = render(&table, Format::Markdown);
    write_file(&out.join("results.md"), &markdown)?;
    write_file(&out.join("rq_summary.json"), serde_json::to_string_pretty(&summary)?)?;
    print!("{markdown}");
    for (name, c) in [
        ("RQ1 detection", &summary.rq1),
        ("RQ2 opposite signs", &summary.rq2_opposite_signs),
        ("RQ2 direction matches favor", &summary.rq2_direction_matches_favor),
        ("RQ2 monotone in degree", &summary.rq2_monotone),
    ] {
        println!("{name}: {} ({} checks)", if c.pass { "pass" } else { "FAIL" }, c.checked);
        for v in &c.violations {
            println!("  {v}");
        }
    }
    if !summary.failed_cells.is_empty() {
        log::warn!("{} cells failed", summary.failed_cells.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Audit {
            data,
            schema,
            epsilon,
            reweigh,
            seed,
            train_fraction,
            attributes,
            out,
            model_out,
        } => audit(
            data,
            schema,
            *epsilon,
            *reweigh,
            *seed,
            *train_fraction,
            attributes,
            out.as_deref(),
            model_out.as_deref(),
        ),
        Command::Inject {
            data,
            schema,
            attribute,
            favor,
            degree,
            seed,
            out,
            log,
        } => inject(data, schema, attribute, favor, *degree, *seed, out, log.as_deref()).map(|()| false),
        Command::Experiment { config, out, jobs } => experiment(config, out, *jobs).map(|()| false),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
