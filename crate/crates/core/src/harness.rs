//! Repeated-split injection experiments and their median/IQR tables.
//!
//! Each grid row is one (preprocessing, injection) combination. Repeat `r`
//! of every row uses seed `base_seed + r` for the split, so rows differ only
//! in what they do to the training labels and weights.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{encode, load_csv, split, standardize, DatasetSchema, DatasetTable, SensitiveAttribute};
use crate::detector::{decide, Status, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::inject::{inject_multi, InjectionSpec};
use crate::learner::{fit, predict, Hyperparams};
use crate::metrics::{fairness_report, presentation};
use crate::reweigh::Reweigh;

/// One side of one sensitive attribute, named by the attribute and either a
/// side name from the schema or `"0"` / `"1"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Favor {
    pub attribute: String,
    pub favor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Relative paths resolve against the config file's directory.
    pub data: PathBuf,
    pub schema: PathBuf,
    #[serde(default = "default_reweigh")]
    pub reweigh: Reweigh,
    /// Adds the unweighted, uninjected row.
    #[serde(default = "default_true")]
    pub baseline: bool,
    #[serde(default = "default_degrees")]
    pub degrees: Vec<f64>,
    /// One injected row per template and degree.
    #[serde(default)]
    pub single: Vec<Favor>,
    /// Templates injecting several attributes at once, all at the same degree.
    #[serde(default)]
    pub joint: Vec<Vec<Favor>>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Degree at which injected attributes must be detected.
    #[serde(default = "default_detection_degree")]
    pub detection_degree: f64,
    #[serde(default)]
    pub hyperparams: Hyperparams,
}

fn default_reweigh() -> Reweigh {
    Reweigh::FairBalanceClass
}
fn default_true() -> bool {
    true
}
fn default_degrees() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4]
}
fn default_repeats() -> usize {
    30
}
fn default_train_fraction() -> f64 {
    0.7
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_detection_degree() -> f64 {
    0.4
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.data = base.join(&config.data);
        config.schema = base.join(&config.schema);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if let Some(d) = self.degrees.iter().find(|d| !(0.0..1.0).contains(*d)) {
            return bad(format!("degree {d} outside [0, 1)"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train fraction {} outside (0, 1)", self.train_fraction));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        if self.joint.iter().any(Vec::is_empty) {
            return bad("empty joint injection template".into());
        }
        self.hyperparams.validate()
    }
}

/// One injection of a grid row, resolved against the encoded attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowInjection {
    pub attribute: usize,
    pub attribute_name: String,
    pub favored_side: u8,
    pub favored: String,
    pub degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub strategy: Reweigh,
    /// Empty for the uninjected rows.
    pub injections: Vec<RowInjection>,
}

impl GridRow {
    pub fn injection_label(&self) -> String {
        if self.injections.is_empty() {
            return "None".into();
        }
        self.injections
            .iter()
            .map(|i| format!("{} ({})", i.favored, i.degree))
            .collect::<Vec<_>>()
            .join(", ")
    }

    pub fn label(&self) -> String {
        format!("{} / {}", self.strategy.display_name(), self.injection_label())
    }

    /// The single injection of a one-attribute row.
    pub fn single(&self) -> Option<&RowInjection> {
        match self.injections.as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }
}

fn resolve(favor: &Favor, attributes: &[SensitiveAttribute]) -> Result<(usize, u8)> {
    let index = attributes
        .iter()
        .position(|a| a.name == favor.attribute)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown sensitive attribute `{}`", favor.attribute)))?;
    let sides = &attributes[index].sides;
    let side = match favor.favor.as_str() {
        "0" => 0,
        "1" => 1,
        name => sides
            .iter()
            .position(|s| s.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "`{name}` is not a side of `{}` (sides: {}, {})",
                    favor.attribute, sides[0], sides[1]
                ))
            })? as u8,
    };
    Ok((index, side))
}

/// Rows in table order: baseline, strategy without injection, each single
/// template over the degrees, then each joint template over the degrees.
pub fn grid_rows(config: &ExperimentConfig, attributes: &[SensitiveAttribute]) -> Result<Vec<GridRow>> {
    let injection = |favor: &Favor, degree: f64| -> Result<RowInjection> {
        let (attribute, side) = resolve(favor, attributes)?;
        Ok(RowInjection {
            attribute,
            attribute_name: attributes[attribute].name.clone(),
            favored_side: side,
            favored: attributes[attribute].sides[usize::from(side)].clone(),
            degree,
        })
    };
    let mut rows = Vec::new();
    if config.baseline {
        rows.push(GridRow {
            strategy: Reweigh::None,
            injections: vec![],
        });
    }
    rows.push(GridRow {
        strategy: config.reweigh,
        injections: vec![],
    });
    for template in &config.single {
        for &d in &config.degrees {
            rows.push(GridRow {
                strategy: config.reweigh,
                injections: vec![injection(template, d)?],
            });
        }
    }
    for template in &config.joint {
        for &d in &config.degrees {
            let injections = template.iter().map(|f| injection(f, d)).collect::<Result<Vec<_>>>()?;
            rows.push(GridRow {
                strategy: config.reweigh,
                injections,
            });
        }
    }
    Ok(rows)
}

/// A config with its data loaded, encoded and its grid resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub data: DatasetTable,
    pub rows: Vec<GridRow>,
}

impl Experiment {
    pub fn prepare(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let schema = DatasetSchema::from_json_file(&config.schema)?;
        let raw = load_csv(&config.data, &schema)?;
        let data = encode(&raw, &schema)?;
        Self::from_table(config, data)
    }

    pub fn from_table(config: ExperimentConfig, data: DatasetTable) -> Result<Self> {
        config.validate()?;
        let rows = grid_rows(&config, data.attributes())?;
        Ok(Self { config, data, rows })
    }

    pub fn repeat_seed(&self, repeat: usize) -> u64 {
        self.config.base_seed.wrapping_add(repeat as u64)
    }
}

/// Independent stream `stream` of a repeat seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeRecord {
    pub eod: Option<f64>,
    pub aod: Option<f64>,
    pub spd: Option<f64>,
}

/// Metrics of one repeat of one row; `attributes` follows the table order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub f1: f64,
    pub attributes: Vec<AttributeRecord>,
}

/// Split, inject into train, standardize on train statistics, reweigh, fit,
/// and evaluate on the untouched test split.
pub fn run_cell(experiment: &Experiment, row: &GridRow, repeat: usize) -> Result<RepeatRecord> {
    let wrap = |e: Error| Error::Cell {
        cell: row.label(),
        repeat,
        source: Box::new(e),
    };
    let seed = experiment.repeat_seed(repeat);
    let config = &experiment.config;
    let (train, test) = split(&experiment.data, config.train_fraction, seed).map_err(wrap)?;
    let specs: Vec<InjectionSpec> = row
        .injections
        .iter()
        .enumerate()
        .map(|(k, i)| InjectionSpec {
            attribute: i.attribute,
            favored_side: i.favored_side,
            degree: i.degree,
            seed: derive_seed(seed, k as u64),
        })
        .collect();
    let (train, _) = if specs.is_empty() {
        (train, Vec::new())
    } else {
        inject_multi(&train, &specs).map_err(wrap)?
    };
    let (train, test, _) = standardize(&train, &test);
    let weights = row.strategy.weights(&train);
    let hp = &config.hyperparams;
    let model = fit(&train, &weights, hp).map_err(wrap)?;
    let y_pred = predict(&model, test.features().view(), hp.decision_threshold).map_err(wrap)?;
    let report = fairness_report(&test, &y_pred).map_err(wrap)?;
    Ok(RepeatRecord {
        repeat,
        seed,
        accuracy: report.accuracy,
        f1: report.f1,
        attributes: report
            .attributes
            .iter()
            .map(|a| AttributeRecord {
                eod: a.eod,
                aod: a.aod,
                spd: a.spd,
            })
            .collect(),
    })
}

/// Median of the two central values for even counts. `values` nonempty.
pub fn median(values: &[f64]) -> f64 {
    percentile(values, 50.0)
}

/// Linear-interpolation percentile on the sorted values: position
/// `q/100 * (n-1)`. `values` nonempty.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of no values");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    /// 75th minus 25th percentile.
    pub iqr: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        Some(Summary {
            median: median(values),
            iqr: percentile(values, 75.0) - percentile(values, 25.0),
        })
    }
}

/// `None` when any repeat left the metric undefined.
fn summarize(values: impl Iterator<Item = Option<f64>>) -> Option<Summary> {
    let values: Option<Vec<f64>> = values.collect();
    values.and_then(|v| Summary::of(&v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeSummary {
    pub eod: Option<Summary>,
    pub aod: Option<Summary>,
    pub spd: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: Summary,
    pub f1: Summary,
    pub attributes: Vec<AttributeSummary>,
}

impl Aggregate {
    /// `records` nonempty, all with `attribute_count` attributes.
    pub fn from_records(records: &[RepeatRecord], attribute_count: usize) -> Aggregate {
        let metric = |f: fn(&RepeatRecord) -> f64| Summary::of(&records.iter().map(f).collect::<Vec<_>>());
        Aggregate {
            accuracy: metric(|r| r.accuracy).expect("records nonempty"),
            f1: metric(|r| r.f1).expect("records nonempty"),
            attributes: (0..attribute_count)
                .map(|j| AttributeSummary {
                    eod: summarize(records.iter().map(|r| r.attributes[j].eod)),
                    aod: summarize(records.iter().map(|r| r.attributes[j].aod)),
                    spd: summarize(records.iter().map(|r| r.attributes[j].spd)),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Ok {
        aggregate: Aggregate,
        repeats: Vec<RepeatRecord>,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub row: GridRow,
    pub outcome: CellOutcome,
}

impl CellResult {
    pub fn aggregate(&self) -> Option<&Aggregate> {
        match &self.outcome {
            CellOutcome::Ok { aggregate, .. } => Some(aggregate),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub epsilon: f64,
    pub repeats: usize,
    pub detection_degree: f64,
    pub attributes: Vec<SensitiveAttribute>,
    pub cells: Vec<CellResult>,
}

impl ResultTable {
    /// The uninjected row of `strategy`.
    pub fn uninjected(&self, strategy: Reweigh) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.row.strategy == strategy && c.row.injections.is_empty())
    }

    /// The single-attribute row favoring `side` of `attribute` at `degree`.
    pub fn single(&self, attribute: usize, side: u8, degree: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.row
                .single()
                .is_some_and(|i| i.attribute == attribute && i.favored_side == side && i.degree == degree)
        })
    }

    pub fn failed_cells(&self) -> Vec<&CellResult> {
        self.cells.iter().filter(|c| c.aggregate().is_none()).collect()
    }
}

/// Every (row, repeat) task, on `jobs` threads (`None`: rayon's default).
/// Output is independent of thread count and scheduling.
pub fn run_grid(experiment: &Experiment, jobs: Option<usize>) -> Result<ResultTable> {
    let repeats = experiment.config.repeats;
    let tasks: Vec<(usize, usize)> = (0..experiment.rows.len())
        .flat_map(|i| (0..repeats).map(move |r| (i, r)))
        .collect();
    let run = || -> Vec<Result<RepeatRecord>> {
        tasks
            .par_iter()
            .map(|&(i, r)| run_cell(experiment, &experiment.rows[i], r))
            .collect()
    };
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let attribute_count = experiment.data.attribute_count();
    let mut results = results.into_iter();
    let cells = experiment
        .rows
        .iter()
        .map(|row| {
            let chunk: Vec<Result<RepeatRecord>> = results.by_ref().take(repeats).collect();
            let outcome = match chunk.into_iter().collect::<Result<Vec<_>>>() {
                Ok(records) => CellOutcome::Ok {
                    aggregate: Aggregate::from_records(&records, attribute_count),
                    repeats: records,
                },
                Err(e) => {
                    log::warn!("{e}");
                    CellOutcome::Failed { error: e.to_string() }
                }
            };
            CellResult {
                row: row.clone(),
                outcome,
            }
        })
        .collect();
    Ok(ResultTable {
        name: experiment.config.name.clone(),
        epsilon: experiment.config.epsilon,
        repeats,
        detection_degree: experiment.config.detection_degree,
        attributes: experiment.data.attributes().to_vec(),
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

/// Shortest decimal that round-trips, empty when undefined.
fn exact(v: Option<f64>) -> String {
    v.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn render_csv(table: &ResultTable) -> String {
    let mut header = vec![
        "preprocessing".to_string(),
        "injection".into(),
        "status".into(),
        "accuracy_median".into(),
        "accuracy_iqr".into(),
        "f1_median".into(),
        "f1_iqr".into(),
    ];
    for a in &table.attributes {
        for m in ["eod", "aod", "spd"] {
            header.push(format!("{}_{m}_median", a.name));
            header.push(format!("{}_{m}_iqr", a.name));
        }
    }
    let mut out = csv::WriterBuilder::new().from_writer(Vec::new());
    out.write_record(&header).expect("in-memory write");
    for cell in &table.cells {
        let mut rec = vec![
            cell.row.strategy.display_name().to_string(),
            cell.row.injection_label(),
        ];
        match &cell.outcome {
            CellOutcome::Ok { aggregate, .. } => {
                rec.push("ok".into());
                for s in [aggregate.accuracy, aggregate.f1] {
                    rec.push(exact(Some(s.median)));
                    rec.push(exact(Some(s.iqr)));
                }
                for a in &aggregate.attributes {
                    for s in [a.eod, a.aod, a.spd] {
                        rec.push(exact(s.map(|s| s.median)));
                        rec.push(exact(s.map(|s| s.iqr)));
                    }
                }
            }
            CellOutcome::Failed { .. } => {
                rec.push("failed".into());
                rec.resize(header.len(), String::new());
            }
        }
        out.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn presented(s: Option<Summary>, epsilon: Option<f64>) -> String {
    match s {
        None => "n/a".into(),
        Some(s) => {
            let text = format!("{} ({})", presentation(s.median), presentation(s.iqr));
            match epsilon {
                Some(eps) if s.median.abs() >= eps => format!("**{text}**"),
                _ => text,
            }
        }
    }
}

fn render_markdown(table: &ResultTable) -> String {
    let mut out = String::new();
    let eps = table.epsilon;
    let _ = writeln!(out, "## {}\n", table.name);
    let _ = writeln!(
        out,
        "Values are 100x the metric, as median (IQR) over {} repeats. Bold: |median| >= {eps}.\n",
        table.repeats
    );
    let mut head = "| Preprocessing | Injection | Accuracy | F1 |".to_string();
    let mut rule = "|---|---|---:|---:|".to_string();
    for a in &table.attributes {
        let _ = write!(head, " {0} AOD | {0} EOD | {0} SPD |", a.name);
        rule.push_str("---:|---:|---:|");
    }
    let _ = writeln!(out, "{head}\n{rule}");
    for cell in &table.cells {
        let _ = write!(
            out,
            "| {} | {} |",
            cell.row.strategy.display_name(),
            cell.row.injection_label()
        );
        match &cell.outcome {
            CellOutcome::Ok { aggregate, .. } => {
                let _ = write!(
                    out,
                    " {} | {} |",
                    presented(Some(aggregate.accuracy), None),
                    presented(Some(aggregate.f1), None)
                );
                for a in &aggregate.attributes {
                    let _ = write!(
                        out,
                        " {} | {} | {} |",
                        presented(a.aod, Some(eps)),
                        presented(a.eod, Some(eps)),
                        presented(a.spd, None)
                    );
                }
            }
            CellOutcome::Failed { error } => {
                let _ = write!(out, " failed: {} |", error.replace('|', "/"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn render(table: &ResultTable, format: Format) -> String {
    match format {
        Format::Csv => render_csv(table),
        Format::Markdown => render_markdown(table),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub pass: bool,
    pub checked: usize,
    pub violations: Vec<String>,
}

impl Criterion {
    fn check(&mut self, ok: bool, violation: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(violation());
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.violations.is_empty();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RqSummary {
    pub dataset: String,
    pub epsilon: f64,
    /// Uninjected attributes fair; attributes injected at the detection
    /// degree unfair while the rest stay fair.
    pub rq1: Criterion,
    /// Opposite-direction injections at equal degree give opposite signs of
    /// both median EOD and median AOD.
    pub rq2_opposite_signs: Criterion,
    /// The sign of the metrics points at the favored side.
    pub rq2_direction_matches_favor: Criterion,
    /// Median |EOD| and |AOD|, at table precision, never fall as the degree
    /// rises along one direction.
    pub rq2_monotone: Criterion,
    pub failed_cells: Vec<String>,
}

fn medians(a: &AttributeSummary) -> Option<(f64, f64)> {
    Some((a.eod?.median, a.aod?.median))
}

pub fn check_rq_criteria(table: &ResultTable, epsilon: f64) -> RqSummary {
    let names: Vec<&str> = table.attributes.iter().map(|a| a.name.as_str()).collect();
    let mut rq1 = Criterion::default();
    let mut opposite = Criterion::default();
    let mut direction = Criterion::default();
    let mut monotone = Criterion::default();

    for cell in &table.cells {
        let Some(agg) = cell.aggregate() else { continue };
        if cell.row.strategy == Reweigh::None {
            continue;
        }
        let at_detection = cell.row.injections.iter().all(|i| i.degree == table.detection_degree);
        if !cell.row.injections.is_empty() && !at_detection {
            continue;
        }
        for (j, a) in agg.attributes.iter().enumerate() {
            let injected = cell.row.injections.iter().any(|i| i.attribute == j);
            let status = medians(a).map(|(e, o)| decide(e, o, epsilon).status);
            let expected = if injected { Status::Unfair } else { Status::Fair };
            rq1.check(status == Some(expected), || {
                format!(
                    "{}: {} is {} (expected {expected})",
                    cell.row.label(),
                    names[j],
                    status.map_or("undefined".to_string(), |s| s.to_string())
                )
            });
        }
    }

    let mut degrees: Vec<f64> = table
        .cells
        .iter()
        .filter_map(|c| c.row.single().map(|i| i.degree))
        .collect();
    degrees.sort_by(f64::total_cmp);
    degrees.dedup();

    for (j, name) in names.iter().enumerate() {
        for &d in &degrees {
            let pair = [0u8, 1].map(|s| {
                table
                    .single(j, s, d)
                    .and_then(CellResult::aggregate)
                    .and_then(|a| medians(&a.attributes[j]))
            });
            for (side, m) in pair.iter().enumerate() {
                if let Some((e, o)) = m {
                    let want = if side == 1 { 1.0 } else { -1.0 };
                    direction.check(e * want > 0.0 && o * want > 0.0, || {
                        format!(
                            "{name} favoring {} at {d}: EOD {e:+.4}, AOD {o:+.4}",
                            table.attributes[j].sides[side]
                        )
                    });
                }
            }
            if let [Some((e0, o0)), Some((e1, o1))] = pair {
                opposite.check(e0 * e1 < 0.0 && o0 * o1 < 0.0, || {
                    format!("{name} at {d}: EOD {e0:+.4} vs {e1:+.4}, AOD {o0:+.4} vs {o1:+.4}")
                });
            }
        }
        for side in [0u8, 1] {
            let series: Vec<(f64, i64, i64)> = degrees
                .iter()
                .filter_map(|&d| {
                    let (e, o) = medians(&table.single(j, side, d)?.aggregate()?.attributes[j])?;
                    Some((d, presentation(e).abs(), presentation(o).abs()))
                })
                .collect();
            for w in series.windows(2) {
                let (d0, e0, o0) = w[0];
                let (d1, e1, o1) = w[1];
                monotone.check(e1 >= e0 && o1 >= o0, || {
                    format!(
                        "{name} favoring {}: |EOD| {e0} -> {e1}, |AOD| {o0} -> {o1} from {d0} to {d1}",
                        table.attributes[j].sides[usize::from(side)]
                    )
                });
            }
        }
    }

    RqSummary {
        dataset: table.name.clone(),
        epsilon,
        rq1: rq1.finish(),
        rq2_opposite_signs: opposite.finish(),
        rq2_direction_matches_favor: direction.finish(),
        rq2_monotone: monotone.finish(),
        failed_cells: table.failed_cells().iter().map(|c| c.row.label()).collect(),
    }
}
