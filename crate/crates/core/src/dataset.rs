//! Tabular ingestion: CSV loading, schema-driven encoding, seeded train/test
//! splits, train-fitted standardization and sensitive-group partitioning.
//!
//! Sensitive attributes are always binary. Side `0` and side `1` of each
//! attribute are fixed by the schema predicate (the predicate maps a raw value
//! to `1` when it holds), and every metric downstream reports side 1 minus
//! side 0.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kind of a raw feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    /// Numeric value one-hot encoded by the interval of `edges` it falls in.
    Binned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Strictly increasing cut points of a binned feature. `k` edges give
    /// `k + 1` intervals, each closed on the left.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<f64>,
}

impl FeatureSpec {
    /// Interval index of `value` among the edges.
    pub fn bin(&self, value: f64) -> usize {
        self.edges.partition_point(|&e| e <= value)
    }

    /// Display names of the intervals, such as `age<20` and `20<=age<30`.
    pub fn bin_names(&self) -> Vec<String> {
        let n = &self.name;
        let e = &self.edges;
        (0..=e.len())
            .map(|i| match (i.checked_sub(1).map(|j| e[j]), e.get(i)) {
                (None, Some(hi)) => format!("{n}<{hi}"),
                (Some(lo), Some(hi)) => format!("{lo}<={n}<{hi}"),
                (Some(lo), None) => format!("{n}>={lo}"),
                (None, None) => n.clone(),
            })
            .collect()
    }
}

/// Maps a raw value to side `1` when the predicate holds and side `0`
/// otherwise. `map` is the only variant that can reject a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    In(Vec<String>),
    NotIn(Vec<String>),
    Map(BTreeMap<String, u8>),
    Gt(f64),
    Ge(f64),
    Lt(f64),
    Le(f64),
}

impl Predicate {
    pub fn side(&self, raw: &str) -> std::result::Result<u8, String> {
        let numeric = |threshold: f64, cmp: fn(f64, f64) -> bool| {
            raw.parse::<f64>()
                .map(|v| u8::from(cmp(v, threshold)))
                .map_err(|_| format!("`{raw}` is not numeric"))
        };
        match self {
            Predicate::In(values) => Ok(u8::from(values.iter().any(|v| v == raw))),
            Predicate::NotIn(values) => Ok(u8::from(!values.iter().any(|v| v == raw))),
            Predicate::Map(map) => match map.get(raw) {
                Some(&side) if side <= 1 => Ok(side),
                Some(side) => Err(format!("`{raw}` maps to {side}, expected 0 or 1")),
                None => Err(format!("`{raw}` is not covered by the predicate map")),
            },
            Predicate::Gt(t) => numeric(*t, |v, t| v > t),
            Predicate::Ge(t) => numeric(*t, |v, t| v >= t),
            Predicate::Lt(t) => numeric(*t, |v, t| v < t),
            Predicate::Le(t) => numeric(*t, |v, t| v <= t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitiveSpec {
    pub column: String,
    pub predicate: Predicate,
    /// Display names of side 0 and side 1.
    pub names: [String; 2],
}

fn default_true() -> bool {
    true
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "?".to_string()]
}

/// How to turn a raw decision CSV into a [`DatasetTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub label: String,
    pub positive_label: String,
    /// Value written for labels flipped to negative when a corrupted CSV is
    /// emitted. Defaults to the smallest observed non-positive label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_label: Option<String>,
    pub sensitive: Vec<SensitiveSpec>,
    pub features: Vec<FeatureSpec>,
    #[serde(default = "default_true")]
    pub include_sensitive_as_features: bool,
    /// Raw values treated as missing. Rows with a missing value in any used
    /// column are dropped during encoding.
    #[serde(default = "default_missing")]
    pub missing_values: Vec<String>,
}

impl DatasetSchema {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let schema: DatasetSchema = serde_json::from_reader(file)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensitive.is_empty() {
            return Err(Error::InvalidArgument(
                "schema declares no sensitive attribute".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for s in &self.sensitive {
            if !seen.insert(s.column.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "sensitive column `{}` declared twice",
                    s.column
                )));
            }
        }
        for f in &self.features {
            let binned = f.kind == FeatureKind::Binned;
            if binned != !f.edges.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "feature `{}`: edges are required for, and only for, binned features",
                    f.name
                )));
            }
            if !f.edges.windows(2).all(|w| w[0] < w[1]) || f.edges.iter().any(|e| !e.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "feature `{}`: edges must be finite and strictly increasing",
                    f.name
                )));
            }
        }
        Ok(())
    }

    /// Every column the schema reads, label first.
    pub fn required_columns(&self) -> Vec<&str> {
        let mut cols = vec![self.label.as_str()];
        cols.extend(self.sensitive.iter().map(|s| s.column.as_str()));
        cols.extend(self.features.iter().map(|f| f.name.as_str()));
        cols
    }

    pub fn is_missing(&self, value: &str) -> bool {
        self.missing_values.iter().any(|m| m == value)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.sensitive.iter().position(|s| s.column == name)
    }
}

/// String records in file order, with the source line of each record.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    header: Vec<String>,
    records: Vec<Vec<String>>,
    lines: Vec<u64>,
}

impl RawTable {
    pub fn from_records(header: Vec<String>, records: Vec<Vec<String>>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.len() != header.len() {
                return Err(Error::RaggedRow {
                    row: i as u64 + 2,
                    expected: header.len(),
                    found: r.len(),
                });
            }
        }
        let lines = (0..records.len() as u64).map(|i| i + 2).collect();
        Ok(Self {
            header,
            records,
            lines,
        })
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn record(&self, row: usize) -> &[String] {
        &self.records[row]
    }

    /// Field `column` of record `row`.
    pub fn get(&self, row: usize, column: &str) -> Option<&str> {
        let c = self.column_index(column)?;
        self.records.get(row).map(|r| r[c].as_str())
    }

    /// Line of the source file the record came from (header is line 1).
    pub fn line(&self, row: usize) -> u64 {
        self.lines[row]
    }

    pub fn set(&mut self, row: usize, column: usize, value: impl Into<String>) {
        self.records[row][column] = value.into();
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(file)
    }

    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(&self.header)?;
        for r in &self.records {
            out.write_record(r)?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

/// Reads a comma separated file with a header row.
pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &DatasetSchema) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    for col in schema.required_columns() {
        if !header.iter().any(|h| h == col) {
            return Err(Error::MissingColumn(col.to_string()));
        }
    }
    let label_col = header.iter().position(|h| *h == schema.label).unwrap();

    let mut records = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(Error::RaggedRow {
                row: line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        if schema.is_missing(&rec[label_col]) {
            return Err(Error::MissingLabel {
                row: line,
                column: schema.label.clone(),
            });
        }
        records.push(rec.iter().map(str::to_string).collect());
        lines.push(line);
    }
    Ok(RawTable {
        header,
        records,
        lines,
    })
}

/// Role of an encoded feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Indicator,
    Sensitive,
}

/// A binary sensitive attribute and the display names of its two sides.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveAttribute {
    pub name: String,
    pub sides: [String; 2],
}

/// Encoded rows: real features, binary sensitive attributes and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    features: Array2<f64>,
    sensitive: Array2<u8>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    feature_kinds: Vec<ColumnKind>,
    attributes: Vec<SensitiveAttribute>,
    row_ids: Vec<usize>,
}

impl DatasetTable {
    pub fn new(
        features: Array2<f64>,
        sensitive: Array2<u8>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        feature_kinds: Vec<ColumnKind>,
        attributes: Vec<SensitiveAttribute>,
        row_ids: Vec<usize>,
    ) -> Result<Self> {
        let n = labels.len();
        if features.nrows() != n || sensitive.nrows() != n || row_ids.len() != n {
            return Err(Error::Shape(format!(
                "features {} rows, sensitive {} rows, labels {}, row ids {}",
                features.nrows(),
                sensitive.nrows(),
                n,
                row_ids.len()
            )));
        }
        if feature_names.len() != features.ncols() || feature_kinds.len() != features.ncols() {
            return Err(Error::Shape(format!(
                "{} feature columns but {} names and {} kinds",
                features.ncols(),
                feature_names.len(),
                feature_kinds.len()
            )));
        }
        if attributes.len() != sensitive.ncols() {
            return Err(Error::Shape(format!(
                "{} sensitive columns but {} attribute descriptions",
                sensitive.ncols(),
                attributes.len()
            )));
        }
        if sensitive.iter().any(|&a| a > 1) {
            return Err(Error::InvalidArgument("sensitive values must be 0 or 1".into()));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        Ok(Self {
            features,
            sensitive,
            labels,
            feature_names,
            feature_kinds,
            attributes,
            row_ids,
        })
    }

    /// Table with generated names (`x0..`, `a0..`), numeric feature kinds and
    /// row ids `0..n`.
    pub fn from_parts(features: Array2<f64>, sensitive: Array2<u8>, labels: Vec<u8>) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("x{j}")).collect();
        let kinds = vec![ColumnKind::Numeric; features.ncols()];
        let attributes = (0..sensitive.ncols())
            .map(|j| SensitiveAttribute {
                name: format!("a{j}"),
                sides: [format!("a{j}=0"), format!("a{j}=1")],
            })
            .collect();
        let ids = (0..labels.len()).collect();
        Self::new(features, sensitive, labels, names, kinds, attributes, ids)
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn sensitive(&self) -> &Array2<u8> {
        &self.sensitive
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_kinds(&self) -> &[ColumnKind] {
        &self.feature_kinds
    }

    pub fn attributes(&self) -> &[SensitiveAttribute] {
        &self.attributes
    }

    /// Row index of each row in the table it was encoded from.
    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn row_count(&self) -> usize {
        self.labels.len()
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn attribute(&self, j: usize) -> ArrayView1<'_, u8> {
        self.sensitive.column(j)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn group_key(&self, row: usize) -> GroupKey {
        GroupKey(self.sensitive.row(row).to_vec())
    }

    /// Rows `rows` in the given order.
    pub fn select(&self, rows: &[usize]) -> DatasetTable {
        DatasetTable {
            features: self.features.select(Axis(0), rows),
            sensitive: self.sensitive.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            feature_kinds: self.feature_kinds.clone(),
            attributes: self.attributes.clone(),
            row_ids: rows.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Result<DatasetTable> {
        if labels.len() != self.row_count() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                self.row_count()
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
        }
        Ok(DatasetTable {
            labels,
            ..self.clone()
        })
    }

    fn with_features(&self, features: Array2<f64>) -> DatasetTable {
        debug_assert_eq!(features.dim(), self.features.dim());
        DatasetTable {
            features,
            ..self.clone()
        }
    }

    /// Writes the table so that [`DatasetTable::roundtrip_schema`] re-encodes
    /// it exactly: non-sensitive feature columns, then sensitive columns as
    /// 0/1, then the label as 0/1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let keep: Vec<usize> = (0..self.features.ncols())
            .filter(|&j| self.feature_kinds[j] != ColumnKind::Sensitive)
            .collect();
        let mut header: Vec<String> = keep.iter().map(|&j| self.feature_names[j].clone()).collect();
        header.extend(self.attributes.iter().map(|a| a.name.clone()));
        header.push(LABEL_COLUMN.to_string());
        out.write_record(&header)?;
        for i in 0..self.row_count() {
            let mut rec: Vec<String> = keep.iter().map(|&j| format!("{:?}", self.features[[i, j]])).collect();
            rec.extend(self.sensitive.row(i).iter().map(|a| a.to_string()));
            rec.push(self.labels[i].to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    /// Schema reading back the output of [`DatasetTable::write_csv`].
    pub fn roundtrip_schema(&self) -> DatasetSchema {
        let include = self.feature_kinds.contains(&ColumnKind::Sensitive);
        DatasetSchema {
            label: LABEL_COLUMN.to_string(),
            positive_label: "1".to_string(),
            negative_label: Some("0".to_string()),
            sensitive: self
                .attributes
                .iter()
                .map(|a| SensitiveSpec {
                    column: a.name.clone(),
                    predicate: Predicate::Map(BTreeMap::from([("0".into(), 0), ("1".into(), 1)])),
                    names: a.sides.clone(),
                })
                .collect(),
            features: self
                .feature_names
                .iter()
                .zip(&self.feature_kinds)
                .filter(|(_, k)| **k != ColumnKind::Sensitive)
                .map(|(name, _)| FeatureSpec {
                    name: name.clone(),
                    kind: FeatureKind::Numeric,
                    edges: Vec::new(),
                })
                .collect(),
            include_sensitive_as_features: include,
            missing_values: Vec::new(),
        }
    }
}

const LABEL_COLUMN: &str = "__label";

/// Categorical levels fitted on one raw table, reusable on others.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    schema: DatasetSchema,
    levels: Vec<Vec<String>>,
}

impl Encoder {
    /// Fits one-hot levels (sorted, one per distinct value) on the complete
    /// rows of `raw`.
    pub fn fit(raw: &RawTable, schema: &DatasetSchema) -> Result<Self> {
        schema.validate()?;
        let cols = resolve_columns(raw, schema)?;
        let mut levels: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); schema.features.len()];
        for row in 0..raw.len() {
            let rec = raw.record(row);
            if cols.used.iter().any(|&c| schema.is_missing(&rec[c])) {
                continue;
            }
            for (j, f) in schema.features.iter().enumerate() {
                if f.kind == FeatureKind::Categorical {
                    levels[j].insert(rec[cols.features[j]].as_str());
                }
            }
        }
        Ok(Self {
            schema: schema.clone(),
            levels: levels
                .into_iter()
                .map(|set| set.into_iter().map(str::to_string).collect())
                .collect(),
        })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns().into_iter().map(|(n, _)| n).collect()
    }

    fn columns(&self) -> Vec<(String, ColumnKind)> {
        let mut out = Vec::new();
        for (f, levels) in self.schema.features.iter().zip(&self.levels) {
            match f.kind {
                FeatureKind::Numeric => out.push((f.name.clone(), ColumnKind::Numeric)),
                FeatureKind::Categorical => {
                    out.extend(levels.iter().map(|l| (format!("{}={}", f.name, l), ColumnKind::Indicator)))
                }
                FeatureKind::Binned => out.extend(f.bin_names().into_iter().map(|n| (n, ColumnKind::Indicator))),
            }
        }
        if self.schema.include_sensitive_as_features {
            out.extend(self.schema.sensitive.iter().map(|s| (s.column.clone(), ColumnKind::Sensitive)));
        }
        out
    }

    /// Encodes `raw`; rows with a missing value in a used column are dropped.
    pub fn transform(&self, raw: &RawTable) -> Result<DatasetTable> {
        let schema = &self.schema;
        let cols = resolve_columns(raw, schema)?;
        let columns = self.columns();
        let width = columns.len();
        let k = schema.sensitive.len();

        let mut features = Vec::with_capacity(raw.len() * width);
        let mut sensitive = Vec::with_capacity(raw.len() * k);
        let mut labels = Vec::with_capacity(raw.len());
        let mut row_ids = Vec::with_capacity(raw.len());
        let mut dropped = 0usize;

        'rows: for row in 0..raw.len() {
            let rec = raw.record(row);
            if cols.used.iter().any(|&c| schema.is_missing(&rec[c])) {
                dropped += 1;
                continue 'rows;
            }
            let bad = |column: &str, message: String| Error::BadValue {
                row: raw.line(row),
                column: column.to_string(),
                message,
            };
            let mut sides = Vec::with_capacity(k);
            for (s, &c) in schema.sensitive.iter().zip(&cols.sensitive) {
                sides.push(s.predicate.side(&rec[c]).map_err(|m| bad(&s.column, m))?);
            }
            for (j, f) in schema.features.iter().enumerate() {
                let value = &rec[cols.features[j]];
                match f.kind {
                    FeatureKind::Numeric => {
                        let v: f64 = value
                            .parse()
                            .map_err(|_| bad(&f.name, format!("`{value}` is not numeric")))?;
                        features.push(v);
                    }
                    FeatureKind::Categorical => {
                        let levels = &self.levels[j];
                        let pos = levels.binary_search(value).map_err(|_| Error::UnknownLevel {
                            column: f.name.clone(),
                            level: value.clone(),
                        })?;
                        features.extend((0..levels.len()).map(|l| if l == pos { 1.0 } else { 0.0 }));
                    }
                    FeatureKind::Binned => {
                        let v: f64 = value
                            .parse()
                            .map_err(|_| bad(&f.name, format!("`{value}` is not numeric")))?;
                        let pos = f.bin(v);
                        features.extend((0..=f.edges.len()).map(|l| if l == pos { 1.0 } else { 0.0 }));
                    }
                }
            }
            if schema.include_sensitive_as_features {
                features.extend(sides.iter().map(|&a| f64::from(a)));
            }
            sensitive.extend_from_slice(&sides);
            labels.push(u8::from(rec[cols.label] == schema.positive_label));
            row_ids.push(row);
        }
        if dropped > 0 {
            log::info!("dropped {dropped} rows with missing values in used columns");
        }

        let n = labels.len();
        let (names, kinds): (Vec<_>, Vec<_>) = columns.into_iter().unzip();
        DatasetTable::new(
            Array2::from_shape_vec((n, width), features).expect("row-major feature buffer"),
            Array2::from_shape_vec((n, k), sensitive).expect("row-major sensitive buffer"),
            labels,
            names,
            kinds,
            schema
                .sensitive
                .iter()
                .map(|s| SensitiveAttribute {
                    name: s.column.clone(),
                    sides: s.names.clone(),
                })
                .collect(),
            row_ids,
        )
    }
}

struct ColumnIndices {
    label: usize,
    sensitive: Vec<usize>,
    features: Vec<usize>,
    used: Vec<usize>,
}

fn resolve_columns(raw: &RawTable, schema: &DatasetSchema) -> Result<ColumnIndices> {
    let find = |name: &str| raw.column_index(name).ok_or_else(|| Error::MissingColumn(name.to_string()));
    let label = find(&schema.label)?;
    let sensitive = schema.sensitive.iter().map(|s| find(&s.column)).collect::<Result<Vec<_>>>()?;
    let features = schema.features.iter().map(|f| find(&f.name)).collect::<Result<Vec<_>>>()?;
    let mut used: Vec<usize> = std::iter::once(label).chain(sensitive.iter().copied()).chain(features.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    Ok(ColumnIndices {
        label,
        sensitive,
        features,
        used,
    })
}

/// Fits levels on `raw` and encodes it.
pub fn encode(raw: &RawTable, schema: &DatasetSchema) -> Result<DatasetTable> {
    Encoder::fit(raw, schema)?.transform(raw)
}

/// Index sets of a seeded uniform split: the first `floor(fraction * n)`
/// positions of a shuffled `0..n` go to train.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let cut = (train_fraction * n as f64).floor() as usize;
    let test = order.split_off(cut);
    Ok((order, test))
}

pub fn split(data: &DatasetTable, train_fraction: f64, seed: u64) -> Result<(DatasetTable, DatasetTable)> {
    let (train, test) = split_indices(data.row_count(), train_fraction, seed)?;
    Ok((data.select(&train), data.select(&test)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub column: usize,
    pub mean: f64,
    /// `None` for zero-variance columns, which are only centered.
    pub std_dev: Option<f64>,
}

/// Z-score parameters of the numeric columns of a training table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Standardizer {
    pub columns: Vec<ColumnScaling>,
}

impl Standardizer {
    pub fn fit(train: &DatasetTable) -> Self {
        let n = train.row_count() as f64;
        let columns = train
            .feature_kinds()
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == ColumnKind::Numeric)
            .map(|(j, _)| {
                let col = train.features().column(j);
                if train.row_count() == 0 {
                    return ColumnScaling {
                        column: j,
                        mean: 0.0,
                        std_dev: None,
                    };
                }
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                let sd = var.sqrt();
                ColumnScaling {
                    column: j,
                    mean,
                    std_dev: (sd > 1e-12 * mean.abs().max(1.0)).then_some(sd),
                }
            })
            .collect();
        Self { columns }
    }

    pub fn apply(&self, table: &DatasetTable) -> DatasetTable {
        let mut features = table.features().clone();
        for c in &self.columns {
            let sd = c.std_dev.unwrap_or(1.0);
            features.column_mut(c.column).mapv_inplace(|v| (v - c.mean) / sd);
        }
        table.with_features(features)
    }
}

/// Standardizes numeric columns with statistics of `train` only.
pub fn standardize(train: &DatasetTable, test: &DatasetTable) -> (DatasetTable, DatasetTable, Standardizer) {
    let stats = Standardizer::fit(train);
    (stats.apply(train), stats.apply(test), stats)
}

/// Joint assignment of every sensitive attribute.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey(pub Vec<u8>);

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Row indices of each occupied group, in ascending order.
pub fn partition_groups(data: &DatasetTable) -> BTreeMap<GroupKey, Vec<usize>> {
    let mut groups: BTreeMap<GroupKey, Vec<usize>> = BTreeMap::new();
    for i in 0..data.row_count() {
        groups.entry(data.group_key(i)).or_default().push(i);
    }
    groups
}
