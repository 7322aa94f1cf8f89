//! Group fairness and accuracy metrics on held-out predictions.
//!
//! Differences are always side 1 minus side 0 of the attribute, where side 1
//! is the value the schema predicate maps to `1`.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetTable, SensitiveAttribute};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn tpr(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.tp as f64 / d as f64)
    }

    pub fn fpr(&self) -> Option<f64> {
        let d = self.fp + self.tn;
        (d > 0).then(|| self.fp as f64 / d as f64)
    }

    fn add(&mut self, truth: u8, pred: u8) {
        match (truth, pred) {
            (1, 1) => self.tp += 1,
            (0, 1) => self.fp += 1,
            (0, 0) => self.tn += 1,
            _ => self.fn_ += 1,
        }
    }
}

/// Confusion counts of the two sides of one attribute.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedConfusion {
    pub sides: [Counts; 2],
}

impl GroupedConfusion {
    pub fn total(&self) -> u64 {
        self.sides[0].total() + self.sides[1].total()
    }

    pub fn tpr(&self, side: u8) -> Result<f64> {
        self.sides[usize::from(side)]
            .tpr()
            .ok_or(Error::UndefinedMetric { metric: "TPR", side })
    }

    pub fn fpr(&self, side: u8) -> Result<f64> {
        self.sides[usize::from(side)]
            .fpr()
            .ok_or(Error::UndefinedMetric { metric: "FPR", side })
    }

    /// The same counts with sides 0 and 1 exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            sides: [self.sides[1], self.sides[0]],
        }
    }
}

fn check_binary(name: &str, v: &[u8]) -> Result<()> {
    if v.iter().any(|&x| x > 1) {
        return Err(Error::InvalidArgument(format!("{name} must contain only 0 and 1")));
    }
    Ok(())
}

fn check_lengths(lens: &[usize]) -> Result<()> {
    if lens.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Shape(format!("length mismatch: {lens:?}")));
    }
    Ok(())
}

pub fn grouped_confusion(y_true: &[u8], y_pred: &[u8], a: &[u8]) -> Result<GroupedConfusion> {
    check_lengths(&[y_true.len(), y_pred.len(), a.len()])?;
    check_binary("y_true", y_true)?;
    check_binary("y_pred", y_pred)?;
    check_binary("attribute", a)?;
    let mut gc = GroupedConfusion::default();
    for ((&t, &p), &s) in y_true.iter().zip(y_pred).zip(a) {
        gc.sides[usize::from(s)].add(t, p);
    }
    Ok(gc)
}

/// Equal opportunity difference: `TPR_1 - TPR_0`.
pub fn eod(gc: &GroupedConfusion) -> Result<f64> {
    Ok(gc.tpr(1)? - gc.tpr(0)?)
}

/// Average odds difference: `((FPR_1 - FPR_0) + (TPR_1 - TPR_0)) / 2`.
pub fn aod(gc: &GroupedConfusion) -> Result<f64> {
    let fpr_diff = gc.fpr(1)? - gc.fpr(0)?;
    let tpr_diff = gc.tpr(1)? - gc.tpr(0)?;
    Ok(0.5 * (fpr_diff + tpr_diff))
}

/// Statistical parity difference: `P[C=1 | A=1] - P[C=1 | A=0]`.
pub fn spd(y_pred: &[u8], a: &[u8]) -> Result<f64> {
    check_lengths(&[y_pred.len(), a.len()])?;
    check_binary("y_pred", y_pred)?;
    check_binary("attribute", a)?;
    let mut n = [0u64; 2];
    let mut pos = [0u64; 2];
    for (&p, &s) in y_pred.iter().zip(a) {
        n[usize::from(s)] += 1;
        pos[usize::from(s)] += u64::from(p);
    }
    let rate = |side: usize| {
        (n[side] > 0)
            .then(|| pos[side] as f64 / n[side] as f64)
            .ok_or(Error::UndefinedMetric {
                metric: "positive rate",
                side: side as u8,
            })
    };
    Ok(rate(1)? - rate(0)?)
}

pub fn accuracy(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    check_lengths(&[y_true.len(), y_pred.len()])?;
    if y_true.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty prediction set".into()));
    }
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// F1 of the positive class; 0 when precision + recall is 0.
pub fn f1(y_true: &[u8], y_pred: &[u8]) -> Result<f64> {
    check_lengths(&[y_true.len(), y_pred.len()])?;
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => {}
        }
    }
    // 2PR / (P + R) reduces to 2TP / (2TP + FP + FN)
    let denom = 2 * tp + fp + fn_;
    Ok(if tp == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 })
}

/// Table presentation value: the metric times 100, rounded.
pub fn presentation(value: f64) -> i64 {
    (100.0 * value).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presented {
    pub eod: Option<i64>,
    pub aod: Option<i64>,
    pub spd: Option<i64>,
}

/// Metrics of one sensitive attribute. A metric is `None` when one of its
/// rates has an empty denominator; `undefined` then says which.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeFairness {
    pub attribute: String,
    pub sides: [String; 2],
    pub confusion: GroupedConfusion,
    pub eod: Option<f64>,
    pub aod: Option<f64>,
    pub spd: Option<f64>,
    pub presented: Presented,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

impl AttributeFairness {
    pub fn compute(attribute: &SensitiveAttribute, y_true: &[u8], y_pred: &[u8], a: &[u8]) -> Result<Self> {
        let confusion = grouped_confusion(y_true, y_pred, a)?;
        let mut undefined = Vec::new();
        let mut keep = |r: Result<f64>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                undefined.push(e.to_string());
                None
            }
        };
        let eod = keep(eod(&confusion));
        let aod = keep(aod(&confusion));
        let spd = keep(spd(y_pred, a));
        undefined.dedup();
        Ok(Self {
            attribute: attribute.name.clone(),
            sides: attribute.sides.clone(),
            confusion,
            eod,
            aod,
            spd,
            presented: Presented {
                eod: eod.map(presentation),
                aod: aod.map(presentation),
                spd: spd.map(presentation),
            },
            undefined,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub f1: f64,
    pub accuracy_presented: i64,
    pub f1_presented: i64,
    pub attributes: Vec<AttributeFairness>,
}

impl FairnessReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeFairness> {
        self.attributes.iter().find(|a| a.attribute == name)
    }
}

/// Every metric for predictions `y_pred` against `y_true`, per attribute
/// column of `sensitive`.
pub fn evaluate(
    y_true: &[u8],
    y_pred: &[u8],
    sensitive: ArrayView2<'_, u8>,
    attributes: &[SensitiveAttribute],
) -> Result<FairnessReport> {
    check_lengths(&[y_true.len(), y_pred.len(), sensitive.nrows()])?;
    if sensitive.ncols() != attributes.len() {
        return Err(Error::Shape(format!(
            "{} sensitive columns, {} attribute descriptions",
            sensitive.ncols(),
            attributes.len()
        )));
    }
    let accuracy = accuracy(y_true, y_pred)?;
    let f1 = f1(y_true, y_pred)?;
    let attributes = attributes
        .iter()
        .enumerate()
        .map(|(j, attr)| {
            let a = sensitive.column(j).to_vec();
            AttributeFairness::compute(attr, y_true, y_pred, &a)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FairnessReport {
        accuracy,
        f1,
        accuracy_presented: presentation(accuracy),
        f1_presented: presentation(f1),
        attributes,
    })
}

/// [`evaluate`] against the labels and attributes of `test`.
pub fn fairness_report(test: &DatasetTable, y_pred: &[u8]) -> Result<FairnessReport> {
    evaluate(test.labels(), y_pred, test.sensitive().view(), test.attributes())
}
