//! Turns fairness metrics of a model trained on decision labels into a
//! verdict on the labels: unfair when `|EOD|` or `|AOD|` reaches epsilon.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::FairnessReport;

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Fair,
    Unfair,
    Indeterminate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Fair => "fair",
            Status::Unfair => "unfair",
            Status::Indeterminate => "indeterminate",
        })
    }
}

/// Outcome of the threshold rule on one (eod, aod) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub status: Status,
    /// Favored side, only when unfair.
    pub favored_side: Option<u8>,
    /// `max(|eod|, |aod|)`.
    pub magnitude: f64,
    /// The two metrics disagree in sign while at least one reaches epsilon.
    pub ambiguous: bool,
}

/// Unfair iff `|eod| >= epsilon` or `|aod| >= epsilon`. The favored side is 1
/// when the larger-magnitude metric is positive (ties go to eod).
pub fn decide(eod: f64, aod: f64, epsilon: f64) -> Decision {
    let magnitude = eod.abs().max(aod.abs());
    if magnitude < epsilon {
        return Decision {
            status: Status::Fair,
            favored_side: None,
            magnitude,
            ambiguous: false,
        };
    }
    let lead = if eod.abs() >= aod.abs() { eod } else { aod };
    Decision {
        status: Status::Unfair,
        favored_side: Some(u8::from(lead > 0.0)),
        magnitude,
        ambiguous: eod * aod < 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeVerdict {
    pub attribute: String,
    pub status: Status,
    pub favored_side: Option<u8>,
    pub favored: Option<String>,
    pub magnitude: Option<f64>,
    pub eod: Option<f64>,
    pub aod: Option<f64>,
    pub ambiguous: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl fmt::Display for AttributeVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fmt_metric = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:+.4}"));
        write!(
            f,
            "{}: {}",
            self.attribute,
            self.status.to_string().to_uppercase()
        )?;
        if let Some(side) = &self.favored {
            write!(f, " (favors {side})")?;
        }
        write!(f, "  EOD {}  AOD {}", fmt_metric(self.eod), fmt_metric(self.aod))?;
        if self.ambiguous {
            write!(f, "  [EOD and AOD disagree in sign]")?;
        }
        if let Some(note) = &self.note {
            write!(f, "  [{note}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub epsilon: f64,
    pub attributes: Vec<AttributeVerdict>,
}

impl Verdict {
    pub fn any_unfair(&self) -> bool {
        self.attributes.iter().any(|a| a.status == Status::Unfair)
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeVerdict> {
        self.attributes.iter().find(|a| a.attribute == name)
    }
}

pub fn assess(report: &FairnessReport, epsilon: f64) -> Result<Verdict> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} must be positive")));
    }
    let attributes = report
        .attributes
        .iter()
        .map(|a| match (a.eod, a.aod) {
            (Some(eod), Some(aod)) => {
                let d = decide(eod, aod, epsilon);
                AttributeVerdict {
                    attribute: a.attribute.clone(),
                    status: d.status,
                    favored_side: d.favored_side,
                    favored: d.favored_side.map(|s| a.sides[usize::from(s)].clone()),
                    magnitude: Some(d.magnitude),
                    eod: Some(eod),
                    aod: Some(aod),
                    ambiguous: d.ambiguous,
                    note: None,
                }
            }
            _ => AttributeVerdict {
                attribute: a.attribute.clone(),
                status: Status::Indeterminate,
                favored_side: None,
                favored: None,
                magnitude: None,
                eod: a.eod,
                aod: a.aod,
                ambiguous: false,
                note: Some(a.undefined.join("; ")),
            },
        })
        .collect();
    Ok(Verdict { epsilon, attributes })
}
