//! Per-row training weights.
//!
//! FairBalanceClass gives every row the reciprocal of the size of its
//! (group, class) cell, where a group is the joint assignment of all sensitive
//! attributes. Every occupied cell then carries total weight 1, which removes
//! both group-size differences and per-group class imbalance while leaving the
//! labels themselves untouched.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetTable, GroupKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeights(Vec<f64>);

impl SampleWeights {
    pub fn new(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Weights rescaled by one positive factor so their mean is 1.
    pub fn normalized(&self) -> SampleWeights {
        let total = self.total();
        if self.0.is_empty() || total <= 0.0 {
            return self.clone();
        }
        let scale = self.0.len() as f64 / total;
        SampleWeights(self.0.iter().map(|w| w * scale).collect())
    }
}

/// Training-data preprocessing applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reweigh {
    None,
    FairBalanceClass,
}

impl Reweigh {
    pub fn weights(self, train: &DatasetTable) -> SampleWeights {
        match self {
            Reweigh::None => uniform_weights(train),
            Reweigh::FairBalanceClass => fair_balance_class(train),
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Reweigh::None => "None",
            Reweigh::FairBalanceClass => "FairBalanceClass",
        }
    }
}

impl fmt::Display for Reweigh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reweigh::None => "none",
            Reweigh::FairBalanceClass => "fairbalanceclass",
        })
    }
}

impl FromStr for Reweigh {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Reweigh::None),
            "fairbalanceclass" => Ok(Reweigh::FairBalanceClass),
            other => Err(format!("unknown reweigh strategy `{other}`")),
        }
    }
}

/// A (group, class) cell.
pub type Cell = (GroupKey, u8);

/// Row count of every occupied (group, class) cell.
pub fn cell_sizes(train: &DatasetTable) -> BTreeMap<Cell, usize> {
    let mut sizes = BTreeMap::new();
    for (i, &y) in train.labels().iter().enumerate() {
        *sizes.entry((train.group_key(i), y)).or_insert(0) += 1;
    }
    sizes
}

/// Cells of the full `2^k x 2` grid with no rows.
pub fn absent_cells(train: &DatasetTable) -> Vec<Cell> {
    let sizes = cell_sizes(train);
    let k = train.attribute_count();
    let mut absent = Vec::new();
    for g in 0..(1usize << k) {
        let key = GroupKey((0..k).map(|j| ((g >> (k - 1 - j)) & 1) as u8).collect());
        for c in 0..2u8 {
            if !sizes.contains_key(&(key.clone(), c)) {
                absent.push((key.clone(), c));
            }
        }
    }
    absent
}

/// FairBalanceClass weights. Only occupied cells receive weight, so the total
/// equals the number of occupied cells.
pub fn fair_balance_class(train: &DatasetTable) -> SampleWeights {
    let sizes = cell_sizes(train);
    let absent = absent_cells(train);
    if !absent.is_empty() && train.row_count() > 0 {
        let list: Vec<String> = absent.iter().map(|(g, c)| format!("{g}/y={c}")).collect();
        log::warn!("fairbalanceclass: empty cells {}", list.join(", "));
    }
    let weights = train
        .labels()
        .iter()
        .enumerate()
        .map(|(i, &y)| 1.0 / sizes[&(train.group_key(i), y)] as f64)
        .collect();
    SampleWeights(weights)
}

pub fn uniform_weights(train: &DatasetTable) -> SampleWeights {
    SampleWeights(vec![1.0; train.row_count()])
}
