//! Seeded directional label flipping.
//!
//! Favoring side `s` of an attribute promotes a `degree` fraction of the
//! side-`s` negatives to positive and demotes the same fraction of the
//! other side's positives to negative. Features and all other rows are left
//! alone.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionSpec {
    pub attribute: usize,
    pub favored_side: u8,
    pub degree: f64,
    pub seed: u64,
}

impl InjectionSpec {
    fn validate(&self, data: &DatasetTable) -> Result<()> {
        if !(0.0..1.0).contains(&self.degree) {
            return Err(Error::InvalidArgument(format!(
                "injection degree {} outside [0, 1)",
                self.degree
            )));
        }
        if self.attribute >= data.attribute_count() {
            return Err(Error::InvalidArgument(format!(
                "attribute index {} out of range ({} attributes)",
                self.attribute,
                data.attribute_count()
            )));
        }
        if self.favored_side > 1 {
            return Err(Error::InvalidArgument(format!(
                "favored side {} is not 0 or 1",
                self.favored_side
            )));
        }
        Ok(())
    }
}

/// Rows changed by one injection, as ascending row indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipLog {
    /// Favored-side rows flipped 0 -> 1.
    pub promoted: Vec<usize>,
    /// Disfavored-side rows flipped 1 -> 0.
    pub demoted: Vec<usize>,
}

impl FlipLog {
    pub fn len(&self) -> usize {
        self.promoted.len() + self.demoted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `round(degree * size)` with halves rounded up.
pub fn flip_count(degree: f64, size: usize) -> usize {
    // the slack absorbs representation error on exact halves such as 0.3 * 5
    let count = (degree * size as f64 + 0.5 + 1e-9).floor() as usize;
    count.min(size)
}

fn choose(cell: &[usize], degree: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = flip_count(degree, cell.len());
    let mut chosen: Vec<usize> = sample(rng, cell.len(), k).into_iter().map(|i| cell[i]).collect();
    chosen.sort_unstable();
    chosen
}

pub fn inject_bias(train: &DatasetTable, spec: &InjectionSpec) -> Result<(DatasetTable, FlipLog)> {
    spec.validate(train)?;
    if train.row_count() == 0 {
        return Err(Error::InvalidArgument("cannot inject into an empty table".into()));
    }
    let side = train.attribute(spec.attribute);
    let labels = train.labels();
    let favored = spec.favored_side;
    let promote_pool: Vec<usize> = (0..labels.len())
        .filter(|&i| side[i] == favored && labels[i] == 0)
        .collect();
    let demote_pool: Vec<usize> = (0..labels.len())
        .filter(|&i| side[i] != favored && labels[i] == 1)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let log = FlipLog {
        promoted: choose(&promote_pool, spec.degree, &mut rng),
        demoted: choose(&demote_pool, spec.degree, &mut rng),
    };

    let mut new_labels = labels.to_vec();
    for &i in &log.promoted {
        new_labels[i] = 1;
    }
    for &i in &log.demoted {
        new_labels[i] = 0;
    }
    Ok((train.with_labels(new_labels)?, log))
}

/// Applies `specs` in order, each against the labels left by the previous.
pub fn inject_multi(train: &DatasetTable, specs: &[InjectionSpec]) -> Result<(DatasetTable, Vec<FlipLog>)> {
    let mut seen = BTreeSet::new();
    for s in specs {
        if !seen.insert(s.attribute) {
            return Err(Error::InvalidArgument(format!(
                "attribute {} injected more than once",
                s.attribute
            )));
        }
    }
    let mut current = train.clone();
    let mut logs = Vec::with_capacity(specs.len());
    for s in specs {
        let (next, log) = inject_bias(&current, s)?;
        current = next;
        logs.push(log);
    }
    Ok((current, logs))
}
