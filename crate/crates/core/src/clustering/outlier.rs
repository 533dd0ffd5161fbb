//! Iterative removal of entities that distort the single-variable
//! clusterings.
//!
//! Extreme values squeeze everyone else into the first cell once the data is
//! rescaled to `[0, 1]`. The filter repeatedly drops the entity with the
//! largest robust deviation `|x - median| / IQR` (maximized over variables)
//! while either that deviation exceeds the policy threshold or the largest
//! first-cell share among the one-hot clusterings exceeds the collapse
//! threshold. After each removal the retained sample is rescaled and
//! re-clustered.

use serde::{Deserialize, Serialize};

use super::assign::assign_cells;
use super::weights::{CentroidSet, WeightScheme};
use crate::analytics::{quantile, QuartileMethod};
use crate::error::{Error, Result};
use crate::transform::NormalizedMatrix;

/// Which extremes the retained sample is measured against after removals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rescale {
    /// Rescale onto `[0, 1]` over the retained entities.
    #[default]
    Retained,
    /// Keep the full-sample scaling.
    Original,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterPolicy {
    /// Robust deviation above which an entity is removed.
    pub deviation_threshold: f64,
    /// First-cell share above which the most deviant entity is removed.
    pub collapse_fraction: f64,
    /// Largest fraction of the sample the filter may remove.
    pub max_removed_fraction: f64,
    pub rescale: Rescale,
    pub centroids: CentroidSet,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            deviation_threshold: 5.0,
            collapse_fraction: 0.9,
            max_removed_fraction: 0.3,
            rescale: Rescale::Retained,
            centroids: CentroidSet::default(),
        }
    }
}

impl FilterPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.deviation_threshold > 0.0) {
            return Err(Error::Config("deviation_threshold must be > 0".into()));
        }
        if !(self.collapse_fraction > 0.0 && self.collapse_fraction <= 1.0) {
            return Err(Error::Config("collapse_fraction must lie in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.max_removed_fraction) {
            return Err(Error::Config("max_removed_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RemovalReason {
    Deviation,
    Collapse,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Removal {
    pub entity: String,
    /// Robust deviation at removal time; infinite when the variable's IQR was
    /// zero and the value differed from the median.
    pub deviation: f64,
    /// Variable attaining the deviation.
    pub variable: String,
    /// Largest first-cell share over the one-hot clusterings before removal.
    pub first_cell_share: f64,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub retained: Vec<String>,
    /// In removal order.
    pub removed: Vec<Removal>,
    /// The retained entities, scaled per [`FilterPolicy::rescale`].
    pub matrix: NormalizedMatrix,
}

/// Runs the filter over every variable of `matrix`; pass a matrix holding
/// both variable sets to filter on innovation and performance together.
pub fn outlier_filter(matrix: &NormalizedMatrix, policy: &FilterPolicy) -> Result<FilterOutcome> {
    policy.validate()?;
    let total = matrix.len();
    if total < 2 {
        return Err(Error::TooFewEntities {
            module: "clustering",
            needed: 2,
            found: total,
        });
    }
    let limit = (policy.max_removed_fraction * total as f64).floor() as usize;
    let probes = matrix
        .variables()
        .iter()
        .map(|v| WeightScheme::one_hot(v, matrix.variables()))
        .collect::<Result<Vec<_>>>()?;

    let mut keep: Vec<usize> = (0..total).collect();
    let mut current = matrix.clone();
    let mut removed = Vec::new();
    loop {
        let share = first_cell_share(&current, &policy.centroids, &probes)?;
        let Some((idx, deviation, var)) = most_deviant(&current) else {
            break;
        };
        let deviant = deviation > policy.deviation_threshold;
        let collapsed = share > policy.collapse_fraction;
        if !deviant && !collapsed {
            break;
        }
        if removed.len() + 1 > limit {
            return Err(Error::RunawayFilter {
                attempted: removed.len() + 1,
                total,
                limit,
            });
        }
        removed.push(Removal {
            entity: current.entities()[idx].clone(),
            deviation,
            variable: current.variables()[var].name.clone(),
            first_cell_share: share,
            reason: match (deviant, collapsed) {
                (true, true) => RemovalReason::Both,
                (true, false) => RemovalReason::Deviation,
                _ => RemovalReason::Collapse,
            },
        });
        keep.remove(idx);
        current = match policy.rescale {
            Rescale::Retained => matrix.renormalize(&keep)?,
            Rescale::Original => matrix.restrict(&keep),
        };
    }
    Ok(FilterOutcome {
        retained: current.entities().to_vec(),
        removed,
        matrix: current,
    })
}

fn first_cell_share(m: &NormalizedMatrix, centroids: &CentroidSet, probes: &[WeightScheme]) -> Result<f64> {
    let mut share: f64 = 0.0;
    for scheme in probes {
        let a = assign_cells(m, centroids, scheme)?;
        share = share.max(a.cardinalities()[0] as f64 / a.len() as f64);
    }
    Ok(share)
}

/// (entity index, deviation, variable index) of the entity with the largest
/// robust deviation. Ties go to the lexicographically smallest entity id so
/// the choice does not depend on input order.
fn most_deviant(m: &NormalizedMatrix) -> Option<(usize, f64, usize)> {
    let mut per_entity = vec![(f64::NEG_INFINITY, 0usize); m.len()];
    for (v, var) in m.variables().iter().enumerate() {
        let col = m.column(&var.name).expect("own variable");
        let mut sorted = col.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = quantile(&sorted, 0.5, QuartileMethod::Inclusive);
        let iqr = quantile(&sorted, 0.75, QuartileMethod::Inclusive) - quantile(&sorted, 0.25, QuartileMethod::Inclusive);
        for (e, &x) in col.iter().enumerate() {
            let gap = (x - median).abs();
            let dev = if iqr > 0.0 {
                gap / iqr
            } else if gap > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if dev > per_entity[e].0 {
                per_entity[e] = (dev, v);
            }
        }
    }
    let entities = m.entities();
    (0..m.len())
        .max_by(|&a, &b| {
            per_entity[a]
                .0
                .total_cmp(&per_entity[b].0)
                .then_with(|| entities[b].cmp(&entities[a]))
        })
        .map(|e| (e, per_entity[e].0, per_entity[e].1))
}
