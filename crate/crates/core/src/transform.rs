//! Min-max rescaling of averaged variables onto `[0, 1]`.

use crate::dataset::AveragedRecord;
use crate::error::{Error, Result};
use crate::variables::VariableId;

/// Entities × variables matrix of values in `[0, 1]`, stored column-major.
///
/// `ranges[v]` holds the `(min, max)` of the source values the column was
/// scaled with. A matrix straight out of [`minmax_normalize`] has, for every
/// variable, some entity at exactly 0 and some entity at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    entities: Vec<String>,
    variables: Vec<VariableId>,
    columns: Vec<Vec<f64>>,
    ranges: Vec<(f64, f64)>,
}

impl NormalizedMatrix {
    /// Wraps already-scaled columns. Values must lie in `[0, 1]`.
    pub fn from_columns(
        entities: Vec<String>,
        variables: Vec<VariableId>,
        columns: Vec<Vec<f64>>,
        ranges: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if variables.len() != columns.len() || variables.len() != ranges.len() {
            return Err(Error::InvalidDataset("column count mismatch".into()));
        }
        for (i, e) in entities.iter().enumerate() {
            if entities[..i].contains(e) {
                return Err(Error::InvalidDataset(format!("duplicate entity `{e}`")));
            }
        }
        for (var, col) in variables.iter().zip(&columns) {
            if col.len() != entities.len() {
                return Err(Error::InvalidDataset(format!("column {var} has wrong length")));
            }
            if let Some(&value) = col.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::OutOfUnitRange {
                    variable: var.name.clone(),
                    value,
                });
            }
        }
        Ok(NormalizedMatrix {
            entities,
            variables,
            columns,
            ranges,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn column(&self, variable: &str) -> Option<&[f64]> {
        self.variables
            .iter()
            .position(|v| v.name == variable)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn value(&self, entity: usize, variable: usize) -> f64 {
        self.columns[variable][entity]
    }

    /// Keeps only the named variables, in the given order.
    pub fn select(&self, vars: &[VariableId]) -> Result<Self> {
        let mut variables = Vec::with_capacity(vars.len());
        let mut columns = Vec::with_capacity(vars.len());
        let mut ranges = Vec::with_capacity(vars.len());
        for v in vars {
            let i = self
                .variables
                .iter()
                .position(|w| w.name == v.name)
                .ok_or_else(|| Error::ScopeMismatch(format!("matrix has no variable {v}")))?;
            variables.push(self.variables[i].clone());
            columns.push(self.columns[i].clone());
            ranges.push(self.ranges[i]);
        }
        Ok(NormalizedMatrix {
            entities: self.entities.clone(),
            variables,
            columns,
            ranges,
        })
    }

    /// Keeps the entities at `keep` (indices into [`Self::entities`]) without
    /// rescaling. Ranges still refer to the full sample, so the endpoint
    /// guarantee no longer holds.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        NormalizedMatrix {
            entities: keep.iter().map(|&i| self.entities[i].clone()).collect(),
            variables: self.variables.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| keep.iter().map(|&i| c[i]).collect())
                .collect(),
            ranges: self.ranges.clone(),
        }
    }

    /// Keeps the entities at `keep` and rescales every column onto `[0, 1]`
    /// over the retained sample. Rescaling is affine, so this equals
    /// normalizing the retained raw values; ranges are mapped back to the
    /// source scale.
    pub fn renormalize(&self, keep: &[usize]) -> Result<Self> {
        if keep.len() < 2 {
            return Err(Error::TooFewEntities {
                module: "transform",
                needed: 2,
                found: keep.len(),
            });
        }
        let mut columns = Vec::with_capacity(self.columns.len());
        let mut ranges = Vec::with_capacity(self.columns.len());
        for ((var, col), &(lo, hi)) in self.variables.iter().zip(&self.columns).zip(&self.ranges) {
            let sub: Vec<f64> = keep.iter().map(|&i| col[i]).collect();
            let (m, big_m) = extrema(&sub);
            if m == big_m {
                return Err(Error::DegenerateRange {
                    variable: var.name.clone(),
                    value: lo + m * (hi - lo),
                });
            }
            columns.push(scale(&sub, m, big_m));
            ranges.push((lo + m * (hi - lo), lo + big_m * (hi - lo)));
        }
        Ok(NormalizedMatrix {
            entities: keep.iter().map(|&i| self.entities[i].clone()).collect(),
            variables: self.variables.clone(),
            columns,
            ranges,
        })
    }
}

fn extrema(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn scale(xs: &[f64], m: f64, big_m: f64) -> Vec<f64> {
    let span = big_m - m;
    xs.iter().map(|&x| (x - m) / span).collect()
}

/// Rescales each variable to `(x - min) / (max - min)` over the records.
pub fn minmax_normalize(records: &[AveragedRecord], vars: &[VariableId]) -> Result<NormalizedMatrix> {
    if records.len() < 2 {
        return Err(Error::TooFewEntities {
            module: "transform",
            needed: 2,
            found: records.len(),
        });
    }
    let mut columns = Vec::with_capacity(vars.len());
    let mut ranges = Vec::with_capacity(vars.len());
    for var in vars {
        let raw = records
            .iter()
            .map(|r| {
                r.get(&var.name).ok_or_else(|| Error::ScopeMismatch(format!(
                    "record `{}` has no value for {var}",
                    r.entity
                )))
            })
            .collect::<Result<Vec<f64>>>()?;
        let (m, big_m) = extrema(&raw);
        if m == big_m {
            return Err(Error::DegenerateRange {
                variable: var.name.clone(),
                value: m,
            });
        }
        columns.push(scale(&raw, m, big_m));
        ranges.push((m, big_m));
    }
    NormalizedMatrix::from_columns(
        records.iter().map(|r| r.entity.clone()).collect(),
        vars.to_vec(),
        columns,
        ranges,
    )
}
