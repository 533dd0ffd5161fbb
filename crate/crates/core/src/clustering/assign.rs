use rayon::prelude::*;

use super::weights::{CentroidSet, WeightScheme};
use crate::error::{Error, Result};
use crate::transform::NormalizedMatrix;

/// Weighted squared distance from `point` to the diagonal point `centroid`.
///
/// `point` is aligned with `scheme.variables()`. The result lies in `[0, 1]`.
pub fn weighted_distance(point: &[f64], centroid: f64, scheme: &WeightScheme) -> Result<f64> {
    if point.len() != scheme.len() {
        return Err(Error::ScopeMismatch(format!(
            "point has {} components, scheme `{}` weighs {}",
            point.len(),
            scheme.label(),
            scheme.len()
        )));
    }
    if let Some((var, &value)) = scheme
        .variables()
        .iter()
        .zip(point)
        .find(|(_, x)| !(0.0..=1.0).contains(*x))
    {
        return Err(Error::OutOfUnitRange {
            variable: var.name.clone(),
            value,
        });
    }
    if !(centroid > 0.0 && centroid < 1.0) {
        return Err(Error::InvalidCentroids(format!("{centroid} is not in (0, 1)")));
    }
    Ok(distance(point.iter().copied(), centroid, scheme.weights()))
}

fn distance(point: impl Iterator<Item = f64>, centroid: f64, weights: &[f64]) -> f64 {
    let d: f64 = point
        .zip(weights)
        .map(|(x, w)| w * (x - centroid) * (x - centroid))
        .sum();
    // weights may sum to 1 + 1e-12
    d.min(1.0)
}

/// Cell membership of every entity of one clustering.
///
/// Cells are numbered from 1 (the smallest centroid) to `cell_count()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    label: String,
    entities: Vec<String>,
    cells: Vec<usize>,
    tied: Vec<bool>,
    cardinalities: Vec<usize>,
}

impl ClusterAssignment {
    /// Builds an assignment from explicit cell numbers (1-based).
    pub fn from_cells(
        label: impl Into<String>,
        entities: Vec<String>,
        cells: Vec<usize>,
        tied: Vec<bool>,
        cell_count: usize,
    ) -> Result<Self> {
        if entities.len() != cells.len() || tied.len() != cells.len() {
            return Err(Error::InvalidDataset("assignment columns differ in length".into()));
        }
        if cell_count == 0 {
            return Err(Error::InvalidCentroids("zero cells".into()));
        }
        for (i, e) in entities.iter().enumerate() {
            if entities[..i].contains(e) {
                return Err(Error::InvalidDataset(format!("entity `{e}` assigned twice")));
            }
        }
        let mut cardinalities = vec![0; cell_count];
        for (e, &c) in entities.iter().zip(&cells) {
            if c == 0 || c > cell_count {
                return Err(Error::InvalidDataset(format!(
                    "entity `{e}` has cell {c}, expected 1..={cell_count}"
                )));
            }
            cardinalities[c - 1] += 1;
        }
        Ok(ClusterAssignment {
            label: label.into(),
            entities,
            cells,
            tied,
            cardinalities,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    /// Cell number (1-based) of each entity, aligned with [`Self::entities`].
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn tied(&self) -> &[bool] {
        &self.tied
    }

    pub fn cell_of(&self, entity: &str) -> Option<usize> {
        self.entities.iter().position(|e| e == entity).map(|i| self.cells[i])
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cell_count(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn tie_count(&self) -> usize {
        self.tied.iter().filter(|t| **t).count()
    }

    pub fn tied_entities(&self) -> impl Iterator<Item = &str> {
        self.entities
            .iter()
            .zip(&self.tied)
            .filter(|(_, t)| **t)
            .map(|(e, _)| e.as_str())
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }
}

/// Assigns every entity to the cell of its nearest centroid with exact tie
/// detection.
pub fn assign_cells(matrix: &NormalizedMatrix, centroids: &CentroidSet, scheme: &WeightScheme) -> Result<ClusterAssignment> {
    assign_cells_with(matrix, centroids, scheme, 0.0)
}

/// Assigns every entity to the cell of its nearest centroid.
///
/// A centroid whose distance is within `tie_epsilon` of the minimum counts as
/// a minimizer; the entity goes to the lowest-index minimizer and is flagged
/// as tied when there is more than one.
pub fn assign_cells_with(
    matrix: &NormalizedMatrix,
    centroids: &CentroidSet,
    scheme: &WeightScheme,
    tie_epsilon: f64,
) -> Result<ClusterAssignment> {
    if centroids.is_empty() {
        return Err(Error::InvalidCentroids("empty centroid set".into()));
    }
    if !(tie_epsilon >= 0.0) {
        return Err(Error::Config(format!("tie epsilon {tie_epsilon} must be >= 0")));
    }
    let columns = scheme
        .variables()
        .iter()
        .map(|v| {
            matrix
                .variables()
                .iter()
                .position(|w| w.name == v.name)
                .ok_or_else(|| Error::ScopeMismatch(format!(
                    "scheme `{}` weighs {v}, which the matrix lacks",
                    scheme.label()
                )))
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = scheme.weights();
    let cs = centroids.as_slice();

    let picks: Vec<(usize, bool)> = (0..matrix.len())
        .into_par_iter()
        .map(|e| {
            let dists: Vec<f64> = cs
                .iter()
                .map(|&c| distance(columns.iter().map(|&v| matrix.value(e, v)), c, weights))
                .collect();
            let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
            let mut near = dists.iter().enumerate().filter(|(_, d)| **d - min <= tie_epsilon);
            let (first, _) = near.next().expect("at least one centroid");
            (first + 1, near.next().is_some())
        })
        .collect();

    let (cells, tied) = picks.into_iter().unzip();
    ClusterAssignment::from_cells(
        scheme.label().to_string(),
        matrix.entities().to_vec(),
        cells,
        tied,
        cs.len(),
    )
}
