use std::collections::HashMap;

use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};

/// Joint cell counts of two clusterings over the same entities. Rows follow
/// the first clustering, columns the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossTab {
    pub row_label: String,
    pub col_label: String,
    pub counts: Vec<Vec<usize>>,
    pub row_totals: Vec<usize>,
    pub col_totals: Vec<usize>,
    pub grand_total: usize,
}

impl CrossTab {
    /// Builds a table from raw counts, computing the margins.
    pub fn from_counts(row_label: impl Into<String>, col_label: impl Into<String>, counts: Vec<Vec<usize>>) -> Result<Self> {
        let k = counts.first().map_or(0, Vec::len);
        if counts.is_empty() || k == 0 || counts.iter().any(|r| r.len() != k) {
            return Err(Error::Analytics("cross-tab counts must be a nonempty rectangle".into()));
        }
        let row_totals: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_totals: Vec<usize> = (0..k).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let grand_total = row_totals.iter().sum();
        Ok(CrossTab {
            row_label: row_label.into(),
            col_label: col_label.into(),
            counts,
            row_totals,
            col_totals,
            grand_total,
        })
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.col_totals.len()
    }
}

/// Counts entities by (cell in `a`, cell in `b`). Entities are matched by id,
/// so the two assignments may list them in different orders.
pub fn crosstab(a: &ClusterAssignment, b: &ClusterAssignment) -> Result<CrossTab> {
    if a.len() != b.len() {
        return Err(Error::EntityMismatch {
            module: "analytics",
            message: format!("{} vs {} entities", a.len(), b.len()),
        });
    }
    let b_cells: HashMap<&str, usize> = b
        .entities()
        .iter()
        .map(String::as_str)
        .zip(b.cells().iter().copied())
        .collect();
    let mut counts = vec![vec![0; b.cell_count()]; a.cell_count()];
    for (e, &h) in a.entities().iter().zip(a.cells()) {
        let k = *b_cells.get(e.as_str()).ok_or_else(|| Error::EntityMismatch {
            module: "analytics",
            message: format!("entity `{e}` missing from `{}`", b.label()),
        })?;
        counts[h - 1][k - 1] += 1;
    }
    CrossTab::from_counts(a.label(), b.label(), counts)
}
