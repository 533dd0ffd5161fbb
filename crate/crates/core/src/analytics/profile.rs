use std::collections::HashMap;

use super::describe::{describe, StatsSummary};
use crate::clustering::ClusterAssignment;
use crate::dataset::AveragedRecord;
use crate::error::{Error, Result};
use crate::variables::VariableId;

/// Raw-value summaries of one cell's members. Empty cells carry no
/// summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProfile {
    /// 1-based cell number.
    pub cell: usize,
    pub size: usize,
    pub summaries: Vec<(VariableId, StatsSummary)>,
}

pub fn profile_clusters(
    assignment: &ClusterAssignment,
    records: &[AveragedRecord],
    vars: &[VariableId],
) -> Result<Vec<ClusterProfile>> {
    let by_entity: HashMap<&str, &AveragedRecord> =
        records.iter().map(|r| (r.entity.as_str(), r)).collect();
    if by_entity.len() != assignment.len() {
        return Err(Error::EntityMismatch {
            module: "analytics",
            message: format!("{} records vs {} assigned entities", by_entity.len(), assignment.len()),
        });
    }
    let mut members: Vec<Vec<&AveragedRecord>> = vec![Vec::new(); assignment.cell_count()];
    for (e, &cell) in assignment.entities().iter().zip(assignment.cells()) {
        let rec = by_entity.get(e.as_str()).ok_or_else(|| Error::EntityMismatch {
            module: "analytics",
            message: format!("no record for entity `{e}`"),
        })?;
        members[cell - 1].push(rec);
    }

    members
        .into_iter()
        .enumerate()
        .map(|(i, recs)| {
            let summaries = if recs.is_empty() {
                Vec::new()
            } else {
                vars.iter()
                    .map(|v| {
                        let xs = recs
                            .iter()
                            .map(|r| {
                                r.get(&v.name).ok_or_else(|| Error::ScopeMismatch(format!(
                                    "record `{}` lacks {v}",
                                    r.entity
                                )))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok((v.clone(), describe(&xs)?))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            Ok(ClusterProfile {
                cell: i + 1,
                size: recs.len(),
                summaries,
            })
        })
        .collect()
}
