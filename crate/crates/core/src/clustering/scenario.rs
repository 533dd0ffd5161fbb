use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use super::assign::{assign_cells_with, ClusterAssignment};
use super::weights::{CentroidSet, WeightScheme};
use crate::error::{Error, Result};
use crate::transform::NormalizedMatrix;
use crate::variables::{Registry, VariableGroup, VariableId};

/// Named weighting scenario.
///
/// * `I`: one clustering per variable, each with all weight on that variable.
/// * `II`: uniform weights within each set (uniform in value).
/// * `III`: equal weight per variable group, split uniformly among the group's
///   variables (uniform in role).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioId {
    I,
    II,
    III,
    Custom,
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScenarioId::I => "I",
            ScenarioId::II => "II",
            ScenarioId::III => "III",
            ScenarioId::Custom => "custom",
        })
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "I" | "1" => Ok(ScenarioId::I),
            "II" | "2" => Ok(ScenarioId::II),
            "III" | "3" => Ok(ScenarioId::III),
            c if c.eq_ignore_ascii_case("custom") => Ok(ScenarioId::Custom),
            other => Err(Error::Config(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Uniform weights `1/|scope|`.
pub fn value_weights(scope: &[VariableId]) -> Vec<(VariableId, Ratio<i64>)> {
    let n = scope.len() as i64;
    scope.iter().map(|v| (v.clone(), Ratio::new(1, n))).collect()
}

/// `1/G` per group present in `scope`, split evenly inside each group.
pub fn role_weights(scope: &[VariableId]) -> Vec<(VariableId, Ratio<i64>)> {
    let groups: Vec<VariableGroup> = VariableGroup::ALL
        .into_iter()
        .filter(|g| scope.iter().any(|v| v.group == *g))
        .collect();
    let g = groups.len() as i64;
    scope
        .iter()
        .map(|v| {
            let size = scope.iter().filter(|w| w.group == v.group).count() as i64;
            (v.clone(), Ratio::new(1, g) * Ratio::new(1, size))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub innovation_centroids: CentroidSet,
    pub performance_centroids: CentroidSet,
    pub innovation_schemes: Vec<WeightScheme>,
    pub performance_schemes: Vec<WeightScheme>,
    /// Distance slack within which two centroids count as tied.
    pub tie_epsilon: f64,
}

impl ScenarioConfig {
    /// Preset scenario over the registry's innovation and performance sets,
    /// with centroids {1/5, 2/5, 3/5, 4/5} for both.
    pub fn preset(id: ScenarioId, registry: &Registry) -> Result<Self> {
        let innov = registry.innovation();
        let perf = registry.performance();
        if innov.is_empty() || perf.is_empty() {
            return Err(Error::Config(
                "registry needs at least one innovation and one performance variable".into(),
            ));
        }
        let (innovation_schemes, performance_schemes) = match id {
            ScenarioId::I => (
                innov.iter().map(|v| WeightScheme::one_hot(v, &innov)).collect::<Result<_>>()?,
                perf.iter().map(|v| WeightScheme::one_hot(v, &perf)).collect::<Result<_>>()?,
            ),
            ScenarioId::II => (
                vec![WeightScheme::from_rationals("II", value_weights(&innov))?],
                vec![WeightScheme::from_rationals("II", value_weights(&perf))?],
            ),
            ScenarioId::III => (
                vec![WeightScheme::from_rationals("III", role_weights(&innov))?],
                vec![WeightScheme::from_rationals("III", role_weights(&perf))?],
            ),
            ScenarioId::Custom => {
                return Err(Error::Config("custom scenarios need explicit weights".into()))
            }
        };
        Ok(ScenarioConfig {
            id,
            innovation_centroids: CentroidSet::uniform(4)?,
            performance_centroids: CentroidSet::uniform(4)?,
            innovation_schemes,
            performance_schemes,
            tie_epsilon: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.innovation_schemes.is_empty() || self.performance_schemes.is_empty() {
            return Err(Error::Config(format!(
                "scenario {} needs at least one scheme per variable set",
                self.id
            )));
        }
        if !(self.tie_epsilon >= 0.0) {
            return Err(Error::Config("tie_epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Assignments produced by one scenario, one per configured scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub id: ScenarioId,
    pub innovation: Vec<ClusterAssignment>,
    pub performance: Vec<ClusterAssignment>,
}

impl ScenarioResult {
    pub fn tie_count(&self) -> usize {
        self.innovation
            .iter()
            .chain(&self.performance)
            .map(ClusterAssignment::tie_count)
            .sum()
    }
}

/// Clusters the innovation matrix and the performance matrix with every
/// scheme of the scenario. Each scheme must weigh exactly its matrix's
/// variables, and both matrices must cover the same entities.
pub fn run_scenario(
    innovation: &NormalizedMatrix,
    performance: &NormalizedMatrix,
    config: &ScenarioConfig,
) -> Result<ScenarioResult> {
    config.validate()?;
    let mut a: Vec<&String> = innovation.entities().iter().collect();
    let mut b: Vec<&String> = performance.entities().iter().collect();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::EntityMismatch {
            module: "clustering",
            message: format!(
                "innovation matrix has {} entities, performance matrix {}",
                a.len(),
                b.len()
            ),
        });
    }
    let run = |m: &NormalizedMatrix, centroids: &CentroidSet, schemes: &[WeightScheme]| {
        schemes
            .iter()
            .map(|s| {
                s.check_scope(m.variables())?;
                assign_cells_with(m, centroids, s, config.tie_epsilon)
            })
            .collect::<Result<Vec<_>>>()
    };
    Ok(ScenarioResult {
        id: config.id,
        innovation: run(innovation, &config.innovation_centroids, &config.innovation_schemes)?,
        performance: run(performance, &config.performance_centroids, &config.performance_schemes)?,
    })
}
