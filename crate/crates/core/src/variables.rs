//! Variable registry.
//!
//! The shipped default holds the nine panel variables: two innovation
//! variables and seven performance variables split across growth,
//! profitability and productivity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableGroup {
    Innovation,
    Growth,
    Profitability,
    Productivity,
}

impl VariableGroup {
    pub const ALL: [VariableGroup; 4] = [
        VariableGroup::Innovation,
        VariableGroup::Growth,
        VariableGroup::Profitability,
        VariableGroup::Productivity,
    ];

    pub fn is_performance(self) -> bool {
        !matches!(self, VariableGroup::Innovation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VariableGroup::Innovation => "innovation",
            VariableGroup::Growth => "growth",
            VariableGroup::Profitability => "profitability",
            VariableGroup::Productivity => "productivity",
        }
    }
}

impl fmt::Display for VariableGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VariableGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VariableGroup::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown variable group `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariableId {
    pub name: String,
    pub group: VariableGroup,
}

impl VariableId {
    pub fn new(name: impl Into<String>, group: VariableGroup) -> Self {
        VariableId {
            name: name.into(),
            group,
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Ordered set of known variables. Order is significant: it fixes column
/// order in every matrix and report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    variables: Vec<VariableId>,
}

impl Default for Registry {
    fn default() -> Self {
        use VariableGroup::*;
        let vars = [
            ("TIAX", Innovation),
            ("TTA", Innovation),
            ("DSal", Growth),
            ("DAss", Growth),
            ("DLab", Growth),
            ("ROI", Profitability),
            ("ROS", Profitability),
            ("ATO", Productivity),
            ("S/E", Productivity),
        ];
        Registry {
            variables: vars
                .into_iter()
                .map(|(name, group)| VariableId::new(name, group))
                .collect(),
        }
    }
}

impl Registry {
    pub fn new(variables: Vec<VariableId>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::Config("variable registry is empty".into()));
        }
        for (i, v) in variables.iter().enumerate() {
            if v.name.trim().is_empty() {
                return Err(Error::Config("variable with empty name".into()));
            }
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::Config(format!("variable `{}` declared twice", v.name)));
            }
        }
        Ok(Registry { variables })
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&VariableId> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn lookup(&self, name: &str) -> Result<&VariableId> {
        self.get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// The innovation set.
    pub fn innovation(&self) -> Vec<VariableId> {
        self.variables
            .iter()
            .filter(|v| !v.group.is_performance())
            .cloned()
            .collect()
    }

    /// The performance set: growth, profitability and productivity together.
    pub fn performance(&self) -> Vec<VariableId> {
        self.variables
            .iter()
            .filter(|v| v.group.is_performance())
            .cloned()
            .collect()
    }
}
