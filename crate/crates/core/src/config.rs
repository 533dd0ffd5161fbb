//! Text configuration.
//!
//! Configuration files are TOML. A scenario file holds a `[scenario]` table
//! and an optional `[filter]` table; a pipeline file adds `[input]`,
//! `[columns]`, `[[variable]]`, `[windows]`, `[analytics]` and `[output]`.
//!
//! ```toml
//! [input]
//! path = "panel.csv"          # relative to this file
//! delimiter = ","             # "," or "\t"
//! entity_column = "entity"
//! year_column = "year"
//! ignore_unknown = false
//!
//! [columns]                   # input column = variable; default: same names
//! TIAX = "TIAX"
//!
//! [windows]
//! innovation = [2006, 2007]
//! performance = [2008, 2010]
//! allow_overlap = false
//!
//! [scenario]
//! id = "III"                  # I, II, III or custom
//! innovation_centroids = [0.2, 0.4, 0.6, 0.8]
//! performance_centroids = [0.2, 0.4, 0.6, 0.8]
//! tie_epsilon = 0.0
//!
//! [[scenario.performance_weights]]   # custom scenarios only
//! label = "growth-heavy"
//! weights = { DSal = "1/6", DAss = "1/6", DLab = "1/6", ROI = 0.125, ROS = 0.125, ATO = 0.125, "S/E" = 0.125 }
//!
//! [filter]
//! enabled = true
//! deviation_threshold = 5.0
//! collapse_fraction = 0.9
//! max_removed_fraction = 0.3
//! rescale = "retained"        # or "original"
//!
//! [analytics]
//! quartiles = "inclusive"     # or "exclusive"
//! moments = "sample"          # or "population"
//!
//! [output]
//! dir = "out"
//! delimiter = ","
//! workers = 0                 # 0: one per core
//! ```
//!
//! Weights are numbers or `"p/q"` fractions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{DescribeOptions, MomentEstimator, QuartileMethod};
use crate::clustering::{CentroidSet, FilterPolicy, Rescale, ScenarioConfig, ScenarioId, WeightScheme};
use crate::dataset::{Schema, YearWindow};
use crate::error::{Error, Result};
use crate::variables::{Registry, VariableGroup, VariableId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightValue {
    Number(f64),
    Text(String),
}

impl WeightValue {
    pub fn to_f64(&self) -> Result<f64> {
        match self {
            WeightValue::Number(x) => Ok(*x),
            WeightValue::Text(s) => {
                let bad = || Error::Config(format!("bad weight `{s}`"));
                match s.split_once('/') {
                    Some((p, q)) => {
                        let p: f64 = p.trim().parse().map_err(|_| bad())?;
                        let q: f64 = q.trim().parse().map_err(|_| bad())?;
                        if q == 0.0 {
                            return Err(bad());
                        }
                        Ok(p / q)
                    }
                    None => s.trim().parse().map_err(|_| bad()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub label: String,
    pub weights: BTreeMap<String, WeightValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub innovation_centroids: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub performance_centroids: Option<Vec<f64>>,
    #[serde(default)]
    pub tie_epsilon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub innovation_weights: Vec<SchemeFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub performance_weights: Vec<SchemeFile>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            id: "II".into(),
            innovation_centroids: None,
            performance_centroids: None,
            tie_epsilon: 0.0,
            innovation_weights: Vec::new(),
            performance_weights: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub enabled: bool,
    pub deviation_threshold: f64,
    pub collapse_fraction: f64,
    pub max_removed_fraction: f64,
    pub rescale: Rescale,
}

impl Default for FilterSection {
    fn default() -> Self {
        let p = FilterPolicy::default();
        FilterSection {
            enabled: true,
            deviation_threshold: p.deviation_threshold,
            collapse_fraction: p.collapse_fraction,
            max_removed_fraction: p.max_removed_fraction,
            rescale: p.rescale,
        }
    }
}

impl FilterSection {
    /// The policy, probing with `centroids`; `None` when disabled.
    pub fn policy(&self, centroids: &CentroidSet) -> Result<Option<FilterPolicy>> {
        if !self.enabled {
            return Ok(None);
        }
        let p = FilterPolicy {
            deviation_threshold: self.deviation_threshold,
            collapse_fraction: self.collapse_fraction,
            max_removed_fraction: self.max_removed_fraction,
            rescale: self.rescale,
            centroids: centroids.clone(),
        };
        p.validate()?;
        Ok(Some(p))
    }
}

/// Standalone scenario file: `[scenario]` plus optional `[filter]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterSection>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Writes every weight explicitly, so the file is self-describing.
    pub fn from_config(config: &ScenarioConfig, filter: Option<&FilterPolicy>) -> Self {
        let schemes = |ss: &[WeightScheme]| {
            ss.iter()
                .map(|s| SchemeFile {
                    label: s.label().to_string(),
                    weights: s
                        .variables()
                        .iter()
                        .zip(s.weights())
                        .map(|(v, w)| (v.name.clone(), WeightValue::Number(*w)))
                        .collect(),
                })
                .collect()
        };
        ScenarioFile {
            scenario: ScenarioSection {
                id: config.id.to_string(),
                innovation_centroids: Some(config.innovation_centroids.as_slice().to_vec()),
                performance_centroids: Some(config.performance_centroids.as_slice().to_vec()),
                tie_epsilon: config.tie_epsilon,
                innovation_weights: schemes(&config.innovation_schemes),
                performance_weights: schemes(&config.performance_schemes),
            },
            filter: filter.map(|p| FilterSection {
                enabled: true,
                deviation_threshold: p.deviation_threshold,
                collapse_fraction: p.collapse_fraction,
                max_removed_fraction: p.max_removed_fraction,
                rescale: p.rescale,
            }),
        }
    }
}

impl ScenarioSection {
    /// Resolves the section against a registry. Preset ids take their
    /// preset weights; explicit weights given with a preset id must agree
    /// with the preset.
    pub fn resolve(&self, registry: &Registry) -> Result<ScenarioConfig> {
        let id: ScenarioId = self.id.parse()?;
        let innov = registry.innovation();
        let perf = registry.performance();
        let explicit = |files: &[SchemeFile], scope: &[VariableId]| -> Result<Vec<WeightScheme>> {
            files
                .iter()
                .map(|f| {
                    let weights = f
                        .weights
                        .iter()
                        .map(|(name, w)| Ok((registry.lookup(name)?.clone(), w.to_f64()?)))
                        .collect::<Result<Vec<_>>>()?;
                    // registry order keeps columns stable
                    let mut weights = weights;
                    weights.sort_by_key(|(v, _)| scope.iter().position(|s| s.name == v.name));
                    WeightScheme::scoped(f.label.clone(), weights, scope)
                })
                .collect()
        };
        let given_i = explicit(&self.innovation_weights, &innov)?;
        let given_p = explicit(&self.performance_weights, &perf)?;

        let mut config = match id {
            ScenarioId::Custom => {
                if given_i.is_empty() || given_p.is_empty() {
                    return Err(Error::Config(
                        "custom scenario needs innovation_weights and performance_weights".into(),
                    ));
                }
                ScenarioConfig {
                    id,
                    innovation_centroids: CentroidSet::default(),
                    performance_centroids: CentroidSet::default(),
                    innovation_schemes: given_i,
                    performance_schemes: given_p,
                    tie_epsilon: 0.0,
                }
            }
            preset => {
                let config = ScenarioConfig::preset(preset, registry)?;
                for (given, want) in [
                    (&given_i, &config.innovation_schemes),
                    (&given_p, &config.performance_schemes),
                ] {
                    if !given.is_empty() && !same_weights(given, want) {
                        return Err(Error::Config(format!(
                            "weights listed for scenario {preset} differ from its preset"
                        )));
                    }
                }
                config
            }
        };
        if let Some(c) = &self.innovation_centroids {
            config.innovation_centroids = CentroidSet::new(c.clone())?;
        }
        if let Some(c) = &self.performance_centroids {
            config.performance_centroids = CentroidSet::new(c.clone())?;
        }
        config.tie_epsilon = self.tie_epsilon;
        config.validate()?;
        Ok(config)
    }
}

fn same_weights(a: &[WeightScheme], b: &[WeightScheme]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.variables() == y.variables()
                && x.weights()
                    .iter()
                    .zip(y.weights())
                    .all(|(p, q)| (p - q).abs() <= crate::clustering::WEIGHT_SUM_TOLERANCE)
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    #[serde(default = "default_entity")]
    pub entity_column: String,
    #[serde(default = "default_year")]
    pub year_column: String,
    #[serde(default)]
    pub ignore_unknown: bool,
}

fn default_delimiter() -> String {
    ",".into()
}

fn default_entity() -> String {
    "entity".into()
}

fn default_year() -> String {
    "year".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableEntry {
    pub name: String,
    pub group: VariableGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowsSection {
    pub innovation: [i32; 2],
    pub performance: [i32; 2],
    #[serde(default)]
    pub allow_overlap: bool,
}

impl Default for WindowsSection {
    fn default() -> Self {
        WindowsSection {
            innovation: [2006, 2007],
            performance: [2008, 2010],
            allow_overlap: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticsSection {
    pub quartiles: QuartileMethod,
    pub moments: MomentEstimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub delimiter: String,
    pub workers: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            delimiter: ",".into(),
            workers: 0,
        }
    }
}

/// Pipeline file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input: InputSection,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub columns: BTreeMap<String, String>,
    #[serde(default, rename = "variable", skip_serializing_if = "Vec::is_empty")]
    pub variables: Vec<VariableEntry>,
    #[serde(default)]
    pub windows: WindowsSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub analytics: AnalyticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut file = Self::parse(&text)?;
        if file.input.path.is_relative() {
            if let Some(dir) = path.parent() {
                file.input.path = dir.join(&file.input.path);
            }
        }
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization, hex encoded. The output
    /// directory and worker count do not affect results and are left out.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output.dir = PathBuf::new();
        canonical.output.workers = 0;
        Ok(hex::encode(Sha256::digest(canonical.to_toml()?.as_bytes())))
    }

    pub fn resolve(&self) -> Result<PipelineConfig> {
        let registry = if self.variables.is_empty() {
            Registry::default()
        } else {
            Registry::new(
                self.variables
                    .iter()
                    .map(|v| VariableId::new(v.name.clone(), v.group))
                    .collect(),
            )?
        };
        let columns = if self.columns.is_empty() {
            registry
                .variables()
                .iter()
                .map(|v| (v.name.clone(), v.clone()))
                .collect()
        } else {
            // registry order, whatever the file order
            let mut cols = Vec::new();
            for var in registry.variables() {
                let mut hits = self.columns.iter().filter(|(_, v)| **v == var.name);
                let (col, _) = hits.next().ok_or_else(|| {
                    Error::Config(format!("no input column mapped to variable {var}"))
                })?;
                if hits.next().is_some() {
                    return Err(Error::Config(format!("several columns mapped to {var}")));
                }
                cols.push((col.clone(), var.clone()));
            }
            if let Some((col, v)) = self.columns.iter().find(|(_, v)| registry.get(v).is_none()) {
                return Err(Error::Config(format!("column `{col}` mapped to unknown variable `{v}`")));
            }
            cols
        };
        let schema = Schema {
            entity_column: self.input.entity_column.clone(),
            year_column: self.input.year_column.clone(),
            columns,
            ignore_unknown: self.input.ignore_unknown,
            delimiter: parse_delimiter(&self.input.delimiter)?,
        };
        let [a, b] = self.windows.innovation;
        let innovation_window = YearWindow::new(a, b)?;
        let [a, b] = self.windows.performance;
        let performance_window = YearWindow::new(a, b)?;
        if innovation_window.overlaps(&performance_window) && !self.windows.allow_overlap {
            return Err(Error::Config(format!(
                "windows {innovation_window} and {performance_window} overlap; set allow_overlap = true to permit"
            )));
        }
        let scenario = self.scenario.resolve(&registry)?;
        let filter = self.filter.policy(&scenario.innovation_centroids)?;
        Ok(PipelineConfig {
            input: self.input.path.clone(),
            schema,
            registry,
            innovation_window,
            performance_window,
            scenario,
            filter,
            describe: DescribeOptions {
                quartiles: self.analytics.quartiles,
                moments: self.analytics.moments,
            },
            out_dir: self.output.dir.clone(),
            delimiter: parse_delimiter(&self.output.delimiter)?,
            workers: self.output.workers,
            hash: self.hash()?,
        })
    }
}

pub fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "\t" | "\\t" | "tab" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() && s != "\"" && s != "\n" => Ok(s.as_bytes()[0]),
        other => Err(Error::Config(format!("unsupported delimiter `{other}`"))),
    }
}

/// Fully resolved pipeline settings.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub schema: Schema,
    pub registry: Registry,
    pub innovation_window: YearWindow,
    pub performance_window: YearWindow,
    pub scenario: ScenarioConfig,
    pub filter: Option<FilterPolicy>,
    pub describe: DescribeOptions,
    pub out_dir: PathBuf,
    pub delimiter: u8,
    pub workers: usize,
    /// Hash of the configuration file after command-line overrides.
    pub hash: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    const MINIMAL: &str = r#"
[input]
path = "panel.csv"
"#;

    #[test]
    fn defaults() {
        let cfg = ConfigFile::parse(MINIMAL).unwrap().resolve().unwrap();
        assert_eq!(cfg.scenario.id, ScenarioId::II);
        assert_eq!(cfg.innovation_window, YearWindow { start: 2006, end: 2007 });
        assert_eq!(cfg.performance_window, YearWindow { start: 2008, end: 2010 });
        assert!(cfg.filter.is_some());
        assert_eq!(cfg.schema.columns.len(), 9);
        assert_eq!(cfg.delimiter, b',');
    }

    #[test]
    fn overlapping_windows_need_flag() {
        let text = format!("{MINIMAL}\n[windows]\ninnovation = [2006, 2008]\nperformance = [2008, 2010]\n");
        assert!(ConfigFile::parse(&text).unwrap().resolve().is_err());
        let text = format!("{text}allow_overlap = true\n");
        assert!(ConfigFile::parse(&text).unwrap().resolve().is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigFile::parse(&format!("{MINIMAL}\n[filter]\nthreshold = 3\n")).is_err());
    }

    #[test]
    fn custom_scenario_with_fractions() {
        let text = r#"
[scenario]
id = "custom"
innovation_centroids = [0.25, 0.5, 0.75]
[[scenario.innovation_weights]]
label = "tilt"
weights = { TIAX = "2/3", TTA = "1/3" }
[[scenario.performance_weights]]
label = "flat"
weights = { DSal = "1/7", DAss = "1/7", DLab = "1/7", ROI = "1/7", ROS = "1/7", ATO = "1/7", "S/E" = "1/7" }
"#;
        let file = ScenarioFile::parse(text).unwrap();
        let cfg = file.scenario.resolve(&Registry::default()).unwrap();
        assert_eq!(cfg.id, ScenarioId::Custom);
        assert_eq!(cfg.innovation_centroids.as_slice(), [0.25, 0.5, 0.75]);
        assert_eq!(cfg.innovation_schemes[0].weight("TIAX"), Some(2.0 / 3.0));
        // registry order regardless of key order
        let names: Vec<_> = cfg.performance_schemes[0].variables().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["DSal", "DAss", "DLab", "ROI", "ROS", "ATO", "S/E"]);
    }

    #[test]
    fn custom_scenario_needs_weights_and_valid_sums() {
        let text = "[scenario]\nid = \"custom\"\n";
        assert!(ScenarioFile::parse(text).unwrap().scenario.resolve(&Registry::default()).is_err());
        let text = r#"
[scenario]
id = "custom"
[[scenario.innovation_weights]]
label = "bad"
weights = { TIAX = 0.6, TTA = 0.6 }
[[scenario.performance_weights]]
label = "x"
weights = { DSal = 1, DAss = 0, DLab = 0, ROI = 0, ROS = 0, ATO = 0, "S/E" = 0 }
"#;
        let err = ScenarioFile::parse(text).unwrap().scenario.resolve(&Registry::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidWeights(_)));
    }

    #[test]
    fn preset_weights_must_match() {
        let text = r#"
[scenario]
id = "II"
[[scenario.innovation_weights]]
label = "II"
weights = { TIAX = 0.7, TTA = 0.3 }
"#;
        assert!(ScenarioFile::parse(text).unwrap().scenario.resolve(&Registry::default()).is_err());
    }

    #[test]
    fn scenario_file_round_trip() {
        let reg = Registry::default();
        for id in [ScenarioId::I, ScenarioId::II, ScenarioId::III] {
            let cfg = ScenarioConfig::preset(id, &reg).unwrap();
            let policy = FilterPolicy::default();
            let text = ScenarioFile::from_config(&cfg, Some(&policy)).to_toml().unwrap();
            let back = ScenarioFile::parse(&text).unwrap();
            assert_eq!(back.scenario.resolve(&reg).unwrap(), cfg);
            let centroids = back.scenario.resolve(&reg).unwrap().innovation_centroids;
            assert_eq!(back.filter.unwrap().policy(&centroids).unwrap(), Some(policy.clone()));
        }
    }

    #[test]
    fn fraction_weights() {
        assert_eq!(WeightValue::Text("1/9".into()).to_f64().unwrap(), 1.0 / 9.0);
        assert_eq!(WeightValue::Text("0.25".into()).to_f64().unwrap(), 0.25);
        assert!(WeightValue::Text("1/0".into()).to_f64().is_err());
        let r = Ratio::new(1i64, 9);
        assert_eq!(*r.numer() as f64 / *r.denom() as f64, 1.0 / 9.0);
    }

    #[test]
    fn column_mapping() {
        let mut text = MINIMAL.to_string();
        text.push_str("[columns]\n");
        let reg = Registry::default();
        for v in reg.variables() {
            text.push_str(&format!("\"col_{}\" = \"{}\"\n", v.name, v.name));
        }
        let cfg = ConfigFile::parse(&text).unwrap().resolve().unwrap();
        assert_eq!(cfg.schema.columns[0].0, "col_TIAX");
        assert_eq!(cfg.schema.columns[8].1.name, "S/E");
        let broken = text.replace("\"col_ROI\" = \"ROI\"", "\"col_ROI\" = \"XYZ\"");
        assert!(ConfigFile::parse(&broken).unwrap().resolve().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ConfigFile::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.output.dir = PathBuf::from("elsewhere");
        b.output.workers = 3;
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.scenario.id = "III".into();
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn delimiters() {
        assert_eq!(parse_delimiter("\t").unwrap(), b'\t');
        assert_eq!(parse_delimiter(";").unwrap(), b';');
        assert!(parse_delimiter("::").is_err());
    }
}
