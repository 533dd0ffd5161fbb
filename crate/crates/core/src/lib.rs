//! Weighted Voronoi tessellation clustering for multi-variable entity panels.
//!
//! The crate takes yearly panel data (entities × years × variables), averages
//! each variable over its reference window, rescales every averaged variable
//! onto `[0, 1]`, and assigns each entity to the Voronoi cell of the nearest
//! scalar centroid under a weighted squared distance. Innovation variables and
//! performance variables are clustered separately; the two clusterings are then
//! compared through cross-tabulation and per-cluster descriptive profiles.
//!
//! Pipeline order: ingest, average, (optional) outlier filter, normalize,
//! cluster, analyze, report. [`pipeline::run`] executes all of it from a
//! [`config::PipelineConfig`].

pub mod analytics;
pub mod clustering;
pub mod config;
pub mod dataset;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod synth;
pub mod transform;
pub mod variables;

pub use analytics::{crosstab, describe, profile_clusters, CrossTab, StatsSummary};
pub use clustering::{
    assign_cells, outlier_filter, run_scenario, weighted_distance, CentroidSet,
    ClusterAssignment, FilterPolicy, ScenarioConfig, ScenarioId, WeightScheme,
};
pub use dataset::{average_over_window, ingest, AveragedRecord, PanelDataset, Schema, YearWindow};
pub use error::{Error, Result};
pub use synth::{synth_generate, SynthSpec};
pub use transform::{minmax_normalize, NormalizedMatrix};
pub use variables::{Registry, VariableGroup, VariableId};
