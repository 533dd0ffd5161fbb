//! Fixed-centroid Voronoi cell assignment under weighted squared distances.
//!
//! Every centroid is a scalar in `(0, 1)`, i.e. a point on the main diagonal
//! of the unit hypercube. An entity's distance to centroid `c` is
//! `sum_x w_x * (x - c)^2` over the variables of one set (innovation or
//! performance), with nonnegative weights summing to one. Centroids are never
//! refitted.

mod assign;
mod outlier;
mod scenario;
mod weights;

pub use assign::{assign_cells, assign_cells_with, weighted_distance, ClusterAssignment};
pub use outlier::{outlier_filter, FilterOutcome, FilterPolicy, Removal, RemovalReason, Rescale};
pub use scenario::{
    role_weights, run_scenario, value_weights, ScenarioConfig, ScenarioId, ScenarioResult,
};
pub use weights::{CentroidSet, WeightScheme, WEIGHT_SUM_TOLERANCE};
