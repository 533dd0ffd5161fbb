//! Descriptive statistics, cross-tabulation of two clusterings, and
//! per-cluster profiles.

mod crosstab;
mod describe;
mod profile;

pub use crosstab::{crosstab, CrossTab};
pub use describe::{
    describe, describe_with, quantile, DescribeOptions, MomentEstimator, QuartileMethod, StatsSummary,
};
pub use profile::{profile_clusters, ClusterProfile};
