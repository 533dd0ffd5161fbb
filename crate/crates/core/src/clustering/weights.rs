use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::variables::VariableId;

/// Largest accepted deviation of a weight vector's sum from one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Nonnegative per-variable weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    label: String,
    variables: Vec<VariableId>,
    weights: Vec<f64>,
}

impl WeightScheme {
    pub fn new(label: impl Into<String>, weights: Vec<(VariableId, f64)>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no variables".into()));
        }
        for (i, (v, w)) in weights.iter().enumerate() {
            if weights[..i].iter().any(|(u, _)| u.name == v.name) {
                return Err(Error::InvalidWeights(format!("{v} weighted twice")));
            }
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidWeights(format!("{v} has weight {w}")));
            }
        }
        let sum: f64 = weights.iter().map(|(_, w)| w).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        let (variables, weights) = weights.into_iter().unzip();
        Ok(WeightScheme {
            label: label.into(),
            variables,
            weights,
        })
    }

    /// Like [`Self::new`], additionally requiring the weighted variables to be
    /// exactly `scope` (zero weights allowed).
    pub fn scoped(label: impl Into<String>, weights: Vec<(VariableId, f64)>, scope: &[VariableId]) -> Result<Self> {
        let scheme = Self::new(label, weights)?;
        scheme.check_scope(scope)?;
        Ok(scheme)
    }

    /// Exact weights. The rational sum must be exactly one.
    pub fn from_rationals(label: impl Into<String>, weights: Vec<(VariableId, Ratio<i64>)>) -> Result<Self> {
        let sum = weights.iter().fold(Ratio::from_integer(0), |acc, (_, w)| acc + w);
        if sum != Ratio::from_integer(1) {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Self::new(
            label,
            weights
                .into_iter()
                .map(|(v, w)| (v, *w.numer() as f64 / *w.denom() as f64))
                .collect(),
        )
    }

    /// Weight one on `target`, zero on every other variable of `scope`.
    pub fn one_hot(target: &VariableId, scope: &[VariableId]) -> Result<Self> {
        if !scope.iter().any(|v| v.name == target.name) {
            return Err(Error::ScopeMismatch(format!("{target} is not in scope")));
        }
        let weights = scope
            .iter()
            .map(|v| (v.clone(), if v.name == target.name { 1.0 } else { 0.0 }))
            .collect();
        Self::new(target.name.clone(), weights)
    }

    pub fn check_scope(&self, scope: &[VariableId]) -> Result<()> {
        let missing: Vec<_> = scope
            .iter()
            .filter(|v| !self.variables.iter().any(|w| w.name == v.name))
            .map(|v| v.name.as_str())
            .collect();
        let extra: Vec<_> = self
            .variables
            .iter()
            .filter(|v| !scope.iter().any(|w| w.name == v.name))
            .map(|v| v.name.as_str())
            .collect();
        if missing.is_empty() && extra.is_empty() {
            Ok(())
        } else {
            Err(Error::ScopeMismatch(format!(
                "scheme `{}`: missing {missing:?}, out of scope {extra:?}",
                self.label
            )))
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, variable: &str) -> Option<f64> {
        self.variables
            .iter()
            .position(|v| v.name == variable)
            .map(|i| self.weights[i])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Strictly increasing scalar centroids in the open interval `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidSet(Vec<f64>);

impl CentroidSet {
    pub fn new(centroids: Vec<f64>) -> Result<Self> {
        if centroids.is_empty() {
            return Err(Error::InvalidCentroids("empty centroid set".into()));
        }
        if let Some(c) = centroids.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
            return Err(Error::InvalidCentroids(format!("{c} is not in (0, 1)")));
        }
        if centroids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidCentroids("centroids must be strictly increasing".into()));
        }
        Ok(CentroidSet(centroids))
    }

    /// `k / (count + 1)` for `k = 1..=count`; `uniform(4)` is {1/5, 2/5, 3/5, 4/5}.
    pub fn uniform(count: usize) -> Result<Self> {
        let d = (count + 1) as f64;
        Self::new((1..=count).map(|k| k as f64 / d).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for CentroidSet {
    fn default() -> Self {
        CentroidSet(vec![0.2, 0.4, 0.6, 0.8])
    }
}
