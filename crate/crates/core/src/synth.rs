//! Deterministic synthetic panels with prescribed per-variable moments.
//!
//! Each entity first receives a period-level value per variable, drawn so that
//! the sample mean and sample standard deviation across entities hit the
//! targets (standardize, rescale, clip to bounds, repeat). Yearly values are
//! then spread around that level with zero-sum relative jitter inside each
//! averaging window, so window averages reproduce the period-level values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{PanelDataset, YearWindow};
use crate::error::{Error, Result};
use crate::variables::{VariableGroup, VariableId};

const MAX_CORRECTIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableTarget {
    pub name: String,
    pub group: VariableGroup,
    pub mean: f64,
    pub std: f64,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
    /// Log-scale sigma of the base draw; 0 draws from a normal, > 0 from a
    /// right-skewed lognormal with that shape.
    #[serde(default)]
    pub log_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub entity_count: usize,
    pub seed: u64,
    #[serde(default = "default_innovation_window")]
    pub innovation_window: YearWindow,
    #[serde(default = "default_performance_window")]
    pub performance_window: YearWindow,
    /// Relative spread of yearly values around the period level.
    #[serde(default = "default_jitter")]
    pub year_jitter: f64,
    /// Accepted relative error on the generated mean and std.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(rename = "variable")]
    pub variables: Vec<VariableTarget>,
}

fn default_innovation_window() -> YearWindow {
    YearWindow { start: 2006, end: 2007 }
}

fn default_performance_window() -> YearWindow {
    YearWindow { start: 2008, end: 2010 }
}

fn default_jitter() -> f64 {
    0.1
}

fn default_tolerance() -> f64 {
    0.01
}

impl SynthSpec {
    /// Moments and ranges of the nine default registry variables as found in
    /// a 62-company mid-cap panel; growth and profitability are fractions.
    pub fn default_profile(entity_count: usize, seed: u64) -> Self {
        use VariableGroup::*;
        #[rustfmt::skip]
        let rows: [(&str, VariableGroup, f64, f64, f64, f64, f64); 9] = [
            ("TIAX", Innovation,    12360.46, 18695.11, 180.0, 80816.0,   1.1),
            ("TTA",  Innovation,    29215.40, 45379.80, 86.5,  217237.5,  1.1),
            ("DSal", Growth,        0.06,     0.14,     -0.19, 0.59,      0.52),
            ("DAss", Growth,        0.09,     0.16,     -0.10, 0.53,      0.73),
            ("DLab", Growth,        0.06,     0.14,     -0.21, 0.60,      0.49),
            ("ROI",  Profitability, 0.05,     0.05,     -0.08, 0.21,      0.37),
            ("ROS",  Profitability, 0.05,     0.07,     -0.14, 0.24,      0.36),
            ("ATO",  Productivity,  0.91,     0.34,     0.15,  2.04,      0.43),
            ("S/E",  Productivity,  275.77,   231.20,   57.2,  1100.76,   0.87),
        ];
        SynthSpec {
            entity_count,
            seed,
            innovation_window: default_innovation_window(),
            performance_window: default_performance_window(),
            year_jitter: default_jitter(),
            tolerance: 0.05,
            variables: rows
                .into_iter()
                .map(|(name, group, mean, std, min, max, log_sigma)| VariableTarget {
                    name: name.into(),
                    group,
                    mean,
                    std,
                    min: Some(min),
                    max: Some(max),
                    log_sigma,
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entity_count < 2 {
            return Err(Error::InfeasibleSynth("entity_count must be at least 2".into()));
        }
        if self.variables.is_empty() {
            return Err(Error::InfeasibleSynth("no variables".into()));
        }
        if !(self.year_jitter >= 0.0 && self.year_jitter < 1.0) {
            return Err(Error::InfeasibleSynth("year_jitter must lie in [0, 1)".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InfeasibleSynth("tolerance must be positive".into()));
        }
        YearWindow::new(self.innovation_window.start, self.innovation_window.end)?;
        YearWindow::new(self.performance_window.start, self.performance_window.end)?;
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InfeasibleSynth(format!("variable {} listed twice", v.name)));
            }
            if !v.mean.is_finite() || !v.std.is_finite() || v.std < 0.0 {
                return Err(Error::InfeasibleSynth(format!(
                    "{}: need finite mean and std >= 0",
                    v.name
                )));
            }
            if v.log_sigma < 0.0 || !v.log_sigma.is_finite() {
                return Err(Error::InfeasibleSynth(format!("{}: log_sigma must be >= 0", v.name)));
            }
            let lo = v.min.unwrap_or(f64::NEG_INFINITY);
            let hi = v.max.unwrap_or(f64::INFINITY);
            if !(lo <= v.mean && v.mean <= hi) {
                return Err(Error::InfeasibleSynth(format!(
                    "{}: mean {} outside bounds [{lo}, {hi}]",
                    v.name, v.mean
                )));
            }
            // Bhatia-Davis bound on the variance, scaled to the n-1 estimator.
            let n = self.entity_count as f64;
            let max_var = (hi - v.mean) * (v.mean - lo) * n / (n - 1.0);
            if v.std * v.std > max_var {
                return Err(Error::InfeasibleSynth(format!(
                    "{}: std {} is unreachable within bounds [{lo}, {hi}]",
                    v.name, v.std
                )));
            }
        }
        Ok(())
    }

    fn years(&self) -> (i32, i32) {
        let a = &self.innovation_window;
        let b = &self.performance_window;
        (a.start.min(b.start), a.end.max(b.end))
    }
}

/// Generates a panel covering every year from the earliest window start to
/// the latest window end.
pub fn synth_generate(spec: &SynthSpec) -> Result<PanelDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.entity_count;

    let levels = spec
        .variables
        .iter()
        .map(|t| period_levels(t, n, spec.tolerance, &mut rng))
        .collect::<Result<Vec<_>>>()?;

    let (first, last) = spec.years();
    let years: Vec<i32> = (first..=last).collect();
    let width = n.to_string().len().max(3);
    let nv = spec.variables.len();

    let mut cube = vec![vec![vec![0.0; nv]; years.len()]; n];
    for (v, target) in spec.variables.iter().enumerate() {
        let jitter = if target.std == 0.0 { 0.0 } else { spec.year_jitter };
        let window = if target.group.is_performance() {
            spec.performance_window
        } else {
            spec.innovation_window
        };
        let inside: Vec<usize> = (0..years.len()).filter(|&y| window.years().any(|w| w == years[y])).collect();
        let outside: Vec<usize> = (0..years.len()).filter(|y| !inside.contains(y)).collect();
        for (e, level) in levels[v].iter().enumerate() {
            for block in [&inside, &outside] {
                let shocks = zero_sum_shocks(block.len(), jitter, &mut rng);
                for (&y, s) in block.iter().zip(shocks) {
                    cube[e][y][v] = level * (1.0 + s);
                }
            }
        }
    }

    let variables: Vec<VariableId> = spec
        .variables
        .iter()
        .map(|t| VariableId::new(t.name.clone(), t.group))
        .collect();
    let rows = cube.into_iter().enumerate().flat_map(|(e, per_year)| {
        let id = format!("E{:0width$}", e + 1);
        years
            .iter()
            .zip(per_year)
            .map(move |(&y, vals)| (id.clone(), y, vals.into_iter().map(Some).collect()))
            .collect::<Vec<_>>()
    });
    PanelDataset::from_rows(variables, rows)
}

fn zero_sum_shocks(len: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let raw: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    if scale == 0.0 || len == 1 {
        return vec![0.0; len];
    }
    let mean = raw.iter().sum::<f64>() / len as f64;
    // keep shocks above -1 so yearly values never flip sign
    raw.iter().map(|r| (scale * (r - mean)).clamp(-0.9, 0.9)).collect()
}

fn sample_moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn period_levels(t: &VariableTarget, n: usize, tolerance: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let base: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if t.log_sigma > 0.0 {
                (t.log_sigma * z).exp()
            } else {
                z
            }
        })
        .collect();
    if t.std == 0.0 {
        return Ok(vec![t.mean; n]);
    }
    let lo = t.min.unwrap_or(f64::NEG_INFINITY);
    let hi = t.max.unwrap_or(f64::INFINITY);

    let mut xs = base;
    for _ in 0..MAX_CORRECTIONS {
        let (m, s) = sample_moments(&xs);
        if s == 0.0 {
            return Err(Error::InfeasibleSynth(format!("{}: draw collapsed to a constant", t.name)));
        }
        let in_bounds = xs.iter().all(|&x| lo <= x && x <= hi);
        if in_bounds && close(m, t.mean, t.std, 1e-12) && close(s, t.std, t.std, 1e-12) {
            break;
        }
        for x in xs.iter_mut() {
            *x = (t.mean + t.std * (*x - m) / s).clamp(lo, hi);
        }
    }
    let (m, s) = sample_moments(&xs);
    if !close(m, t.mean, t.std, tolerance) || !close(s, t.std, t.std, tolerance) {
        return Err(Error::InfeasibleSynth(format!(
            "{}: reached mean {m}, std {s}; targets {}, {} not met within {tolerance}",
            t.name, t.mean, t.std
        )));
    }
    Ok(xs)
}

// Relative closeness, measured against `scale` when the target is near zero.
fn close(got: f64, want: f64, scale: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(scale)
}
