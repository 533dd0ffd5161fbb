//! End-to-end run: ingest, average, filter, normalize, cluster, analyze,
//! report.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analytics::{crosstab, describe_with, profile_clusters, StatsSummary};
use crate::clustering::{outlier_filter, run_scenario, ClusterAssignment, FilterOutcome, Rescale};
use crate::config::PipelineConfig;
use crate::dataset::{average_panel, ingest, AveragedRecord, PanelDataset};
use crate::error::{Error, Result};
use crate::report::{self, ReportTable};
use crate::transform::minmax_normalize;
use crate::variables::VariableId;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityCounts {
    pub ingested: usize,
    pub after_filter: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TieCount {
    pub assignment: String,
    pub ties: usize,
}

/// Machine-readable record of a run, written as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_hash: String,
    pub scenario: String,
    pub steps: Vec<&'static str>,
    pub entities: EntityCounts,
    pub removed: Vec<String>,
    pub ties: Vec<TieCount>,
    pub tie_total: usize,
    pub outputs: Vec<String>,
}

struct Outputs {
    dir: PathBuf,
    delimiter: u8,
    written: Vec<String>,
    markdown: String,
}

impl Outputs {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    fn table(&mut self, stem: &str, table: &ReportTable) -> Result<()> {
        self.write(&format!("{stem}.csv"), &table.to_delimited(self.delimiter)?)?;
        let md = table.to_markdown();
        self.write(&format!("{stem}.md"), &md)?;
        self.markdown.push_str(&md);
        self.markdown.push('\n');
        Ok(())
    }
}

/// File-name-safe form of a label ("S/E" → "S_E").
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

pub fn load_panel(config: &PipelineConfig) -> Result<PanelDataset> {
    let file = fs::File::open(&config.input).map_err(|e| Error::io(&config.input, e))?;
    ingest(std::io::BufReader::new(file), &config.schema)
}

pub fn average(config: &PipelineConfig, data: &PanelDataset) -> Result<Vec<AveragedRecord>> {
    average_panel(data, &config.registry, config.innovation_window, config.performance_window)
}

/// Per-variable summaries in registry order.
pub fn summarize(config: &PipelineConfig, records: &[AveragedRecord]) -> Result<Vec<(VariableId, StatsSummary)>> {
    config
        .registry
        .variables()
        .iter()
        .map(|v| {
            let xs: Vec<f64> = records.iter().filter_map(|r| r.get(&v.name)).collect();
            Ok((v.clone(), describe_with(&xs, &config.describe)?))
        })
        .collect()
}

/// Runs the whole pipeline and writes every report into `config.out_dir`.
pub fn run(config: &PipelineConfig) -> Result<Manifest> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| run_inner(config))
}

fn run_inner(config: &PipelineConfig) -> Result<Manifest> {
    let mut steps = Vec::new();
    let vars = config.registry.variables().to_vec();

    let data = load_panel(config)?;
    steps.push("ingest");
    let records = average(config, &data)?;
    steps.push("average");
    let ingested = records.len();

    let mut filtered: Option<FilterOutcome> = None;
    let records = match &config.filter {
        Some(policy) => {
            let full = minmax_normalize(&records, &vars)?;
            let outcome = outlier_filter(&full, policy)?;
            steps.push("filter");
            let kept: Vec<AveragedRecord> = records
                .into_iter()
                .filter(|r| outcome.retained.contains(&r.entity))
                .collect();
            filtered = Some(outcome);
            kept
        }
        None => records,
    };

    let matrix = match (&filtered, &config.filter) {
        (Some(outcome), Some(policy)) if policy.rescale == Rescale::Original => outcome.matrix.clone(),
        _ => minmax_normalize(&records, &vars)?,
    };
    steps.push("normalize");

    let innovation = matrix.select(&config.registry.innovation())?;
    let performance = matrix.select(&config.registry.performance())?;
    let result = run_scenario(&innovation, &performance, &config.scenario)?;
    steps.push("cluster");

    let summaries = summarize(config, &records)?;
    let mut crosstabs = Vec::new();
    for a in &result.innovation {
        for b in &result.performance {
            crosstabs.push(crosstab(a, b)?);
        }
    }
    let mut profiles = Vec::new();
    for (side, list) in [("innovation", &result.innovation), ("performance", &result.performance)] {
        for a in list.iter() {
            profiles.push((side, a, profile_clusters(a, &records, &vars)?));
        }
    }
    steps.push("analyze");

    let mut out = Outputs {
        dir: config.out_dir.clone(),
        delimiter: config.delimiter,
        written: Vec::new(),
        markdown: String::new(),
    };
    fs::create_dir_all(&out.dir).map_err(|e| Error::io(&out.dir, e))?;
    let scenario = result.id.to_string();

    out.table("stats", &report::render_stats_table(&summaries)?)?;
    out.table("normalized", &report::render_matrix(&matrix)?)?;
    out.table("normalized_ranges", &report::render_ranges(&matrix)?)?;
    if let Some(outcome) = &filtered {
        out.write("removed.csv", &removed_csv(outcome, config.delimiter)?)?;
    }
    let mut ties = Vec::new();
    for (side, list) in [("innovation", &result.innovation), ("performance", &result.performance)] {
        for a in list.iter() {
            let name = format!("{side}_{}", slug(a.label()));
            out.write(
                &format!("assignments/{name}.csv"),
                &report::write_assignment(a, config.delimiter)?,
            )?;
            ties.push(TieCount {
                assignment: name,
                ties: a.tie_count(),
            });
        }
    }
    for ct in &crosstabs {
        let stem = if crosstabs.len() == 1 {
            "crosstab".to_string()
        } else {
            format!("crosstab_{}_{}", slug(&ct.row_label), slug(&ct.col_label))
        };
        let mut labelled = ct.clone();
        labelled.row_label = format!("Innovation[{}]", ct.row_label);
        labelled.col_label = format!("Performance[{}]", ct.col_label);
        out.table(&stem, &report::render_crosstab(&labelled, &scenario)?)?;
    }
    for (side, a, profile) in &profiles {
        let title = format!("{scenario} clustering, {side} [{}]: cluster profiles", a.label());
        let table = report::render_profiles(&title, &vars, Some(&summaries), profile)?;
        out.table(&format!("profiles_{side}_{}", slug(a.label())), &table)?;
    }
    let md = std::mem::take(&mut out.markdown);
    out.write("report.md", &md)?;
    steps.push("report");

    let removed: Vec<String> = filtered
        .as_ref()
        .map(|o| o.removed.iter().map(|r| r.entity.clone()).collect())
        .unwrap_or_default();
    let mut manifest = Manifest {
        config_hash: config.hash.clone(),
        scenario,
        steps,
        entities: EntityCounts {
            ingested,
            after_filter: records.len(),
            removed: removed.len(),
        },
        removed,
        tie_total: ties.iter().map(|t| t.ties).sum(),
        ties,
        outputs: Vec::new(),
    };
    manifest.outputs = out.written.clone();
    manifest.outputs.push("manifest.json".into());
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Report(e.to_string()))?;
    out.write("manifest.json", &(json + "\n"))?;
    Ok(manifest)
}

fn removed_csv(outcome: &FilterOutcome, delimiter: u8) -> Result<String> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    let err = |e: csv::Error| Error::Report(e.to_string());
    w.write_record(["order", "entity", "deviation", "variable", "first_cell_share", "reason"])
        .map_err(err)?;
    for (i, r) in outcome.removed.iter().enumerate() {
        let reason = serde_json::to_value(r.reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        w.write_record([
            (i + 1).to_string(),
            r.entity.clone(),
            r.deviation.to_string(),
            r.variable.clone(),
            r.first_cell_share.to_string(),
            reason,
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
}

/// Reads two saved assignments and renders their cross-tabulation.
pub fn crosstab_files(rows: &Path, cols: &Path, delimiter: u8, clustering: &str) -> Result<ReportTable> {
    let read = |p: &Path, label: &str| -> Result<ClusterAssignment> {
        let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        report::read_assignment(&text, delimiter, label)
    };
    let stem = |p: &Path| p.file_stem().and_then(|s| s.to_str()).unwrap_or("assignment").to_string();
    let a = read(rows, &stem(rows))?;
    let b = read(cols, &stem(cols))?;
    report::render_crosstab(&crosstab(&a, &b)?, clustering)
}
