//! Table rendering.
//!
//! Two sinks: delimited text at full precision for pipelines, and markdown
//! rounded to the table's declared precision for people.

use std::fmt::Write as _;
use std::io::Read;

use crate::analytics::{ClusterProfile, CrossTab, StatsSummary};
use crate::clustering::ClusterAssignment;
use crate::error::{Error, Result};
use crate::transform::NormalizedMatrix;
use crate::variables::VariableId;

pub const MISSING: &str = "n/a";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Number(f64),
    Count(usize),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Number(x) => Some(x),
            Cell::Count(c) => Some(c as f64),
            Cell::Missing => None,
        }
    }

    fn full(&self) -> String {
        match self {
            Cell::Number(x) => x.to_string(),
            Cell::Count(c) => c.to_string(),
            Cell::Missing => MISSING.to_string(),
        }
    }

    fn rounded(&self, precision: usize) -> String {
        match self {
            Cell::Number(x) => {
                let s = format!("{x:.precision$}");
                // avoid "-0.00"
                if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
                    s.trim_start_matches('-').to_string()
                } else {
                    s
                }
            }
            other => other.full(),
        }
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Number)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub title: String,
    /// Header of the row-label column.
    pub corner: String,
    pub headers: Vec<String>,
    pub row_labels: Vec<String>,
    pub cells: Vec<Vec<Cell>>,
    /// Decimal places in the human-readable sink.
    pub precision: usize,
}

impl ReportTable {
    pub fn new(
        title: impl Into<String>,
        corner: impl Into<String>,
        headers: Vec<String>,
        rows: Vec<(String, Vec<Cell>)>,
    ) -> Result<Self> {
        let (row_labels, cells): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        if let Some((i, row)) = cells.iter().enumerate().find(|(_, r)| r.len() != headers.len()) {
            return Err(Error::Report(format!(
                "row `{}` has {} cells for {} headers",
                row_labels[i],
                row.len(),
                headers.len()
            )));
        }
        Ok(ReportTable {
            title: title.into(),
            corner: corner.into(),
            headers,
            row_labels,
            cells,
            precision: 2,
        })
    }

    pub fn to_delimited(&self, delimiter: u8) -> Result<String> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        let mut header = vec![self.corner.clone()];
        header.extend(self.headers.iter().cloned());
        w.write_record(&header).map_err(|e| Error::Report(e.to_string()))?;
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(Cell::full));
            w.write_record(&rec).map_err(|e| Error::Report(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
    }

    /// Reads the output of [`Self::to_delimited`] back. Integers come back as
    /// counts, everything else numeric as numbers.
    pub fn parse_delimited<R: Read>(source: R, delimiter: u8, title: impl Into<String>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(source);
        let headers = r.headers().map_err(|e| Error::Report(e.to_string()))?.clone();
        let mut it = headers.iter();
        let corner = it.next().unwrap_or_default().to_string();
        let headers: Vec<String> = it.map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Report(e.to_string()))?;
            let mut fields = rec.iter();
            let label = fields.next().unwrap_or_default().to_string();
            let cells = fields
                .map(|f| {
                    if f == MISSING {
                        Ok(Cell::Missing)
                    } else if let Ok(c) = f.parse::<usize>() {
                        Ok(Cell::Count(c))
                    } else {
                        f.parse::<f64>()
                            .map(Cell::Number)
                            .map_err(|_| Error::Report(format!("bad cell `{f}`")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((label, cells));
        }
        ReportTable::new(title, corner, headers, rows)
    }

    pub fn to_markdown(&self) -> String {
        let mut grid: Vec<Vec<String>> = Vec::with_capacity(self.cells.len() + 1);
        let mut head = vec![self.corner.clone()];
        head.extend(self.headers.iter().cloned());
        grid.push(head);
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            let mut line = vec![label.clone()];
            line.extend(row.iter().map(|c| c.rounded(self.precision)));
            grid.push(line);
        }
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|j| grid.iter().map(|r| r[j].chars().count()).max().unwrap_or(0).max(3))
            .collect();

        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "### {}\n", self.title);
        }
        for (i, row) in grid.iter().enumerate() {
            out.push('|');
            for (j, (cell, w)) in row.iter().zip(&widths).enumerate() {
                let pad = w - cell.chars().count();
                if j == 0 {
                    let _ = write!(out, " {cell}{} |", " ".repeat(pad));
                } else {
                    let _ = write!(out, " {}{cell} |", " ".repeat(pad));
                }
            }
            out.push('\n');
            if i == 0 {
                out.push('|');
                for (j, w) in widths.iter().enumerate() {
                    let dashes = "-".repeat(*w);
                    if j == 0 {
                        let _ = write!(out, " {dashes} |");
                    } else {
                        let _ = write!(out, " {}: |", &dashes[1..]);
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

pub const STATS_ROWS: [&str; 10] = [
    "mean",
    "std.dev.",
    "mean/std.dev.",
    "min",
    "max",
    "Q1",
    "median",
    "Q3",
    "skewness",
    "kurtosis",
];

fn stats_column(s: &StatsSummary) -> [Cell; 10] {
    [
        Cell::Number(s.mean),
        s.std.into(),
        s.ratio.into(),
        Cell::Number(s.min),
        Cell::Number(s.max),
        Cell::Number(s.q1),
        Cell::Number(s.median),
        Cell::Number(s.q3),
        s.skewness.into(),
        s.kurtosis.into(),
    ]
}

/// One column per variable; rows mean, std.dev., mean/std.dev., min, max,
/// Q1, median, Q3, skewness, kurtosis.
pub fn render_stats_table(summaries: &[(VariableId, StatsSummary)]) -> Result<ReportTable> {
    if summaries.is_empty() {
        return Err(Error::Report("no variables to tabulate".into()));
    }
    let columns: Vec<[Cell; 10]> = summaries.iter().map(|(_, s)| stats_column(s)).collect();
    let rows = STATS_ROWS
        .iter()
        .enumerate()
        .map(|(i, label)| (label.to_string(), columns.iter().map(|c| c[i]).collect()))
        .collect();
    ReportTable::new(
        "Main statistical indicators",
        "",
        summaries.iter().map(|(v, _)| v.name.clone()).collect(),
        rows,
    )
}

/// "1st", "2nd", "3rd", "4th", ...
pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (1, x) if x != 11 => "st",
        (2, x) if x != 12 => "nd",
        (3, x) if x != 13 => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// H×K grid with a `Tot` column and a `Tot` row.
pub fn render_crosstab(ct: &CrossTab, clustering: &str) -> Result<ReportTable> {
    let mut headers: Vec<String> = (1..=ct.cols()).map(|k| format!("{} cluster", ordinal(k))).collect();
    headers.push("Tot".into());
    let mut rows: Vec<(String, Vec<Cell>)> = ct
        .counts
        .iter()
        .zip(&ct.row_totals)
        .enumerate()
        .map(|(h, (row, tot))| {
            let mut cells: Vec<Cell> = row.iter().map(|&c| Cell::Count(c)).collect();
            cells.push(Cell::Count(*tot));
            (format!("{} cluster", ordinal(h + 1)), cells)
        })
        .collect();
    let mut totals: Vec<Cell> = ct.col_totals.iter().map(|&c| Cell::Count(c)).collect();
    totals.push(Cell::Count(ct.grand_total));
    rows.push(("Tot".into(), totals));
    ReportTable::new(
        format!("{clustering} clustering: {} (rows) by {} (columns)", ct.row_label, ct.col_label),
        format!("{} \\ {}", ct.row_label, ct.col_label),
        headers,
        rows,
    )
}

/// Mean, std.dev. and mean/std.dev. per variable for the whole sample
/// (when given) and for every cell.
pub fn render_profiles(
    title: &str,
    vars: &[VariableId],
    whole: Option<&[(VariableId, StatsSummary)]>,
    profiles: &[ClusterProfile],
) -> Result<ReportTable> {
    let block = |label: &str, sums: &[(VariableId, StatsSummary)]| -> Vec<(String, Vec<Cell>)> {
        let pick = |f: fn(&StatsSummary) -> Cell| {
            vars.iter()
                .map(|v| {
                    sums.iter()
                        .find(|(w, _)| w.name == v.name)
                        .map_or(Cell::Missing, |(_, s)| f(s))
                })
                .collect::<Vec<_>>()
        };
        vec![
            (format!("{label} mean"), pick(|s| Cell::Number(s.mean))),
            (format!("{label} std.dev."), pick(|s| s.std.into())),
            (format!("{label} mean/std.dev."), pick(|s| s.ratio.into())),
        ]
    };
    let mut rows = Vec::new();
    if let Some(w) = whole {
        let n = w.first().map_or(0, |(_, s)| s.n);
        rows.extend(block(&format!("all (n={n})"), w));
    }
    for p in profiles {
        rows.extend(block(&format!("{} cl. (n={})", ordinal(p.cell), p.size), &p.summaries));
    }
    ReportTable::new(title, "", vars.iter().map(|v| v.name.clone()).collect(), rows)
}

/// Entity rows, one column per variable.
pub fn render_matrix(m: &NormalizedMatrix) -> Result<ReportTable> {
    let rows = m
        .entities()
        .iter()
        .enumerate()
        .map(|(e, name)| {
            (
                name.clone(),
                (0..m.variables().len()).map(|v| Cell::Number(m.value(e, v))).collect(),
            )
        })
        .collect();
    ReportTable::new(
        "Normalized values",
        "entity",
        m.variables().iter().map(|v| v.name.clone()).collect(),
        rows,
    )
}

/// The `(min, max)` each column was scaled with.
pub fn render_ranges(m: &NormalizedMatrix) -> Result<ReportTable> {
    let rows = m
        .variables()
        .iter()
        .zip(m.ranges())
        .map(|(v, &(lo, hi))| (v.name.clone(), vec![Cell::Number(lo), Cell::Number(hi)]))
        .collect();
    ReportTable::new("Normalization ranges", "variable", vec!["min".into(), "max".into()], rows)
}

/// Assignment as delimited text: a `# cells: H` line, then
/// `entity,cell,tied` rows.
pub fn write_assignment(a: &ClusterAssignment, delimiter: u8) -> Result<String> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
    w.write_record(["entity", "cell", "tied"]).map_err(|e| Error::Report(e.to_string()))?;
    for ((e, c), t) in a.entities().iter().zip(a.cells()).zip(a.tied()) {
        w.write_record([e.as_str(), &c.to_string(), if *t { "1" } else { "0" }])
            .map_err(|e| Error::Report(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
    let body = String::from_utf8(body).map_err(|e| Error::Report(e.to_string()))?;
    Ok(format!("# cells: {}\n{body}", a.cell_count()))
}

/// Reads the output of [`write_assignment`].
pub fn read_assignment(text: &str, delimiter: u8, label: impl Into<String>) -> Result<ClusterAssignment> {
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or_default().trim();
    let cell_count: usize = first
        .strip_prefix("# cells:")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| Error::MalformedRow {
            row: 1,
            message: "expected `# cells: H` header".into(),
        })?;
    let mut r = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(lines.next().unwrap_or_default().as_bytes());
    let (mut entities, mut cells, mut tied) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let row = i + 3;
        let rec = rec.map_err(|e| Error::MalformedRow {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != 3 {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        entities.push(rec[0].to_string());
        cells.push(rec[1].parse().map_err(|_| Error::MalformedRow {
            row,
            message: format!("bad cell `{}`", &rec[1]),
        })?);
        tied.push(&rec[2] == "1");
    }
    if entities.is_empty() {
        return Err(Error::EmptyInput);
    }
    ClusterAssignment::from_cells(label, entities, cells, tied, cell_count)
}
