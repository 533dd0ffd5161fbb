//! Panel ingestion, validation and period averaging.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variables::{Registry, VariableId};

/// Cell contents treated as an explicit missing marker.
const MISSING_MARKERS: [&str; 5] = ["", "NA", "na", "NaN", "."];

/// Entities × years × variables cube of raw yearly values.
///
/// Entities are kept in lexicographic order and years strictly increasing, so
/// two datasets holding the same cells compare equal regardless of the order
/// in which rows arrived.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    entities: Vec<String>,
    years: Vec<i32>,
    variables: Vec<VariableId>,
    // [entity][year][variable], row-major
    values: Vec<Option<f64>>,
}

/// One input row: entity, year, and one optional value per variable.
pub type PanelRow = (String, i32, Vec<Option<f64>>);

impl PanelDataset {
    /// Builds a dataset from rows. Years absent for an entity become missing
    /// cells.
    pub fn from_rows(variables: Vec<VariableId>, rows: impl IntoIterator<Item = PanelRow>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidDataset("no variables".into()));
        }
        let mut cells: BTreeMap<(String, i32), Vec<Option<f64>>> = BTreeMap::new();
        for (entity, year, vals) in rows {
            if entity.is_empty() {
                return Err(Error::InvalidDataset("empty entity id".into()));
            }
            if vals.len() != variables.len() {
                return Err(Error::InvalidDataset(format!(
                    "row for `{entity}` {year} has {} values, expected {}",
                    vals.len(),
                    variables.len()
                )));
            }
            if let Some(v) = vals.iter().flatten().find(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "non-finite value {v} for `{entity}` {year}"
                )));
            }
            if cells.insert((entity.clone(), year), vals).is_some() {
                return Err(Error::DuplicateKey { entity, year });
            }
        }
        if cells.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut entities: Vec<String> = cells.keys().map(|(e, _)| e.clone()).collect();
        entities.dedup();
        let mut years: Vec<i32> = cells.keys().map(|(_, y)| *y).collect();
        years.sort_unstable();
        years.dedup();

        let nv = variables.len();
        let mut values = vec![None; entities.len() * years.len() * nv];
        for (e, entity) in entities.iter().enumerate() {
            for (y, year) in years.iter().enumerate() {
                if let Some(vals) = cells.get(&(entity.clone(), *year)) {
                    let base = (e * years.len() + y) * nv;
                    values[base..base + nv].copy_from_slice(vals);
                }
            }
        }
        Ok(PanelDataset {
            entities,
            years,
            variables,
            values,
        })
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn years(&self) -> &[i32] {
        &self.years
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    /// Number of stored (entity, year, variable) cells, missing or not.
    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn get(&self, entity: &str, year: i32, variable: &str) -> Option<f64> {
        let e = self.entities.binary_search_by(|x| x.as_str().cmp(entity)).ok()?;
        let y = self.years.binary_search(&year).ok()?;
        let v = self.variable_index(variable)?;
        self.values[(e * self.years.len() + y) * self.variables.len() + v]
    }

    /// Applies `f` to every present value of one variable.
    pub fn map_variable(&self, variable: &str, f: impl Fn(f64) -> f64) -> Result<Self> {
        let v = self
            .variable_index(variable)
            .ok_or_else(|| Error::UnknownVariable(variable.to_string()))?;
        let nv = self.variables.len();
        let mut out = self.clone();
        for cell in out.values.iter_mut().skip(v).step_by(nv) {
            *cell = cell.map(&f);
        }
        Ok(out)
    }

    /// Writes the dataset as delimited text that [`ingest`] reads back with
    /// [`Schema::identity`]. Missing cells are written as `NA`.
    pub fn write_delimited<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        let mut header = vec!["entity".to_string(), "year".to_string()];
        header.extend(self.variables.iter().map(|v| v.name.clone()));
        w.write_record(&header).map_err(csv_err)?;
        let nv = self.variables.len();
        for (e, entity) in self.entities.iter().enumerate() {
            for (y, year) in self.years.iter().enumerate() {
                let base = (e * self.years.len() + y) * nv;
                let mut rec = vec![entity.clone(), year.to_string()];
                rec.extend(self.values[base..base + nv].iter().map(|c| match c {
                    Some(v) => v.to_string(),
                    None => "NA".to_string(),
                }));
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<writer>", e))?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidDataset(e.to_string())
}

/// Column mapping for [`ingest`].
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub entity_column: String,
    pub year_column: String,
    /// Input column name → variable, in output variable order.
    pub columns: Vec<(String, VariableId)>,
    /// Skip unmapped columns instead of rejecting them.
    pub ignore_unknown: bool,
    pub delimiter: u8,
}

impl Schema {
    /// Columns named after the registry variables, plus `entity` and `year`.
    pub fn identity(registry: &Registry) -> Self {
        Schema {
            entity_column: "entity".into(),
            year_column: "year".into(),
            columns: registry
                .variables()
                .iter()
                .map(|v| (v.name.clone(), v.clone()))
                .collect(),
            ignore_unknown: false,
            delimiter: b',',
        }
    }
}

/// Reads one row per (entity, year) from delimited text.
pub fn ingest<R: Read>(source: R, schema: &Schema) -> Result<PanelDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::EmptyInput);
    }

    let find = |name: &str| -> Result<usize> {
        let mut hits = headers.iter().enumerate().filter(|(_, h)| *h == name);
        let (i, _) = hits.next().ok_or_else(|| Error::MalformedRow {
            row: 1,
            message: format!("missing column `{name}`"),
        })?;
        if hits.next().is_some() {
            return Err(Error::MalformedRow {
                row: 1,
                message: format!("column `{name}` appears twice"),
            });
        }
        Ok(i)
    };
    let entity_col = find(&schema.entity_column)?;
    let year_col = find(&schema.year_column)?;
    let mut var_cols = Vec::with_capacity(schema.columns.len());
    for (col, _) in &schema.columns {
        var_cols.push(find(col)?);
    }
    if !schema.ignore_unknown {
        for (i, h) in headers.iter().enumerate() {
            if i != entity_col && i != year_col && !var_cols.contains(&i) {
                return Err(Error::UnknownColumn(h.to_string()));
            }
        }
    }

    let mut rows = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let row = idx + 2;
        let rec = rec.map_err(|e| Error::MalformedRow {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != headers.len() {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        let entity = rec[entity_col].to_string();
        if entity.is_empty() {
            return Err(Error::MalformedRow {
                row,
                message: "empty entity id".into(),
            });
        }
        let year: i32 = rec[year_col].parse().map_err(|_| Error::MalformedRow {
            row,
            message: format!("bad year `{}`", &rec[year_col]),
        })?;
        let mut vals = Vec::with_capacity(var_cols.len());
        for (&c, (col, _)) in var_cols.iter().zip(&schema.columns) {
            vals.push(parse_cell(&rec[c]).map_err(|raw| Error::MalformedRow {
                row,
                message: format!("column `{col}`: cannot parse `{raw}` as a number"),
            })?);
        }
        rows.push((entity, year, vals));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let variables = schema.columns.iter().map(|(_, v)| v.clone()).collect();
    PanelDataset::from_rows(variables, rows)
}

fn parse_cell(raw: &str) -> std::result::Result<Option<f64>, String> {
    if MISSING_MARKERS.contains(&raw) {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(raw.to_string()),
    }
}

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Result<Self> {
        if start > end {
            return Err(Error::Config(format!("empty year window {start}-{end}")));
        }
        Ok(YearWindow { start, end })
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &YearWindow) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for YearWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// One entity's period-averaged values.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedRecord {
    pub entity: String,
    pub values: Vec<(VariableId, f64)>,
}

impl AveragedRecord {
    pub fn get(&self, variable: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|(v, _)| v.name == variable)
            .map(|(_, x)| *x)
    }
}

/// Arithmetic mean of each requested variable over the window, one record
/// per entity in dataset order. Every year of the window must be present.
pub fn average_over_window(
    data: &PanelDataset,
    window: YearWindow,
    vars: &[VariableId],
) -> Result<Vec<AveragedRecord>> {
    let var_idx = vars
        .iter()
        .map(|v| {
            data.variable_index(&v.name)
                .ok_or_else(|| Error::UnknownVariable(v.name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let nv = data.variables.len();
    let ny = data.years.len();
    let n_years = window.len() as f64;

    data.entities
        .iter()
        .enumerate()
        .map(|(e, entity)| {
            let values = vars
                .iter()
                .zip(&var_idx)
                .map(|(var, &v)| {
                    let mut sum = 0.0;
                    for year in window.years() {
                        let cell = data
                            .years
                            .binary_search(&year)
                            .ok()
                            .and_then(|y| data.values[(e * ny + y) * nv + v]);
                        sum += cell.ok_or_else(|| Error::MissingValue {
                            entity: entity.clone(),
                            variable: var.name.clone(),
                            year,
                        })?;
                    }
                    Ok((var.clone(), sum / n_years))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AveragedRecord {
                entity: entity.clone(),
                values,
            })
        })
        .collect()
}

/// Averages innovation variables over `innovation` and performance variables
/// over `performance`, producing records with one value per registry
/// variable in registry order.
pub fn average_panel(
    data: &PanelDataset,
    registry: &Registry,
    innovation: YearWindow,
    performance: YearWindow,
) -> Result<Vec<AveragedRecord>> {
    let innov = average_over_window(data, innovation, &registry.innovation())?;
    let perf = average_over_window(data, performance, &registry.performance())?;
    Ok(innov
        .into_iter()
        .zip(perf)
        .map(|(a, b)| {
            let mut values = Vec::with_capacity(registry.len());
            for var in registry.variables() {
                let x = a
                    .get(&var.name)
                    .or_else(|| b.get(&var.name))
                    .expect("every registry variable is averaged");
                values.push((var.clone(), x));
            }
            AveragedRecord {
                entity: a.entity,
                values,
            }
        })
        .collect())
}
