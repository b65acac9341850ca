//! Tabular ingestion and cleaning.
//!
//! Raw CSV data goes through three transformations before it reaches the
//! learners: missing-value handling ([`impute_missing`]), categorical encoding
//! ([`encode_categoricals`]) and standardization ([`standardize`]). The result
//! is a [`PreparedDataset`]: a dense standardized feature matrix plus the true
//! targets, which only the oracle and the test-set labeling ever look at.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::seeding;

/// Column name used for the target in prepared CSV files.
pub const TARGET_HEADER: &str = "__target";

/// Columns whose standard deviation falls below this are dropped.
pub const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn missing_count(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
            ColumnData::Categorical(v) => v.iter().filter(|x| x.is_none()).count(),
        }
    }

    fn retain_rows(&mut self, keep: &[bool]) {
        fn filter<T>(values: &mut Vec<T>, keep: &[bool]) {
            let mut idx = 0;
            values.retain(|_| {
                let k = keep[idx];
                idx += 1;
                k
            });
        }
        match self {
            ColumnData::Numeric(v) => filter(v, keep),
            ColumnData::Categorical(v) => filter(v, keep),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

/// One entry in the preparation report.
#[derive(Debug, Clone, PartialEq)]
pub enum PrepEvent {
    DroppedByRequest { column: String },
    DroppedConstantCategorical { column: String },
    DroppedMissing { column: String, missing_fraction: f64 },
    DroppedZeroVariance { column: String },
    DroppedRowsMissingTarget { rows: usize },
    Imputed { column: String, count: usize, fill: String },
    OneHot { column: String, levels: usize },
    RankEncoded { column: String, levels: usize },
}

impl fmt::Display for PrepEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrepEvent::DroppedByRequest { column } => {
                write!(f, "dropped column `{column}`: listed in drop_columns")
            }
            PrepEvent::DroppedConstantCategorical { column } => {
                write!(f, "dropped column `{column}`: single distinct value")
            }
            PrepEvent::DroppedMissing {
                column,
                missing_fraction,
            } => write!(
                f,
                "dropped column `{column}`: {:.1}% missing",
                missing_fraction * 100.0
            ),
            PrepEvent::DroppedZeroVariance { column } => {
                write!(f, "dropped column `{column}`: zero variance")
            }
            PrepEvent::DroppedRowsMissingTarget { rows } => {
                write!(f, "dropped {rows} rows with missing target")
            }
            PrepEvent::Imputed {
                column,
                count,
                fill,
            } => write!(f, "imputed {count} values in `{column}` with {fill}"),
            PrepEvent::OneHot { column, levels } => {
                write!(f, "one-hot encoded `{column}` into {levels} columns")
            }
            PrepEvent::RankEncoded { column, levels } => {
                write!(f, "frequency-rank encoded `{column}` ({levels} levels)")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrepReport {
    pub events: Vec<PrepEvent>,
}

impl PrepReport {
    pub fn push(&mut self, event: PrepEvent) {
        self.events.push(event);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

/// A parsed but not yet cleaned table.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    /// Feature columns (the target is held separately).
    pub columns: Vec<Column>,
    pub target_name: String,
    pub target: Vec<Option<f64>>,
    pub report: PrepReport,
}

fn parse_cell(raw: &str) -> Option<&str> {
    let s = raw.trim();
    if s.is_empty() || s == "NA" {
        None
    } else {
        Some(s)
    }
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl RawTable {
    /// Parses a comma-separated file with a header row. Empty fields and the
    /// literal `NA` are missing values. A column is numeric when every
    /// present value parses as a finite number.
    pub fn from_csv<R: Read>(reader: R, target_column: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::EmptyInput("no header row".into()));
        }
        let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
        for record in rdr.records() {
            let record = record?;
            for (col, field) in cells.iter_mut().zip(record.iter()) {
                col.push(parse_cell(field).map(str::to_string));
            }
        }
        let target_idx = headers
            .iter()
            .position(|h| h == target_column)
            .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;
        if headers.len() < 2 {
            return Err(Error::EmptyInput(
                "need at least one feature column besides the target".into(),
            ));
        }
        if cells[target_idx].is_empty() {
            return Err(Error::EmptyInput("no data rows".into()));
        }

        let mut columns = Vec::with_capacity(headers.len() - 1);
        let mut target = Vec::new();
        for (idx, (name, values)) in headers.into_iter().zip(cells).enumerate() {
            let numeric = values
                .iter()
                .flatten()
                .all(|s| parse_number(s).is_some());
            if idx == target_idx {
                if !numeric {
                    return Err(Error::TargetNotNumeric(name));
                }
                target = values
                    .iter()
                    .map(|v| v.as_deref().and_then(parse_number))
                    .collect();
                continue;
            }
            let data = if numeric {
                ColumnData::Numeric(
                    values
                        .iter()
                        .map(|v| v.as_deref().and_then(parse_number))
                        .collect(),
                )
            } else {
                ColumnData::Categorical(values)
            };
            columns.push(Column { name, data });
        }
        Ok(RawTable {
            columns,
            target_name: target_column.to_string(),
            target,
            report: PrepReport::default(),
        })
    }

    pub fn row_count(&self) -> usize {
        self.target.len()
    }

    pub fn drop_columns(mut self, names: &[String]) -> Result<Self> {
        for name in names {
            let pos = self
                .columns
                .iter()
                .position(|c| &c.name == name)
                .ok_or_else(|| Error::MissingColumn(name.clone()))?;
            self.columns.remove(pos);
            self.report.push(PrepEvent::DroppedByRequest {
                column: name.clone(),
            });
        }
        Ok(self)
    }
}

/// Replaces categorical columns by numeric ones.
///
/// Columns with at most `onehot_max_cardinality` distinct values become one
/// 0/1 column per value (in lexicographic value order, named `col=value`).
/// Wider columns become a single column holding the value's frequency rank,
/// most frequent first, ties by value. Missing entries stay missing.
pub fn encode_categoricals(mut table: RawTable, onehot_max_cardinality: usize) -> Result<RawTable> {
    if onehot_max_cardinality < 2 {
        return Err(Error::invalid(
            "onehot_max_cardinality",
            format!("must be >= 2, got {onehot_max_cardinality}"),
        ));
    }
    let mut out = Vec::with_capacity(table.columns.len());
    for column in std::mem::take(&mut table.columns) {
        let values = match column.data {
            ColumnData::Numeric(_) => {
                out.push(column);
                continue;
            }
            ColumnData::Categorical(values) => values,
        };
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for v in values.iter().flatten() {
            *counts.entry(v.as_str()).or_default() += 1;
        }
        if counts.len() <= 1 {
            table.report.push(PrepEvent::DroppedConstantCategorical {
                column: column.name,
            });
            continue;
        }
        if counts.len() <= onehot_max_cardinality {
            for level in counts.keys() {
                let data = values
                    .iter()
                    .map(|v| v.as_deref().map(|s| if s == *level { 1.0 } else { 0.0 }))
                    .collect();
                out.push(Column {
                    name: format!("{}={}", column.name, level),
                    data: ColumnData::Numeric(data),
                });
            }
            table.report.push(PrepEvent::OneHot {
                column: column.name,
                levels: counts.len(),
            });
        } else {
            let mut ranked: Vec<(&str, usize)> = counts.iter().map(|(k, v)| (*k, *v)).collect();
            // BTreeMap order already sorts by value, so a stable sort on count
            // leaves equal counts in lexicographic order.
            ranked.sort_by_key(|r| std::cmp::Reverse(r.1));
            let rank: BTreeMap<&str, f64> = ranked
                .iter()
                .enumerate()
                .map(|(r, (k, _))| (*k, r as f64))
                .collect();
            let data = values
                .iter()
                .map(|v| v.as_deref().map(|s| rank[s]))
                .collect();
            table.report.push(PrepEvent::RankEncoded {
                column: column.name.clone(),
                levels: ranked.len(),
            });
            out.push(Column {
                name: column.name,
                data: ColumnData::Numeric(data),
            });
        }
    }
    table.columns = out;
    Ok(table)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[m - 1] + values[m]) / 2.0
    } else {
        values[m]
    }
}

/// Drops rows with a missing target, drops columns whose missing fraction
/// exceeds `drop_threshold`, then fills numeric gaps with the column median
/// and categorical gaps with the column mode (ties by value).
pub fn impute_missing(mut table: RawTable, drop_threshold: f64) -> Result<RawTable> {
    if !(0.0..=1.0).contains(&drop_threshold) {
        return Err(Error::invalid(
            "drop_threshold",
            format!("must lie in [0, 1], got {drop_threshold}"),
        ));
    }
    let keep: Vec<bool> = table.target.iter().map(Option::is_some).collect();
    let dropped_rows = keep.iter().filter(|k| !**k).count();
    if dropped_rows > 0 {
        table.target.retain(Option::is_some);
        for c in &mut table.columns {
            c.data.retain_rows(&keep);
        }
        table
            .report
            .push(PrepEvent::DroppedRowsMissingTarget { rows: dropped_rows });
    }
    let n = table.row_count();

    let mut out = Vec::with_capacity(table.columns.len());
    for mut column in std::mem::take(&mut table.columns) {
        let missing = column.data.missing_count();
        let frac = if n == 0 { 1.0 } else { missing as f64 / n as f64 };
        if frac > drop_threshold || missing == n {
            table.report.push(PrepEvent::DroppedMissing {
                column: column.name,
                missing_fraction: frac,
            });
            continue;
        }
        if missing > 0 {
            let fill = match &mut column.data {
                ColumnData::Numeric(values) => {
                    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
                    let m = median(&mut present);
                    values.iter_mut().filter(|v| v.is_none()).for_each(|v| *v = Some(m));
                    format!("median {m}")
                }
                ColumnData::Categorical(values) => {
                    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
                    for v in values.iter().flatten() {
                        *counts.entry(v.clone()).or_default() += 1;
                    }
                    // max_by_key returns the last maximum; iterate in reverse so
                    // the lexicographically smallest value wins ties.
                    let mode = counts
                        .iter()
                        .rev()
                        .max_by_key(|(_, c)| **c)
                        .map(|(k, _)| k.clone())
                        .expect("column has a present value");
                    values
                        .iter_mut()
                        .filter(|v| v.is_none())
                        .for_each(|v| *v = Some(mode.clone()));
                    format!("mode `{mode}`")
                }
            };
            table.report.push(PrepEvent::Imputed {
                column: column.name.clone(),
                count: missing,
                fill,
            });
        }
        out.push(column);
    }
    if out.is_empty() {
        return Err(Error::NoUsableFeatures);
    }
    table.columns = out;
    Ok(table)
}

/// Z-scores every feature column with the population standard deviation.
/// Near-constant columns are dropped; the target passes through unscaled.
pub fn standardize(table: RawTable) -> Result<PreparedDataset> {
    let n = table.row_count();
    if n < 3 {
        return Err(Error::DatasetTooSmall(n));
    }
    let y: Vec<f64> = table
        .target
        .iter()
        .map(|v| v.ok_or_else(|| Error::Malformed("missing target value".into())))
        .collect::<Result<_>>()?;
    let mut report = table.report;
    let mut names = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for column in table.columns {
        let values: Vec<f64> = match column.data {
            ColumnData::Numeric(v) => v
                .into_iter()
                .map(|x| {
                    x.ok_or_else(|| {
                        Error::Malformed(format!("missing value in `{}`", column.name))
                    })
                })
                .collect::<Result<_>>()?,
            ColumnData::Categorical(_) => {
                return Err(Error::Malformed(format!(
                    "column `{}` is categorical; encode it first",
                    column.name
                )))
            }
        };
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std < MIN_STD {
            report.push(PrepEvent::DroppedZeroVariance {
                column: column.name,
            });
            continue;
        }
        cols.push(values.into_iter().map(|x| (x - mean) / std).collect());
        names.push(column.name);
    }
    if cols.is_empty() {
        return Err(Error::NoUsableFeatures);
    }
    let p = cols.len();
    let mut x = vec![0.0; n * p];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            x[i * p + j] = *v;
        }
    }
    let mut ds = PreparedDataset::new(x, n, p, y, names)?;
    ds.report = report;
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepOptions {
    pub onehot_max_cardinality: usize,
    pub drop_threshold: f64,
    /// Columns removed before any other processing.
    pub drop_columns: Vec<String>,
}

impl Default for PrepOptions {
    fn default() -> Self {
        Self {
            onehot_max_cardinality: 10,
            drop_threshold: 0.5,
            drop_columns: Vec::new(),
        }
    }
}

/// Full cleaning pipeline: drop-list, imputation, encoding, standardization.
pub fn prepare(table: RawTable, options: &PrepOptions) -> Result<PreparedDataset> {
    let table = table.drop_columns(&options.drop_columns)?;
    let table = impute_missing(table, options.drop_threshold)?;
    let table = encode_categoricals(table, options.onehot_max_cardinality)?;
    standardize(table)
}

/// A cleaned, standardized dataset. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    x: Vec<f64>,
    n: usize,
    p: usize,
    y: Vec<f64>,
    feature_names: Vec<String>,
    pub report: PrepReport,
}

impl PreparedDataset {
    /// Builds a dataset from a row-major `n x p` matrix.
    pub fn new(
        x: Vec<f64>,
        n: usize,
        p: usize,
        y: Vec<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if x.len() != n * p {
            return Err(Error::Malformed(format!(
                "matrix has {} entries, expected {n} x {p}",
                x.len()
            )));
        }
        if y.len() != n {
            return Err(Error::Malformed(format!(
                "target has {} entries, expected {n}",
                y.len()
            )));
        }
        if feature_names.len() != p {
            return Err(Error::Malformed("feature name count mismatch".into()));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Malformed(format!(
                "non-finite feature at row {}, column {}",
                pos / p.max(1),
                pos % p.max(1)
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("non-finite target".into()));
        }
        Ok(Self {
            x,
            n,
            p,
            y,
            feature_names,
            report: PrepReport::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x[i * self.p + j])
    }

    /// Writes `z = [x_u ; x_v]` into `out`.
    pub fn pair_features_into(&self, u: usize, v: usize, out: &mut Vec<f64>) {
        out.extend_from_slice(self.row(u));
        out.extend_from_slice(self.row(v));
    }

    /// Writes the dataset as CSV: feature columns, then `__target`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(TARGET_HEADER);
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(self.p + 1);
        for i in 0..self.n {
            record.clear();
            record.extend(self.row(i).iter().map(|v| v.to_string()));
            record.push(self.y[i].to_string());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a file produced by [`PreparedDataset::write_csv`]. Values are
    /// taken as-is; no further cleaning is applied.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if headers.last().map(String::as_str) != Some(TARGET_HEADER) {
            return Err(Error::MissingColumn(TARGET_HEADER.into()));
        }
        let p = headers.len() - 1;
        if p == 0 {
            return Err(Error::NoUsableFeatures);
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            for (j, field) in record.iter().enumerate() {
                let v = parse_number(field.trim()).ok_or_else(|| {
                    Error::Malformed(format!("row {}: `{field}` is not a finite number", line + 1))
                })?;
                if j < p {
                    x.push(v);
                } else {
                    y.push(v);
                }
            }
        }
        let n = y.len();
        if n < 3 {
            return Err(Error::DatasetTooSmall(n));
        }
        let mut names = headers;
        names.pop();
        Self::new(x, n, p, y, names)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub p: usize,
    pub noise_std: f64,
    pub seed: u64,
    /// Share of each raw feature's variance carried by a single common latent
    /// factor, in `[0, 1)`. Zero gives independent features.
    pub factor_share: f64,
}

impl SyntheticConfig {
    pub const DEFAULT_FACTOR_SHARE: f64 = 0.5;

    pub fn new(n: usize, p: usize, noise_std: f64, seed: u64) -> Self {
        Self {
            n,
            p,
            noise_std,
            seed,
            factor_share: Self::DEFAULT_FACTOR_SHARE,
        }
    }
}

/// Desk-scale stand-in for a real dataset with a dominant latent trend.
/// See [`generate_synthetic_with`].
pub fn generate_synthetic(n: usize, p: usize, noise_std: f64, seed: u64) -> Result<PreparedDataset> {
    generate_synthetic_with(&SyntheticConfig::new(n, p, noise_std, seed))
}

/// Rows are drawn i.i.d. with standard normal marginals: each raw feature is
/// `sqrt(s) * f_i + sqrt(1 - s) * e_ij` with a per-row latent factor `f_i`
/// and `s = factor_share`. The matrix is then standardized and the target is
/// `y = X beta + noise`, `beta` a seeded positive unit vector.
pub fn generate_synthetic_with(cfg: &SyntheticConfig) -> Result<PreparedDataset> {
    let SyntheticConfig {
        n,
        p,
        noise_std,
        seed,
        factor_share,
    } = *cfg;
    if n < 10 {
        return Err(Error::invalid("n", format!("must be >= 10, got {n}")));
    }
    if p < 2 {
        return Err(Error::invalid("p", format!("must be >= 2, got {p}")));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid("noise_std", "must be finite and nonnegative"));
    }
    if !(0.0..1.0).contains(&factor_share) {
        return Err(Error::invalid("factor_share", "must lie in [0, 1)"));
    }
    let mut rng = seeding::stream(seed, "synthetic/features");
    let load = factor_share.sqrt();
    let own = (1.0 - factor_share).sqrt();
    let mut raw = vec![0.0; n * p];
    for row in raw.chunks_mut(p) {
        let f: f64 = StandardNormal.sample(&mut rng);
        for v in row.iter_mut() {
            let e: f64 = StandardNormal.sample(&mut rng);
            *v = load * f + own * e;
        }
    }
    let mut x = raw;
    for j in 0..p {
        let mean = (0..n).map(|i| x[i * p + j]).sum::<f64>() / n as f64;
        let var = (0..n).map(|i| (x[i * p + j] - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        for i in 0..n {
            x[i * p + j] = (x[i * p + j] - mean) / std;
        }
    }

    let mut beta_rng = seeding::stream(seed, "synthetic/beta");
    let mut beta: Vec<f64> = (0..p).map(|_| beta_rng.random_range(0.1..1.0)).collect();
    let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    beta.iter_mut().for_each(|b| *b /= norm);

    let mut noise_rng = seeding::stream(seed, "synthetic/noise");
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::invalid("noise_std", e.to_string()))?;
    let y = (0..n)
        .map(|i| {
            let signal: f64 = x[i * p..(i + 1) * p]
                .iter()
                .zip(&beta)
                .map(|(a, b)| a * b)
                .sum();
            let eps = if noise_std > 0.0 {
                noise.sample(&mut noise_rng)
            } else {
                0.0
            };
            signal + eps
        })
        .collect();
    let names = (0..p).map(|j| format!("x{j}")).collect();
    PreparedDataset::new(x, n, p, y, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(csv: &str, target: &str) -> RawTable {
        RawTable::from_csv(csv.as_bytes(), target).unwrap()
    }

    fn numeric(t: &RawTable, name: &str) -> Vec<Option<f64>> {
        match &t.columns.iter().find(|c| c.name == name).unwrap().data {
            ColumnData::Numeric(v) => v.clone(),
            other => panic!("not numeric: {other:?}"),
        }
    }

    #[test]
    fn one_hot_small_cardinality() {
        let t = table("c,y\na,1\nb,2\na,3\n", "y");
        let t = encode_categoricals(t, 10).unwrap();
        assert_eq!(t.columns.len(), 2);
        assert_eq!(numeric(&t, "c=a"), vec![Some(1.0), Some(0.0), Some(1.0)]);
        assert_eq!(numeric(&t, "c=b"), vec![Some(0.0), Some(1.0), Some(0.0)]);
    }

    #[test]
    fn rank_encoding_above_threshold() {
        let mut csv = String::from("c,y\n");
        for i in 0..50 {
            csv.push_str(&format!("v{i:02},{i}\n"));
        }
        // v07 appears three times, v03 twice.
        csv.push_str("v07,1\nv07,1\nv03,1\n");
        let t = encode_categoricals(table(&csv, "y"), 10).unwrap();
        assert_eq!(t.columns.len(), 1);
        let col = numeric(&t, "c");
        assert_eq!(col[7], Some(0.0));
        assert_eq!(col[3], Some(1.0));
        // Remaining single-count levels in lexicographic order.
        assert_eq!(col[0], Some(2.0));
        assert_eq!(col[1], Some(3.0));
        assert!(matches!(t.report.events[0], PrepEvent::RankEncoded { levels: 50, .. }));
    }

    #[test]
    fn constant_categorical_dropped() {
        let t = table("c,d,y\nx,1,1\nx,2,2\n", "y");
        let t = encode_categoricals(t, 10).unwrap();
        assert_eq!(t.columns.len(), 1);
        assert_eq!(
            t.report.events,
            vec![PrepEvent::DroppedConstantCategorical { column: "c".into() }]
        );
    }

    #[test]
    fn encode_rejects_tiny_threshold() {
        let t = table("c,y\na,1\nb,2\n", "y");
        assert!(encode_categoricals(t, 1).is_err());
    }

    #[test]
    fn median_imputation() {
        let t = table("a,b,y\n1,5,1\n,6,2\n3,7,3\n", "y");
        let t = impute_missing(t, 0.5).unwrap();
        assert_eq!(numeric(&t, "a"), vec![Some(1.0), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn mostly_missing_column_dropped() {
        let t = table("a,b,y\n1,1,1\nNA,2,2\n,3,3\n,4,4\n,5,5\n", "y");
        let t = impute_missing(t, 0.5).unwrap();
        assert_eq!(t.columns.len(), 1);
        assert_eq!(t.columns[0].name, "b");
        assert!(matches!(&t.report.events[0], PrepEvent::DroppedMissing { column, .. } if column == "a"));
    }

    #[test]
    fn missing_target_rows_removed() {
        let t = table("a,y\n1,1\n2,\n3,3\n", "y");
        let t = impute_missing(t, 0.5).unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(numeric(&t, "a"), vec![Some(1.0), Some(3.0)]);
    }

    #[test]
    fn categorical_mode_imputation_ties_by_value() {
        let t = table("c,y\nb,1\na,2\n,3\nb,4\na,5\n", "y");
        let t = impute_missing(t, 0.5).unwrap();
        match &t.columns[0].data {
            ColumnData::Categorical(v) => assert_eq!(v[2].as_deref(), Some("a")),
            _ => panic!(),
        }
    }

    #[test]
    fn all_columns_dropped_is_fatal() {
        let t = table("a,y\n,1\n,2\n1,3\n", "y");
        assert!(matches!(impute_missing(t, 0.5), Err(Error::NoUsableFeatures)));
    }

    #[test]
    fn standardize_two_values() {
        let t = table("a,b,y\n0,1,1\n2,5,2\n0,1,3\n2,5,4\n", "y");
        let ds = standardize(t).unwrap();
        assert_eq!(ds.column(0).collect::<Vec<_>>(), vec![-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(ds.y(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn standardize_drops_constant() {
        let t = table("a,b,y\n1,1,1\n2,1,2\n3,1,3\n", "y");
        let ds = standardize(t).unwrap();
        assert_eq!(ds.p(), 1);
        assert_eq!(ds.feature_names(), &["a".to_string()]);
    }

    #[test]
    fn standardize_too_small() {
        let t = table("a,y\n1,1\n2,2\n", "y");
        assert!(matches!(standardize(t), Err(Error::DatasetTooSmall(2))));
    }

    #[test]
    fn missing_target_column_named() {
        let err = RawTable::from_csv("a,b\n1,2\n".as_bytes(), "price").unwrap_err();
        assert!(err.to_string().contains("price"));
    }

    #[test]
    fn categorical_target_rejected() {
        let err = RawTable::from_csv("a,y\n1,x\n".as_bytes(), "y").unwrap_err();
        assert!(matches!(err, Error::TargetNotNumeric(_)));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = generate_synthetic(100, 4, 0.3, 11).unwrap();
        let b = generate_synthetic(100, 4, 0.3, 11).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(100, 4, 0.3, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synthetic_preconditions() {
        assert!(generate_synthetic(9, 3, 0.1, 0).is_err());
        assert!(generate_synthetic(10, 1, 0.1, 0).is_err());
        assert!(generate_synthetic(10, 2, -1.0, 0).is_err());
    }

    #[test]
    fn prepared_csv_round_trip() {
        let ds = generate_synthetic(20, 3, 0.1, 3).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = PreparedDataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.x(), ds.x());
        assert_eq!(back.y(), ds.y());
        assert_eq!(back.feature_names(), ds.feature_names());
    }
}
