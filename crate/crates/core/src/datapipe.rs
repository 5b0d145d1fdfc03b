//! Loading real data and the preprocessing steps ahead of selection:
//! descriptive statistics, log(x + 1) transform, correlation matrix,
//! correlation-based pruning and the per-method report.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ols::{mean_sd, standardize, RawDataset};
use crate::selector::{run_selector, BaselineConfigs, Method, SelectionResult, SelectorModel};

pub const DEFAULT_RHO_MAX: f64 = 0.90;

/// Named numeric columns of equal length. Missing entries are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Frame {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != columns[0].len()) {
            return Err(Error::LengthMismatch(format!(
                "column lengths {} and {}",
                columns[0].len(),
                c.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::ConfigInvalid(format!("duplicate column '{dup}'")));
        }
        Ok(Self { names, columns })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.columns[self.index_of(name)?])
    }

    /// The named columns, in the order given.
    pub fn select(&self, names: &[String]) -> Result<Frame> {
        let columns = names
            .iter()
            .map(|n| Ok(self.column(n)?.to_vec()))
            .collect::<Result<_>>()?;
        Frame::new(names.to_vec(), columns)
    }

    /// Drops every row with a missing entry; returns the count removed.
    pub fn drop_missing_rows(&self) -> (Frame, usize) {
        let keep: Vec<usize> = (0..self.row_count())
            .filter(|&i| self.columns.iter().all(|c| !c[i].is_nan()))
            .collect();
        let dropped = self.row_count() - keep.len();
        let columns = self
            .columns
            .iter()
            .map(|c| keep.iter().map(|&i| c[i]).collect())
            .collect();
        (
            Frame {
                names: self.names.clone(),
                columns,
            },
            dropped,
        )
    }
}

fn is_missing(field: &str) -> bool {
    field.is_empty() || ["na", "n/a", "nan"].contains(&field.to_ascii_lowercase().as_str())
}

/// Result of [`load_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFrame {
    pub frame: Frame,
    /// Rows removed because the target field was missing or not numeric.
    pub dropped_target_rows: usize,
}

/// Reads comma-separated text with a header row. Empty, `NA` and `NaN`
/// fields are missing. With `columns` given only those are parsed, so text
/// columns elsewhere in the file are ignored. A non-numeric predictor field
/// is a parse error; a row whose target is unusable is dropped.
pub fn load_csv<R: Read>(source: R, target: Option<&str>, columns: Option<&[String]>) -> Result<LoadedFrame> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Format {
            line: 1,
            msg: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyFile);
    }
    let wanted: Vec<usize> = match columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| h == c)
                    .ok_or_else(|| Error::UnknownColumn(c.clone()))
            })
            .collect::<Result<_>>()?,
        None => (0..header.len()).collect(),
    };
    let target_idx = match target {
        Some(t) => Some(
            header
                .iter()
                .position(|h| h == t)
                .ok_or_else(|| Error::UnknownColumn(t.to_string()))?,
        ),
        None => None,
    };
    let mut wanted = wanted;
    if let Some(t) = target_idx {
        if !wanted.contains(&t) {
            wanted.push(t);
        }
    }

    let mut data: Vec<Vec<f64>> = vec![Vec::new(); wanted.len()];
    let mut dropped = 0;
    let mut rows_seen = 0;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Format {
            line,
            msg: e.to_string(),
        })?;
        rows_seen += 1;
        if let Some(t) = target_idx {
            let field = record.get(t).unwrap_or("");
            if is_missing(field) || field.parse::<f64>().is_err() {
                dropped += 1;
                continue;
            }
        }
        for (slot, &j) in data.iter_mut().zip(&wanted) {
            let field = record.get(j).unwrap_or("");
            let v = if is_missing(field) {
                f64::NAN
            } else {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    column: header[j].clone(),
                    msg: format!("'{field}' is not a number"),
                })?
            };
            slot.push(v);
        }
    }
    if rows_seen == 0 {
        return Err(Error::EmptyFile);
    }
    let names = wanted.iter().map(|&j| header[j].clone()).collect();
    Ok(LoadedFrame {
        frame: Frame::new(names, data)?,
        dropped_target_rows: dropped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSummary {
    pub name: String,
    /// Non-missing values summarized.
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Fewer than two values or zero spread.
    pub degenerate: bool,
}

/// Mean, sample SD, min, median and max of each column, skipping missing
/// entries.
pub fn describe(frame: &Frame) -> Vec<ColumnSummary> {
    frame
        .names
        .iter()
        .zip(&frame.columns)
        .map(|(name, col)| {
            let mut v: Vec<f64> = col.iter().copied().filter(|x| !x.is_nan()).collect();
            v.sort_by(f64::total_cmp);
            let count = v.len();
            if count == 0 {
                return ColumnSummary {
                    name: name.clone(),
                    count,
                    mean: f64::NAN,
                    sd: f64::NAN,
                    min: f64::NAN,
                    median: f64::NAN,
                    max: f64::NAN,
                    degenerate: true,
                };
            }
            let (mean, sd) = if count >= 2 { mean_sd(&v) } else { (v[0], 0.0) };
            let median = if count % 2 == 1 {
                v[count / 2]
            } else {
                (v[count / 2 - 1] + v[count / 2]) / 2.0
            };
            ColumnSummary {
                name: name.clone(),
                count,
                mean,
                sd,
                min: v[0],
                median,
                max: v[count - 1],
                degenerate: sd == 0.0,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(summary: &[ColumnSummary], mut w: W) -> Result<()> {
    writeln!(w, "variable,count,mean,sd,min,median,max")?;
    for s in summary {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            s.name, s.count, s.mean, s.sd, s.min, s.median, s.max
        )?;
    }
    Ok(())
}

/// x ↦ ln(x + 1) on the named columns. Missing entries stay missing.
pub fn log_shift(frame: &Frame, columns: &[String]) -> Result<Frame> {
    let mut out = frame.clone();
    for name in columns {
        let j = frame.index_of(name)?;
        if let Some(row) = frame.columns[j].iter().position(|&x| x < 0.0) {
            return Err(Error::NegativeValue {
                column: name.clone(),
                row,
            });
        }
        out.columns[j].iter_mut().for_each(|x| *x = x.ln_1p());
    }
    Ok(out)
}

fn centered(col: &[f64]) -> (Vec<f64>, f64) {
    let m = col.iter().sum::<f64>() / col.len() as f64;
    let c: Vec<f64> = col.iter().map(|x| x - m).collect();
    let ss = c.iter().map(|x| x * x).sum::<f64>();
    (c, ss.sqrt())
}

/// Pearson correlations between all columns, unit diagonal.
pub fn pearson_matrix(frame: &Frame) -> Result<Matrix> {
    let p = frame.columns.len();
    if frame.row_count() < 2 {
        return Err(Error::InsufficientDf {
            n: frame.row_count(),
            p,
        });
    }
    let mut cs = Vec::with_capacity(p);
    for (j, col) in frame.columns.iter().enumerate() {
        let (c, norm) = centered(col);
        if !(norm > 0.0) {
            return Err(Error::ConstantColumn(j));
        }
        cs.push((c, norm));
    }
    let mut r = Matrix::zeros(p, p);
    for a in 0..p {
        r.set(a, a, 1.0);
        for b in a + 1..p {
            let num: f64 = cs[a].0.iter().zip(&cs[b].0).map(|(x, y)| x * y).sum();
            let v = (num / (cs[a].1 * cs[b].1)).clamp(-1.0, 1.0);
            r.set(a, b, v);
            r.set(b, a, v);
        }
    }
    Ok(r)
}

pub fn write_matrix<W: Write>(names: &[String], m: &Matrix, mut w: W) -> Result<()> {
    writeln!(w, "variable,{}", names.join(","))?;
    for (i, name) in names.iter().enumerate() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{name},{}", row.join(","))?;
    }
    Ok(())
}

/// Which member of a highly correlated pair survives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeepPolicy {
    #[default]
    StrongerTargetCorrelation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSpec {
    pub target: String,
    /// Predictors to use; `None` means every column except the target.
    pub predictors: Option<Vec<String>>,
    pub log_columns: Vec<String>,
    pub rho_max: f64,
    pub keep_policy: KeepPolicy,
}

impl PipelineSpec {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            predictors: None,
            log_columns: Vec::new(),
            rho_max: DEFAULT_RHO_MAX,
            keep_policy: KeepPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_max > 0.0 && self.rho_max < 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "correlation threshold {} must lie in (0, 1)",
                self.rho_max
            )));
        }
        if self.log_columns.contains(&self.target) {
            return Err(Error::ConfigInvalid(format!(
                "target '{}' cannot be log-transformed",
                self.target
            )));
        }
        if let Some(p) = &self.predictors {
            if p.contains(&self.target) {
                return Err(Error::ConfigInvalid("target listed as a predictor".into()));
            }
        }
        Ok(())
    }

    fn predictor_names(&self, frame: &Frame) -> Vec<String> {
        match &self.predictors {
            Some(p) => p.clone(),
            None => frame
                .names
                .iter()
                .filter(|n| **n != self.target)
                .cloned()
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedPair {
    pub kept: String,
    pub dropped: String,
    pub pair_r: f64,
}

/// For predictor pairs with |r| above the threshold, taken in descending
/// |r|, drops the member less correlated with the target. Pairs touching an
/// already dropped column are skipped. The target column is untouched.
pub fn prune_correlated(frame: &Frame, spec: &PipelineSpec) -> Result<(Frame, Vec<DroppedPair>)> {
    spec.validate()?;
    let t = frame.index_of(&spec.target)?;
    let r = pearson_matrix(frame)?;
    let preds: Vec<usize> = (0..frame.names.len()).filter(|&j| j != t).collect();
    let mut pairs = Vec::new();
    for (ia, &a) in preds.iter().enumerate() {
        for &b in &preds[ia + 1..] {
            let v = r.get(a, b);
            if v.abs() > spec.rho_max {
                pairs.push((a, b, v));
            }
        }
    }
    pairs.sort_by(|x, y| y.2.abs().total_cmp(&x.2.abs()).then((x.0, x.1).cmp(&(y.0, y.1))));
    let mut alive = vec![true; frame.names.len()];
    let mut report = Vec::new();
    for (a, b, v) in pairs {
        if !alive[a] || !alive[b] {
            continue;
        }
        // ties keep the earlier column
        let (keep, drop) = if r.get(b, t).abs() > r.get(a, t).abs() { (b, a) } else { (a, b) };
        alive[drop] = false;
        report.push(DroppedPair {
            kept: frame.names[keep].clone(),
            dropped: frame.names[drop].clone(),
            pair_r: v,
        });
    }
    let names: Vec<String> = (0..frame.names.len())
        .filter(|&j| alive[j])
        .map(|j| frame.names[j].clone())
        .collect();
    Ok((frame.select(&names)?, report))
}

/// Everything the report step produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub variables: Vec<String>,
    /// One result per method, in the order of [`Method::ALL`].
    pub results: Vec<SelectionResult>,
    pub pruned: Vec<DroppedPair>,
    pub rows_dropped_missing: usize,
}

impl SelectionReport {
    pub fn result(&self, method: Method) -> Option<&SelectionResult> {
        self.results.iter().find(|r| r.method == method)
    }
}

/// Runs all six selectors on `frame` with `target` as response.
pub fn select_all(
    frame: &Frame,
    target: &str,
    model: &SelectorModel,
    cfgs: &BaselineConfigs,
) -> Result<(Vec<String>, Vec<SelectionResult>)> {
    let t = frame.index_of(target)?;
    let preds: Vec<usize> = (0..frame.names.len()).filter(|&j| j != t).collect();
    if preds.is_empty() {
        return Err(Error::PipelineEmpty);
    }
    let names: Vec<String> = preds.iter().map(|&j| frame.names[j].clone()).collect();
    let cols: Vec<Vec<f64>> = preds.iter().map(|&j| frame.columns[j].clone()).collect();
    let raw = RawDataset::new(Matrix::from_columns(&cols), frame.columns[t].clone(), names.clone())?;
    let data = standardize(&raw)?;
    let results = Method::ALL
        .iter()
        .map(|&m| run_selector(m, &data, Some(model), cfgs))
        .collect::<Result<_>>()?;
    Ok((names, results))
}

/// Missing-row removal, log transform, pruning, standardization, then
/// every selector.
pub fn run_selection_report(
    frame: &Frame,
    spec: &PipelineSpec,
    model: &SelectorModel,
    cfgs: &BaselineConfigs,
) -> Result<SelectionReport> {
    spec.validate()?;
    let mut used = spec.predictor_names(frame);
    if used.is_empty() {
        return Err(Error::PipelineEmpty);
    }
    used.push(spec.target.clone());
    let (frame, rows_dropped_missing) = frame.select(&used)?.drop_missing_rows();
    if frame.row_count() == 0 {
        return Err(Error::EmptyFile);
    }
    let frame = log_shift(&frame, &spec.log_columns)?;
    let (frame, pruned) = prune_correlated(&frame, spec)?;
    let (variables, results) = select_all(&frame, &spec.target, model, cfgs)?;
    Ok(SelectionReport {
        variables,
        results,
        pruned,
        rows_dropped_missing,
    })
}

/// `variable,ann,lasso,forward,backward,aic,bic` with yes/no entries.
pub fn write_report<W: Write>(variables: &[String], results: &[SelectionResult], mut w: W) -> Result<()> {
    let mut header = String::from("variable");
    for r in results {
        header.push(',');
        header.push_str(r.method.name());
    }
    writeln!(w, "{header}")?;
    for (j, v) in variables.iter().enumerate() {
        write!(w, "{v}")?;
        for r in results {
            write!(w, ",{}", if r.mask.get(j) { "yes" } else { "no" })?;
        }
        writeln!(w)?;
    }
    Ok(())
}
