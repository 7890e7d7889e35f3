//! Cross-sectional biomarker datasets.
//!
//! A dataset is an M x N matrix of scalar biomarker values with one
//! diagnostic label per subject. The on-disk format is a plain CSV:
//!
//! ```text
//! subject_id,diagnosis,<name1>,...,<nameN>
//! S001,CN,0.12,1.5e-3
//! ```
//!
//! `diagnosis` is one of `CN`, `MCI`, `AD` (case-sensitive). Missing or
//! non-finite cells are rejected rather than imputed.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticLabel {
    CN,
    MCI,
    AD,
}

impl DiagnosticLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagnosticLabel::CN => "CN",
            DiagnosticLabel::MCI => "MCI",
            DiagnosticLabel::AD => "AD",
        }
    }
}

impl fmt::Display for DiagnosticLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DiagnosticLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "CN" => Ok(DiagnosticLabel::CN),
            "MCI" => Ok(DiagnosticLabel::MCI),
            "AD" => Ok(DiagnosticLabel::AD),
            other => Err(format!("unknown diagnosis `{other}` (expected CN, MCI or AD)")),
        }
    }
}

/// M subjects by N biomarkers, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BiomarkerDataset {
    subject_ids: Vec<String>,
    labels: Vec<DiagnosticLabel>,
    values: Vec<f64>,
    biomarker_names: Vec<String>,
}

impl BiomarkerDataset {
    /// Build a dataset from rows. Checks shape, finiteness, `N >= 2` and name
    /// uniqueness. Class-count requirements of the fitting routines are
    /// checked separately by [`BiomarkerDataset::require_fittable`].
    pub fn new(
        subject_ids: Vec<String>,
        labels: Vec<DiagnosticLabel>,
        rows: Vec<Vec<f64>>,
        biomarker_names: Vec<String>,
    ) -> Result<Self> {
        let n = biomarker_names.len();
        if n < 2 {
            return Err(Error::Schema(format!(
                "at least 2 biomarkers are required, got {n}"
            )));
        }
        let mut seen = HashSet::new();
        for name in &biomarker_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate biomarker name `{name}`")));
            }
        }
        if labels.len() != subject_ids.len() || rows.len() != subject_ids.len() {
            return Err(Error::LengthMismatch {
                expected: subject_ids.len(),
                got: labels.len().min(rows.len()),
            });
        }
        let mut values = Vec::with_capacity(rows.len() * n);
        for (j, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if let Some(i) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Ingestion {
                    line: j + 2,
                    column: biomarker_names[i].clone(),
                    message: "value is not finite".into(),
                });
            }
            values.extend(row);
        }
        Ok(Self {
            subject_ids,
            labels,
            values,
            biomarker_names,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.labels.len()
    }

    pub fn n_biomarkers(&self) -> usize {
        self.biomarker_names.len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn labels(&self) -> &[DiagnosticLabel] {
        &self.labels
    }

    pub fn biomarker_names(&self) -> &[String] {
        &self.biomarker_names
    }

    pub fn value(&self, subject: usize, biomarker: usize) -> f64 {
        self.values[subject * self.n_biomarkers() + biomarker]
    }

    pub fn row(&self, subject: usize) -> &[f64] {
        let n = self.n_biomarkers();
        &self.values[subject * n..(subject + 1) * n]
    }

    pub fn column(&self, biomarker: usize) -> Vec<f64> {
        (0..self.n_subjects())
            .map(|j| self.value(j, biomarker))
            .collect()
    }

    /// Values of one biomarker restricted to subjects carrying `label`.
    pub fn column_for(&self, biomarker: usize, label: DiagnosticLabel) -> Vec<f64> {
        (0..self.n_subjects())
            .filter(|&j| self.labels[j] == label)
            .map(|j| self.value(j, biomarker))
            .collect()
    }

    pub fn count(&self, label: DiagnosticLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// The requirements shared by every fitting routine: `M >= 4` and at
    /// least two CN and two AD subjects.
    pub fn require_fittable(&self) -> Result<()> {
        let (cn, ad) = (self.count(DiagnosticLabel::CN), self.count(DiagnosticLabel::AD));
        if self.n_subjects() < 4 || cn < 2 || ad < 2 {
            return Err(Error::precondition(format!(
                "need at least 4 subjects with >= 2 CN and >= 2 AD (have M={}, CN={cn}, AD={ad})",
                self.n_subjects()
            )));
        }
        Ok(())
    }

    pub fn biomarker_index(&self, name: &str) -> Option<usize> {
        self.biomarker_names.iter().position(|n| n == name)
    }

    /// Sub-dataset with the given rows, in the given order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let n = self.n_biomarkers();
        let mut values = Vec::with_capacity(rows.len() * n);
        for &j in rows {
            values.extend_from_slice(self.row(j));
        }
        Self {
            subject_ids: rows.iter().map(|&j| self.subject_ids[j].clone()).collect(),
            labels: rows.iter().map(|&j| self.labels[j]).collect(),
            values,
            biomarker_names: self.biomarker_names.clone(),
        }
    }

    /// Sub-dataset with the given columns in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        let rows = (0..self.n_subjects())
            .map(|j| columns.iter().map(|&i| self.value(j, i)).collect())
            .collect();
        Self::new(
            self.subject_ids.clone(),
            self.labels.clone(),
            rows,
            columns
                .iter()
                .map(|&i| self.biomarker_names[i].clone())
                .collect(),
        )
    }

    /// Write the dataset in the CSV format read by [`load_dataset`].
    ///
    /// Floats use the shortest representation that parses back to the same
    /// value, so a write/read cycle is lossless.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "subject_id,diagnosis")?;
        for name in &self.biomarker_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for j in 0..self.n_subjects() {
            write!(out, "{},{}", self.subject_ids[j], self.labels[j])?;
            for v in self.row(j) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dataset fields are UTF-8")
    }
}

/// Parse a dataset from the documented CSV format. Row order is preserved.
pub fn load_dataset<R: Read>(source: R) -> Result<BiomarkerDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(source);

    let header = reader.headers().map_err(|e| Error::Ingestion {
        line: 1,
        column: String::new(),
        message: e.to_string(),
    })?;
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "subject_id" || header[1] != "diagnosis" {
        return Err(Error::Ingestion {
            line: 1,
            column: header.first().cloned().unwrap_or_default(),
            message: "header must start with `subject_id,diagnosis`".into(),
        });
    }
    let names: Vec<String> = header[2..].to_vec();
    if let Some(i) = names.iter().position(|n| n.is_empty()) {
        return Err(Error::Ingestion {
            line: 1,
            column: format!("#{}", i + 3),
            message: "empty biomarker name".into(),
        });
    }
    let mut seen = HashSet::new();
    for name in &names {
        if !seen.insert(name.as_str()) {
            return Err(Error::Schema(format!("duplicate biomarker name `{name}`")));
        }
    }

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| Error::Ingestion {
            line,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            let column = header
                .get(record.len())
                .cloned()
                .unwrap_or_else(|| format!("#{}", record.len()));
            return Err(Error::Ingestion {
                line,
                column,
                message: format!(
                    "expected {} cells, found {}",
                    header.len(),
                    record.len()
                ),
            });
        }
        let id = &record[0];
        if id.is_empty() {
            return Err(Error::Ingestion {
                line,
                column: "subject_id".into(),
                message: "missing cell".into(),
            });
        }
        let label = record[1].parse::<DiagnosticLabel>().map_err(|m| Error::Ingestion {
            line,
            column: "diagnosis".into(),
            message: m,
        })?;
        let mut row = Vec::with_capacity(names.len());
        for (i, cell) in record.iter().skip(2).enumerate() {
            let fail = |message: String| Error::Ingestion {
                line,
                column: names[i].clone(),
                message,
            };
            if cell.is_empty() {
                return Err(fail("missing cell".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| fail(format!("non-numeric value `{cell}`")))?;
            if !v.is_finite() {
                return Err(fail(format!("non-finite value `{cell}`")));
            }
            row.push(v);
        }
        ids.push(id.to_string());
        labels.push(label);
        rows.push(row);
    }
    BiomarkerDataset::new(ids, labels, rows, names)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TTestKind {
    /// Pooled-variance two-sample Student's t.
    #[default]
    Pooled,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-sample t-test of `b` against `a`. Returns `None` when the test is
/// undefined (fewer than two values per group or zero variance).
pub fn two_sample_t_test(a: &[f64], b: &[f64], kind: TTestKind) -> Option<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (m1, v1) = mean_var(a);
    let (m2, v2) = mean_var(b);
    let (se, df) = match kind {
        TTestKind::Pooled => {
            let pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0);
            ((pooled * (1.0 / n1 + 1.0 / n2)).sqrt(), n1 + n2 - 2.0)
        }
        TTestKind::Welch => {
            let (q1, q2) = (v1 / n1, v2 / n2);
            let df = (q1 + q2).powi(2) / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
            ((q1 + q2).sqrt(), df)
        }
    };
    if !(se > 0.0) || !se.is_finite() {
        return None;
    }
    let t = (m2 - m1) / se;
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Some(TTest { t, df, p })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnTest {
    pub name: String,
    pub t: f64,
    pub p: f64,
    pub kept: bool,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub dataset: BiomarkerDataset,
    pub tests: Vec<ColumnTest>,
    /// Columns that could not be tested (zero pooled variance); excluded.
    pub untestable: Vec<String>,
}

/// Keep only the biomarkers whose CN-vs-AD two-sample t-test gives
/// `p < p_threshold`. MCI rows are carried through untouched but never
/// enter the test.
pub fn significance_filter(
    dataset: &BiomarkerDataset,
    p_threshold: f64,
    kind: TTestKind,
) -> Result<FilterOutcome> {
    if !(p_threshold > 0.0 && p_threshold < 1.0) {
        return Err(Error::config(format!(
            "p threshold must lie in (0, 1), got {p_threshold}"
        )));
    }
    let (cn, ad) = (
        dataset.count(DiagnosticLabel::CN),
        dataset.count(DiagnosticLabel::AD),
    );
    if cn < 2 || ad < 2 {
        return Err(Error::precondition(format!(
            "t-test needs >= 2 CN and >= 2 AD subjects (have CN={cn}, AD={ad})"
        )));
    }
    let mut keep = Vec::new();
    let mut tests = Vec::new();
    let mut untestable = Vec::new();
    for (i, name) in dataset.biomarker_names().iter().enumerate() {
        let a = dataset.column_for(i, DiagnosticLabel::CN);
        let b = dataset.column_for(i, DiagnosticLabel::AD);
        match two_sample_t_test(&a, &b, kind) {
            Some(test) => {
                let kept = test.p < p_threshold;
                if kept {
                    keep.push(i);
                }
                tests.push(ColumnTest {
                    name: name.clone(),
                    t: test.t,
                    p: test.p,
                    kept,
                });
            }
            None => untestable.push(name.clone()),
        }
    }
    if keep.len() < 2 {
        return Err(Error::precondition(format!(
            "only {} biomarker(s) pass p < {p_threshold}; at least 2 are required",
            keep.len()
        )));
    }
    Ok(FilterOutcome {
        dataset: dataset.select_columns(&keep)?,
        tests,
        untestable,
    })
}
