//! In-memory data model and CSV ingestion for selection runs.
//!
//! A [`Dataset`] is a column-major numeric design matrix plus a designated
//! target column. Columns are immutable after construction and safe to share
//! across threads.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Whether the target is a 0/1 outcome or a real-valued one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Binary,
    Continuous,
}

/// Validated numeric dataset: `p` predictor columns of length `n` and a
/// target column of the same length.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    target_name: String,
    target: Vec<f64>,
    target_kind: TargetKind,
}

impl Dataset {
    /// Builds a dataset from predictor columns and a target column.
    ///
    /// The target kind is inferred: binary iff every value is exactly 0 or 1.
    pub fn new(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        target_name: impl Into<String>,
        target: Vec<f64>,
    ) -> Result<Self> {
        let target_kind = infer_target_kind(&target);
        let d = Dataset {
            names,
            columns,
            target_name: target_name.into(),
            target,
            target_kind,
        };
        d.validate()?;
        Ok(d)
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.target.len()
    }

    /// Number of predictor variables (target excluded).
    pub fn p(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn column(&self, var: usize) -> &[f64] {
        &self.columns[var]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target_kind(&self) -> TargetKind {
        self.target_kind
    }

    /// Re-checks every structural invariant. Cheap enough to run in tests
    /// after any construction path.
    pub fn validate(&self) -> Result<()> {
        let n = self.target.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if self.names.len() != self.columns.len() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} columns",
                self.names.len(),
                self.columns.len()
            )));
        }
        let mut seen: Vec<&str> = Vec::with_capacity(self.names.len() + 1);
        seen.push(&self.target_name);
        for name in &self.names {
            if seen.contains(&name.as_str()) {
                return Err(Error::DuplicateName(name.clone()));
            }
            seen.push(name);
        }
        for (name, col) in self.names.iter().zip(&self.columns) {
            if col.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "column '{name}' has {} entries, expected {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    name: name.clone(),
                    row: row + 1,
                });
            }
        }
        if let Some(row) = self.target.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                name: self.target_name.clone(),
                row: row + 1,
            });
        }
        if self.target_kind == TargetKind::Binary {
            let ones = self.target.iter().filter(|&&v| v == 1.0).count();
            if ones == 0 || ones == n {
                return Err(Error::DegenerateBinaryTarget);
            }
        }
        Ok(())
    }

    /// Loads a CSV file. The header row is mandatory and `target_name` must
    /// appear in it; the target column is removed from the predictors.
    pub fn load_csv(path: impl AsRef<Path>, target_name: &str) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_csv_str(&text, target_name)
    }

    /// Parses CSV text: UTF-8, comma-separated, '.' decimal separator, all
    /// cells numeric.
    pub fn from_csv_str(text: &str, target_name: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty csv: missing header row".into()))?;
        let header: Vec<String> = header.split(',').map(|h| h.trim().to_string()).collect();

        let mut target_col = None;
        for (i, h) in header.iter().enumerate() {
            if header[..i].contains(h) {
                return Err(Error::DuplicateName(h.clone()));
            }
            if h == target_name {
                target_col = Some(i);
            }
        }
        let target_col = target_col.ok_or_else(|| Error::MissingTarget(target_name.to_string()))?;

        let mut cells: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for (line_idx, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(Error::Csv {
                    line: line_idx + 1,
                    col: fields.len(),
                    msg: format!("expected {} cells, found {}", header.len(), fields.len()),
                });
            }
            for (col_idx, field) in fields.iter().enumerate() {
                let value: f64 = field.trim().parse().map_err(|_| Error::Csv {
                    line: line_idx + 1,
                    col: col_idx + 1,
                    msg: format!("cell '{}' is not numeric", field.trim()),
                })?;
                cells[col_idx].push(value);
            }
        }
        if cells[0].is_empty() {
            return Err(Error::InvalidArgument("csv has a header but no data rows".into()));
        }

        let target = cells.remove(target_col);
        let mut names = header;
        names.remove(target_col);

        // Zero-variance predictors make every GLM design singular; reject at
        // load time rather than failing deep inside a fit.
        for (name, col) in names.iter().zip(&cells) {
            if col.iter().all(|v| v.is_finite()) && col.iter().all(|&v| v == col[0]) {
                return Err(Error::ConstantColumn(name.clone()));
            }
        }

        Dataset::new(names, cells, target_name, target)
    }

    /// Serializes in the same layout `load_csv` reads: the target first,
    /// then the predictors, all floats with 17 significant digits so values
    /// round-trip bit-exactly.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.target_name);
        for name in &self.names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for row in 0..self.n() {
            let _ = write!(out, "{:.16e}", self.target[row]);
            for col in &self.columns {
                let _ = write!(out, ",{:.16e}", col[row]);
            }
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Generates the null simulation dataset: `p` independent standard-normal
    /// columns and an independent Bernoulli(0.5) target.
    ///
    /// The RNG is ChaCha8 seeded with `seed` (documented contract: identical
    /// output across runs on the same build; bit-equality across unrelated
    /// implementations is not promised). The target vector is re-drawn whole
    /// until both classes occur.
    pub fn generate_null(n: usize, p: usize, seed: u64) -> Result<Self> {
        if n < 2 || p < 1 {
            return Err(Error::InvalidArgument(format!(
                "generate_null requires n >= 2 and p >= 1, got n={n}, p={p}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = loop {
            let t: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
                .collect();
            let ones = t.iter().filter(|&&v| v == 1.0).count();
            if ones > 0 && ones < n {
                break t;
            }
        };
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Dataset::new(names, columns, "y", target)
    }

    /// Minimal valid stand-in with the requested variable count, for
    /// criteria that never read the data (the graph oracle).
    pub fn placeholder(p: usize) -> Self {
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        let columns = vec![vec![0.0, 1.0]; p];
        Dataset {
            names,
            columns,
            target_name: "y".into(),
            target: vec![0.0, 1.0],
            target_kind: TargetKind::Binary,
        }
    }
}

fn infer_target_kind(target: &[f64]) -> TargetKind {
    if target.iter().all(|&v| v == 0.0 || v == 1.0) {
        TargetKind::Binary
    } else {
        TargetKind::Continuous
    }
}
