//! Greedy-matching F1 over precomputed token similarity matrices, with the
//! oracle and anti-oracle matrix edits.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricError;

/// Reference-by-candidate token similarities plus mask flags per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    ref_mask_flags: Vec<bool>,
    cand_mask_flags: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimMode {
    Plain,
    Oracle,
    AntiOracle,
}

impl SimilarityMatrix {
    /// `values` is row-major, `rows * cols` long, each in [-1, 1].
    pub fn new(
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        ref_mask_flags: Vec<bool>,
        cand_mask_flags: Vec<bool>,
    ) -> Result<Self, MetricError> {
        if values.len() != rows * cols {
            return Err(MetricError::Matrix(format!(
                "expected {} values for {rows}x{cols}, got {}",
                rows * cols,
                values.len()
            )));
        }
        if ref_mask_flags.len() != rows || cand_mask_flags.len() != cols {
            return Err(MetricError::Matrix(format!(
                "flag lengths {}/{} do not match {rows}x{cols}",
                ref_mask_flags.len(),
                cand_mask_flags.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(MetricError::Matrix(format!("value {v} outside [-1, 1]")));
        }
        Ok(Self {
            rows,
            cols,
            values,
            ref_mask_flags,
            cand_mask_flags,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn ref_mask_flags(&self) -> &[bool] {
        &self.ref_mask_flags
    }

    pub fn cand_mask_flags(&self) -> &[bool] {
        &self.cand_mask_flags
    }

    /// The same similarities with different mask flags.
    pub fn with_flags(
        &self,
        ref_flags: Vec<bool>,
        cand_flags: Vec<bool>,
    ) -> Result<Self, MetricError> {
        Self::new(
            self.rows,
            self.cols,
            self.values.clone(),
            ref_flags,
            cand_flags,
        )
    }

    /// Parses the text format: a `rows cols` header, one line of reals per
    /// row, then a line of 0/1 reference flags and a line of candidate flags.
    pub fn parse(text: &str) -> Result<Self, MetricError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let bad = |m: String| MetricError::Matrix(m);
        let header = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|d| d.parse().map_err(|_| bad(format!("bad header {header:?}"))))
            .collect::<Result<_, _>>()?;
        let [rows, cols] = dims[..] else {
            return Err(bad(format!("bad header {header:?}")));
        };
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing row {i}")))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|v| {
                    v.parse()
                        .map_err(|_| bad(format!("bad value {v:?} in row {i}")))
                })
                .collect::<Result<_, _>>()?;
            if row.len() != cols {
                return Err(bad(format!(
                    "row {i} has {} values, expected {cols}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        let mut flag_line = |name: &str| -> Result<Vec<bool>, MetricError> {
            let line = lines.next().unwrap_or("");
            line.split_whitespace()
                .map(|f| match f {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(bad(format!("bad {name} flag {f:?}"))),
                })
                .collect()
        };
        let ref_flags = flag_line("reference")?;
        let cand_flags = flag_line("candidate")?;
        Self::new(rows, cols, values, ref_flags, cand_flags)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for flags in [&self.ref_mask_flags, &self.cand_mask_flags] {
            let line: Vec<&str> = flags.iter().map(|&f| if f { "1" } else { "0" }).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Loads every regular file in `dir`, keyed by file stem (the pair id).
    pub fn load_dir(dir: &Path) -> Result<BTreeMap<String, SimilarityMatrix>, MetricError> {
        let io = |source| MetricError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut out = BTreeMap::new();
        for entry in fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if !path.is_file() {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let text = fs::read_to_string(&path).map_err(|source| MetricError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let matrix = Self::parse(&text)
                .map_err(|e| MetricError::Matrix(format!("{}: {e}", path.display())))?;
            out.insert(stem.to_string(), matrix);
        }
        Ok(out)
    }
}

/// Greedy-matching F1: recall is the mean row maximum, precision the mean
/// column maximum. Oracle mode forces entries between two flagged tokens to
/// 1; anti-oracle mode zeroes flagged rows and columns.
pub fn masked_sim_score(matrix: &SimilarityMatrix, mode: SimMode) -> Result<f64, MetricError> {
    if matrix.rows == 0 || matrix.cols == 0 {
        return Err(MetricError::EmptyMatrix);
    }
    let entry = |i: usize, j: usize| -> f64 {
        let (ri, cj) = (matrix.ref_mask_flags[i], matrix.cand_mask_flags[j]);
        match mode {
            SimMode::Oracle if ri && cj => 1.0,
            SimMode::AntiOracle if ri || cj => 0.0,
            _ => matrix.get(i, j),
        }
    };
    let mut row_max = vec![f64::NEG_INFINITY; matrix.rows];
    let mut col_max = vec![f64::NEG_INFINITY; matrix.cols];
    for (i, rm) in row_max.iter_mut().enumerate() {
        for (j, cm) in col_max.iter_mut().enumerate() {
            let v = entry(i, j);
            *rm = rm.max(v);
            *cm = cm.max(v);
        }
    }
    let recall = row_max.iter().sum::<f64>() / matrix.rows as f64;
    let precision = col_max.iter().sum::<f64>() / matrix.cols as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}
