//! Dense bipartite adjacency matrices and index sets.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::Result;

/// File format for matrix I/O.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Tsv,
}

impl MatrixFormat {
    fn separator(self) -> char {
        match self {
            MatrixFormat::Csv => ',',
            MatrixFormat::Tsv => '\t',
        }
    }

    /// Guess from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => MatrixFormat::Tsv,
            _ => MatrixFormat::Csv,
        }
    }
}

/// Dense m×n real-valued bipartite adjacency matrix.
///
/// Entries are stored row-major. All entries are finite; `is_binary` is true
/// exactly when every entry is 0 or 1. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteMatrix {
    m: usize,
    n: usize,
    values: Vec<f64>,
    is_binary: bool,
    row_labels: Option<Vec<String>>,
    col_labels: Option<Vec<String>>,
}

impl BipartiteMatrix {
    pub fn new(m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Validation(format!(
                "matrix dimensions must be positive, got {m}×{n}"
            )));
        }
        if values.len() != m * n {
            return Err(Error::Validation(format!(
                "expected {} entries for a {m}×{n} matrix, got {}",
                m * n,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite entry at row {}, column {}",
                bad / n + 1,
                bad % n + 1
            )));
        }
        let is_binary = values.iter().all(|&v| v == 0.0 || v == 1.0);
        Ok(BipartiteMatrix {
            m,
            n,
            values,
            is_binary,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn with_col_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Validation(format!(
                "{} column labels for {} columns",
                labels.len(),
                self.n
            )));
        }
        self.col_labels = Some(labels);
        Ok(self)
    }

    pub fn with_row_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.m {
            return Err(Error::Validation(format!(
                "{} row labels for {} rows",
                labels.len(),
                self.m
            )));
        }
        self.row_labels = Some(labels);
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_binary(&self) -> bool {
        self.is_binary
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[String]> {
        self.col_labels.as_deref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Submatrix of the selected rows and columns, row-major.
    pub fn extract_submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> Result<Vec<f64>> {
        if let Some(&r) = rows.indices().iter().find(|&&r| r >= self.m) {
            return Err(Error::Bounds(format!(
                "row index {r} in a matrix with {} rows",
                self.m
            )));
        }
        if let Some(&c) = cols.indices().iter().find(|&&c| c >= self.n) {
            return Err(Error::Bounds(format!(
                "column index {c} in a matrix with {} columns",
                self.n
            )));
        }
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows.indices() {
            for &c in cols.indices() {
                out.push(self.get(r, c));
            }
        }
        Ok(out)
    }

    /// Copy with one row removed.
    pub fn drop_row(&self, row: usize) -> Result<Self> {
        if row >= self.m {
            return Err(Error::Bounds(format!("row {row} of {}", self.m)));
        }
        if self.m == 1 {
            return Err(Error::Size("cannot drop the only row".into()));
        }
        let mut values = Vec::with_capacity((self.m - 1) * self.n);
        for i in 0..self.m {
            if i != row {
                values.extend_from_slice(self.row(i));
            }
        }
        BipartiteMatrix::new(self.m - 1, self.n, values)
    }

    /// Copy with one column removed.
    pub fn drop_col(&self, col: usize) -> Result<Self> {
        if col >= self.n {
            return Err(Error::Bounds(format!("column {col} of {}", self.n)));
        }
        if self.n == 1 {
            return Err(Error::Size("cannot drop the only column".into()));
        }
        let mut values = Vec::with_capacity(self.m * (self.n - 1));
        for i in 0..self.m {
            for j in 0..self.n {
                if j != col {
                    values.push(self.get(i, j));
                }
            }
        }
        BipartiteMatrix::new(self.m, self.n - 1, values)
    }
}

/// Strictly increasing sequence of 0-based positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "index set {indices:?} is not strictly increasing"
            )));
        }
        Ok(IndexSet { indices })
    }

    /// For internal callers that construct indices already in order.
    pub(crate) fn new_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        IndexSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

impl From<IndexSet> for Vec<usize> {
    fn from(s: IndexSet) -> Vec<usize> {
        s.indices
    }
}

fn parse_token(tok: &str) -> Option<f64> {
    let t = tok.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Load a numeric grid from a CSV/TSV file.
///
/// A single header row is auto-detected: if any token of the first line does
/// not parse as a number, it is taken as column labels. Ragged rows and
/// non-numeric cells are reported with their 1-based line/column position.
pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<BipartiteMatrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_matrix_str(&text, format, &path.display().to_string())
}

pub fn load_matrix_str(
    text: &str,
    format: MatrixFormat,
    path: &str,
) -> Result<BipartiteMatrix> {
    let sep = format.separator();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, line)| (idx + 1, line))
        .filter(|(_, line)| !line.trim().is_empty())
        .peekable();

    let (_, first) = *lines.peek().ok_or_else(|| Error::Format {
        path: path.to_string(),
        line: 1,
        reason: "file contains no data".into(),
    })?;
    let first_tokens: Vec<&str> = first.split(sep).collect();
    let header: Option<Vec<String>> = if first_tokens.iter().any(|t| parse_token(t).is_none()) {
        lines.next();
        Some(first_tokens.iter().map(|t| t.trim().to_string()).collect())
    } else {
        None
    };

    let mut values = Vec::new();
    let mut n_cols: Option<usize> = None;
    let mut m = 0usize;
    for (line_no, line) in lines {
        let tokens: Vec<&str> = line.split(sep).collect();
        match n_cols {
            None => n_cols = Some(tokens.len()),
            Some(n) if n != tokens.len() => {
                return Err(Error::Format {
                    path: path.to_string(),
                    line: line_no,
                    reason: format!("expected {n} fields, found {}", tokens.len()),
                });
            }
            _ => {}
        }
        for (col, tok) in tokens.iter().enumerate() {
            match parse_token(tok) {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: line_no,
                        column: col + 1,
                        token: tok.trim().to_string(),
                    });
                }
            }
        }
        m += 1;
    }

    let n = n_cols.ok_or_else(|| Error::Format {
        path: path.to_string(),
        line: 1,
        reason: "file contains no data rows".into(),
    })?;
    if let Some(h) = &header {
        if h.len() != n {
            return Err(Error::Format {
                path: path.to_string(),
                line: 1,
                reason: format!("header has {} fields but rows have {n}", h.len()),
            });
        }
    }
    let mut matrix = BipartiteMatrix::new(m, n, values)?;
    if let Some(h) = header {
        matrix = matrix.with_col_labels(h)?;
    }
    Ok(matrix)
}

/// Write a matrix in the same grid format, 17 significant digits per entry.
pub fn save_matrix(matrix: &BipartiteMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let text = matrix_to_string(matrix, format);
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn matrix_to_string(matrix: &BipartiteMatrix, format: MatrixFormat) -> String {
    let sep = format.separator();
    let mut out = String::new();
    if let Some(labels) = matrix.col_labels() {
        out.push_str(&labels.join(&sep.to_string()));
        out.push('\n');
    }
    for i in 0..matrix.m() {
        for (j, v) in matrix.row(i).iter().enumerate() {
            if j > 0 {
                out.push(sep);
            }
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}
