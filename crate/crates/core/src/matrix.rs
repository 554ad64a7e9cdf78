//! Dense row-major matrices and the shared on-disk formats used for
//! similarity matrices, embedding batches, and prediction matrices.
//!
//! Text format: a header line with `ROWS COLS` (a single `N` means square),
//! then one whitespace-separated row per line. Binary format: the magic
//! bytes `CMAT`, two little-endian u32 dimensions, then row-major
//! little-endian f32 values. [`Matrix::from_bytes`] auto-detects by magic.

use thiserror::Error;

pub const MATRIX_MAGIC: &[u8; 4] = b"CMAT";

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix file is empty")]
    Empty,
    #[error("line {0}: expected {1} values, found {2}")]
    RaggedRow(usize, usize, usize),
    #[error("header: {0}")]
    BadHeader(String),
    #[error("line {line}: cannot parse `{text}` as a number")]
    BadNumber { line: usize, text: String },
    #[error("binary matrix is truncated")]
    Truncated,
    #[error("matrix is not valid UTF-8 text and lacks the binary magic")]
    NotText,
    #[error("expected {expected} rows, found {found}")]
    WrongRowCount { expected: usize, found: usize },
}

impl Matrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        if r == 0 {
            return Err(MatrixError::Empty);
        }
        let c = rows[0].len();
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(MatrixError::RaggedRow(i + 1, c, row.len()));
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transposed(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn from_text(text: &str) -> Result<Self, MatrixError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(MatrixError::Empty)?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| MatrixError::BadHeader(format!("cannot parse `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        let (rows, cols) = match dims.as_slice() {
            [n] => (*n, *n),
            [r, c] => (*r, *c),
            _ => {
                return Err(MatrixError::BadHeader(format!(
                    "line {}: expected `N` or `ROWS COLS`",
                    hline + 1
                )))
            }
        };
        if rows == 0 || cols == 0 {
            return Err(MatrixError::BadHeader("dimensions must be positive".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        let mut found = 0usize;
        for (lineno, line) in lines {
            let mut count = 0usize;
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| MatrixError::BadNumber {
                    line: lineno + 1,
                    text: tok.to_string(),
                })?;
                data.push(v);
                count += 1;
            }
            if count != cols {
                return Err(MatrixError::RaggedRow(lineno + 1, cols, count));
            }
            found += 1;
        }
        if found != rows {
            return Err(MatrixError::WrongRowCount {
                expected: rows,
                found,
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self, MatrixError> {
        if bytes.len() < 12 || &bytes[0..4] != MATRIX_MAGIC {
            return Err(MatrixError::Truncated);
        }
        let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let need = 12 + rows * cols * 4;
        if rows == 0 || cols == 0 || bytes.len() < need {
            return Err(MatrixError::Truncated);
        }
        let data = bytes[12..need]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Ok(Matrix { rows, cols, data })
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.data.len() * 4);
        out.extend_from_slice(MATRIX_MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for &v in &self.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }

    /// Detect binary by magic, otherwise parse as text.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MatrixError> {
        if bytes.starts_with(MATRIX_MAGIC) {
            Matrix::from_binary(bytes)
        } else {
            let text = std::str::from_utf8(bytes).map_err(|_| MatrixError::NotText)?;
            Matrix::from_text(text)
        }
    }
}
