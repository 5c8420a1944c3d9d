//! Dense matrix exchange formats.
//!
//! Text: a `rows cols` header followed by `rows·cols` values in row-major
//! order, separated by any whitespace. Lines starting with `#` are ignored.
//! Several matrices may follow each other in one text stream.
//!
//! JSON: `{"rows": r, "cols": c, "data": [row-major values]}`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator_means::MeanTransformInput;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Shape(format!(
                "{}x{} matrix needs {} values, got {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

impl From<&DMatrix<f64>> for DenseMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        DenseMatrix { rows: m.nrows(), cols: m.ncols(), data: m.transpose().iter().copied().collect() }
    }
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim_start().starts_with('#')).flat_map(str::split_whitespace)
}

fn read_one<'a>(it: &mut impl Iterator<Item = &'a str>) -> Result<Option<DMatrix<f64>>> {
    let Some(first) = it.next() else { return Ok(None) };
    let dim = |tok: Option<&str>| -> Result<usize> {
        let tok = tok.ok_or_else(|| Error::Parse("truncated matrix header".into()))?;
        tok.parse().map_err(|_| Error::Parse(format!("bad matrix dimension {tok:?}")))
    };
    let rows = dim(Some(first))?;
    let cols = dim(it.next())?;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let tok = it.next().ok_or_else(|| Error::Parse(format!("{rows}x{cols} matrix is truncated")))?;
        data.push(tok.parse::<f64>().map_err(|_| Error::Parse(format!("bad matrix entry {tok:?}")))?);
    }
    Ok(Some(DMatrix::from_row_slice(rows, cols, &data)))
}

pub fn parse_dense_text(text: &str) -> Result<DMatrix<f64>> {
    let mut v = parse_dense_text_many(text)?;
    if v.len() != 1 {
        return Err(Error::Parse(format!("expected one matrix, found {}", v.len())));
    }
    Ok(v.remove(0))
}

pub fn parse_dense_text_many(text: &str) -> Result<Vec<DMatrix<f64>>> {
    let mut it = tokens(text);
    let mut out = Vec::new();
    while let Some(m) = read_one(&mut it)? {
        out.push(m);
    }
    Ok(out)
}

pub fn to_dense_text(m: &DMatrix<f64>) -> String {
    let mut s = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TripleJson {
    s: DenseMatrix,
    t: DenseMatrix,
    x: DenseMatrix,
}

/// Parses an `(S, T, X)` triple: either three consecutive text matrices or a
/// JSON object with keys `s`, `t`, `x`.
pub fn parse_triple(text: &str) -> Result<MeanTransformInput> {
    if text.trim_start().starts_with('{') {
        let j: TripleJson = serde_json::from_str(text)?;
        return MeanTransformInput::new(j.s.to_matrix()?, j.t.to_matrix()?, j.x.to_matrix()?);
    }
    let mut v = parse_dense_text_many(text)?;
    if v.len() != 3 {
        return Err(Error::Parse(format!("expected three matrices S, T, X, found {}", v.len())));
    }
    let x = v.pop().unwrap();
    let t = v.pop().unwrap();
    let s = v.pop().unwrap();
    MeanTransformInput::new(s, t, x)
}

pub fn read_triple(path: &Path) -> Result<MeanTransformInput> {
    parse_triple(&std::fs::read_to_string(path)?)
}

pub fn triple_to_json(input: &MeanTransformInput) -> Result<String> {
    let j = TripleJson { s: (&input.s).into(), t: (&input.t).into(), x: (&input.x).into() };
    Ok(serde_json::to_string_pretty(&j)?)
}
