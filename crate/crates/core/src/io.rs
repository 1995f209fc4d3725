//! Loading matrices and vectors, writing solve reports.
//!
//! Matrices come from MatrixMarket (`coordinate` or `array`, `real`,
//! `general` or `symmetric`) or headerless CSV. Anything whose first line
//! starts with `%%MatrixMarket` is read as MatrixMarket.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::array::DenseArray;
use crate::cg::SolveReport;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("entry ({row}, {col}) lies outside a {rows}x{cols} matrix (line {line})")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
        line: usize,
    },
    #[error("duplicate entry ({row}, {col}) on line {line}")]
    Duplicate { row: usize, col: usize, line: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    MatrixMarketCoordinate,
    MatrixMarketArray,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// A parsed matrix file, already expanded to dense row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub format: MatrixFormat,
    pub rows: usize,
    pub cols: usize,
    pub symmetric: bool,
    pub entries: Vec<f64>,
}

impl MatrixFile {
    pub fn to_array(&self) -> DenseArray {
        DenseArray::matrix(self.rows, self.cols, self.entries.clone())
            .expect("entries match dimensions")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile {
    pub vector: DenseArray,
    /// Set when the file held no values at all.
    pub empty: bool,
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_real(tok: &str, line: usize) -> Result<f64, IoError> {
    tok.trim().parse::<f64>().map_err(|_| IoError::Parse {
        line,
        msg: format!("`{}` is not a number", tok.trim()),
    })
}

fn parse_count(tok: &str, line: usize) -> Result<usize, IoError> {
    tok.parse::<usize>().map_err(|_| IoError::Parse {
        line,
        msg: format!("`{tok}` is not a non-negative integer"),
    })
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DenseArray, IoError> {
    parse_matrix(&read(path.as_ref())?).map(|m| m.to_array())
}

pub fn parse_matrix(text: &str) -> Result<MatrixFile, IoError> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(text)
    } else {
        parse_csv_matrix(text)
    }
}

/// Comma-separated rows of reals with their 1-based line numbers. Blank
/// lines are skipped; rows may differ in length.
fn csv_rows(text: &str) -> Result<Vec<(usize, Vec<f64>)>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let values = record
            .iter()
            .map(|t| parse_real(t, line))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

fn parse_csv_matrix(text: &str) -> Result<MatrixFile, IoError> {
    let rows = csv_rows(text)?;
    let cols = rows
        .first()
        .map(|(_, r)| r.len())
        .ok_or_else(|| IoError::Header("CSV matrix has no rows".into()))?;
    let mut entries = Vec::with_capacity(rows.len() * cols);
    for (line, row) in &rows {
        if row.len() != cols {
            return Err(IoError::Parse {
                line: *line,
                msg: format!("row has {} values, expected {cols}", row.len()),
            });
        }
        entries.extend(row);
    }
    Ok(MatrixFile {
        format: MatrixFormat::Csv,
        rows: rows.len(),
        cols,
        symmetric: false,
        entries,
    })
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('%'))
}

fn parse_matrix_market(text: &str) -> Result<MatrixFile, IoError> {
    let header = text.trim_start().lines().next().unwrap_or("");
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() != 5 || fields[1] != "matrix" {
        return Err(IoError::Header(header.to_string()));
    }
    let format = match fields[2].as_str() {
        "coordinate" => MatrixFormat::MatrixMarketCoordinate,
        "array" => MatrixFormat::MatrixMarketArray,
        other => return Err(IoError::Header(format!("unsupported format `{other}`"))),
    };
    if fields[3] != "real" {
        return Err(IoError::Header(format!(
            "unsupported field `{}`",
            fields[3]
        )));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(IoError::Header(format!("unsupported symmetry `{other}`"))),
    };

    let mut lines = data_lines(text);
    let (size_line, size) = lines
        .next()
        .ok_or_else(|| IoError::Header("missing size line".into()))?;
    let size: Vec<&str> = size.split_whitespace().collect();
    let expected_fields = if format == MatrixFormat::MatrixMarketCoordinate {
        3
    } else {
        2
    };
    if size.len() != expected_fields {
        return Err(IoError::Parse {
            line: size_line,
            msg: format!("size line needs {expected_fields} integers"),
        });
    }
    let rows = parse_count(size[0], size_line)?;
    let cols = parse_count(size[1], size_line)?;
    if rows == 0 || cols == 0 {
        return Err(IoError::Header(format!(
            "dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if symmetric && rows != cols {
        return Err(IoError::Header("symmetric matrix must be square".into()));
    }
    let mut entries = vec![0.0; rows * cols];

    if format == MatrixFormat::MatrixMarketCoordinate {
        let nnz = parse_count(size[2], size_line)?;
        let mut seen = vec![false; rows * cols];
        let mut count = 0;
        for (line, l) in lines {
            let t: Vec<&str> = l.split_whitespace().collect();
            if t.len() != 3 {
                return Err(IoError::Parse {
                    line,
                    msg: "coordinate entry needs `row col value`".into(),
                });
            }
            let (row, col) = (parse_count(t[0], line)?, parse_count(t[1], line)?);
            let value = parse_real(t[2], line)?;
            if row == 0 || col == 0 || row > rows || col > cols {
                return Err(IoError::OutOfRange {
                    row,
                    col,
                    rows,
                    cols,
                    line,
                });
            }
            let (i, j) = (row - 1, col - 1);
            let mut positions = vec![(i, j)];
            if symmetric && i != j {
                positions.push((j, i));
            }
            for (i, j) in positions {
                if seen[i * cols + j] {
                    return Err(IoError::Duplicate { row, col, line });
                }
                seen[i * cols + j] = true;
                entries[i * cols + j] = value;
            }
            count += 1;
        }
        if count != nnz {
            return Err(IoError::Header(format!(
                "size line declares {nnz} entries, found {count}"
            )));
        }
    } else {
        // Column-major; a symmetric array lists the lower triangle only.
        let positions: Vec<(usize, usize)> = (0..cols)
            .flat_map(|j| {
                let start = if symmetric { j } else { 0 };
                (start..rows).map(move |i| (i, j))
            })
            .collect();
        let mut values = Vec::with_capacity(positions.len());
        for (line, l) in lines {
            for tok in l.split_whitespace() {
                values.push((line, parse_real(tok, line)?));
            }
        }
        if values.len() != positions.len() {
            return Err(IoError::Header(format!(
                "expected {} values, found {}",
                positions.len(),
                values.len()
            )));
        }
        for ((i, j), (_, v)) in positions.into_iter().zip(values) {
            entries[i * cols + j] = v;
            if symmetric {
                entries[j * cols + i] = v;
            }
        }
    }
    Ok(MatrixFile {
        format,
        rows,
        cols,
        symmetric,
        entries,
    })
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<VectorFile, IoError> {
    parse_vector(&read(path.as_ref())?)
}

/// One value per line, a single comma-separated row, or a one-column
/// MatrixMarket array.
pub fn parse_vector(text: &str) -> Result<VectorFile, IoError> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        let m = parse_matrix_market(text)?;
        if m.cols != 1 && m.rows != 1 {
            return Err(IoError::Header(format!(
                "expected a vector, found a {}x{} matrix",
                m.rows, m.cols
            )));
        }
        return Ok(VectorFile {
            vector: DenseArray::vector(m.entries),
            empty: false,
        });
    }
    let rows = csv_rows(text)?;
    let mut values = Vec::new();
    for (line, row) in &rows {
        if row.len() > 1 && rows.len() > 1 {
            return Err(IoError::Parse {
                line: *line,
                msg: "expected one value per line or a single row".into(),
            });
        }
        values.extend(row);
    }
    Ok(VectorFile {
        empty: values.is_empty(),
        vector: DenseArray::vector(values),
    })
}

/// Formats with 17 significant digits, enough to round-trip any finite `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_report(report: &SolveReport, format: ReportFormat) -> Result<String, IoError> {
    Ok(match format {
        ReportFormat::Json => serde_json::to_string_pretty(report)? + "\n",
        ReportFormat::Csv => {
            let mut out = String::new();
            let row: Vec<String> = report.solution.iter().map(|&v| format_real(v)).collect();
            let _ = writeln!(out, "{}", row.join(","));
            for &r in &report.residual_history {
                let _ = writeln!(out, "{}", format_real(r));
            }
            out
        }
    })
}

pub fn write_report(
    report: &SolveReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, render_report(report, format)?).map_err(|source| IoError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads back a CSV report: the solution row, then the residual history.
pub fn parse_csv_report(text: &str) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    let mut rows = csv_rows(text)?.into_iter();
    let solution = rows.next().map(|(_, r)| r).unwrap_or_default();
    let mut residuals = Vec::new();
    for (line, row) in rows {
        if row.len() != 1 {
            return Err(IoError::Parse {
                line,
                msg: "expected one residual per line".into(),
            });
        }
        residuals.push(row[0]);
    }
    Ok((solution, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: [f64; 4] = [4.0, 1.0, 1.0, 3.0];

    #[test]
    fn matrix_market_array_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n% comment\n2 2\n4\n1\n1\n3\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m.format, MatrixFormat::MatrixMarketArray);
        assert_eq!(m.entries, EXAMPLE);
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        assert_eq!(
            parse_matrix(text).unwrap().entries,
            vec![1.0, 3.0, 2.0, 4.0]
        );
    }

    #[test]
    fn symmetric_array_lists_lower_triangle() {
        let text = "%%MatrixMarket matrix array real symmetric\n2 2\n4\n1\n3\n";
        assert_eq!(parse_matrix(text).unwrap().entries, EXAMPLE);
    }

    #[test]
    fn csv_matrix() {
        let m = parse_matrix("4,1\n1,3\n").unwrap();
        assert_eq!(m.format, MatrixFormat::Csv);
        assert_eq!((m.rows, m.cols), (2, 2));
        assert_eq!(m.entries, EXAMPLE);
        assert!(matches!(
            parse_matrix("4,1\n1\n"),
            Err(IoError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_matrix("4,x\n"),
            Err(IoError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn coordinate_symmetric_mirrors() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 4\n2 1 1\n2 2 3\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m.entries, EXAMPLE);
        assert!(m.symmetric);
    }

    #[test]
    fn coordinate_missing_entries_are_zero() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 3 1\n2 3 5.5\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m.entries, vec![0.0, 0.0, 0.0, 0.0, 0.0, 5.5]);
    }

    #[test]
    fn coordinate_errors() {
        let dup = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 4\n1 1 4\n";
        assert!(matches!(
            parse_matrix(dup),
            Err(IoError::Duplicate { line: 4, .. })
        ));
        let mirrored = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 1\n1 2 1\n";
        assert!(matches!(
            parse_matrix(mirrored),
            Err(IoError::Duplicate { .. })
        ));
        let range = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 4\n";
        assert!(matches!(
            parse_matrix(range),
            Err(IoError::OutOfRange { row: 3, .. })
        ));
        let count = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 4\n";
        assert!(matches!(parse_matrix(count), Err(IoError::Header(_))));
    }

    #[test]
    fn malformed_headers() {
        for text in [
            "%%MatrixMarket matrix coordinate complex general\n1 1 0\n",
            "%%MatrixMarket matrix coordinate pattern general\n1 1 0\n",
            "%%MatrixMarket vector array real general\n1 1\n",
            "%%MatrixMarket matrix array real\n1 1\n",
            "%%MatrixMarket matrix array real skew-symmetric\n1 1\n1\n",
            "%%MatrixMarket matrix array real general\n0 2\n",
        ] {
            assert!(
                matches!(parse_matrix(text), Err(IoError::Header(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn vectors() {
        assert_eq!(parse_vector("1\n2\n").unwrap().vector.data(), &[1.0, 2.0]);
        assert_eq!(parse_vector("2,1").unwrap().vector.data(), &[2.0, 1.0]);
        let empty = parse_vector("").unwrap();
        assert!(empty.empty);
        assert_eq!(empty.vector.shape().extents(), &[0]);
        assert!(matches!(
            parse_vector("1\nabc\n"),
            Err(IoError::Parse { line: 2, .. })
        ));
        assert!(parse_vector("1,2\n3,4\n").is_err());
        let mm = "%%MatrixMarket matrix array real general\n2 1\n1\n2\n";
        assert_eq!(parse_vector(mm).unwrap().vector.data(), &[1.0, 2.0]);
    }

    fn report() -> SolveReport {
        SolveReport {
            solution: vec![1.0 / 11.0, 7.0 / 11.0],
            iterations: 2,
            converged: true,
            residual_history: vec![73f64.sqrt(), 0.1 + 0.2, 1e-300],
        }
    }

    #[test]
    fn json_report_keys() {
        let text = render_report(&report(), ReportFormat::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["converged"], serde_json::Value::Bool(true));
        assert_eq!(v["iterations"], 2);
        assert_eq!(v["residual_history"].as_array().unwrap().len(), 3);
        assert_eq!(v["solution"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn csv_report_round_trips_exactly() {
        let r = report();
        let text = render_report(&r, ReportFormat::Csv).unwrap();
        let (solution, residuals) = parse_csv_report(&text).unwrap();
        assert_eq!(solution, r.solution);
        assert_eq!(residuals, r.residual_history);
    }
}
