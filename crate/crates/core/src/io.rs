//! Dense CSV and Matrix Market ingestion, covariance estimation from raw
//! observations, and the bundled Pitprops correlation matrix.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Matrix, SymMatrix};

/// Maximum distance of a correlation diagonal entry from one.
pub const UNIT_DIAGONAL_TOL: f64 = 1e-8;

/// The 13 x 13 Pitprops correlation matrix with a header row of feature names.
pub const PITPROPS_CSV: &str = include_str!("../data/pitprops.csv");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// One observation per row, one feature per column.
    RawObservations,
    Covariance,
    Correlation,
    /// Any real matrix, as used by the sparse SVD.
    Rectangular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovMode {
    Covariance,
    Correlation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub values: Matrix,
    pub feature_names: Option<Vec<String>>,
}

impl Dataset {
    /// Wraps `values`, validating it against `kind`.
    pub fn new(
        kind: DatasetKind,
        values: Matrix,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if let Some(names) = &feature_names {
            if names.len() != values.ncols() {
                return Err(Error::Dimension(format!(
                    "{} feature names for {} columns",
                    names.len(),
                    values.ncols()
                )));
            }
        }
        let ds = Dataset {
            kind,
            values,
            feature_names,
        };
        if matches!(kind, DatasetKind::Covariance | DatasetKind::Correlation) {
            ds.symmetric()?;
        }
        Ok(ds)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    /// The matrix as a validated symmetric matrix. Correlation data must
    /// also have a unit diagonal.
    pub fn symmetric(&self) -> Result<SymMatrix> {
        let s = SymMatrix::from_matrix(&self.values)?;
        if self.kind == DatasetKind::Correlation {
            for (i, d) in s.diagonal().into_iter().enumerate() {
                if (d - 1.0).abs() > UNIT_DIAGONAL_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "correlation diagonal entry ({0},{0}) is {d}, expected 1",
                        i + 1
                    )));
                }
            }
        }
        Ok(s)
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses CSV text. With `has_header` the first record supplies feature
/// names. Rows and columns in error messages are 1-based data positions.
pub fn parse_csv(text: &str, kind: DatasetKind, has_header: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if has_header && names.is_none() {
            names = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let width = names.as_ref().map(Vec::len).or(rows.first().map(Vec::len));
        if let Some(w) = width {
            if record.len() != w {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "row {} has {} fields, expected {w}",
                        rows.len() + 1,
                        record.len()
                    ),
                });
            }
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!(
                            "row {}, column {}: `{cell}` is not a finite number",
                            rows.len() + 1,
                            c + 1
                        ),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    Dataset::new(kind, Matrix::from_rows(&rows)?, names)
}

/// Reads a dense CSV file; see [`parse_csv`].
pub fn load_csv(path: impl AsRef<Path>, kind: DatasetKind, has_header: bool) -> Result<Dataset> {
    parse_csv(&read_text(path.as_ref())?, kind, has_header)
}

/// `true` when the first non-comment record has a non-numeric cell.
pub fn sniff_header(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.split(',').any(|c| c.trim().parse::<f64>().is_err()))
}

/// Writes the dataset as CSV with full round-trip precision.
pub fn write_csv<W: Write>(ds: &Dataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
    if let Some(names) = &ds.feature_names {
        w.write_record(names).map_err(csv_err)?;
    }
    for i in 0..ds.rows() {
        w.write_record(ds.values.row(i).iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv write failed: {e}")))?;
    Ok(())
}

/// Sample covariance or correlation of raw observations (rows), computed in
/// one pass. `ddof` is subtracted from the observation count.
pub fn covariance_from_raw(data: &Dataset, mode: CovMode, ddof: usize) -> Result<SymMatrix> {
    let (obs, p) = (data.rows(), data.cols());
    if obs < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 observations, got {obs}"
        )));
    }
    if ddof >= obs {
        return Err(Error::InvalidArgument(format!(
            "ddof = {ddof} leaves no degrees of freedom"
        )));
    }
    let mut mean = vec![0.0; p];
    let mut co = vec![0.0; p * p];
    let mut delta = vec![0.0; p];
    for r in 0..obs {
        let x = data.values.row(r);
        let count = (r + 1) as f64;
        for j in 0..p {
            delta[j] = x[j] - mean[j];
            mean[j] += delta[j] / count;
        }
        for i in 0..p {
            for j in i..p {
                co[i * p + j] += delta[i] * (x[j] - mean[j]);
            }
        }
    }
    let denom = (obs - ddof) as f64;
    let mut cov = SymMatrix::from_fn(p, |i, j| co[i * p + j] / denom);
    if mode == CovMode::Correlation {
        let sd: Vec<f64> = cov.diagonal().into_iter().map(f64::sqrt).collect();
        if let Some(j) = sd.iter().position(|&s| !(s > 0.0)) {
            let name = data
                .feature_names
                .as_ref()
                .map_or_else(|| format!("column {}", j + 1), |n| format!("`{}`", n[j]));
            return Err(Error::InvalidArgument(format!(
                "feature {name} is constant; its correlation is undefined"
            )));
        }
        cov = SymMatrix::from_fn(p, |i, j| {
            if i == j {
                1.0
            } else {
                cov.get(i, j) / (sd[i] * sd[j])
            }
        });
    }
    Ok(cov)
}

#[derive(Clone, Copy, PartialEq)]
enum MmSymmetry {
    General,
    Symmetric,
    Skew,
}

/// Parses Matrix Market text (`coordinate` or `array`, `real` or `integer`).
/// Symmetric storage is expanded; symmetric files become covariance data
/// and everything else is rectangular.
pub fn parse_matrix_market(text: &str) -> Result<Dataset> {
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(perr(1, format!("malformed header `{header}`")));
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        f => return Err(perr(1, format!("unsupported format `{f}`"))),
    };
    match fields[3].as_str() {
        "real" | "integer" | "double" => {}
        "pattern" => return Err(perr(1, "pattern matrices carry no values".into())),
        f => return Err(perr(1, format!("unsupported field `{f}`"))),
    }
    let symmetry = match fields[4].as_str() {
        "general" => MmSymmetry::General,
        "symmetric" => MmSymmetry::Symmetric,
        "skew-symmetric" => MmSymmetry::Skew,
        f => return Err(perr(1, format!("unsupported symmetry `{f}`"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body
        .next()
        .ok_or_else(|| perr(1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| perr(size_line + 1, format!("bad size entry `{t}`")))
        })
        .collect::<Result<_>>()?;
    let (rows, cols) = match (coordinate, dims.as_slice()) {
        (true, [r, c, _]) | (false, [r, c]) => (*r, *c),
        _ => return Err(perr(size_line + 1, format!("malformed size line `{size}`"))),
    };
    if symmetry != MmSymmetry::General && rows != cols {
        return Err(perr(
            size_line + 1,
            "symmetric storage requires a square matrix".into(),
        ));
    }
    let mut m = Matrix::zeros(rows, cols);
    let mut place = |i: usize, j: usize, v: f64| {
        m.set(i, j, v);
        if i != j {
            match symmetry {
                MmSymmetry::Symmetric => m.set(j, i, v),
                MmSymmetry::Skew => m.set(j, i, -v),
                MmSymmetry::General => {}
            }
        }
    };
    let parse_val = |line: usize, t: &str| -> Result<f64> {
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| perr(line, format!("`{t}` is not a finite number")))
    };
    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (pos, line) in body {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(perr(
                    pos + 1,
                    format!("expected `row col value`, found `{line}`"),
                ));
            }
            let idx = |t: &str, bound: usize| -> Result<usize> {
                match t.parse::<usize>() {
                    Ok(v) if v >= 1 && v <= bound => Ok(v - 1),
                    _ => Err(perr(pos + 1, format!("index `{t}` outside 1..={bound}"))),
                }
            };
            let (i, j) = (idx(toks[0], rows)?, idx(toks[1], cols)?);
            if symmetry != MmSymmetry::General && i < j {
                return Err(perr(
                    pos + 1,
                    "symmetric storage lists the lower triangle only".into(),
                ));
            }
            place(i, j, parse_val(pos + 1, toks[2])?);
            seen += 1;
        }
        if seen != nnz {
            return Err(perr(
                size_line + 1,
                format!("declared {nnz} entries, found {seen}"),
            ));
        }
    } else {
        // column-major; symmetric storage lists the lower triangle
        let mut cells = Vec::new();
        for j in 0..cols {
            let start = match symmetry {
                MmSymmetry::General => 0,
                MmSymmetry::Symmetric => j,
                MmSymmetry::Skew => j + 1,
            };
            for i in start..rows {
                cells.push((i, j));
            }
        }
        let mut it = cells.into_iter();
        for (pos, line) in body {
            for t in line.split_whitespace() {
                let (i, j) = it
                    .next()
                    .ok_or_else(|| perr(pos + 1, "more values than the matrix holds".into()))?;
                place(i, j, parse_val(pos + 1, t)?);
            }
        }
        if it.next().is_some() {
            return Err(perr(
                size_line + 1,
                "fewer values than the matrix holds".into(),
            ));
        }
    }
    let kind = if symmetry == MmSymmetry::Symmetric {
        DatasetKind::Covariance
    } else {
        DatasetKind::Rectangular
    };
    Dataset::new(kind, m, None)
}

/// Reads a Matrix Market file; see [`parse_matrix_market`].
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_matrix_market(&read_text(path.as_ref())?)
}

/// The bundled Pitprops correlation matrix.
pub fn pitprops() -> Dataset {
    parse_csv(PITPROPS_CSV, DatasetKind::Correlation, true).expect("bundled data is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_csv() {
        let ds = parse_csv("1,0,0\n0,1,0\n0,0,1\n", DatasetKind::Covariance, false).unwrap();
        assert_eq!(ds.symmetric().unwrap(), SymMatrix::identity(3));
    }

    #[test]
    fn asymmetry_names_both_entries() {
        let err = parse_csv("1,2\n3,1\n", DatasetKind::Covariance, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(1,2)") && msg.contains("(2,1)"), "{msg}");
    }

    #[test]
    fn ragged_and_non_numeric_rows() {
        let err = parse_csv("1,2\n3\n", DatasetKind::Rectangular, false).unwrap_err();
        assert!(err.to_string().contains("row 2 has 1 fields"), "{err}");
        let err = parse_csv("a,b\n1,x\n", DatasetKind::Rectangular, true).unwrap_err();
        assert!(err.to_string().contains("row 1, column 2"), "{err}");
    }

    #[test]
    fn correlation_requires_unit_diagonal() {
        assert!(parse_csv("2,0\n0,1\n", DatasetKind::Correlation, false).is_err());
    }

    #[test]
    fn pitprops_is_unit_diagonal_correlation() {
        let ds = pitprops();
        assert_eq!((ds.rows(), ds.cols()), (13, 13));
        assert_eq!(ds.feature_names.as_ref().unwrap()[0], "topdiam");
        let s = ds.symmetric().unwrap();
        assert!(s.diagonal().iter().all(|&d| d == 1.0));
    }

    #[test]
    fn two_observation_covariance() {
        let ds = parse_csv("0,0\n2,2\n", DatasetKind::RawObservations, false).unwrap();
        let c = covariance_from_raw(&ds, CovMode::Covariance, 1).unwrap();
        assert_eq!(c.as_slice(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn constant_feature_is_named() {
        let ds = parse_csv("u,v\n1,5\n2,5\n3,5\n", DatasetKind::RawObservations, true).unwrap();
        let err = covariance_from_raw(&ds, CovMode::Correlation, 1).unwrap_err();
        assert!(err.to_string().contains("`v`"), "{err}");
    }

    #[test]
    fn matrix_market_variants() {
        let sym =
            "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 3\n1 1 4\n2 1 1\n2 2 3\n";
        let ds = parse_matrix_market(sym).unwrap();
        assert_eq!(ds.kind, DatasetKind::Covariance);
        assert_eq!(ds.values.as_slice(), &[4.0, 1.0, 1.0, 3.0]);

        let gen = "%%MatrixMarket matrix array real general\n2 3\n1\n2\n3\n4\n5\n6\n";
        let ds = parse_matrix_market(gen).unwrap();
        assert_eq!(ds.kind, DatasetKind::Rectangular);
        assert_eq!(ds.values.row(0), &[1.0, 3.0, 5.0]);

        let pat = "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n1 1\n";
        assert!(parse_matrix_market(pat).is_err());
        let overflow = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(parse_matrix_market(overflow).is_err());
        assert!(parse_matrix_market("%%MatrixMarket tensor\n").is_err());
    }
}
