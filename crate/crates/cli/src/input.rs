use std::path::Path;

use clap::ValueEnum;
use sparse_spectra::io::{self, CovMode, Dataset, DatasetKind};
use sparse_spectra::problem::{random_matrix, random_psd};
use sparse_spectra::spectral::SymMatrix;
use sparse_spectra::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    /// Square and symmetric means covariance, anything else raw observations.
    Auto,
    Raw,
    Covariance,
    Correlation,
    Rectangular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Covariance,
    Correlation,
}

/// Where the matrix came from, for the report.
pub struct Loaded {
    pub source: String,
    pub dataset: Dataset,
}

/// `pitprops`, `random<N>` (seeded; PSD, or a general square matrix when
/// `rectangular`), a `.mtx` file or a CSV file.
pub fn load(input: &str, kind: KindArg, seed: u64, rectangular: bool) -> Result<Loaded> {
    let base = if input == "pitprops" {
        io::pitprops()
    } else if let Some(n) = input
        .strip_prefix("random")
        .and_then(|s| s.parse::<usize>().ok())
    {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "random instance needs n >= 1".into(),
            ));
        }
        if rectangular {
            Dataset::new(DatasetKind::Rectangular, random_matrix(n, n, seed), None)?
        } else {
            Dataset::new(
                DatasetKind::Covariance,
                random_psd(n, n, seed).to_matrix(),
                None,
            )?
        }
    } else {
        let path = Path::new(input);
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("mtx"))
        {
            io::load_matrix_market(path)?
        } else {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            io::parse_csv(&text, DatasetKind::Rectangular, io::sniff_header(&text))?
        }
    };
    let kind = match kind {
        KindArg::Auto if rectangular => DatasetKind::Rectangular,
        KindArg::Auto => match base.kind {
            DatasetKind::Covariance | DatasetKind::Correlation => base.kind,
            _ if SymMatrix::from_matrix(&base.values).is_ok() => DatasetKind::Covariance,
            _ => DatasetKind::RawObservations,
        },
        KindArg::Raw => DatasetKind::RawObservations,
        KindArg::Covariance => DatasetKind::Covariance,
        KindArg::Correlation => DatasetKind::Correlation,
        KindArg::Rectangular => DatasetKind::Rectangular,
    };
    Ok(Loaded {
        source: input.to_string(),
        dataset: Dataset::new(kind, base.values, base.feature_names)?,
    })
}

/// The symmetric matrix of a dataset; raw observations are reduced to a
/// covariance or correlation matrix first.
pub fn symmetric(ds: &Dataset, mode: ModeArg, ddof: usize) -> Result<SymMatrix> {
    match ds.kind {
        DatasetKind::RawObservations => {
            let mode = match mode {
                ModeArg::Covariance => CovMode::Covariance,
                ModeArg::Correlation => CovMode::Correlation,
            };
            io::covariance_from_raw(ds, mode, ddof)
        }
        _ => ds.symmetric(),
    }
}
