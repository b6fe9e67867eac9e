//! Artifact formats.
//!
//! Matrices are stored as `{ "rows": r, "cols": c, "entries": [[re, im], ...] }`
//! in row-major order. Encoders add a header `{ "d", "layout", "generator" }`
//! next to the matrix fields. Floats round-trip exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::RateRow;
use crate::error::{Error, Result};
use crate::matrixcore::{ComplexMatrix, C64};
use crate::schur::{ColumnLayout, EncoderSpec, Generator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let entries = (0..m.nrows())
            .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
            .collect();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Domain(format!(
                "{}x{} matrix needs {} entries, found {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.entries.len()
            )));
        }
        Ok(ComplexMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.entries.iter().map(|&[re, im]| C64::new(re, im)),
        ))
    }
}

/// On-disk form of an [`EncoderSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderJson {
    pub d: usize,
    pub layout: ColumnLayout,
    pub generator: Generator,
    #[serde(flatten)]
    pub matrix: MatrixJson,
}

impl EncoderJson {
    pub fn from_encoder(enc: &EncoderSpec) -> Self {
        Self {
            d: enc.d,
            layout: enc.column_layout,
            generator: enc.generator,
            matrix: MatrixJson::from_matrix(&enc.u_e),
        }
    }

    /// Rebuilds the encoder, re-checking size and unitarity.
    pub fn into_encoder(self) -> Result<EncoderSpec> {
        EncoderSpec::new(self.d, self.matrix.to_matrix()?, self.generator)
    }
}

pub fn encoder_to_string(enc: &EncoderSpec) -> Result<String> {
    Ok(serde_json::to_string(&EncoderJson::from_encoder(enc))?)
}

pub fn encoder_from_str(s: &str) -> Result<EncoderSpec> {
    serde_json::from_str::<EncoderJson>(s)?.into_encoder()
}

pub fn write_encoder(path: &Path, enc: &EncoderSpec) -> Result<()> {
    fs::write(path, encoder_to_string(enc)?)?;
    Ok(())
}

pub fn read_encoder(path: &Path) -> Result<EncoderSpec> {
    encoder_from_str(&fs::read_to_string(path)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes a rate table as CSV with columns `d,k,n,rate`, the rate as an
/// exact fraction.
pub fn write_rate_csv<W: Write>(rows: &[RateRow], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["d", "k", "n", "rate"])
        .map_err(csv_error)?;
    for row in rows {
        writer
            .write_record([
                row.d.to_string(),
                row.k.to_string(),
                row.n.to_string(),
                format!("{}/{}", row.rate.numer(), row.rate.denom()),
            ])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
