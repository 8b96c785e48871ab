//! File formats: JSON for states and witnesses, CSV for experiment tables.
//!
//! Complex scalars are stored as two-element `[re, im]` arrays, matrices as
//! row-major nested arrays. Serialization uses shortest-round-trip decimal
//! floats, so a written matrix reads back bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, DimsSpec, C64};
use crate::partition::{parse_structure, PartitionStructure};
use crate::states::DensityMatrix;
use crate::witness::WitnessResult;
use crate::{Error, Result};

fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("matrix must be square and non-empty".into()));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// On-disk form of a density matrix.
#[derive(Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        Self { dims: rho.dims().dims().to_vec(), matrix: matrix_to_rows(rho.matrix()) }
    }

    pub fn into_state(self) -> Result<DensityMatrix> {
        let dims = DimsSpec::new(self.dims)?;
        DensityMatrix::new(matrix_from_rows(&self.matrix)?, dims)
    }
}

/// On-disk form of a witness: the state-file fields plus search metadata.
#[derive(Serialize, Deserialize)]
pub struct WitnessFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    pub objective: f64,
    /// partition grammar string, e.g. `"1|2,3"` or `"1|2|3!3"`
    pub structure: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n_samples: usize,
}

impl WitnessFile {
    pub fn from_result(result: &WitnessResult) -> Self {
        Self {
            dims: result.dims.dims().to_vec(),
            matrix: matrix_to_rows(&result.witness),
            objective: result.objective,
            structure: result.structure.grammar(),
            seed: result.seed,
            n_samples: result.n_samples,
        }
    }

    pub fn dims_spec(&self) -> Result<DimsSpec> {
        DimsSpec::new(self.dims.clone())
    }

    pub fn witness_matrix(&self) -> Result<ComplexMatrix> {
        let m = matrix_from_rows(&self.matrix)?;
        self.dims_spec()?.check_matrix(&m)?;
        Ok(m)
    }

    pub fn structure(&self) -> Result<PartitionStructure> {
        parse_structure(&self.dims_spec()?, &self.structure)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_state(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_json(path, &StateFile::from_state(rho))
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    read_json::<StateFile>(path)?.into_state()
}

pub fn write_witness(path: &Path, result: &WitnessResult) -> Result<()> {
    write_json(path, &WitnessFile::from_result(result))
}

pub fn read_witness(path: &Path) -> Result<WitnessFile> {
    read_json(path)
}

/// Minimal CSV writer: full-precision floats, RFC-4180 quoting for fields
/// containing commas or quotes (partition grammar strings do).
pub struct CsvWriter {
    file: fs::File,
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut file = fs::File::create(path)?;
        writeln!(file, "{}", header.join(","))?;
        Ok(Self { file })
    }

    /// Writes one row and flushes, so partial results survive interruption.
    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        let escaped: Vec<String> = fields.iter().map(|f| csv_escape(f)).collect();
        writeln!(self.file, "{}", escaped.join(","))?;
        self.file.flush()?;
        Ok(())
    }
}

/// Full-precision decimal rendering for CSV fields (round-trips to the same
/// f64 bits).
pub fn fmt_full(x: f64) -> String {
    format!("{x}")
}
