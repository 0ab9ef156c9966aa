use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dof {dof} = {value} deg outside limit [{min}, {max}]")]
    LimitViolation {
        dof: usize,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("grid index ({i}, {j}) outside {nr}x{nz} grid")]
    IndexOutOfGrid {
        i: usize,
        j: usize,
        nr: usize,
        nz: usize,
    },

    #[error("point (r={r:.4}, z={z:.4}) ft is outside the grid workspace")]
    OutOfWorkspace { r: f64, z: f64 },

    #[error("cell corner ({i}, {j}) has no converged configuration")]
    UnconvergedCell { i: usize, j: usize },

    #[error("table was learned for model {table}, but supplied model is {model}")]
    ModelMismatch { table: String, model: String },

    #[error("unsupported or missing table version: {0}")]
    VersionMismatch(String),

    #[error("sample {index} at ({}, {}, {}): {source}", point[0], point[1], point[2])]
    AtSample {
        index: usize,
        point: [f64; 3],
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("table failed validation: {0}")]
    TableValidation(String),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
