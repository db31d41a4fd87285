use thiserror::Error;

/// Errors produced by the mesh analysis toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate star at vertex {0}")]
    DegenerateStar(usize),

    #[error("no dihedral defined at vertex {0}")]
    NoDihedral(usize),

    #[error("degenerate ring at vertex {0}")]
    DegenerateRing(usize),

    #[error("plane undefined for colinear ring at vertex {0}")]
    ColinearRing(usize),

    #[error("unfittable star at vertex {0}")]
    UnfittableStar(usize),

    #[error("coincident line endpoints")]
    CoincidentEndpoints,

    #[error("hole loop cannot be triangulated: {0}")]
    Untriangulatable(String),

    #[error("nothing to extract: every vertex was eliminated")]
    NothingToExtract,

    #[error("selection id {id} out of range for mesh with {count} vertices")]
    SelectionOutOfRange { id: usize, count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
