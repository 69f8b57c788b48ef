use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid resolution {dx} m: must satisfy 0 < dx <= {max} m")]
    InvalidResolution { dx: f64, max: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{what} at {position:?} lies outside the room")]
    OutsideRoom { what: String, position: [f64; 3] },

    #[error("pose {index} at {position:?} lies outside the room")]
    PoseOutsideRoom { index: usize, position: [f64; 3] },

    #[error("empty patch set")]
    EmptyPatchSet,

    #[error(
        "intrinsic operator for N = {patches} patches needs {required_bytes} bytes, \
         budget is {budget_bytes} bytes"
    )]
    Capacity {
        patches: usize,
        required_bytes: u128,
        budget_bytes: u128,
    },

    #[error("average reflectivity {0} >= 1: the cavity gain diverges")]
    DivergentCavity(f64),

    #[error("operands belong to different scenes")]
    SceneMismatch,

    #[error("frequency grids differ: {0}")]
    GridMismatch(String),

    #[error("reference response is identically zero")]
    ZeroReference,

    #[error("scenario: {0}")]
    Scenario(String),
}
