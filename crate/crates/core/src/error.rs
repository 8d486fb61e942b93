use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel ({u}, {v}) outside {width}x{height} image")]
    PixelOutOfBounds {
        u: u32,
        v: u32,
        width: u32,
        height: u32,
    },
    #[error("point with z = {z} lies behind the camera")]
    BehindCamera { z: f64 },
    #[error("could not place object {object} after {attempts} attempts")]
    PlacementFailed { object: usize, attempts: usize },
    #[error("no object with id {0}")]
    UnknownObject(u32),
    #[error("no unambiguous description: {0}")]
    GenerationFailed(String),
    #[error("unparseable instruction {text:?}: {reason}")]
    Unparseable { text: String, reason: String },
    #[error("grounding needs at least one candidate")]
    NoCandidates,
    #[error("segmentation left {remaining} points after {stage}")]
    SegmentationEmpty { stage: &'static str, remaining: usize },
    #[error("pose estimation needs at least {need} points, got {got}")]
    InsufficientPoints { got: usize, need: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
