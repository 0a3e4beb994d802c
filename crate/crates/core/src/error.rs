use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown point id {0}")]
    UnknownPoint(usize),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("empty operand: {0}")]
    EmptyOperand(&'static str),
    #[error("subset universe has {subset} points but the space has {space}")]
    SubsetMismatch { subset: usize, space: usize },
    #[error("space failed validation: {0}")]
    InvalidSpace(String),
    #[error("resolution too coarse for nu: radius floor {floor} leaves no radius in (0,1)")]
    ResolutionTooCoarse { floor: f64 },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("space has no curvature field")]
    MissingCurvature,
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("missing correspondence: {0}")]
    MissingCorrespondence(String),
    #[error("invalid correspondence: {0}")]
    InvalidCorrespondence(String),
    #[error("collapse field has {field} points but the space has {space}")]
    FieldMismatch { field: usize, space: usize },
    #[error("member index {k} outside schedule 1..={len}")]
    MemberOutOfRange { k: usize, len: usize },
    #[error("document schema: {0}")]
    Schema(String),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error comes from bad input rather than a failure inside
    /// the toolkit.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io(_) | Error::Csv(_) => false,
            Error::Stage { source, .. } => source.is_validation(),
            _ => true,
        }
    }

    pub(crate) fn in_stage(self, stage: impl Into<String>) -> Error {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }
}
