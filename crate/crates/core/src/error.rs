use thiserror::Error;

pub type Result<T, E = SpfqError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SpfqError {
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("zero vector where a nonzero one is required ({0})")]
    ZeroVector(&'static str),

    #[error("alignment infeasible / rank-deficient: {0}")]
    RankDeficient(String),

    #[error("linear program exceeded its iteration cap of {0} pivots")]
    IterationLimit(usize),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("unsupported Hadamard order {0} (must be a power of two)")]
    UnsupportedOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("hypothesis {0} unsatisfiable at this (m,N,epsilon)")]
    Hypothesis(String),

    #[error("column {column}: {source}")]
    Column {
        column: usize,
        #[source]
        source: Box<SpfqError>,
    },

    #[error("layer {layer}: {source}")]
    Layer {
        layer: usize,
        #[source]
        source: Box<SpfqError>,
    },

    #[error("format error in `{field}`: {message}")]
    Format { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SpfqError {
    pub(crate) fn at_column(self, column: usize) -> Self {
        SpfqError::Column {
            column,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_layer(self, layer: usize) -> Self {
        SpfqError::Layer {
            layer,
            source: Box::new(self),
        }
    }

    pub(crate) fn format(field: impl Into<String>, message: impl Into<String>) -> Self {
        SpfqError::Format {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Strips layer/column context and returns the underlying error.
    pub fn root(&self) -> &SpfqError {
        match self {
            SpfqError::Column { source, .. } | SpfqError::Layer { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_rank_deficient(&self) -> bool {
        matches!(self.root(), SpfqError::RankDeficient(_))
    }

    /// True for errors caused by malformed input files or arguments.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.root(),
            SpfqError::Format { .. }
                | SpfqError::Io(_)
                | SpfqError::Json(_)
                | SpfqError::Csv(_)
                | SpfqError::Shape(_)
                | SpfqError::InvalidArgument(_)
                | SpfqError::InvalidStep(_)
                | SpfqError::NonFinite(_)
        )
    }
}
