use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("column {0} has zero variance")]
    DegenerateSignal(usize),
    #[error("node {0} is not covered by any subgraph")]
    UncoveredNode(usize),
    #[error("every subgraph was dropped; the PathoGraph would be empty")]
    EmptyPathoGraph,
    #[error("no augmentation plan for group {0}")]
    MissingPlan(usize),
    #[error("AUC undefined: no class has both positive and negative samples")]
    AucUndefined,
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidInput(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
