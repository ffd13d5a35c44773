use thiserror::Error;

/// Errors produced by the aggregation models, likelihoods and metrics.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("block {block} is empty")]
    EmptyBlock { block: usize },
    #[error("class {class} appears in more than one block")]
    DuplicateClassAcrossBlocks { class: usize },
    #[error("class id {class} is out of range for {num_classes} classes")]
    ClassIdOutOfRange { class: usize, num_classes: usize },
    #[error("the class space must contain at least one class")]
    EmptyClassSpace,
    #[error("{count} compatible permutations exceed the enumeration cap of {cap}")]
    CombinatorialCap { count: u128, cap: u128 },
    #[error("no annotator ranked any class; the case cannot be aggregated")]
    AllZeroMass,
    #[error("block of size {size} exceeds the subset-recursion cap of {cap}")]
    BlockTooLarge { size: usize, cap: usize },
    #[error("plausibility weight {index} is not strictly positive and finite ({value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("class {class} has no risk level")]
    MissingRiskMapping { class: usize },
    #[error("rankings disagree on the number of classes ({expected} vs {found})")]
    ClassSpaceMismatch { expected: usize, found: usize },
    #[error("{num_classes} classes is too many for this oracle (max {max})")]
    TooManyClasses { num_classes: usize, max: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
