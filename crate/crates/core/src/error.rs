use crate::validation::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty model")]
    EmptyModel,
    #[error("characteristic {0} has no features")]
    EmptyCharacteristic(String),
    #[error("weights of {0} sum to zero and cannot be renormalized")]
    ZeroWeightSum(String),
    #[error("unknown feature {0}")]
    UnknownFeature(String),
    #[error("unknown product {0}")]
    UnknownProduct(String),
    #[error("unknown modification {0}")]
    UnknownModification(String),
    #[error("product count must be positive")]
    NoProducts,
    #[error("characteristic fully irrelevant: every feature of {characteristic} is irrelevant for product {product}")]
    CharacteristicFullyIrrelevant {
        characteristic: String,
        product: String,
    },
    #[error("cell ({feature}, {product}) is missing or unresolved")]
    MissingCell { feature: String, product: String },
    #[error("conflicting modifications {0} and {1}")]
    Conflict(String, String),
    #[error("{count} modifications exceed the enumeration limit of {limit}; use the branch-and-bound optimizer instead")]
    EnumerationLimit { count: usize, limit: usize },
    #[error("{count} modifications exceed the supported maximum of {limit}")]
    CatalogTooLarge { count: usize, limit: usize },
    #[error("no candidate modifications")]
    NoCandidates,
    #[error("invalid objective: {0}")]
    InvalidObjective(String),
    #[error("validation failed:\n{0}")]
    Invalid(ValidationReport),
}
