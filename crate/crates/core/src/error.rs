use thiserror::Error;

/// Errors raised by the algebra, connection, control and integration layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("metric is not symmetric positive-definite")]
    MetricNotPositiveDefinite,

    #[error("subspace basis is rank deficient: rank {rank} of {columns} columns")]
    RankDeficient { rank: usize, columns: usize },

    #[error(
        "constraint and input subspaces are not transversal: rank {rank} of {expected} \
         (constraint dim {constraint_dim}, input dim {input_dim})"
    )]
    NotTransversal {
        rank: usize,
        expected: usize,
        constraint_dim: usize,
        input_dim: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("group element is not in the group: orthogonality defect {defect:e}")]
    NotInGroup { defect: f64 },

    #[error("integration failed at t = {time}: {reason}")]
    Integration { time: f64, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
